#include "ktrace/encoder.hpp"

#include <cmath>

#include "ktrace/errors.hpp"
#include "ktrace/rng.hpp"

namespace ktrace {

ActionEmbeddingTable::ActionEmbeddingTable(int num_tokens, int dim,
                                           std::uint64_t seed)
    : num_tokens_(num_tokens), seed_(seed) {
  table_.resize(dim, 2L * num_tokens);
  zero_ = Eigen::VectorXd::Zero(dim);
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index c = 0; c < table_.cols(); ++c)
    for (Eigen::Index r = 0; r < table_.rows(); ++r) table_(r, c) = gauss(rng);
}

Eigen::Ref<const Eigen::VectorXd> ActionEmbeddingTable::vec(int token,
                                                            int outcome) const {
  if (token < 0 || token >= num_tokens_ || outcome < 0 || outcome > 1)
    return zero_;
  return table_.col(2L * token + outcome);
}

void gru_step_into(Eigen::Ref<const Eigen::VectorXd> h_prev,
                   Eigen::Ref<const Eigen::VectorXd> x,
                   const GruParamsView& params,
                   Eigen::Ref<Eigen::VectorXd> z, Eigen::Ref<Eigen::VectorXd> r,
                   Eigen::Ref<Eigen::VectorXd> n,
                   Eigen::Ref<Eigen::VectorXd> h_out) {
  if (!h_prev.allFinite() || !x.allFinite())
    throw NumericError("non-finite input to GRU step");

  z.noalias() = params.Wz * x;
  z.noalias() += params.Uz * h_prev;
  z += params.bz;
  z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });

  r.noalias() = params.Wr * x;
  r.noalias() += params.Ur * h_prev;
  r += params.br;
  r = r.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });

  n.noalias() = params.Wn * x;
  n.noalias() += params.Un * r.cwiseProduct(h_prev);
  n += params.bn;
  n = n.array().tanh();

  // h = (1-z)*n + z*h_prev
  h_out = n + z.cwiseProduct(h_prev - n);
}

Eigen::VectorXd gru_step(Eigen::Ref<const Eigen::VectorXd> h_prev,
                         Eigen::Ref<const Eigen::VectorXd> x,
                         const GruParamsView& params, GruGates* gates) {
  const int d = params.dim;
  Eigen::VectorXd h(d);
  GruGates local;
  GruGates& g = gates ? *gates : local;
  g.z.resize(d);
  g.r.resize(d);
  g.n.resize(d);
  gru_step_into(h_prev, x, params, g.z, g.r, g.n, h);
  return h;
}

EncodedSequence encode_sequence(const StudentSequence& seq,
                                const ActionEmbeddingTable& table,
                                const GruParamsView& params, int window) {
  if (window < 1) throw ConfigError("window must be at least 1");
  EncodedSequence out;
  const int d = params.dim;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
  out.states.reserve(seq.steps.size());
  for (const auto& step : seq.steps) {
    out.states.push_back(h);
    h = gru_step(h, table.vec(step.item, step.outcome), params);
  }
  out.carry = std::move(h);
  return out;
}

std::vector<Eigen::VectorXd> encode_none(const StudentSequence& seq) {
  return std::vector<Eigen::VectorXd>(seq.steps.size(), Eigen::VectorXd());
}

}  // namespace ktrace
