#include "ktrace/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "ktrace/rng.hpp"

namespace ktrace {

namespace {

double nll_term(std::int8_t label, double p) {
  const double pc = std::clamp(p, kProbEps, 1.0 - kProbEps);
  const double q = label ? pc : 1.0 - pc;
  return -std::log(q);
}

// d(loss term)/d(logit). Zero where the clamp binds, so the analytic
// gradient matches finite differences of the clamped loss.
double dloss_dlogit(std::int8_t label, double p) {
  if (p < kProbEps || p > 1.0 - kProbEps) return 0.0;
  return p - static_cast<double>(label);
}

int scalar_dot_target(const ModelSpec& spec, const SequenceData& sd, int t) {
  if (spec.metadata.item) return sd.items[t];
  const auto& counts = sd.step_counts[t];
  if (counts.size() != 1)
    throw ConfigError(
        "item " + std::to_string(sd.items[t]) + " assesses " +
        std::to_string(counts.size()) +
        " skills; the 's' dot-product decoder needs single-skill items -- use "
        "combined-skill tokens or the iswf decoder");
  return counts[0].skill;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (minibatch_count < 1) throw ConfigError("minibatches must be positive");
  if (bptt_window < 1) throw ConfigError("bptt_window must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
}

double nll(std::span<const std::int8_t> labels, std::span<const double> preds,
           std::span<const std::uint8_t> mask) {
  if (labels.size() != preds.size() || labels.size() != mask.size())
    throw ConfigError("nll: input spans must have equal length");
  double sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (!mask[i]) continue;
    sum += nll_term(labels[i], preds[i]);
    ++n;
  }
  if (n == 0) throw NumericError("degenerate batch: mask selects no entries");
  return sum / n;
}

AdamState AdamState::zeros(int n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  return s;
}

void adam_update(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                 AdamState& state, const TrainConfig& config) {
  if (grad.size() != params.size() || state.m.size() != params.size())
    throw ConfigError("adam_update: size mismatch");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  Eigen::ArrayXd g = grad.array() + config.weight_decay * params.array();
  state.m.array() = beta1 * state.m.array() + (1.0 - beta1) * g;
  state.v.array() = beta2 * state.v.array() + (1.0 - beta2) * g.square();
  params.array() -=
      config.learning_rate * (state.m.array() / bc1) /
      ((state.v.array() / bc2).sqrt() + eps);
}

SequenceData make_sequence_data(const StudentSequence& seq, const QMatrix& qm) {
  SequenceData sd;
  const int T = seq.length();
  sd.items.reserve(T);
  sd.outcomes.reserve(T);
  sd.step_counts.reserve(T);
  CounterTable counters = compute_counters(seq, qm);
  for (int t = 1; t <= T; ++t) {
    const Step& step = seq.steps[t - 1];
    sd.items.push_back(step.item);
    sd.outcomes.push_back(step.outcome);
    std::vector<int> skills(qm.skills_of(step.item).begin(),
                            qm.skills_of(step.item).end());
    std::sort(skills.begin(), skills.end());
    std::vector<SkillWinsFails> counts;
    counts.reserve(skills.size());
    for (int k : skills)
      counts.push_back(SkillWinsFails{k, counters.wins(t, k), counters.fails(t, k)});
    sd.step_counts.push_back(std::move(counts));
  }
  return sd;
}

Batch::Batch(std::vector<const SequenceData*> members,
             const ParameterStore& params)
    : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("batch must have at least one member");
  const int d = params.spec().hidden_dim;
  scratch_.resize(members_.size());
  for (size_t m = 0; m < members_.size(); ++m) {
    max_length_ = std::max(max_length_, members_[m]->length());
    scratch_[m].carry = Eigen::VectorXd::Zero(d);
    scratch_[m].carry_next = scratch_[m].carry;
  }
}

bool Batch::active(int member, int t) const {
  return t >= 0 && t < members_.at(member)->length();
}

void Batch::reset_carries() {
  for (auto& sc : scratch_) {
    sc.carry.setZero();
    sc.carry_next.setZero();
  }
}

void Batch::advance_carries() {
  for (auto& sc : scratch_) sc.carry = sc.carry_next;
}

ForwardStats Batch::forward(const ParameterStore& params, int t0, int window) {
  if (window < 1) throw ConfigError("window must be at least 1");
  if (t0 < 0) throw ConfigError("window start must be non-negative");
  const ModelSpec& spec = params.spec();
  const int d = spec.hidden_dim;
  std::optional<GruParamsView> gru;
  if (d > 0) gru.emplace(params.gru());
  const ActionEmbeddingTable& table = params.embeddings();

  ForwardStats stats;
  for (size_t m = 0; m < members_.size(); ++m) {
    const SequenceData& sd = *members_[m];
    Scratch& sc = scratch_[m];
    const int end = std::min(t0 + window, sd.length());
    sc.begin = t0;
    sc.end = std::max(end, t0);
    const int steps = sc.end - sc.begin;
    if (d > 0 && (sc.H.rows() != d || sc.H.cols() < window + 1)) {
      sc.H.resize(d, window + 1);
      sc.Z.resize(d, window);
      sc.R.resize(d, window);
      sc.N.resize(d, window);
    }
    if (static_cast<int>(sc.p.size()) < window) sc.p.resize(window);
    if (d > 0) sc.H.col(0) = sc.carry;

    for (int i = 0; i < steps; ++i) {
      const int t = t0 + i;
      double p;
      if (spec.dot_form()) {
        p = decode_dot(params, sc.H.col(i), scalar_dot_target(spec, sd, t));
      } else {
        const double h_prime =
            d > 0 ? project_scalar(params, sc.H.col(i)) : 0.0;
        p = decode_scalar(params, h_prime, sd.items[t], sd.step_counts[t]);
      }
      if (!std::isfinite(p))
        throw NumericError("non-finite prediction at step " + std::to_string(t + 1));
      sc.p[i] = p;
      stats.loss_sum += nll_term(sd.outcomes[t], p);
      ++stats.count;
      if (d > 0)
        gru_step_into(sc.H.col(i), table.vec(sd.items[t], sd.outcomes[t]), *gru,
                      sc.Z.col(i), sc.R.col(i), sc.N.col(i), sc.H.col(i + 1));
    }
    sc.carry_next = (d > 0 && steps > 0) ? Eigen::VectorXd(sc.H.col(steps)) : sc.carry;
  }
  // A window past every member's end has constant (zero) loss; backward()
  // then produces all-zero gradients.
  stats_ = stats;
  return stats;
}

void Batch::backward(const ParameterStore& params, Eigen::VectorXd& grad) const {
  const ModelSpec& spec = params.spec();
  const ParameterLayout& L = params.layout();
  const int d = spec.hidden_dim;
  grad.setZero(L.total());
  if (stats_.count == 0) return;
  const double inv_n = 1.0 / static_cast<double>(stats_.count);

  std::optional<GruParamsView> gru;
  if (d > 0) gru.emplace(params.gru());
  const ActionEmbeddingTable& table = params.embeddings();
  double* g = grad.data();
  auto gmat = [&](int off) { return Eigen::Map<Eigen::MatrixXd>(g + off, d, d); };
  auto gvec = [&](int off) { return Eigen::Map<Eigen::VectorXd>(g + off, d); };

  Eigen::VectorXd gh(d), gh_new(d), dn(d), dz(d), dr(d), dan(d), daz(d), dar(d),
      rt(d);
  for (size_t m = 0; m < members_.size(); ++m) {
    const SequenceData& sd = *members_[m];
    const Scratch& sc = scratch_[m];
    const int steps = sc.end - sc.begin;
    if (steps <= 0) continue;
    if (d > 0) gh.setZero();

    for (int i = steps - 1; i >= 0; --i) {
      const int t = sc.begin + i;
      if (d > 0) {
        gh_new.setZero();
        if (i < steps - 1) {
          // Transition H_{i+1} = GRU(H_i, x_i); upstream gradient is gh.
          auto z = sc.Z.col(i);
          auto r = sc.R.col(i);
          auto n = sc.N.col(i);
          auto h_prev = sc.H.col(i);
          auto x = table.vec(sd.items[t], sd.outcomes[t]);

          dn = gh.cwiseProduct(Eigen::VectorXd::Ones(d) - z);
          dz = gh.cwiseProduct(h_prev - n);
          gh_new = gh.cwiseProduct(z);

          dan = dn.cwiseProduct(Eigen::VectorXd::Ones(d) - n.cwiseProduct(n));
          gmat(L.gru_Wn).noalias() += dan * x.transpose();
          gmat(L.gru_Un).noalias() += dan * r.cwiseProduct(h_prev).transpose();
          gvec(L.gru_bn) += dan;
          rt.noalias() = gru->Un.transpose() * dan;
          dr = rt.cwiseProduct(h_prev);
          gh_new += rt.cwiseProduct(r);

          daz = dz.cwiseProduct(z).cwiseProduct(Eigen::VectorXd::Ones(d) - z);
          gmat(L.gru_Wz).noalias() += daz * x.transpose();
          gmat(L.gru_Uz).noalias() += daz * h_prev.transpose();
          gvec(L.gru_bz) += daz;
          gh_new.noalias() += gru->Uz.transpose() * daz;

          dar = dr.cwiseProduct(r).cwiseProduct(Eigen::VectorXd::Ones(d) - r);
          gmat(L.gru_Wr).noalias() += dar * x.transpose();
          gmat(L.gru_Ur).noalias() += dar * h_prev.transpose();
          gvec(L.gru_br) += dar;
          gh_new.noalias() += gru->Ur.transpose() * dar;
        }
      }

      const double delta = dloss_dlogit(sd.outcomes[t], sc.p[i]) * inv_n;
      if (delta != 0.0) {
        // Out-of-vocabulary ids contributed constant zero terms in the
        // forward pass, so they receive no gradient either.
        if (spec.dot_form()) {
          const int target = scalar_dot_target(spec, sd, t);
          if (target >= 0 && target < L.dot_targets) {
            Eigen::Map<Eigen::MatrixXd> gV(g + L.dot_V, spec.output_dim,
                                           L.dot_targets);
            gV.col(target) += delta * sc.H.col(i);
            g[L.dot_w + target] += delta;
            gh_new += delta * params.dot_embeddings().col(target);
          }
        } else {
          if (spec.metadata.item && sd.items[t] >= 0 &&
              sd.items[t] < params.num_items())
            g[L.item_w + sd.items[t]] += delta;
          for (const auto& c : sd.step_counts[t]) {
            if (c.skill < 0 || c.skill >= params.num_skills()) continue;
            if (spec.metadata.skill) g[L.beta + c.skill] += delta;
            if (spec.metadata.wins) g[L.gamma + c.skill] += delta * c.wins;
            if (spec.metadata.fails) g[L.delta + c.skill] += delta * c.fails;
          }
          if (spec.has_projection()) {
            Eigen::Map<Eigen::RowVectorXd> gA(g + L.proj_A, d);
            gA += delta * sc.H.col(i).transpose();
            g[L.proj_b] += delta;
            gh_new += delta * params.proj_weight().transpose();
          }
        }
      }
      if (d > 0) gh.swap(gh_new);
    }
  }

  if (!grad.allFinite()) {
    for (int i = 0; i < grad.size(); ++i)
      if (!std::isfinite(grad[i]))
        throw NumericError("non-finite gradient in " + L.name_at(i));
  }
}

FitResult fit(const ModelSpec& spec, const Dataset& data,
              std::span<const int> train_students, const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (train_students.empty()) throw ConfigError("training set is empty");

  std::vector<SequenceData> seqdata;
  seqdata.reserve(train_students.size());
  for (int sid : train_students)
    seqdata.push_back(make_sequence_data(data.sequences.at(sid), data.qmatrix));

  ParameterStore store(spec, data.num_items(), data.num_skills(),
                       mix_seed(config.seed, 0xA111CE),
                       mix_seed(config.seed, 0xE4BED5));
  FitResult result{std::move(store), {}};
  AdamState adam = AdamState::zeros(static_cast<int>(result.params.values().size()));
  auto rng = make_rng(mix_seed(config.seed, 0x5F0FFE));

  const int n = static_cast<int>(seqdata.size());
  const int batches = std::min(config.minibatch_count, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd grad;

  result.epoch_loss.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long count = 0;
    for (int b = 0; b < batches; ++b) {
      std::vector<const SequenceData*> members;
      for (int i = b; i < n; i += batches) members.push_back(&seqdata[order[i]]);
      try {
        Batch batch(std::move(members), result.params);
        for (int t0 = 0; t0 < batch.max_length(); t0 += config.bptt_window) {
          ForwardStats stats = batch.forward(result.params, t0, config.bptt_window);
          batch.backward(result.params, grad);
          adam_update(result.params.values(), grad, adam, config);
          batch.advance_carries();
          loss_sum += stats.loss_sum;
          count += stats.count;
        }
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " +
                           std::to_string(epoch + 1) + ", minibatch " +
                           std::to_string(b + 1) + ")");
      }
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(count));
  }
  return result;
}

}  // namespace ktrace
