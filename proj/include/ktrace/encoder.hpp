#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ktrace/data.hpp"

namespace ktrace {

// Fixed random encodings for (token, outcome) pairs. Drawn once from a
// standard Gaussian with the given seed and never updated by training.
// Tokens are item ids by default. Unknown tokens map to the zero vector so
// test-time behavior stays deterministic.
class ActionEmbeddingTable {
 public:
  ActionEmbeddingTable() = default;
  ActionEmbeddingTable(int num_tokens, int dim, std::uint64_t seed);

  int dim() const { return static_cast<int>(table_.rows()); }
  int num_tokens() const { return num_tokens_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::Ref<const Eigen::VectorXd> vec(int token, int outcome) const;

 private:
  Eigen::MatrixXd table_;  // dim x (2 * num_tokens); column = 2*token+outcome
  Eigen::VectorXd zero_;
  int num_tokens_ = 0;
  std::uint64_t seed_ = 0;
};

// Non-owning view of the GRU parameters inside a flat parameter store.
// Gate convention: the reset gate applies to the recurrent term of the
// candidate state, and the update gate interpolates h = (1-z)*n + z*h_prev.
struct GruParamsView {
  Eigen::Map<const Eigen::MatrixXd> Wz, Wr, Wn;  // input weights, d x d
  Eigen::Map<const Eigen::MatrixXd> Uz, Ur, Un;  // recurrent weights, d x d
  Eigen::Map<const Eigen::VectorXd> bz, br, bn;  // biases, d
  int dim = 0;
};

struct GruGates {
  Eigen::VectorXd z, r, n;
};

// Writes gates and the next state into caller-provided storage; the engine
// points these at columns of its per-window caches.
void gru_step_into(Eigen::Ref<const Eigen::VectorXd> h_prev,
                   Eigen::Ref<const Eigen::VectorXd> x,
                   const GruParamsView& params,
                   Eigen::Ref<Eigen::VectorXd> z, Eigen::Ref<Eigen::VectorXd> r,
                   Eigen::Ref<Eigen::VectorXd> n,
                   Eigen::Ref<Eigen::VectorXd> h_out);

Eigen::VectorXd gru_step(Eigen::Ref<const Eigen::VectorXd> h_prev,
                         Eigen::Ref<const Eigen::VectorXd> x,
                         const GruParamsView& params,
                         GruGates* gates = nullptr);

struct EncodedSequence {
  // states[t-1] is the state used to predict step t; it has consumed steps
  // 1..t-1 only (states[0] is the zero vector).
  std::vector<Eigen::VectorXd> states;
  Eigen::VectorXd carry;  // state after consuming the whole sequence
};

// Unrolls the GRU over a full sequence. The window argument only controls
// where gradients would be truncated during training; forward values are
// identical for every window size.
EncodedSequence encode_sequence(const StudentSequence& seq,
                                const ActionEmbeddingTable& table,
                                const GruParamsView& params, int window);

// The trivial encoder: every state is the empty vector, so a decoder sees
// only assessment metadata.
std::vector<Eigen::VectorXd> encode_none(const StudentSequence& seq);

}  // namespace ktrace
