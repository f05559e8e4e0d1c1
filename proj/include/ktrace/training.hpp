#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "ktrace/data.hpp"
#include "ktrace/decoder.hpp"
#include "ktrace/model.hpp"

namespace ktrace {

// Probabilities are clamped to [kProbEps, 1 - kProbEps] inside the loss
// only; reported predictions stay raw.
inline constexpr double kProbEps = 1e-7;

struct TrainConfig {
  double learning_rate = 0.005;
  double weight_decay = 0.0005;
  int minibatch_count = 100;
  int bptt_window = 100;
  int epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Mean negative log-likelihood over masked-in entries:
// -(1/N) sum log(1 - |a - p|). Throws NumericError when the mask selects
// nothing.
double nll(std::span<const std::int8_t> labels, std::span<const double> preds,
           std::span<const std::uint8_t> mask);

struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;

  static AdamState zeros(int n);
};

// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
// Weight decay is added to the gradient before the moment updates.
void adam_update(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                 AdamState& state, const TrainConfig& config);

// Immutable per-student training view: items, outcomes, and for each step
// the (skill, wins, fails) triples of the item's knowledge components.
struct SequenceData {
  std::vector<int> items;
  std::vector<std::int8_t> outcomes;
  std::vector<std::vector<SkillWinsFails>> step_counts;

  int length() const { return static_cast<int>(items.size()); }
};

SequenceData make_sequence_data(const StudentSequence& seq, const QMatrix& qm);

struct ForwardStats {
  double loss_sum = 0.0;
  long count = 0;

  double mean() const { return count > 0 ? loss_sum / count : 0.0; }
};

// A minibatch of students advanced window-by-window. The state carried
// between windows enters the next window as a constant: backward() never
// sends gradient across a window boundary or into the fixed embeddings.
class Batch {
 public:
  Batch(std::vector<const SequenceData*> members, const ParameterStore& params);

  int size() const { return static_cast<int>(members_.size()); }
  int max_length() const { return max_length_; }

  // True where a real interaction exists for (member, global step t).
  bool active(int member, int t) const;

  // Runs the window [t0, t0 + window) from the current carries and caches
  // everything backward() needs. Returns the masked loss statistics.
  ForwardStats forward(const ParameterStore& params, int t0, int window);

  // Gradient of the last forward window's mean masked loss, accumulated
  // into grad (resized and zeroed here). Throws NumericError, naming the
  // parameter, if any gradient entry is non-finite.
  void backward(const ParameterStore& params, Eigen::VectorXd& grad) const;

  // Commits the end-of-window states so the next forward starts from them.
  void advance_carries();
  void reset_carries();

 private:
  struct Scratch {
    Eigen::MatrixXd H;        // d x (window+1); col i = state at step t0+i
    Eigen::MatrixXd Z, R, N;  // d x window gate caches
    std::vector<double> p;
    int begin = 0, end = 0;   // active global step range in the last window
    Eigen::VectorXd carry;    // state entering the current window
    Eigen::VectorXd carry_next;
  };

  std::vector<const SequenceData*> members_;
  std::vector<Scratch> scratch_;
  int max_length_ = 0;
  ForwardStats stats_;
};

struct FitResult {
  ParameterStore params;
  std::vector<double> epoch_loss;  // mean masked NLL per epoch
};

// Trains one model on the given students: per epoch the students are
// shuffled (seeded) and dealt into minibatch_count minibatches; each
// minibatch slides the BPTT window over its maximal sequence length with
// one Adam step per window. Deterministic given (seed, spec, config, data).
FitResult fit(const ModelSpec& spec, const Dataset& data,
              std::span<const int> train_students, const TrainConfig& config);

}  // namespace ktrace
