#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <string>

#include "ktrace/data.hpp"
#include "ktrace/evaluation.hpp"

namespace ktrace {

// Closed-form generators used as oracles for parameter-recovery tests.
// "irt": static per-student ability + per-item easiness.
// "pfa": per-skill bias/win/fail slopes simulated sequentially so the
// counters evolve; an optional per-item easiness spread mixes in static
// item effects.
struct SyntheticSpec {
  enum class Kind { Irt, Pfa };
  Kind kind = Kind::Pfa;
  int students = 100;
  int items = 50;
  int skills = 5;
  int length = 20;       // attempts per student
  int skills_per_item = 1;
  std::uint64_t seed = 0;

  double theta_std = 1.0;   // irt: student ability spread
  double item_std = 0.0;    // per-item easiness spread (irt default 1.0)
  double beta_std = 0.5;
  double gamma_mean = 0.3, gamma_std = 0.15;
  double delta_mean = -0.2, delta_std = 0.15;

  void validate() const;
};

struct SyntheticTruth {
  Eigen::VectorXd theta;          // per student (irt)
  Eigen::VectorXd item_easiness;  // per item
  Eigen::VectorXd beta, gamma, delta;  // per skill (pfa)
};

struct SyntheticResult {
  Dataset data;
  SyntheticTruth truth;
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec);

// Predictions of the generating model itself, replayed over the given
// students. Used to compare a fitted model against the data's own oracle.
PredictionLog predict_with_truth(const SyntheticSpec& spec,
                                 const SyntheticTruth& truth,
                                 const Dataset& data,
                                 std::span<const int> student_ids);

// Flat key=value spec file, same grammar as the experiment config.
SyntheticSpec parse_synthetic_spec(std::istream& in);

// Writes the dataset in long format to `path` and the true parameters to
// `<path>.truth_*.csv` next to it.
void write_synthetic(const SyntheticResult& result, const SyntheticSpec& spec,
                     const std::string& path);

}  // namespace ktrace
