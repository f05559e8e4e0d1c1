#pragma once

#include <istream>
#include <string>
#include <vector>

#include "ktrace/evaluation.hpp"
#include "ktrace/model.hpp"
#include "ktrace/training.hpp"

namespace ktrace {

struct GridEntry {
  std::string label;
  ModelSpec spec;
};

// One reproducible experiment: a dataset, a model grid, and the shared
// training configuration. Grid entries are written
//   model = <label>, <encoder>, <decoder>
// e.g. `model = Ours, GRU d=2, iswf d'=1`.
struct ExperimentConfig {
  std::string dataset;
  std::string format = "long";  // "long" | "wide"
  std::string qmatrix;          // wide format only
  int folds = 5;
  int workers = 1;
  std::string out;  // default output directory; CLI --out overrides
  TrainConfig train;
  std::vector<GridEntry> grid;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

// Runs every grid entry under k-fold cross-validation and writes
// results.csv, results.txt, per-model prediction logs, and per-fold
// checkpoints into out_dir. Returns false if any entry failed.
bool run_experiment(const ExperimentConfig& config, const std::string& out_dir);

// Results CSV body (header `model,encoder,decoder,fold,acc,auc`, one row
// per fold plus a fold="mean" summary row per model, in grid order).
std::string results_csv(const std::vector<MetricReport>& reports);
std::string results_table(const std::vector<MetricReport>& reports);

std::string slugify(const std::string& label);

}  // namespace ktrace
