#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ktrace/data.hpp"
#include "ktrace/training.hpp"

namespace ktrace {

struct PredictionRow {
  int student = 0;
  int step = 0;  // 1-based
  int item = 0;
  std::int8_t label = 0;
  double p = 0.5;
};

struct PredictionLog {
  std::vector<PredictionRow> rows;
};

// Unrolls a trained model over held-out students. States are computed
// causally from each student's own history; step 1 uses the zero state and
// zero counters.
PredictionLog predict_students(const ParameterStore& params,
                               const Dataset& data,
                               std::span<const int> student_ids);

// Fraction of rows where (p >= 0.5) matches the label.
double accuracy(std::span<const std::int8_t> labels,
                std::span<const double> preds);
double accuracy(const PredictionLog& log);

// Mann-Whitney AUC with midrank tie handling. Throws MetricError when only
// one class is present.
double auc(std::span<const std::int8_t> labels, std::span<const double> preds);
double auc(const PredictionLog& log);

struct FoldMetrics {
  int fold = 0;
  double acc = 0.0;
  double auc = 0.0;
  bool auc_defined = true;
};

struct MetricReport {
  std::string model;
  std::string encoder;
  std::string decoder;
  std::vector<FoldMetrics> folds;
  double mean_acc = 0.0;
  double mean_auc = 0.0;  // mean over folds where AUC is defined
  TrainConfig config;
};

struct CvOptions {
  int k = 5;
  int workers = 1;
};

struct CvResult {
  MetricReport report;
  std::vector<ParameterStore> fold_params;  // one trained store per fold
  PredictionLog predictions;                // every student once, fold order
  FoldAssignment folds;
  std::vector<std::string> warnings;
};

// k-fold cross-validation: for each fold, fit on the students outside it,
// predict the students inside it, and average the per-fold metrics. Folds
// may run on up to `workers` threads; results are identical either way.
CvResult cross_validate(const ModelSpec& spec, const Dataset& data,
                        const TrainConfig& config, const CvOptions& options,
                        std::string_view label = "");

void write_prediction_csv(const PredictionLog& log, const Dataset& data,
                          std::ostream& out);

struct LabeledPredictions {
  std::vector<std::int8_t> labels;
  std::vector<double> preds;
};

// Reads the label/prediction columns back from a prediction CSV.
LabeledPredictions read_prediction_csv(std::istream& in);

}  // namespace ktrace
