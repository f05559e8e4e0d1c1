#include "ktrace/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "ktrace/rng.hpp"

namespace ktrace {

PredictionLog predict_students(const ParameterStore& params,
                               const Dataset& data,
                               std::span<const int> student_ids) {
  const ModelSpec& spec = params.spec();
  const int d = spec.hidden_dim;
  std::optional<GruParamsView> gru;
  if (d > 0) gru.emplace(params.gru());

  PredictionLog log;
  for (int sid : student_ids) {
    const StudentSequence& seq = data.sequences.at(sid);
    SequenceData sd = make_sequence_data(seq, data.qmatrix);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
    for (int t = 0; t < sd.length(); ++t) {
      double p;
      if (spec.dot_form()) {
        p = decode_dot(params, h, dot_target(spec, sd.items[t], data.qmatrix));
      } else {
        const double h_prime = d > 0 ? project_scalar(params, h) : 0.0;
        p = decode_scalar(params, h_prime, sd.items[t], sd.step_counts[t]);
      }
      log.rows.push_back(PredictionRow{sid, t + 1, sd.items[t], sd.outcomes[t], p});
      if (d > 0)
        h = gru_step(h, params.embeddings().vec(sd.items[t], sd.outcomes[t]), *gru);
    }
  }
  return log;
}

double accuracy(std::span<const std::int8_t> labels,
                std::span<const double> preds) {
  if (labels.empty() || labels.size() != preds.size())
    throw MetricError("accuracy needs a non-empty prediction log");
  long hits = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    if ((preds[i] >= 0.5) == (labels[i] == 1)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double auc(std::span<const std::int8_t> labels, std::span<const double> preds) {
  if (labels.empty() || labels.size() != preds.size())
    throw MetricError("auc needs a non-empty prediction log");
  const size_t n = labels.size();
  long n1 = 0;
  for (auto a : labels) n1 += (a == 1);
  const long n0 = static_cast<long>(n) - n1;
  if (n1 == 0 || n0 == 0)
    throw MetricError("AUC undefined: only one class present");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return preds[a] < preds[b]; });

  // Midranks over tie groups, then the Mann-Whitney U statistic.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && preds[order[j]] == preds[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

namespace {

LabeledPredictions to_labeled(const PredictionLog& log) {
  LabeledPredictions lp;
  lp.labels.reserve(log.rows.size());
  lp.preds.reserve(log.rows.size());
  for (const auto& r : log.rows) {
    lp.labels.push_back(r.label);
    lp.preds.push_back(r.p);
  }
  return lp;
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double accuracy(const PredictionLog& log) {
  auto lp = to_labeled(log);
  return accuracy(lp.labels, lp.preds);
}

double auc(const PredictionLog& log) {
  auto lp = to_labeled(log);
  return auc(lp.labels, lp.preds);
}

CvResult cross_validate(const ModelSpec& spec, const Dataset& data,
                        const TrainConfig& config, const CvOptions& options,
                        std::string_view label) {
  spec.validate();
  config.validate();
  FoldAssignment folds = split_folds(data, options.k, config.seed);
  auto members = folds.members();
  const int k = options.k;

  struct FoldOut {
    std::optional<ParameterStore> params;
    PredictionLog log;
    FoldMetrics metrics;
    std::string warning;
    std::exception_ptr error;
  };
  std::vector<FoldOut> outs(k);

  auto run_fold = [&](int f) {
    FoldOut& out = outs[f];
    try {
      std::vector<int> train_ids;
      train_ids.reserve(data.num_students());
      for (int s = 0; s < data.num_students(); ++s)
        if (folds.fold_of_student[s] != f) train_ids.push_back(s);

      TrainConfig fold_config = config;
      fold_config.seed = mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(f));
      FitResult fr = fit(spec, data, train_ids, fold_config);
      out.log = predict_students(fr.params, data, members[f]);
      out.metrics.fold = f;
      out.metrics.acc = accuracy(out.log);
      try {
        out.metrics.auc = auc(out.log);
        out.metrics.auc_defined = true;
      } catch (const MetricError& e) {
        out.metrics.auc = std::numeric_limits<double>::quiet_NaN();
        out.metrics.auc_defined = false;
        out.warning = "fold " + std::to_string(f) + ": " + e.what() +
                      "; excluded from the AUC mean";
      }
      out.params.emplace(std::move(fr.params));
    } catch (...) {
      out.error = std::current_exception();
    }
  };

  const int workers = std::clamp(options.workers, 1, k);
  if (workers == 1) {
    for (int f = 0; f < k; ++f) run_fold(f);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const int f = next.fetch_add(1);
          if (f >= k) break;
          run_fold(f);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (int f = 0; f < k; ++f)
    if (outs[f].error) {
      try {
        std::rethrow_exception(outs[f].error);
      } catch (const Error& e) {
        throw Error("fold " + std::to_string(f) + ": " + e.what());
      }
    }

  CvResult result;
  result.folds = std::move(folds);
  result.report.model = label.empty()
                            ? spec.encoder_name() + " + " + spec.decoder_name()
                            : std::string(label);
  result.report.encoder = spec.encoder_name();
  result.report.decoder = spec.decoder_name();
  result.report.config = config;

  double acc_sum = 0.0, auc_sum = 0.0;
  int auc_count = 0;
  for (int f = 0; f < k; ++f) {
    FoldOut& out = outs[f];
    result.report.folds.push_back(out.metrics);
    result.fold_params.push_back(std::move(*out.params));
    result.predictions.rows.insert(result.predictions.rows.end(),
                                   out.log.rows.begin(), out.log.rows.end());
    if (!out.warning.empty()) result.warnings.push_back(out.warning);
    acc_sum += out.metrics.acc;
    if (out.metrics.auc_defined) {
      auc_sum += out.metrics.auc;
      ++auc_count;
    }
  }
  result.report.mean_acc = acc_sum / k;
  result.report.mean_auc = auc_count > 0
                               ? auc_sum / auc_count
                               : std::numeric_limits<double>::quiet_NaN();
  if (auc_count == 0)
    result.warnings.push_back("AUC undefined in every fold");
  return result;
}

void write_prediction_csv(const PredictionLog& log, const Dataset& data,
                          std::ostream& out) {
  out << "student,step,item,label,prediction\n";
  for (const auto& r : log.rows) {
    out << data.students.name(r.student) << ',' << r.step << ','
        << data.items.name(r.item) << ',' << static_cast<int>(r.label) << ','
        << fmt_double(r.p) << '\n';
  }
}

LabeledPredictions read_prediction_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty prediction file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "student,step,item,label,prediction")
    throw ParseError("expected header 'student,step,item,label,prediction'");
  LabeledPredictions lp;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5)
      throw ParseError("line " + std::to_string(line_no) + ": expected 5 columns");
    if (fields[3] != "0" && fields[3] != "1")
      throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    try {
      lp.preds.push_back(std::stod(fields[4]));
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad prediction value");
    }
    lp.labels.push_back(fields[3] == "1" ? 1 : 0);
  }
  if (lp.labels.empty()) throw ParseError("prediction file has no rows");
  return lp;
}

}  // namespace ktrace
