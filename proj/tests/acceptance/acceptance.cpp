// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit status is nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "ktrace/checkpoint.hpp"
#include "ktrace/rng.hpp"
#include "ktrace/config.hpp"
#include "ktrace/evaluation.hpp"
#include "ktrace/synthetic.hpp"
#include "../unit/oracles.hpp"

namespace fs = std::filesystem;
using namespace ktrace;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_criterion(int id, const std::string& name,
                   const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome.pass = false;
    outcome.detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (!outcome.pass) ++g_failures;
  std::printf("criterion %d %-4s (%6.1fs) %s: %s\n", id,
              outcome.pass ? "PASS" : "FAIL", seconds, name.c_str(),
              outcome.detail.c_str());
  std::fflush(stdout);
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ktrace_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int fold_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(5u, hw == 0 ? 1u : hw));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Gradient fidelity
// ---------------------------------------------------------------------------

Dataset gradient_instance(bool single_skill, std::uint64_t seed) {
  Dataset data;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 3; ++i) data.students.add("s" + std::to_string(i));
  for (int j = 0; j < 5; ++j) data.items.add("i" + std::to_string(j));
  for (int k = 0; k < 3; ++k) data.skills.add("k" + std::to_string(k));
  data.qmatrix.num_skills = 3;
  data.qmatrix.rows = single_skill
                          ? std::vector<std::vector<int>>{{0}, {1}, {2}, {0}, {1}}
                          : std::vector<std::vector<int>>{{0}, {1}, {2}, {0, 1}, {1, 2}};
  for (int i = 0; i < 3; ++i) {
    StudentSequence seq{i, {}};
    for (int t = 0; t < 6; ++t)
      seq.steps.push_back(Step{static_cast<int>(rng() % 5),
                               static_cast<std::int8_t>(rng() & 1)});
    data.sequences.push_back(seq);
  }
  return data;
}

double family_gradcheck(const ModelSpec& spec, std::uint64_t seed) {
  Dataset data = gradient_instance(spec.dot_form() && spec.metadata.skill, 97);
  std::vector<SequenceData> seqs;
  for (const auto& s : data.sequences)
    seqs.push_back(make_sequence_data(s, data.qmatrix));

  ParameterStore store(spec, data.num_items(), data.num_skills(), seed, seed + 1);
  std::mt19937_64 rng(seed + 2);
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (auto& v : store.values()) v = gauss(rng);

  std::vector<const SequenceData*> members;
  for (const auto& s : seqs) members.push_back(&s);
  Batch batch(members, store);
  batch.forward(store, 0, 10);
  Eigen::VectorXd analytic;
  batch.backward(store, analytic);

  Eigen::VectorXd base = store.values();
  auto loss = [&](const Eigen::VectorXd& theta) {
    store.set_values(theta);
    return batch.forward(store, 0, 10).mean();
  };
  Eigen::VectorXd fd = oracles::finite_difference_gradient(loss, base, 1e-5);
  return oracles::max_rel_error(analytic, fd);
}

Outcome criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  worst = std::max(worst, family_gradcheck(ModelSpec::parse("none", "iswf d'=1"), 11));
  worst = std::max(worst, family_gradcheck(ModelSpec::parse("GRU d=2", "iswf d'=1"), 22));
  worst = std::max(worst, family_gradcheck(ModelSpec::parse("GRU d=2", "i d'=2"), 33));
  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  Outcome out;
  out.pass = worst <= 1e-4 && seconds < 10.0;
  out.detail = "max rel err " + fmt("%.2e", worst) + " across 3 model families";
  return out;
}

// ---------------------------------------------------------------------------
// 2. AUC oracle equivalence
// ---------------------------------------------------------------------------

Outcome criterion_auc() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 199);
    std::vector<std::int8_t> labels(n);
    std::vector<double> preds(n);
    labels[0] = 1;
    labels[1] = 0;
    for (int i = 2; i < n; ++i) labels[i] = static_cast<std::int8_t>(rng() & 1);
    const bool coarse = rep % 2 == 0;  // half the logs are tie-heavy
    for (int i = 0; i < n; ++i)
      preds[i] = coarse ? static_cast<double>(rng() % 8) / 7.0
                        : std::uniform_real_distribution<double>(0, 1)(rng);
    worst = std::max(worst, std::abs(auc(labels, preds) -
                                     oracles::brute_force_auc(labels, preds)));
  }
  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  Outcome out;
  out.pass = worst <= 1e-12 && seconds < 5.0;
  out.detail = "max |rank - pairwise| " + fmt("%.2e", worst) + " over 500 logs";
  return out;
}

// ---------------------------------------------------------------------------
// 3. Decoder equivalence
// ---------------------------------------------------------------------------

Outcome criterion_decoder() {
  ModelSpec spec;
  spec.encoder = EncoderKind::Gru;
  spec.hidden_dim = 4;
  spec.metadata = MetadataSpec::parse("s");
  spec.output_dim = 4;
  const int num_skills = 6;
  ParameterStore store(spec, 5, num_skills, 1, 2);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  long mismatches = 0;
  for (int rep = 0; rep < 100; ++rep) {
    for (auto& v : store.values()) v = gauss(rng);
    Eigen::VectorXd h(4);
    for (int i = 0; i < 4; ++i) h[i] = gauss(rng);
    Eigen::VectorXd out_vec = full_output_vector(store, h);
    for (int s = 0; s < num_skills; ++s)
      if (out_vec[s] != decode_dot(store, h, s)) ++mismatches;
  }
  Outcome out;
  out.pass = mismatches == 0;
  out.detail = std::to_string(mismatches) + " mismatches in 100 draws x " +
               std::to_string(num_skills) + " skills (exact comparison)";
  return out;
}

// ---------------------------------------------------------------------------
// 4. Counter oracle
// ---------------------------------------------------------------------------

Outcome criterion_counters() {
  std::mt19937_64 rng(404);
  long checked = 0, wrong = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int num_skills = 1 + static_cast<int>(rng() % 10);
    const int num_items = 1 + static_cast<int>(rng() % 12);
    QMatrix qm;
    qm.num_skills = num_skills;
    qm.rows.resize(num_items);
    for (auto& row : qm.rows) {
      row.push_back(static_cast<int>(rng() % num_skills));
      if (num_skills > 1 && (rng() & 1)) {
        const int extra = static_cast<int>(rng() % num_skills);
        if (extra != row[0]) row.push_back(extra);
      }
    }
    const int T = 1 + static_cast<int>(rng() % 50);
    StudentSequence seq{0, {}};
    for (int t = 0; t < T; ++t)
      seq.steps.push_back(Step{static_cast<int>(rng() % num_items),
                               static_cast<std::int8_t>(rng() & 1)});
    CounterTable table = compute_counters(seq, qm);
    for (int t = 1; t <= T; ++t)
      for (int k = 0; k < num_skills; ++k) {
        ++checked;
        if (table.wins(t, k) != oracles::recount_wins(seq, qm, t, k)) ++wrong;
        if (table.fails(t, k) != oracles::recount_fails(seq, qm, t, k)) ++wrong;
      }
  }
  Outcome out;
  out.pass = wrong == 0;
  out.detail = std::to_string(wrong) + " mismatches over " +
               std::to_string(checked) + " (step, skill) cells";
  return out;
}

// ---------------------------------------------------------------------------
// 5. Parameter recovery on synthetic count-model data
// ---------------------------------------------------------------------------

Outcome criterion_recovery() {
  const auto start = Clock::now();
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::Pfa;
  spec.students = 2000;
  spec.items = 100;
  spec.skills = 10;
  spec.length = 50;
  spec.skills_per_item = 1;
  spec.item_std = 0.0;
  spec.seed = 505;
  SyntheticResult synth = generate_synthetic(spec);

  FoldAssignment folds = split_folds(synth.data, 5, 1);
  std::vector<int> train_ids, test_ids;
  for (int s = 0; s < synth.data.num_students(); ++s)
    (folds.fold_of_student[s] == 0 ? test_ids : train_ids).push_back(s);

  TrainConfig config;
  config.seed = 7;
  FitResult fr =
      fit(ModelSpec::parse("none", "iswf d'=1"), synth.data, train_ids, config);

  PredictionLog fitted = predict_students(fr.params, synth.data, test_ids);
  PredictionLog truth = predict_with_truth(spec, synth.truth, synth.data, test_ids);
  const double auc_fit = auc(fitted);
  const double auc_truth = auc(truth);

  std::vector<double> learned, actual;
  for (int k = 0; k < spec.skills; ++k) {
    learned.push_back(fr.params.win_slope()[k]);
    actual.push_back(synth.truth.gamma[k]);
  }
  for (int k = 0; k < spec.skills; ++k) {
    learned.push_back(fr.params.fail_slope()[k]);
    actual.push_back(synth.truth.delta[k]);
  }
  const double corr = oracles::pearson(learned, actual);
  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();

  Outcome out;
  out.pass = std::abs(auc_fit - auc_truth) <= 0.02 && corr > 0.9 && seconds < 300.0;
  out.detail = "test AUC " + fmt("%.4f", auc_fit) + " vs generator " +
               fmt("%.4f", auc_truth) + ", corr(gamma,delta) " + fmt("%.3f", corr);
  return out;
}

// ---------------------------------------------------------------------------
// 6. Fraction-style benchmark, or the model-ordering substitute
// ---------------------------------------------------------------------------

Outcome criterion_benchmark() {
  const auto start = Clock::now();
  const fs::path data_path = fs::path(KTRACE_SOURCE_DIR) / "data" / "fraction.csv";
  const fs::path qm_path =
      fs::path(KTRACE_SOURCE_DIR) / "data" / "fraction_qmatrix.csv";

  Outcome out;
  if (fs::exists(data_path) && fs::exists(qm_path)) {
    Dataset data = load_dataset(data_path.string(), "wide", qm_path.string());
    TrainConfig config;
    config.seed = 42;
    const CvOptions options{5, fold_workers()};

    struct Target {
      const char* label;
      const char* encoder;
      const char* decoder;
      double acc, auc;
      bool check_acc;
    };
    // Published 5-fold results for this benchmark, +/- 0.03.
    const std::vector<Target> targets = {
        {"Ours", "GRU d=2", "iswf d'=1", 0.880, 0.944, true},
        {"LR", "none", "iswf d'=1", 0.853, 0.918, true},
        {"PFA", "none", "swf d'=1", 0.854, 0.917, true},
        {"DKT-i", "GRU d=2", "i d'=2", 0.772, 0.844, false},
        {"DKT-s", "GRU d=2", "s d'=1", 0.761, 0.839, false},
    };
    bool all_ok = true;
    std::string detail;
    for (const auto& t : targets) {
      CvResult cv = cross_validate(ModelSpec::parse(t.encoder, t.decoder), data,
                                   config, options, t.label);
      const bool acc_ok =
          !t.check_acc || std::abs(cv.report.mean_acc - t.acc) <= 0.03;
      const bool auc_ok = std::abs(cv.report.mean_auc - t.auc) <= 0.03;
      all_ok = all_ok && acc_ok && auc_ok;
      detail += std::string(t.label) + " auc " + fmt("%.3f", cv.report.mean_auc) +
                (auc_ok && acc_ok ? "" : "(!)") + " ";
    }
    const double seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    out.pass = all_ok && seconds < 1800.0;
    out.detail = "benchmark data: " + detail;
    return out;
  }

  // Substitute property: on synthetic data mixing item effects and learning
  // dynamics, the d'=1 iswf decoders beat the higher-dimensional i/s
  // decoders in AUC.
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::Pfa;
  spec.students = 800;
  spec.items = 200;
  spec.skills = 10;
  spec.length = 40;
  spec.skills_per_item = 1;
  spec.item_std = 0.8;
  spec.gamma_mean = 0.25;
  spec.gamma_std = 0.1;
  spec.delta_mean = -0.15;
  spec.delta_std = 0.1;
  spec.seed = 606;
  Dataset data = generate_synthetic(spec).data;

  TrainConfig config;
  config.seed = 9;
  const CvOptions options{5, fold_workers()};
  auto mean_auc = [&](const char* encoder, const char* decoder) {
    return cross_validate(ModelSpec::parse(encoder, decoder), data, config,
                          options)
        .report.mean_auc;
  };
  const double ours = mean_auc("GRU d=2", "iswf d'=1");
  const double lr = mean_auc("none", "iswf d'=1");
  const double dkt_i = mean_auc("GRU d=2", "i d'=2");
  const double dkt_s = mean_auc("GRU d=2", "s d'=2");

  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  const double best_1d = std::min(ours, lr);
  const double best_hd = std::max(dkt_i, dkt_s);
  out.pass = best_1d > best_hd && seconds < 1800.0;
  out.detail = "substitute (no benchmark data): iswf d'=1 AUC {ours " +
               fmt("%.3f", ours) + ", lr " + fmt("%.3f", lr) +
               "} vs high-d {i " + fmt("%.3f", dkt_i) + ", s " +
               fmt("%.3f", dkt_s) + "}";
  return out;
}

// ---------------------------------------------------------------------------
// 7. Item-bias gap on a 5% student subsample of a large long-format dataset
// ---------------------------------------------------------------------------

Outcome criterion_item_bias_gap() {
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::Pfa;
  spec.students = 4000;
  spec.items = 400;
  spec.skills = 25;
  spec.length = 60;
  spec.skills_per_item = 1;
  spec.item_std = 1.0;
  spec.seed = 707;
  SyntheticResult synth = generate_synthetic(spec);

  const fs::path big_path = work_dir() / "large_long.csv";
  {
    std::ofstream bout(big_path);
    write_long(synth.data, bout);
  }

  // Deterministic 5% student subsample, re-read through the long parser.
  std::vector<int> ids(synth.data.num_students());
  std::iota(ids.begin(), ids.end(), 0);
  auto rng = make_rng(17);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(synth.data.num_students() / 20);
  std::set<int> keep(ids.begin(), ids.end());

  Dataset sample;
  {
    Dataset full = load_dataset(big_path.string(), "long");
    std::ostringstream filtered;
    filtered << "student,item,outcome,skills\n";
    std::ostringstream all;
    write_long(full, all);
    std::istringstream lines(all.str());
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
      const auto comma = line.find(',');
      const std::string raw = line.substr(0, comma);
      const int sid = full.students.lookup(raw);
      if (sid >= 0 && keep.count(sid)) filtered << line << '\n';
    }
    std::istringstream in(filtered.str());
    sample = parse_interactions(in);
  }

  TrainConfig config;
  config.seed = 23;
  const CvOptions options{5, fold_workers()};
  const double auc_lr =
      cross_validate(ModelSpec::parse("none", "iswf d'=1"), sample, config,
                     options)
          .report.mean_auc;
  const double auc_pfa =
      cross_validate(ModelSpec::parse("none", "swf d'=1"), sample, config,
                     options)
          .report.mean_auc;

  Outcome out;
  out.pass = auc_lr > auc_pfa;
  out.detail = std::to_string(sample.num_students()) + " students sampled: LR AUC " +
               fmt("%.4f", auc_lr) + " vs PFA AUC " + fmt("%.4f", auc_pfa) +
               " (gap " + fmt("%+.4f", auc_lr - auc_pfa) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// 8. Byte-identical reruns
// ---------------------------------------------------------------------------

Outcome criterion_determinism() {
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::Pfa;
  spec.students = 60;
  spec.items = 30;
  spec.skills = 5;
  spec.length = 15;
  spec.item_std = 0.5;
  spec.seed = 808;
  SyntheticResult synth = generate_synthetic(spec);

  const fs::path dir = work_dir() / "determinism";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "data.csv");
    write_long(synth.data, out);
  }

  ExperimentConfig config;
  config.dataset = (dir / "data.csv").string();
  config.format = "long";
  config.folds = 3;
  config.train.epochs = 10;
  config.train.seed = 31;
  config.grid.push_back({"LR", ModelSpec::parse("none", "iswf d'=1")});
  config.grid.push_back({"Ours", ModelSpec::parse("GRU d=2", "iswf d'=1")});

  if (!run_experiment(config, (dir / "run1").string()) ||
      !run_experiment(config, (dir / "run2").string()))
    return {false, "an experiment run failed"};

  const bool results_equal = read_file(dir / "run1" / "results.csv") ==
                             read_file(dir / "run2" / "results.csv");
  const bool predictions_equal =
      read_file(dir / "run1" / "predictions_1_ours.csv") ==
      read_file(dir / "run2" / "predictions_1_ours.csv");

  Outcome out;
  out.pass = results_equal && predictions_equal;
  out.detail = std::string("results.csv ") +
               (results_equal ? "identical" : "DIFFER") + ", prediction log " +
               (predictions_equal ? "identical" : "DIFFER");
  return out;
}

}  // namespace

int main() {
  std::printf("acceptance suite (work dir %s)\n", work_dir().string().c_str());
  run_criterion(1, "gradient fidelity vs central finite differences",
                criterion_gradients);
  run_criterion(2, "rank-based AUC equals pairwise AUC", criterion_auc);
  run_criterion(3, "per-skill readout equals the dot-product decoder",
                criterion_decoder);
  run_criterion(4, "incremental counters equal the brute-force recount",
                criterion_counters);
  run_criterion(5, "parameter recovery on synthetic count data",
                criterion_recovery);
  run_criterion(6, "benchmark reproduction / model-ordering substitute",
                criterion_benchmark);
  run_criterion(7, "item-bias AUC gap on a 5% subsample",
                criterion_item_bias_gap);
  run_criterion(8, "byte-identical reruns", criterion_determinism);

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
