#include "ktrace/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ktrace/checkpoint.hpp"
#include "ktrace/kvfile.hpp"

namespace ktrace {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

GridEntry parse_grid_entry(const std::string& value) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream ss(value);
  while (std::getline(ss, part, ',')) parts.push_back(trim(part));
  if (parts.size() != 3)
    throw ConfigError("key 'model': expected '<label>, <encoder>, <decoder>', got '" +
                      value + "'");
  if (parts[0].empty()) throw ConfigError("key 'model': empty label in '" + value + "'");
  return GridEntry{parts[0], ModelSpec::parse(parts[1], parts[2])};
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig config;
  std::vector<std::string> problems;
  for (const auto& [key, value] : read_kv_file(in)) {
    try {
      if (key == "dataset") config.dataset = value;
      else if (key == "format") config.format = value;
      else if (key == "qmatrix") config.qmatrix = value;
      else if (key == "out") config.out = value;
      else if (key == "folds") config.folds = kv_int(key, value);
      else if (key == "workers") config.workers = kv_int(key, value);
      else if (key == "learning_rate") config.train.learning_rate = kv_double(key, value);
      else if (key == "weight_decay") config.train.weight_decay = kv_double(key, value);
      else if (key == "minibatches") config.train.minibatch_count = kv_int(key, value);
      else if (key == "bptt_window") config.train.bptt_window = kv_int(key, value);
      else if (key == "epochs") config.train.epochs = kv_int(key, value);
      else if (key == "seed") config.train.seed = kv_u64(key, value);
      else if (key == "model") config.grid.push_back(parse_grid_entry(value));
      else problems.push_back("unknown key '" + key + "'");
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }
  if (config.dataset.empty()) problems.push_back("missing key 'dataset'");
  if (config.format != "long" && config.format != "wide")
    problems.push_back("key 'format': expected long or wide");
  if (config.format == "wide" && config.qmatrix.empty())
    problems.push_back("wide format needs key 'qmatrix'");
  if (config.grid.empty()) problems.push_back("model grid is empty");
  if (config.folds < 2) problems.push_back("key 'folds': must be at least 2");
  if (config.workers < 1) problems.push_back("key 'workers': must be at least 1");
  try {
    config.train.validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_experiment_config(in);
}

std::string slugify(const std::string& label) {
  std::string out;
  bool dash = false;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      dash = false;
    } else if (!out.empty() && !dash) {
      out += '-';
      dash = true;
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "model" : out;
}

std::string results_csv(const std::vector<MetricReport>& reports) {
  std::string out = "model,encoder,decoder,fold,acc,auc\n";
  for (const auto& r : reports) {
    for (const auto& f : r.folds)
      out += r.model + "," + r.encoder + "," + r.decoder + "," +
             std::to_string(f.fold) + "," + fmt("%.6f", f.acc) + "," +
             fmt("%.6f", f.auc) + "\n";
    out += r.model + "," + r.encoder + "," + r.decoder + ",mean," +
           fmt("%.6f", r.mean_acc) + "," + fmt("%.6f", r.mean_auc) + "\n";
  }
  return out;
}

std::string results_table(const std::vector<MetricReport>& reports) {
  size_t wm = 5, we = 7, wd = 7;
  for (const auto& r : reports) {
    wm = std::max(wm, r.model.size());
    we = std::max(we, r.encoder.size());
    wd = std::max(wd, r.decoder.size());
  }
  auto pad = [](const std::string& s, size_t w) {
    return s + std::string(w - s.size() + 2, ' ');
  };
  std::string out = pad("Model", wm) + pad("Encoder", we) + pad("Decoder", wd) +
                    "ACC    AUC\n";
  for (const auto& r : reports)
    out += pad(r.model, wm) + pad(r.encoder, we) + pad(r.decoder, wd) +
           fmt("%.3f", r.mean_acc) + "  " + fmt("%.3f", r.mean_auc) + "\n";
  return out;
}

bool run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (out_dir.empty()) throw ConfigError("no output directory given");
  fs::create_directories(out_dir);

  Dataset data = load_dataset(config.dataset, config.format, config.qmatrix);

  bool ok = true;
  std::vector<MetricReport> reports;
  for (size_t gi = 0; gi < config.grid.size(); ++gi) {
    const GridEntry& entry = config.grid[gi];
    const std::string tag = std::to_string(gi) + "_" + slugify(entry.label);
    try {
      CvResult cv = cross_validate(entry.spec, data, config.train,
                                   CvOptions{config.folds, config.workers},
                                   entry.label);
      for (const auto& w : cv.warnings)
        std::cerr << "warning: " << entry.label << ": " << w << '\n';

      std::ofstream pred(fs::path(out_dir) / ("predictions_" + tag + ".csv"));
      write_prediction_csv(cv.predictions, data, pred);
      for (int f = 0; f < config.folds; ++f) {
        Checkpoint ckpt = make_checkpoint(cv.fold_params[f], config.train, data);
        save_checkpoint(ckpt, (fs::path(out_dir) /
                               ("checkpoint_" + tag + "_fold" + std::to_string(f) + ".json"))
                                  .string());
      }
      reports.push_back(std::move(cv.report));
    } catch (const std::exception& e) {
      ok = false;
      std::cerr << "error: grid entry '" << entry.label << "' failed: " << e.what()
                << '\n';
      MetricReport failed;
      failed.model = entry.label;
      failed.encoder = entry.spec.encoder_name();
      failed.decoder = entry.spec.decoder_name();
      failed.mean_acc = std::nan("");
      failed.mean_auc = std::nan("");
      failed.config = config.train;
      reports.push_back(std::move(failed));
    }
  }

  {
    std::ofstream out(fs::path(out_dir) / "results.csv");
    out << results_csv(reports);
  }
  {
    std::ofstream out(fs::path(out_dir) / "results.txt");
    out << "dataset: " << config.dataset << " (" << config.format << ")\n"
        << "folds: " << config.folds << "  seed: " << config.train.seed
        << "  lr: " << config.train.learning_rate
        << "  weight_decay: " << config.train.weight_decay
        << "  minibatches: " << config.train.minibatch_count
        << "  bptt_window: " << config.train.bptt_window
        << "  epochs: " << config.train.epochs << "\n\n"
        << results_table(reports);
  }
  return ok;
}

}  // namespace ktrace
