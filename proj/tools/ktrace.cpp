#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ktrace/checkpoint.hpp"
#include "ktrace/config.hpp"
#include "ktrace/counters.hpp"
#include "ktrace/evaluation.hpp"
#include "ktrace/synthetic.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_flag,
            int workers_flag) {
  ktrace::ExperimentConfig config = ktrace::load_experiment_config(config_path);
  const std::string out_dir = out_flag.empty() ? config.out : out_flag;
  if (out_dir.empty())
    throw ktrace::ConfigError("no output directory: pass --out or set 'out' in the config");
  if (workers_flag > 0) config.workers = workers_flag;
  const bool ok = ktrace::run_experiment(config, out_dir);
  std::cout << "results written to " << out_dir << "/results.csv\n";
  return ok ? 0 : 1;
}

int cmd_generate(const std::string& spec_path, const std::string& out_file) {
  std::ifstream in(spec_path);
  if (!in) throw ktrace::ConfigError("cannot open spec file '" + spec_path + "'");
  ktrace::SyntheticSpec spec = ktrace::parse_synthetic_spec(in);
  ktrace::SyntheticResult result = ktrace::generate_synthetic(spec);
  ktrace::write_synthetic(result, spec, out_file);
  std::cout << "wrote " << result.data.num_students() << " students, "
            << result.data.num_interactions() << " interactions to " << out_file
            << " (+ truth files)\n";
  return 0;
}

int cmd_export(const std::string& checkpoint_path, const std::string& out_dir) {
  ktrace::Checkpoint ckpt = ktrace::load_checkpoint(checkpoint_path);
  ktrace::export_parameters(ckpt, out_dir);
  std::cout << "exported " << ckpt.spec.encoder_name() << " + "
            << ckpt.spec.decoder_name() << " parameter tables to " << out_dir
            << '\n';
  return 0;
}

int cmd_metrics(const std::string& predictions_path) {
  std::ifstream in(predictions_path);
  if (!in)
    throw ktrace::ParseError("cannot open predictions file '" + predictions_path + "'");
  ktrace::LabeledPredictions lp = ktrace::read_prediction_csv(in);
  std::cout << "rows " << lp.labels.size() << '\n';
  std::printf("ACC %.6f\n", ktrace::accuracy(lp.labels, lp.preds));
  try {
    std::printf("AUC %.6f\n", ktrace::auc(lp.labels, lp.preds));
  } catch (const ktrace::MetricError& e) {
    std::cout << e.what() << '\n';
  }
  return 0;
}

int cmd_features(const std::string& data_path, const std::string& out_file,
                 const std::string& meta) {
  ktrace::Dataset data = ktrace::load_dataset(data_path, "long");
  ktrace::MetadataSpec spec = ktrace::MetadataSpec::parse(meta);
  ktrace::FeatureLayout layout{data.num_items(), data.num_skills()};
  std::ofstream out(out_file);
  if (!out) throw ktrace::ParseError("cannot write '" + out_file + "'");
  out << "row,col,value\n";
  long row = 0;
  int current_student = -1;
  ktrace::CounterTable counters;
  for (const auto& r : ktrace::flatten(data)) {
    if (r.student != current_student) {
      current_student = r.student;
      counters = ktrace::compute_counters(data.sequences[r.student], data.qmatrix);
    }
    auto entries = ktrace::assemble_features(r.position, r.item, data.qmatrix,
                                             counters, spec, layout);
    for (const auto& e : entries)
      out << row << ',' << e.index << ',' << e.value << '\n';
    ++row;
  }
  std::cout << "wrote " << row << " rows x " << layout.size()
            << " columns (sparse) to " << out_file << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge tracing models: count-based and recurrent encoders "
               "with item/skill/wins/fails decoders"};
  app.require_subcommand(1);

  std::string config_path, out_dir, spec_path, out_file, checkpoint_path,
      predictions_path, data_path, meta = "iswf";
  int workers = 0;

  auto* run = app.add_subcommand("run", "run a cross-validated experiment grid");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--workers", workers, "concurrent folds (overrides config)");

  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "synthetic spec file")->required();
  gen->add_option("--out", out_file, "output dataset path (long format)")->required();

  auto* exp = app.add_subcommand("export", "export decoder parameter tables");
  exp->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  exp->add_option("--out", out_dir, "output directory")->required();

  auto* met = app.add_subcommand("metrics", "recompute metrics from a prediction log");
  met->add_option("--predictions", predictions_path, "prediction CSV")->required();

  auto* feat = app.add_subcommand("features", "export the sparse design matrix");
  feat->add_option("--data", data_path, "long-format dataset")->required();
  feat->add_option("--out", out_file, "triplet CSV output path")->required();
  feat->add_option("--meta", meta, "metadata n-gram (default iswf)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, workers);
    if (gen->parsed()) return cmd_generate(spec_path, out_file);
    if (exp->parsed()) return cmd_export(checkpoint_path, out_dir);
    if (met->parsed()) return cmd_metrics(predictions_path);
    if (feat->parsed()) return cmd_features(data_path, out_file, meta);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
