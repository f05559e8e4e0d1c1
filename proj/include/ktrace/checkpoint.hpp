#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "ktrace/model.hpp"
#include "ktrace/training.hpp"

namespace ktrace {

inline constexpr const char* kCheckpointTag = "ktrace.checkpoint.v1";

// Self-describing container for one trained model: spec, train config,
// seeds, raw id names for interpretable export, and the flat trainable
// vector. The fixed embedding table is regenerated from its seed on load.
struct Checkpoint {
  ModelSpec spec;
  TrainConfig config;
  int num_items = 0;
  int num_skills = 0;
  std::uint64_t embedding_seed = 0;
  std::vector<std::string> item_names;   // may be empty
  std::vector<std::string> skill_names;  // may be empty
  Eigen::VectorXd values;
};

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(std::istream& in);  // throws FormatError on bad tag
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const ParameterStore& params,
                           const TrainConfig& config, const Dataset& data);

ParameterStore restore_store(const Checkpoint& ckpt);

// Interpretability export: `items.csv` (item,w[,v_1..v_d']) and
// `skills.csv` (skill,beta,gamma,delta or skill,w,v_1..v_d' for the "s"
// dot decoder). Numbers round-trip exactly.
void export_parameters(const Checkpoint& ckpt, const std::string& out_dir);

struct ExportedParams {
  std::vector<std::string> item_names;
  Eigen::VectorXd item_w;
  Eigen::MatrixXd item_v;  // d' x items, dot form only
  std::vector<std::string> skill_names;
  Eigen::VectorXd beta, gamma, delta;
  Eigen::VectorXd skill_w;
  Eigen::MatrixXd skill_v;  // d' x skills, dot form only
  bool has_items = false;
  bool has_skills = false;
};

ExportedParams read_exported(const std::string& out_dir);

}  // namespace ktrace
