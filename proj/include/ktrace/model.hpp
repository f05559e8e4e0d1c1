#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ktrace/counters.hpp"
#include "ktrace/encoder.hpp"

namespace ktrace {

enum class EncoderKind { None, Gru };

// One cell of the model grid: an encoder ("None" or "GRU d=<d>") and a
// decoder (metadata n-gram over iswf plus an output embedding size d').
// d' = 1 selects the projected scalar decoder; d' > 1 selects the
// dot-product decoder, which requires metadata "i" or "s" and d' equal to
// the encoder dimension.
struct ModelSpec {
  EncoderKind encoder = EncoderKind::None;
  int hidden_dim = 0;  // d; 0 for the "none" encoder
  MetadataSpec metadata;
  int output_dim = 1;  // d'

  bool scalar_form() const { return output_dim == 1; }
  bool dot_form() const { return output_dim > 1; }
  bool has_projection() const { return scalar_form() && hidden_dim > 0; }

  void validate() const;  // throws ConfigError
  static ModelSpec parse(std::string_view encoder_str,
                         std::string_view decoder_str);

  std::string encoder_name() const;  // "None" | "GRU d=2"
  std::string decoder_name() const;  // "iswf d'=1"
};

struct SliceInfo {
  std::string name;
  int offset = 0;
  int size = 0;
};

// Offsets of every trainable tensor inside the flat parameter vector.
// Absent tensors have offset -1.
class ParameterLayout {
 public:
  ParameterLayout() = default;
  ParameterLayout(const ModelSpec& spec, int num_items, int num_skills);

  int total() const { return total_; }
  const std::vector<SliceInfo>& slices() const { return slices_; }
  std::string name_at(int flat_index) const;

  // GRU block (offset of Wz; the rest follow in a fixed order).
  int gru_Wz = -1, gru_Wr = -1, gru_Wn = -1;
  int gru_Uz = -1, gru_Ur = -1, gru_Un = -1;
  int gru_bz = -1, gru_br = -1, gru_bn = -1;

  // Dot-product decoder: embeddings (d' x targets, column-major) + biases.
  int dot_V = -1, dot_w = -1;
  int dot_targets = 0;

  // Scalar decoder blocks.
  int item_w = -1;   // per-item bias
  int beta = -1;     // per-skill bias
  int gamma = -1;    // per-skill win slope
  int delta = -1;    // per-skill fail slope
  int proj_A = -1;   // 1 x d projection
  int proj_b = -1;   // scalar offset

 private:
  int add(const std::string& name, int size);
  int total_ = 0;
  std::vector<SliceInfo> slices_;
};

// All trainable parameters of one model, flat-indexed for the gradient
// engine, plus the fixed random action-embedding table.
class ParameterStore {
 public:
  ParameterStore(const ModelSpec& spec, int num_items, int num_skills,
                 std::uint64_t init_seed, std::uint64_t embed_seed);

  // Rebuilds a store from checkpointed values.
  static ParameterStore from_values(const ModelSpec& spec, int num_items,
                                    int num_skills, std::uint64_t embed_seed,
                                    Eigen::VectorXd values);

  const ModelSpec& spec() const { return spec_; }
  const ParameterLayout& layout() const { return layout_; }
  int num_items() const { return num_items_; }
  int num_skills() const { return num_skills_; }

  const Eigen::VectorXd& values() const { return theta_; }
  Eigen::VectorXd& values() { return theta_; }
  void set_values(const Eigen::VectorXd& v);

  const ActionEmbeddingTable& embeddings() const { return embed_; }
  std::uint64_t embedding_seed() const { return embed_.seed(); }

  GruParamsView gru() const;

  Eigen::Map<const Eigen::MatrixXd> dot_embeddings() const;  // d' x targets
  Eigen::Map<const Eigen::VectorXd> dot_biases() const;

  Eigen::Map<const Eigen::VectorXd> item_bias() const;
  Eigen::Map<const Eigen::VectorXd> skill_bias() const;
  Eigen::Map<const Eigen::VectorXd> win_slope() const;
  Eigen::Map<const Eigen::VectorXd> fail_slope() const;
  Eigen::Map<const Eigen::RowVectorXd> proj_weight() const;  // 1 x d
  double proj_offset() const;

 private:
  ParameterStore(const ModelSpec& spec, int num_items, int num_skills,
                 std::uint64_t embed_seed);
  ModelSpec spec_;
  ParameterLayout layout_;
  int num_items_ = 0;
  int num_skills_ = 0;
  Eigen::VectorXd theta_;
  ActionEmbeddingTable embed_;
};

}  // namespace ktrace
