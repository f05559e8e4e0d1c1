#include "ktrace/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ktrace/errors.hpp"
#include "ktrace/rng.hpp"

namespace ktrace {

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

int parse_positive_int(std::string_view s, const std::string& context) {
  if (s.empty()) throw ConfigError(context + ": missing integer");
  int value = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ConfigError(context + ": expected integer, got '" + std::string(s) + "'");
    value = value * 10 + (c - '0');
    if (value > 1000000) throw ConfigError(context + ": value out of range");
  }
  if (value < 1) throw ConfigError(context + ": value must be positive");
  return value;
}

}  // namespace

void ModelSpec::validate() const {
  if (metadata.empty()) throw ConfigError("decoder metadata must be non-empty");
  if (output_dim < 1) throw ConfigError("decoder embedding size d' must be >= 1");
  if (encoder == EncoderKind::None && hidden_dim != 0)
    throw ConfigError("encoder 'none' has no hidden dimension");
  if (encoder == EncoderKind::Gru && hidden_dim < 1)
    throw ConfigError("GRU encoder requires d >= 1");
  if (dot_form()) {
    const std::string ngram = metadata.ngram();
    if (ngram != "i" && ngram != "s")
      throw ConfigError("dot-product decoder (d' > 1) supports metadata 'i' or 's', got '" +
                        ngram + "'");
    if (encoder != EncoderKind::Gru || output_dim != hidden_dim)
      throw ConfigError("dot-product decoder requires d' equal to the encoder dimension");
  }
}

ModelSpec ModelSpec::parse(std::string_view encoder_str,
                           std::string_view decoder_str) {
  ModelSpec spec;
  const std::string enc = normalize(encoder_str);
  if (enc == "none") {
    spec.encoder = EncoderKind::None;
    spec.hidden_dim = 0;
  } else if (enc.rfind("grud=", 0) == 0) {
    spec.encoder = EncoderKind::Gru;
    spec.hidden_dim = parse_positive_int(std::string_view(enc).substr(5),
                                         "encoder '" + std::string(encoder_str) + "'");
  } else {
    throw ConfigError("unknown encoder '" + std::string(encoder_str) +
                      "' (expected 'none' or 'GRU d=<n>')");
  }

  const std::string dec = normalize(decoder_str);
  const auto pos = dec.find("d'=");
  if (pos == std::string::npos)
    throw ConfigError("decoder '" + std::string(decoder_str) +
                      "' must be written '<ngram> d'=<n>'");
  spec.metadata = MetadataSpec::parse(dec.substr(0, pos));
  spec.output_dim = parse_positive_int(std::string_view(dec).substr(pos + 3),
                                       "decoder '" + std::string(decoder_str) + "'");
  spec.validate();
  return spec;
}

std::string ModelSpec::encoder_name() const {
  if (encoder == EncoderKind::None) return "None";
  return "GRU d=" + std::to_string(hidden_dim);
}

std::string ModelSpec::decoder_name() const {
  return metadata.ngram() + " d'=" + std::to_string(output_dim);
}

ParameterLayout::ParameterLayout(const ModelSpec& spec, int num_items,
                                 int num_skills) {
  spec.validate();
  if (num_items < 1 || num_skills < 1)
    throw ConfigError("layout requires at least one item and one skill");
  const int d = spec.hidden_dim;
  if (d > 0) {
    gru_Wz = add("gru.Wz", d * d);
    gru_Wr = add("gru.Wr", d * d);
    gru_Wn = add("gru.Wn", d * d);
    gru_Uz = add("gru.Uz", d * d);
    gru_Ur = add("gru.Ur", d * d);
    gru_Un = add("gru.Un", d * d);
    gru_bz = add("gru.bz", d);
    gru_br = add("gru.br", d);
    gru_bn = add("gru.bn", d);
  }
  if (spec.dot_form()) {
    dot_targets = spec.metadata.item ? num_items : num_skills;
    dot_V = add("dec.V", dot_targets * spec.output_dim);
    dot_w = add("dec.w", dot_targets);
  } else {
    if (spec.metadata.item) item_w = add("dec.item_w", num_items);
    if (spec.metadata.skill) beta = add("dec.beta", num_skills);
    if (spec.metadata.wins) gamma = add("dec.gamma", num_skills);
    if (spec.metadata.fails) delta = add("dec.delta", num_skills);
    if (spec.has_projection()) {
      proj_A = add("dec.proj_A", d);
      proj_b = add("dec.proj_b", 1);
    }
  }
}

int ParameterLayout::add(const std::string& name, int size) {
  const int offset = total_;
  slices_.push_back(SliceInfo{name, offset, size});
  total_ += size;
  return offset;
}

std::string ParameterLayout::name_at(int flat_index) const {
  for (const auto& s : slices_)
    if (flat_index >= s.offset && flat_index < s.offset + s.size)
      return s.name + "[" + std::to_string(flat_index - s.offset) + "]";
  return "param[" + std::to_string(flat_index) + "]";
}

ParameterStore::ParameterStore(const ModelSpec& spec, int num_items,
                               int num_skills, std::uint64_t embed_seed)
    : spec_(spec),
      layout_(spec, num_items, num_skills),
      num_items_(num_items),
      num_skills_(num_skills),
      theta_(Eigen::VectorXd::Zero(layout_.total())),
      embed_(num_items, spec.hidden_dim, embed_seed) {}

ParameterStore::ParameterStore(const ModelSpec& spec, int num_items,
                               int num_skills, std::uint64_t init_seed,
                               std::uint64_t embed_seed)
    : ParameterStore(spec, num_items, num_skills, embed_seed) {
  auto rng = make_rng(init_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int d = spec_.hidden_dim;
  if (d > 0) {
    // Random weight matrices break hidden-unit symmetry; biases start at 0.
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    const int weights = 6 * d * d;
    for (int i = 0; i < weights; ++i) theta_[layout_.gru_Wz + i] = scale * gauss(rng);
  }
  if (spec_.dot_form()) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec_.output_dim));
    for (int i = 0; i < layout_.dot_targets * spec_.output_dim; ++i)
      theta_[layout_.dot_V + i] = scale * gauss(rng);
  }
  // Scalar blocks, biases, and the projection start at zero: every decoder
  // opens at p = 0.5.
}

ParameterStore ParameterStore::from_values(const ModelSpec& spec, int num_items,
                                           int num_skills,
                                           std::uint64_t embed_seed,
                                           Eigen::VectorXd values) {
  ParameterStore store(spec, num_items, num_skills, embed_seed);
  if (values.size() != store.theta_.size())
    throw FormatError("checkpoint has " + std::to_string(values.size()) +
                      " values but the layout needs " +
                      std::to_string(store.theta_.size()));
  store.theta_ = std::move(values);
  return store;
}

void ParameterStore::set_values(const Eigen::VectorXd& v) {
  if (v.size() != theta_.size())
    throw ConfigError("parameter vector size mismatch");
  theta_ = v;
}

GruParamsView ParameterStore::gru() const {
  if (spec_.hidden_dim == 0) throw ConfigError("model has no GRU encoder");
  const int d = spec_.hidden_dim;
  const double* base = theta_.data();
  return GruParamsView{
      {base + layout_.gru_Wz, d, d}, {base + layout_.gru_Wr, d, d},
      {base + layout_.gru_Wn, d, d}, {base + layout_.gru_Uz, d, d},
      {base + layout_.gru_Ur, d, d}, {base + layout_.gru_Un, d, d},
      {base + layout_.gru_bz, d},    {base + layout_.gru_br, d},
      {base + layout_.gru_bn, d},    d};
}

Eigen::Map<const Eigen::MatrixXd> ParameterStore::dot_embeddings() const {
  if (layout_.dot_V < 0) throw ConfigError("model has no dot-product decoder");
  return {theta_.data() + layout_.dot_V, spec_.output_dim, layout_.dot_targets};
}

Eigen::Map<const Eigen::VectorXd> ParameterStore::dot_biases() const {
  if (layout_.dot_w < 0) throw ConfigError("model has no dot-product decoder");
  return {theta_.data() + layout_.dot_w, layout_.dot_targets};
}

Eigen::Map<const Eigen::VectorXd> ParameterStore::item_bias() const {
  if (layout_.item_w < 0) throw ConfigError("model has no item-bias block");
  return {theta_.data() + layout_.item_w, num_items_};
}

Eigen::Map<const Eigen::VectorXd> ParameterStore::skill_bias() const {
  if (layout_.beta < 0) throw ConfigError("model has no skill-bias block");
  return {theta_.data() + layout_.beta, num_skills_};
}

Eigen::Map<const Eigen::VectorXd> ParameterStore::win_slope() const {
  if (layout_.gamma < 0) throw ConfigError("model has no win-slope block");
  return {theta_.data() + layout_.gamma, num_skills_};
}

Eigen::Map<const Eigen::VectorXd> ParameterStore::fail_slope() const {
  if (layout_.delta < 0) throw ConfigError("model has no fail-slope block");
  return {theta_.data() + layout_.delta, num_skills_};
}

Eigen::Map<const Eigen::RowVectorXd> ParameterStore::proj_weight() const {
  if (layout_.proj_A < 0) throw ConfigError("model has no projection");
  return {theta_.data() + layout_.proj_A, spec_.hidden_dim};
}

double ParameterStore::proj_offset() const {
  if (layout_.proj_b < 0) throw ConfigError("model has no projection");
  return theta_[layout_.proj_b];
}

}  // namespace ktrace
