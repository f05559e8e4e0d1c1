#include "ktrace/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ktrace/data.hpp"

namespace ktrace {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

std::string default_name(const std::vector<std::string>& names,
                         const char* prefix, int i) {
  if (i < static_cast<int>(names.size())) return names[i];
  return std::string(prefix) + std::to_string(i);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  json j;
  j["format"] = kCheckpointTag;
  j["encoder"] = ckpt.spec.encoder_name();
  j["decoder"] = ckpt.spec.decoder_name();
  j["num_items"] = ckpt.num_items;
  j["num_skills"] = ckpt.num_skills;
  j["embedding_seed"] = ckpt.embedding_seed;
  j["train"] = {{"learning_rate", ckpt.config.learning_rate},
                {"weight_decay", ckpt.config.weight_decay},
                {"minibatches", ckpt.config.minibatch_count},
                {"bptt_window", ckpt.config.bptt_window},
                {"epochs", ckpt.config.epochs},
                {"seed", ckpt.config.seed}};
  j["items"] = ckpt.item_names;
  j["skills"] = ckpt.skill_names;
  j["values"] = std::vector<double>(ckpt.values.data(),
                                    ckpt.values.data() + ckpt.values.size());
  out << j.dump(1) << '\n';
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
  save_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.contains("format") || !j["format"].is_string() ||
      j["format"].get<std::string>() != kCheckpointTag)
    throw FormatError("checkpoint version tag mismatch (expected '" +
                      std::string(kCheckpointTag) + "')");
  try {
    Checkpoint ckpt;
    ckpt.spec = ModelSpec::parse(j.at("encoder").get<std::string>(),
                                 j.at("decoder").get<std::string>());
    ckpt.num_items = j.at("num_items").get<int>();
    ckpt.num_skills = j.at("num_skills").get<int>();
    ckpt.embedding_seed = j.at("embedding_seed").get<std::uint64_t>();
    const auto& t = j.at("train");
    ckpt.config.learning_rate = t.at("learning_rate").get<double>();
    ckpt.config.weight_decay = t.at("weight_decay").get<double>();
    ckpt.config.minibatch_count = t.at("minibatches").get<int>();
    ckpt.config.bptt_window = t.at("bptt_window").get<int>();
    ckpt.config.epochs = t.at("epochs").get<int>();
    ckpt.config.seed = t.at("seed").get<std::uint64_t>();
    ckpt.item_names = j.value("items", std::vector<std::string>{});
    ckpt.skill_names = j.value("skills", std::vector<std::string>{});
    auto values = j.at("values").get<std::vector<double>>();
    ckpt.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                    static_cast<long>(values.size()));
    return ckpt;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint field error: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

Checkpoint make_checkpoint(const ParameterStore& params,
                           const TrainConfig& config, const Dataset& data) {
  Checkpoint ckpt;
  ckpt.spec = params.spec();
  ckpt.config = config;
  ckpt.num_items = params.num_items();
  ckpt.num_skills = params.num_skills();
  ckpt.embedding_seed = params.embedding_seed();
  for (int j = 0; j < data.num_items(); ++j)
    ckpt.item_names.push_back(data.items.name(j));
  for (int k = 0; k < data.num_skills(); ++k)
    ckpt.skill_names.push_back(data.skills.name(k));
  ckpt.values = params.values();
  return ckpt;
}

ParameterStore restore_store(const Checkpoint& ckpt) {
  return ParameterStore::from_values(ckpt.spec, ckpt.num_items, ckpt.num_skills,
                                     ckpt.embedding_seed, ckpt.values);
}

void export_parameters(const Checkpoint& ckpt, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ParameterStore store = restore_store(ckpt);
  const ModelSpec& spec = ckpt.spec;
  const int d_prime = spec.output_dim;

  const bool dot_items = spec.dot_form() && spec.metadata.item;
  const bool dot_skills = spec.dot_form() && spec.metadata.skill;
  const bool scalar_items = spec.scalar_form() && spec.metadata.item;
  const bool scalar_skills =
      spec.scalar_form() && (spec.metadata.skill || spec.metadata.wins || spec.metadata.fails);

  if (dot_items || scalar_items) {
    std::ofstream out(fs::path(out_dir) / "items.csv");
    out << "item,w";
    if (dot_items)
      for (int c = 1; c <= d_prime; ++c) out << ",v_" << c;
    out << '\n';
    for (int j = 0; j < ckpt.num_items; ++j) {
      out << default_name(ckpt.item_names, "item", j) << ',';
      if (dot_items) {
        out << fmt_double(store.dot_biases()[j]);
        for (int c = 0; c < d_prime; ++c)
          out << ',' << fmt_double(store.dot_embeddings()(c, j));
      } else {
        out << fmt_double(store.item_bias()[j]);
      }
      out << '\n';
    }
  }

  if (dot_skills || scalar_skills) {
    std::ofstream out(fs::path(out_dir) / "skills.csv");
    if (dot_skills) {
      out << "skill,w";
      for (int c = 1; c <= d_prime; ++c) out << ",v_" << c;
      out << '\n';
      for (int k = 0; k < ckpt.num_skills; ++k) {
        out << default_name(ckpt.skill_names, "skill", k) << ','
            << fmt_double(store.dot_biases()[k]);
        for (int c = 0; c < d_prime; ++c)
          out << ',' << fmt_double(store.dot_embeddings()(c, k));
        out << '\n';
      }
    } else {
      out << "skill,beta,gamma,delta\n";
      for (int k = 0; k < ckpt.num_skills; ++k) {
        const double b = spec.metadata.skill ? store.skill_bias()[k] : 0.0;
        const double g = spec.metadata.wins ? store.win_slope()[k] : 0.0;
        const double dl = spec.metadata.fails ? store.fail_slope()[k] : 0.0;
        out << default_name(ckpt.skill_names, "skill", k) << ',' << fmt_double(b)
            << ',' << fmt_double(g) << ',' << fmt_double(dl) << '\n';
      }
    }
  }
}

ExportedParams read_exported(const std::string& out_dir) {
  namespace fs = std::filesystem;
  ExportedParams out;

  const auto items_path = fs::path(out_dir) / "items.csv";
  if (fs::exists(items_path)) {
    std::ifstream in(items_path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("items.csv is empty");
    auto header = split_csv(line);
    const int d_prime = static_cast<int>(header.size()) - 2;
    std::vector<double> w;
    std::vector<std::vector<double>> v;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = split_csv(line);
      if (fields.size() != header.size())
        throw ParseError("items.csv: ragged row");
      out.item_names.push_back(fields[0]);
      w.push_back(std::stod(fields[1]));
      std::vector<double> row;
      for (int c = 0; c < d_prime; ++c) row.push_back(std::stod(fields[2 + c]));
      v.push_back(std::move(row));
    }
    out.has_items = true;
    out.item_w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<long>(w.size()));
    if (d_prime > 0) {
      out.item_v.resize(d_prime, static_cast<long>(v.size()));
      for (size_t j = 0; j < v.size(); ++j)
        for (int c = 0; c < d_prime; ++c) out.item_v(c, static_cast<long>(j)) = v[j][c];
    }
  }

  const auto skills_path = fs::path(out_dir) / "skills.csv";
  if (fs::exists(skills_path)) {
    std::ifstream in(skills_path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("skills.csv is empty");
    auto header = split_csv(line);
    const bool dot = header.size() >= 2 && header[1] == "w";
    std::vector<double> c1, c2, c3;
    std::vector<std::vector<double>> v;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = split_csv(line);
      if (fields.size() != header.size())
        throw ParseError("skills.csv: ragged row");
      out.skill_names.push_back(fields[0]);
      c1.push_back(std::stod(fields[1]));
      if (dot) {
        std::vector<double> row;
        for (size_t c = 2; c < fields.size(); ++c) row.push_back(std::stod(fields[c]));
        v.push_back(std::move(row));
      } else {
        c2.push_back(std::stod(fields[2]));
        c3.push_back(std::stod(fields[3]));
      }
    }
    out.has_skills = true;
    if (dot) {
      out.skill_w = Eigen::Map<const Eigen::VectorXd>(c1.data(), static_cast<long>(c1.size()));
      const int d_prime = static_cast<int>(header.size()) - 2;
      out.skill_v.resize(d_prime, static_cast<long>(v.size()));
      for (size_t k = 0; k < v.size(); ++k)
        for (int c = 0; c < d_prime; ++c) out.skill_v(c, static_cast<long>(k)) = v[k][c];
    } else {
      out.beta = Eigen::Map<const Eigen::VectorXd>(c1.data(), static_cast<long>(c1.size()));
      out.gamma = Eigen::Map<const Eigen::VectorXd>(c2.data(), static_cast<long>(c2.size()));
      out.delta = Eigen::Map<const Eigen::VectorXd>(c3.data(), static_cast<long>(c3.size()));
    }
  }
  return out;
}

}  // namespace ktrace
