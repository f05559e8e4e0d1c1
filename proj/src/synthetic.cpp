#include "ktrace/synthetic.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "ktrace/decoder.hpp"
#include "ktrace/kvfile.hpp"
#include "ktrace/rng.hpp"

namespace ktrace {

namespace {

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double truth_logit(const SyntheticSpec& spec, const SyntheticTruth& truth,
                   int student, int item, std::span<const SkillWinsFails> counts) {
  if (spec.kind == SyntheticSpec::Kind::Irt)
    return truth.theta[student] + truth.item_easiness[item];
  double logit = truth.item_easiness[item];
  for (const auto& c : counts)
    logit += truth.beta[c.skill] + truth.gamma[c.skill] * c.wins +
             truth.delta[c.skill] * c.fails;
  return logit;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (students < 1 || items < 1 || skills < 1 || length < 1)
    throw ConfigError("synthetic spec counts must be positive");
  if (skills_per_item < 1 || skills_per_item > skills)
    throw ConfigError("skills_per_item must be between 1 and the skill count");
  if (theta_std < 0 || item_std < 0 || beta_std < 0 || gamma_std < 0 ||
      delta_std < 0)
    throw ConfigError("synthetic spread parameters must be non-negative");
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  auto rng = make_rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticResult out;
  SyntheticTruth& truth = out.truth;
  truth.theta = Eigen::VectorXd::Zero(spec.students);
  truth.item_easiness = Eigen::VectorXd::Zero(spec.items);
  truth.beta = Eigen::VectorXd::Zero(spec.skills);
  truth.gamma = Eigen::VectorXd::Zero(spec.skills);
  truth.delta = Eigen::VectorXd::Zero(spec.skills);
  if (spec.kind == SyntheticSpec::Kind::Irt)
    for (int i = 0; i < spec.students; ++i)
      truth.theta[i] = spec.theta_std * gauss(rng);
  for (int j = 0; j < spec.items; ++j)
    truth.item_easiness[j] = spec.item_std * gauss(rng);
  if (spec.kind == SyntheticSpec::Kind::Pfa)
    for (int k = 0; k < spec.skills; ++k) {
      truth.beta[k] = spec.beta_std * gauss(rng);
      truth.gamma[k] = spec.gamma_mean + spec.gamma_std * gauss(rng);
      truth.delta[k] = spec.delta_mean + spec.delta_std * gauss(rng);
    }

  Dataset& data = out.data;
  for (int i = 0; i < spec.students; ++i) data.students.add("s" + std::to_string(i));
  for (int j = 0; j < spec.items; ++j) data.items.add("i" + std::to_string(j));
  for (int k = 0; k < spec.skills; ++k) data.skills.add("k" + std::to_string(k));
  data.qmatrix.num_skills = spec.skills;
  data.qmatrix.rows.resize(spec.items);
  std::uniform_int_distribution<int> pick_skill(0, spec.skills - 1);
  for (int j = 0; j < spec.items; ++j) {
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < spec.skills_per_item)
      chosen.insert(pick_skill(rng));
    data.qmatrix.rows[j].assign(chosen.begin(), chosen.end());
  }

  std::uniform_int_distribution<int> pick_item(0, spec.items - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  data.sequences.reserve(spec.students);
  for (int i = 0; i < spec.students; ++i) {
    StudentSequence seq{i, {}};
    seq.steps.reserve(spec.length);
    std::vector<std::pair<int, int>> counts(spec.skills, {0, 0});  // wins, fails
    for (int t = 0; t < spec.length; ++t) {
      const int item = pick_item(rng);
      std::vector<SkillWinsFails> kc;
      for (int k : data.qmatrix.rows[item])
        kc.push_back(SkillWinsFails{k, counts[k].first, counts[k].second});
      const double p = sigmoid(truth_logit(spec, truth, i, item, kc));
      const std::int8_t a = unit(rng) < p ? 1 : 0;
      for (int k : data.qmatrix.rows[item]) {
        if (a) ++counts[k].first;
        else ++counts[k].second;
      }
      seq.steps.push_back(Step{item, a});
    }
    data.sequences.push_back(std::move(seq));
  }
  return out;
}

PredictionLog predict_with_truth(const SyntheticSpec& spec,
                                 const SyntheticTruth& truth,
                                 const Dataset& data,
                                 std::span<const int> student_ids) {
  PredictionLog log;
  for (int sid : student_ids) {
    const StudentSequence& seq = data.sequences.at(sid);
    SequenceData sd = make_sequence_data(seq, data.qmatrix);
    for (int t = 0; t < sd.length(); ++t) {
      const double p =
          sigmoid(truth_logit(spec, truth, sid, sd.items[t], sd.step_counts[t]));
      log.rows.push_back(PredictionRow{sid, t + 1, sd.items[t], sd.outcomes[t], p});
    }
  }
  return log;
}

SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec spec;
  bool item_std_given = false;
  bool kind_given = false;
  for (const auto& [key, value] : read_kv_file(in)) {
    if (key == "kind") {
      if (value == "irt") spec.kind = SyntheticSpec::Kind::Irt;
      else if (value == "pfa") spec.kind = SyntheticSpec::Kind::Pfa;
      else throw ConfigError("key 'kind': expected irt or pfa, got '" + value + "'");
      kind_given = true;
    } else if (key == "students") spec.students = kv_int(key, value);
    else if (key == "items") spec.items = kv_int(key, value);
    else if (key == "skills") spec.skills = kv_int(key, value);
    else if (key == "length") spec.length = kv_int(key, value);
    else if (key == "skills_per_item") spec.skills_per_item = kv_int(key, value);
    else if (key == "seed") spec.seed = kv_u64(key, value);
    else if (key == "theta_std") spec.theta_std = kv_double(key, value);
    else if (key == "item_std") { spec.item_std = kv_double(key, value); item_std_given = true; }
    else if (key == "beta_std") spec.beta_std = kv_double(key, value);
    else if (key == "gamma_mean") spec.gamma_mean = kv_double(key, value);
    else if (key == "gamma_std") spec.gamma_std = kv_double(key, value);
    else if (key == "delta_mean") spec.delta_mean = kv_double(key, value);
    else if (key == "delta_std") spec.delta_std = kv_double(key, value);
    else throw ConfigError("unknown synthetic spec key '" + key + "'");
  }
  if (!kind_given) throw ConfigError("synthetic spec needs 'kind = irt|pfa'");
  if (!item_std_given)
    spec.item_std = spec.kind == SyntheticSpec::Kind::Irt ? 1.0 : 0.0;
  spec.validate();
  return spec;
}

void write_synthetic(const SyntheticResult& result, const SyntheticSpec& spec,
                     const std::string& path) {
  {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_long(result.data, out);
  }
  {
    std::ofstream out(path + ".truth_items.csv");
    out << "item,w\n";
    for (int j = 0; j < result.data.num_items(); ++j)
      out << result.data.items.name(j) << ','
          << fmt_double(result.truth.item_easiness[j]) << '\n';
  }
  if (spec.kind == SyntheticSpec::Kind::Irt) {
    std::ofstream out(path + ".truth_students.csv");
    out << "student,theta\n";
    for (int i = 0; i < result.data.num_students(); ++i)
      out << result.data.students.name(i) << ','
          << fmt_double(result.truth.theta[i]) << '\n';
  } else {
    std::ofstream out(path + ".truth_skills.csv");
    out << "skill,beta,gamma,delta\n";
    for (int k = 0; k < result.data.num_skills(); ++k)
      out << result.data.skills.name(k) << ',' << fmt_double(result.truth.beta[k])
          << ',' << fmt_double(result.truth.gamma[k]) << ','
          << fmt_double(result.truth.delta[k]) << '\n';
  }
}

}  // namespace ktrace
