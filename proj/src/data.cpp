#include "ktrace/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ktrace/rng.hpp"

namespace ktrace {

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::vector<int> parse_skill_list(const std::string& field, Vocab& skills,
                                  int line_no) {
  if (field.empty())
    throw ParseError("line " + std::to_string(line_no) + ": empty skill list");
  std::vector<int> ids;
  for (const auto& name : split(field, '~')) {
    if (name.empty())
      throw ParseError("line " + std::to_string(line_no) +
                       ": empty skill name in list '" + field + "'");
    int id = skills.add(name);
    if (std::find(ids.begin(), ids.end(), id) != ids.end())
      throw ParseError("line " + std::to_string(line_no) +
                       ": duplicate skill '" + name + "' in list");
    ids.push_back(id);
  }
  return ids;
}

bool same_skill_set(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::vector<int> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sa == sb;
}

std::int8_t parse_outcome(const std::string& field, int line_no) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw ParseError("line " + std::to_string(line_no) +
                   ": outcome must be 0 or 1, got '" + field + "'");
}

}  // namespace

int Vocab::add(const std::string& raw) {
  auto it = index_.find(raw);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(names_.size());
  names_.push_back(raw);
  index_.emplace(raw, id);
  return id;
}

int Vocab::lookup(const std::string& raw) const {
  auto it = index_.find(raw);
  return it == index_.end() ? -1 : it->second;
}

const std::string& Vocab::name(int id) const { return names_.at(id); }

std::span<const int> QMatrix::skills_of(int item) const {
  if (item < 0 || item >= static_cast<int>(rows.size()))
    throw DataError("item " + std::to_string(item) + " has no Q-matrix row");
  return rows[item];
}

long Dataset::num_interactions() const {
  long n = 0;
  for (const auto& s : sequences) n += s.length();
  return n;
}

std::vector<Interaction> flatten(const Dataset& data) {
  std::vector<Interaction> rows;
  rows.reserve(data.num_interactions());
  for (const auto& seq : data.sequences)
    for (int t = 0; t < seq.length(); ++t)
      rows.push_back(Interaction{seq.student, seq.steps[t].item,
                                 seq.steps[t].outcome, t + 1});
  return rows;
}

std::vector<std::vector<int>> FoldAssignment::members() const {
  std::vector<std::vector<int>> out(k);
  for (int s = 0; s < static_cast<int>(fold_of_student.size()); ++s)
    out[fold_of_student[s]].push_back(s);
  return out;
}

Dataset parse_interactions(std::istream& in) {
  Dataset data;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("no interactions");
  line = strip_cr(line);
  if (line != "student,item,outcome,skills")
    throw ParseError("line 1: expected header 'student,item,outcome,skills'");

  int line_no = 1;
  long rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 4)
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 columns, got " +
                       std::to_string(fields.size()));

    int student = data.students.add(fields[0]);
    int item = data.items.add(fields[1]);
    std::int8_t outcome = parse_outcome(fields[2], line_no);
    auto skill_ids = parse_skill_list(fields[3], data.skills, line_no);

    if (item == static_cast<int>(data.qmatrix.rows.size())) {
      data.qmatrix.rows.push_back(skill_ids);
    } else if (!same_skill_set(data.qmatrix.rows[item], skill_ids)) {
      throw DataError("item '" + fields[1] + "' listed with inconsistent skills (line " +
                      std::to_string(line_no) + ")");
    }

    if (student == static_cast<int>(data.sequences.size()))
      data.sequences.push_back(StudentSequence{student, {}});
    data.sequences[student].steps.push_back(Step{item, outcome});
    ++rows;
  }
  if (rows == 0) throw ParseError("no interactions");
  data.qmatrix.num_skills = data.skills.size();
  return data;
}

Dataset parse_wide_matrix(std::istream& responses, std::istream& qmatrix) {
  // Q-matrix first: item name -> skill list, skills densified in row order.
  Vocab skills;
  std::unordered_map<std::string, std::vector<int>> qrows;
  std::vector<std::string> qorder;
  {
    std::string line;
    if (!std::getline(qmatrix, line)) throw ParseError("empty Q-matrix stream");
    line = strip_cr(line);
    if (line != "item,skills")
      throw ParseError("Q-matrix line 1: expected header 'item,skills'");
    int line_no = 1;
    while (std::getline(qmatrix, line)) {
      ++line_no;
      line = strip_cr(line);
      if (line.empty()) continue;
      auto fields = split(line, ',');
      if (fields.size() != 2)
        throw ParseError("Q-matrix line " + std::to_string(line_no) +
                         ": expected 2 columns");
      if (qrows.count(fields[0]))
        throw ParseError("Q-matrix line " + std::to_string(line_no) +
                         ": duplicate item '" + fields[0] + "'");
      qrows.emplace(fields[0], parse_skill_list(fields[1], skills, line_no));
      qorder.push_back(fields[0]);
    }
  }

  Dataset data;
  data.skills = skills;
  std::string line;
  if (!std::getline(responses, line)) throw ParseError("no interactions");
  line = strip_cr(line);
  auto item_names = split(line, ',');
  if (item_names.empty() || (item_names.size() == 1 && item_names[0].empty()))
    throw ParseError("line 1: empty item header");
  for (const auto& name : item_names) {
    if (name.empty()) throw ParseError("line 1: empty item name in header");
    if (data.items.lookup(name) >= 0)
      throw ParseError("line 1: duplicate item name '" + name + "'");
    data.items.add(name);
  }
  if (static_cast<int>(qrows.size()) != data.items.size())
    throw ParseError("Q-matrix has " + std::to_string(qrows.size()) +
                     " rows but the response table has " +
                     std::to_string(data.items.size()) + " items");
  data.qmatrix.rows.resize(data.items.size());
  for (int j = 0; j < data.items.size(); ++j) {
    auto it = qrows.find(data.items.name(j));
    if (it == qrows.end())
      throw DataError("item '" + data.items.name(j) + "' has no Q-matrix row");
    data.qmatrix.rows[j] = it->second;
  }
  data.qmatrix.num_skills = data.skills.size();

  int line_no = 1;
  while (std::getline(responses, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != item_names.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(item_names.size()) + " cells, got " +
                       std::to_string(cells.size()));
    int student = data.students.add(std::to_string(line_no - 1));
    StudentSequence seq{student, {}};
    seq.steps.reserve(cells.size());
    for (size_t j = 0; j < cells.size(); ++j)
      seq.steps.push_back(Step{static_cast<int>(j), parse_outcome(cells[j], line_no)});
    data.sequences.push_back(std::move(seq));
  }
  if (data.sequences.empty()) throw ParseError("no interactions");
  return data;
}

void write_long(const Dataset& data, std::ostream& out) {
  out << "student,item,outcome,skills\n";
  for (const auto& seq : data.sequences) {
    const std::string& student = data.students.name(seq.student);
    for (const auto& step : seq.steps) {
      out << student << ',' << data.items.name(step.item) << ','
          << static_cast<int>(step.outcome) << ',';
      const auto& skills = data.qmatrix.rows[step.item];
      for (size_t i = 0; i < skills.size(); ++i) {
        if (i) out << '~';
        out << data.skills.name(skills[i]);
      }
      out << '\n';
    }
  }
}

Dataset load_dataset(const std::string& path, const std::string& format,
                     const std::string& qmatrix_path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file '" + path + "'");
  if (format == "long") return parse_interactions(in);
  if (format == "wide") {
    if (qmatrix_path.empty())
      throw ConfigError("wide format requires a Q-matrix file");
    std::ifstream qin(qmatrix_path);
    if (!qin) throw ParseError("cannot open Q-matrix file '" + qmatrix_path + "'");
    return parse_wide_matrix(in, qin);
  }
  throw ConfigError("unknown dataset format '" + format + "' (expected long or wide)");
}

FoldAssignment split_folds(const Dataset& data, int k, std::uint64_t seed) {
  const int n = data.num_students();
  if (k < 2) throw ConfigError("fold count must be at least 2");
  if (k > n)
    throw ConfigError("fold count " + std::to_string(k) + " exceeds " +
                      std::to_string(n) + " students");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldAssignment folds;
  folds.k = k;
  folds.fold_of_student.resize(n);
  for (int i = 0; i < n; ++i) folds.fold_of_student[order[i]] = i % k;
  return folds;
}

}  // namespace ktrace
