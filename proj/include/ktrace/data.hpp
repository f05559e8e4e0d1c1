#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ktrace/errors.hpp"

namespace ktrace {

// Bidirectional map between raw string identifiers and dense integers.
// Dense ids are assigned in first-appearance order.
class Vocab {
 public:
  int add(const std::string& raw);            // returns existing or new id
  int lookup(const std::string& raw) const;   // -1 if unknown
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// One attempt: dense ids, binary outcome, 1-based position within the
// student's sequence.
struct Interaction {
  int student = 0;
  int item = 0;
  std::int8_t outcome = 0;
  int position = 0;
};

struct Step {
  int item = 0;
  std::int8_t outcome = 0;
};

struct StudentSequence {
  int student = 0;
  std::vector<Step> steps;  // attempt order; position t = index + 1
  int length() const { return static_cast<int>(steps.size()); }
};

// Item -> knowledge-component incidence. Rows keep the skill ids in the
// order the input listed them; duplicates are rejected at parse time.
struct QMatrix {
  std::vector<std::vector<int>> rows;  // indexed by dense item id
  int num_skills = 0;

  std::span<const int> skills_of(int item) const;
};

struct Dataset {
  std::vector<StudentSequence> sequences;  // indexed by dense student id
  QMatrix qmatrix;
  Vocab students;
  Vocab items;
  Vocab skills;

  int num_students() const { return students.size(); }
  int num_items() const { return items.size(); }
  int num_skills() const { return qmatrix.num_skills; }
  long num_interactions() const;
};

// Flattened view of the log, student by student in attempt order.
std::vector<Interaction> flatten(const Dataset& data);

// Student-level fold split: every interaction of a student lands in the
// student's single fold.
struct FoldAssignment {
  std::vector<int> fold_of_student;
  int k = 0;

  // Members of each fold, ascending student id.
  std::vector<std::vector<int>> members() const;
};

// Long format: header `student,item,outcome,skills`, one row per attempt in
// order, skills `~`-separated. LF or CRLF.
Dataset parse_interactions(std::istream& in);

// Wide format: header row of item names, then one 0/1 row per student.
// Items are attempted in column order. The companion Q-matrix stream has
// header `item,skills`.
Dataset parse_wide_matrix(std::istream& responses, std::istream& qmatrix);

// Serializes back to the long format (raw ids from the vocabularies).
void write_long(const Dataset& data, std::ostream& out);

// Convenience loader used by the CLI. format is "long" or "wide".
Dataset load_dataset(const std::string& path, const std::string& format,
                     const std::string& qmatrix_path = "");

// Shuffles students with the seeded generator and deals them round-robin, so
// fold sizes differ by at most one.
FoldAssignment split_folds(const Dataset& data, int k, std::uint64_t seed);

}  // namespace ktrace
