#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ktrace/data.hpp"

namespace ktrace {

struct SkillWinsFails {
  int skill = 0;
  int wins = 0;
  int fails = 0;
};

// Per-step prior success/failure counts for one student. Counts at step t
// cover attempts 1..t-1 only; step 1 is all zero.
class CounterTable {
 public:
  int num_steps() const { return static_cast<int>(steps_.size()); }
  int wins(int step, int skill) const;   // step is 1-based
  int fails(int step, int skill) const;

  // Skills with at least one prior attempt at this step, ascending skill id.
  std::span<const SkillWinsFails> snapshot(int step) const;

 private:
  friend CounterTable compute_counters(const StudentSequence&, const QMatrix&);
  std::vector<std::vector<SkillWinsFails>> steps_;  // index = step - 1
};

CounterTable compute_counters(const StudentSequence& seq, const QMatrix& qm);

// Which assessment metadata a decoder consumes, written as an n-gram over
// the letters i (item), s (skill), w (wins), f (fails).
struct MetadataSpec {
  bool item = false;
  bool skill = false;
  bool wins = false;
  bool fails = false;

  static MetadataSpec parse(std::string_view ngram);
  std::string ngram() const;
  bool empty() const { return !(item || skill || wins || fails); }
};

// Fixed global layout for sparse features:
// [item one-hot | skill multi-hot | wins | fails], with block offsets that do
// not depend on which blocks a given spec selects.
struct FeatureLayout {
  int num_items = 0;
  int num_skills = 0;

  int item_offset() const { return 0; }
  int skill_offset() const { return num_items; }
  int wins_offset() const { return num_items + num_skills; }
  int fails_offset() const { return num_items + 2 * num_skills; }
  int size() const { return num_items + 3 * num_skills; }
};

struct FeatureEntry {
  int index = 0;
  double value = 0.0;
};

// Sparse feature vector for one step: entries sorted by index, zero-valued
// count entries omitted.
std::vector<FeatureEntry> assemble_features(int step, int item,
                                            const QMatrix& qm,
                                            const CounterTable& counters,
                                            const MetadataSpec& spec,
                                            const FeatureLayout& layout);

}  // namespace ktrace
