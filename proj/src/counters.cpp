#include "ktrace/counters.hpp"

#include <algorithm>
#include <map>

namespace ktrace {

namespace {

const SkillWinsFails* find_skill(std::span<const SkillWinsFails> row, int skill) {
  auto it = std::lower_bound(
      row.begin(), row.end(), skill,
      [](const SkillWinsFails& e, int s) { return e.skill < s; });
  if (it != row.end() && it->skill == skill) return &*it;
  return nullptr;
}

}  // namespace

int CounterTable::wins(int step, int skill) const {
  auto* e = find_skill(snapshot(step), skill);
  return e ? e->wins : 0;
}

int CounterTable::fails(int step, int skill) const {
  auto* e = find_skill(snapshot(step), skill);
  return e ? e->fails : 0;
}

std::span<const SkillWinsFails> CounterTable::snapshot(int step) const {
  return steps_.at(step - 1);
}

CounterTable compute_counters(const StudentSequence& seq, const QMatrix& qm) {
  CounterTable table;
  table.steps_.reserve(seq.steps.size());
  std::map<int, std::pair<int, int>> running;  // skill -> (wins, fails)
  for (const auto& step : seq.steps) {
    std::vector<SkillWinsFails> snapshot;
    snapshot.reserve(running.size());
    for (const auto& [skill, wf] : running)
      snapshot.push_back(SkillWinsFails{skill, wf.first, wf.second});
    table.steps_.push_back(std::move(snapshot));

    for (int skill : qm.skills_of(step.item)) {
      auto& wf = running[skill];
      if (step.outcome) ++wf.first;
      else ++wf.second;
    }
  }
  return table;
}

MetadataSpec MetadataSpec::parse(std::string_view ngram) {
  MetadataSpec spec;
  size_t pos = 0;
  for (char letter : {'i', 's', 'w', 'f'}) {
    bool* flag = letter == 'i'   ? &spec.item
                 : letter == 's' ? &spec.skill
                 : letter == 'w' ? &spec.wins
                                 : &spec.fails;
    if (pos < ngram.size() && ngram[pos] == letter) {
      *flag = true;
      ++pos;
    }
  }
  if (pos != ngram.size() || spec.empty())
    throw ConfigError("invalid metadata n-gram '" + std::string(ngram) +
                      "' (expected a non-empty subsequence of \"iswf\")");
  return spec;
}

std::string MetadataSpec::ngram() const {
  std::string s;
  if (item) s += 'i';
  if (skill) s += 's';
  if (wins) s += 'w';
  if (fails) s += 'f';
  return s;
}

std::vector<FeatureEntry> assemble_features(int step, int item,
                                            const QMatrix& qm,
                                            const CounterTable& counters,
                                            const MetadataSpec& spec,
                                            const FeatureLayout& layout) {
  if (spec.empty()) throw ConfigError("metadata spec selects no blocks");
  std::vector<FeatureEntry> out;
  auto skills = qm.skills_of(item);
  out.reserve(1 + 3 * skills.size());

  if (spec.item) out.push_back({layout.item_offset() + item, 1.0});

  std::vector<int> sorted(skills.begin(), skills.end());
  std::sort(sorted.begin(), sorted.end());
  if (spec.skill)
    for (int k : sorted) out.push_back({layout.skill_offset() + k, 1.0});
  if (spec.wins)
    for (int k : sorted)
      if (int w = counters.wins(step, k); w > 0)
        out.push_back({layout.wins_offset() + k, static_cast<double>(w)});
  if (spec.fails)
    for (int k : sorted)
      if (int f = counters.fails(step, k); f > 0)
        out.push_back({layout.fails_offset() + k, static_cast<double>(f)});
  return out;
}

}  // namespace ktrace
