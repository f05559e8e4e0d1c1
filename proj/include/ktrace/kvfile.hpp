#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

namespace ktrace {

// Flat `key = value` config grammar: one pair per line, '#' starts a
// comment, blank lines ignored, keys may repeat.
std::vector<std::pair<std::string, std::string>> read_kv_file(std::istream& in);

std::string trim(const std::string& s);

// Conversions with the offending key in the error message.
int kv_int(const std::string& key, const std::string& value);
double kv_double(const std::string& key, const std::string& value);
std::uint64_t kv_u64(const std::string& key, const std::string& value);

}  // namespace ktrace
