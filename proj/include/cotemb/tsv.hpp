#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cotemb::tsv {

// Escapes embedded tabs, newlines and backslashes so a field stays on one line.
std::string escape(std::string_view field);
std::string unescape(std::string_view field);

std::string join(const std::vector<std::string>& fields);
std::vector<std::string> split(std::string_view line);

}  // namespace cotemb::tsv
