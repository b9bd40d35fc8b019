#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fitted::csv {

std::vector<std::string_view> split_fields(std::string_view line);
std::vector<std::string_view> split_lines(std::string_view text);

// Strict parse of the whole field; returns false on trailing garbage.
bool parse_double(std::string_view field, double& out);
bool parse_index(std::string_view field, std::size_t& out);

// 17 significant digits, so the text reads back to the same double.
std::string format_double(double v);

}  // namespace fitted::csv
