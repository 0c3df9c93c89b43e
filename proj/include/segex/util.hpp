#ifndef SEGEX_UTIL_HPP
#define SEGEX_UTIL_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace segex {

// shortest decimal form that parses back to the same double
std::string fmt_double(double v);

std::vector<std::string_view> split_csv_line(std::string_view line);

std::string to_lower(std::string_view s);

// "message_boards" -> "Message Boards"
std::string title_case(std::string_view s);

// FNV-1a 64-bit, used as a cheap content digest for provenance metadata
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64_file(const std::string& path);

} // namespace segex

#endif
