#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bidleak::csv {

// Reads one RFC-4180 record. Returns false at end of input.
// `lines` is advanced by the number of physical lines consumed.
bool read_row(std::istream& in, std::vector<std::string>& fields, std::size_t& lines,
              std::string* raw = nullptr);

std::string quote(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace bidleak::csv
