#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace subspace_perturb::csv {

// RFC 4180: quote when the field holds a comma, quote, CR or LF; double quotes.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

// Reads one record (which may span lines inside quotes). Returns false at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields);

}  // namespace subspace_perturb::csv
