#pragma once

#include "mbi/patterns.hpp"

#include <iosfwd>
#include <string>

namespace mbi {

/// Reads a header-first CSV where missing cells are spelled exactly "NA".
/// Every column other than `response_column` becomes a covariate, in file order.
DataSet read_csv(std::istream& in, const std::string& response_column,
                 const std::string& source_spec);
DataSet read_csv_file(const std::string& path, const std::string& response_column,
                      const std::string& source_spec);

void write_csv(std::ostream& out, const DataSet& data, const std::string& response_name = "y");

/// Shortest round-trippable decimal form (17 significant digits).
std::string format_double(double v);

}  // namespace mbi
