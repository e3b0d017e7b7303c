#include "mbi/csv.hpp"

#include "mbi/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mbi {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

DataSet read_csv(std::istream& in, const std::string& response_column,
                 const std::string& source_spec) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty input, no header row");
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);
  int response_at = -1;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == response_column) {
      response_at = static_cast<int>(c);
    } else {
      names.push_back(header[c]);
    }
  }
  if (response_at < 0) {
    throw Error(ErrorCode::ParseError, "response column '" + response_column + "' not in header");
  }
  const int p = static_cast<int>(names.size());

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> observed;
  std::vector<double> response;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + " has " +
                                             std::to_string(cells.size()) + " cells, expected " +
                                             std::to_string(header.size()));
    }
    std::vector<double> values(p, std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> mask(p, false);
    int col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      const bool is_response = static_cast<int>(c) == response_at;
      if (cell.empty() || cell == "NA") {
        if (is_response) {
          throw Error(ErrorCode::ParseError,
                      "row " + std::to_string(line_no) + ": response '" + response_column + "' is NA");
        }
        ++col;
        continue;
      }
      double v = 0.0;
      if (!parse_number(cell, v)) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + ", column '" +
                                               header[c] + "': cannot parse '" + cell + "'");
      }
      if (is_response) {
        response.push_back(v);
      } else {
        values[col] = v;
        mask[col] = true;
        ++col;
      }
    }
    rows.push_back(std::move(values));
    observed.push_back(std::move(mask));
  }
  const Index n = static_cast<Index>(rows.size());
  if (n == 0) throw Error(ErrorCode::ParseError, "no data rows");
  MatrixXd x(n, p);
  Mask m(n, p);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    y(i) = response[i];
    for (int j = 0; j < p; ++j) {
      x(i, j) = rows[i][j];
      m(i, j) = observed[i][j];
    }
  }
  return DataSet(std::move(x), std::move(m), std::move(y), parse_source_spans(source_spec),
                 std::move(names));
}

DataSet read_csv_file(const std::string& path, const std::string& response_column,
                      const std::string& source_spec) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return read_csv(in, response_column, source_spec);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const DataSet& data, const std::string& response_name) {
  out << response_name;
  for (const auto& name : data.column_names()) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    out << format_double(data.response()(i));
    for (Index j = 0; j < data.cols(); ++j) {
      out << ',';
      if (data.observed(i, j)) {
        out << format_double(data.values()(i, j));
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
}

}  // namespace mbi
