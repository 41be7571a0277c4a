#include "mvsde/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mvsde::csv {

std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string rate_csv(const std::vector<ErrorSample>& samples) {
  std::string out = "param,estimate,se,R\n";
  for (const auto& s : samples) {
    out += format_double(s.param);
    out += ',';
    out += format_double(s.estimate);
    out += ',';
    out += format_double(s.se);
    out += ',';
    out += std::to_string(s.replications);
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const SimulationResult& sim) {
  std::string out = "time,particle,position\n";
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    const std::string t = format_double(sim.times[k]);
    for (std::size_t i = 0; i < sim.positions[k].size(); ++i) {
      out += t;
      out += ',';
      out += std::to_string(i);
      out += ',';
      out += format_double(sim.positions[k][i]);
      out += '\n';
    }
  }
  return out;
}

std::string cloud_csv(const std::vector<double>& atoms) {
  std::string out = "position\n";
  for (double a : atoms) {
    out += format_double(a);
    out += '\n';
  }
  return out;
}

std::string picard_csv(const std::vector<double>& distances) {
  std::string out = "iteration,distance\n";
  for (std::size_t k = 0; k < distances.size(); ++k) {
    out += std::to_string(k + 1);
    out += ',';
    out += format_double(distances[k]);
    out += '\n';
  }
  return out;
}

namespace {

double parse_cell(const std::string& cell, std::size_t line_no) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::runtime_error("csv: line " + std::to_string(line_no) + ": cell '" + cell +
                             "' is not a number");
  }
  return value;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

Table parse_table(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (table.header.empty()) {
      table.header = split_cells(line);
      continue;
    }
    const auto cells = split_cells(line);
    if (cells.size() != table.header.size()) {
      throw std::runtime_error("csv: line " + std::to_string(line_no) + ": expected " +
                               std::to_string(table.header.size()) + " cells, got " +
                               std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw std::runtime_error("csv: empty document");
  return table;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

std::vector<double> read_cloud(const std::filesystem::path& path) {
  const Table table = parse_table(read_file(path));
  if (table.header.size() != 1 || table.header[0] != "position") {
    throw std::runtime_error("cloud file " + path.string() + ": expected single column 'position'");
  }
  std::vector<double> atoms;
  atoms.reserve(table.rows.size());
  for (const auto& row : table.rows) atoms.push_back(row[0]);
  return atoms;
}

}  // namespace mvsde::csv
