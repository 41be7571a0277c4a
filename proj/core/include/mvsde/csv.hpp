#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvsde/solver.hpp"
#include "mvsde/study.hpp"

namespace mvsde::csv {

// Shortest round-trip decimal form (what keeps artifacts byte-stable across
// runs and thread counts: the bytes are a pure function of the doubles).
std::string format_double(double x);

// rate table: param,estimate,se,R
std::string rate_csv(const std::vector<ErrorSample>& samples);
// trajectory: time,particle,position (time-major, particles ascending)
std::string trajectory_csv(const SimulationResult& sim);
// cloud: position, one atom per row
std::string cloud_csv(const std::vector<double>& atoms);
// iteration diagnostics: iteration,distance (iterations 1-based)
std::string picard_csv(const std::vector<double>& distances);

// Minimal numeric-table reader for artifacts and test fixtures.  Cells must
// parse as doubles; ragged or empty tables throw std::runtime_error naming
// the 1-based line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
Table parse_table(const std::string& text);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Reads a single-column cloud file (header "position").
std::vector<double> read_cloud(const std::filesystem::path& path);

}  // namespace mvsde::csv
