#pragma once

// CSV and JSON output. CSV bodies are deterministic byte-for-byte given the
// same inputs (%.17g round-trips doubles exactly); manifests carry the
// non-deterministic context (wall time, git state).

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "alps/common.hpp"
#include "alps/samplers.hpp"

namespace alps {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row) {
    require(row.size() == header_.size(), "CsvTable: row width mismatch");
    rows_.push_back(row);
  }

  std::string body() const {
    std::string out;
    for (size_t c = 0; c < header_.size(); ++c) out += (c ? "," : "") + header_[c];
    out += "\n";
    for (const auto& row : rows_) {
      for (size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
      out += "\n";
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw invalid_input("CsvTable: cannot write " + path);
    f << body();
  }

  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

inline void write_matrix_csv(const std::string& path, const Mat& m, const std::string& col_prefix) {
  std::vector<std::string> header;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    header.push_back(col_prefix + "_" + std::to_string(c + 1));
  CsvTable table(std::move(header));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(size_t(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[size_t(c)] = m(r, c);
    table.add_row(row);
  }
  table.write(path);
}

inline Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("read_matrix_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw invalid_input("read_matrix_csv: non-numeric cell in " + path);
    }
    first = false;
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "read_matrix_csv: no data rows in " + path);
  Mat m(Eigen::Index(rows.size()), Eigen::Index(rows[0].size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == rows[0].size(), "read_matrix_csv: ragged rows in " + path);
    for (size_t c = 0; c < rows[r].size(); ++c) m(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  }
  return m;
}

inline std::string git_describe() {
  FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[128] = {0};
  std::string out;
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  ::pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

inline nlohmann::json ladder_to_json(const NoiseLadder& ladder) {
  nlohmann::json j;
  j["etas"] = ladder.etas;
  j["gammas"] = ladder.gammas;
  j["times"] = ladder.times;
  j["params"] = {{"alpha", ladder.params.alpha}, {"d", ladder.params.d},
                 {"m", ladder.params.m},         {"lambda", ladder.params.lambda},
                 {"eps", ladder.params.eps},     {"R", effective_radius(ladder.params, ladder.model)},
                 {"C", ladder.params.C}};
  return j;
}

// RunArtifact -> JSON document plus a samples CSV next to it.
inline void write_artifact(const RunArtifact& art, const std::string& out_dir,
                           const std::string& tag) {
  std::filesystem::create_directories(out_dir);
  const std::string samples_path = out_dir + "/" + tag + "_samples.csv";
  write_matrix_csv(samples_path, art.samples, "x");
  nlohmann::json j;
  j["seed"] = art.seed;
  j["chains"] = art.samples.rows();
  j["ladder"] = ladder_to_json(art.ladder());
  j["samples_csv"] = samples_path;
  j["total_steps"] = art.total_steps;
  j["wall_seconds"] = art.wall_seconds;
  j["git"] = git_describe();
  std::ofstream f(out_dir + "/" + tag + "_artifact.json");
  f << j.dump(2) << "\n";
}

}  // namespace alps
