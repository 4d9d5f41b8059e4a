#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace alps {

// Dense, row-major, 64-bit floats throughout. Problem sizes are desk-scale
// (d, m <= 1e3), so no sparse paths.
using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rejected input (bad dimensions, invalid parameters, singular matrices).
class invalid_input : public std::invalid_argument {
 public:
  explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

// A chain left the guard region or produced non-finite state.
class divergence_error : public std::runtime_error {
 public:
  explicit divergence_error(const std::string& what, int rung = -1)
      : std::runtime_error(rung >= 0 ? what + " (rung " + std::to_string(rung) + ")" : what),
        rung_(rung) {}
  int rung() const { return rung_; }

 private:
  int rung_;
};

// Schedule construction exceeded its iteration cap.
class schedule_error : public std::runtime_error {
 public:
  explicit schedule_error(const std::string& what) : std::runtime_error(what) {}
};

// Config file parse/validation failure (CLI exit code 2).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_input(msg);
}

}  // namespace alps
