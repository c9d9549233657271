#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace prefgeom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Thrown on contract violations (dimension mismatch, malformed input, ...).
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

} // namespace prefgeom
