#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgfsi {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;

/// Runtime check used for preconditions and consistency assertions.
/// Throws std::runtime_error with a readable message.
#define MGFSI_CHECK(cond, msg)                                          \
  do {                                                                  \
    if (!(cond)) {                                                      \
      std::ostringstream mgfsi_oss;                                     \
      mgfsi_oss << "mgfsi: " << msg << " [" << __FILE__ << ":"          \
                << __LINE__ << "]";                                     \
      throw std::runtime_error(mgfsi_oss.str());                        \
    }                                                                   \
  } while (0)

inline std::pair<int, int> sorted_pair(int a, int b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace mgfsi
