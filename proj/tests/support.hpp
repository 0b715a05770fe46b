#pragma once

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "fixture_images.hpp"

namespace slp::test {

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

}  // namespace slp::test
