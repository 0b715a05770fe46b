#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "slp/lp.hpp"

namespace slp {

Eigen::MatrixXd dct_matrix(int h) {
  if (h < 1) throw std::invalid_argument("DCT size must be positive");
  Eigen::MatrixXd C(h, h);
  for (int i = 0; i < h; ++i) {
    const double alpha = i == 0 ? 1.0 : 2.0;
    for (int j = 0; j < h; ++j)
      C(i, j) = std::sqrt(alpha / h) * std::cos(std::numbers::pi * (2 * j + 1) * i / (2.0 * h));
  }
  return C;
}

DctMapping build_dct_mapping(int side, int retained) {
  const int n = side * side;
  if (side < 1 || retained < 1 || retained > n) throw std::invalid_argument("DCT retained count must be in [1, h^2]");
  DctMapping map;
  map.side = side;
  map.retained = retained;
  map.C = dct_matrix(side);

  // Basis image B_k transforms to C B_k C^T, i.e. U(i, j) = C(i, y) C(j, x)
  // for the single nonzero pixel k = (y, x).
  map.W.resize(n, n);
  for (int k = 0; k < n; ++k) {
    const int y = k / side, x = k % side;
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) map.W(i * side + j, k) = map.C(i, y) * map.C(j, x);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [side](int a, int b) {
    const int sa = a / side + a % side, sb = b / side + b % side;
    return sa != sb ? sa < sb : a / side < b / side;
  });
  map.rows.assign(order.begin(), order.begin() + retained);
  map.Wr.resize(retained, n);
  for (int r = 0; r < retained; ++r) map.Wr.row(r) = map.W.row(map.rows[r]);
  return map;
}

}  // namespace slp
