#pragma once

#include "tsne/rng.hpp"
#include "tsne/spectral.hpp"

#include <vector>

namespace testing_support {

using tsne::Index;

inline Eigen::MatrixXd uniform_matrix(Index rows, Index cols, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  tsne::CounterRng rng(seed, 99);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = lo + (hi - lo) * rng.uniform();
  return m;
}

inline Eigen::MatrixXd normal_matrix(Index rows, Index cols, std::uint64_t seed) {
  tsne::CounterRng rng(seed, 98);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

/// Non-negative symmetric matrix with zero diagonal.
inline tsne::SquareSym<double> random_adjacency(Index n, std::uint64_t seed) {
  Eigen::MatrixXd m = uniform_matrix(n, n, seed);
  m = (m + m.transpose()).eval() / 2.0;
  m.diagonal().setZero();
  return tsne::SquareSym<double>(m);
}

/// Block-diagonal non-negative matrix with the given block sizes, positive inside blocks.
inline tsne::SquareSym<double> block_adjacency(const std::vector<Index>& sizes, std::uint64_t seed) {
  Index n = 0;
  for (Index s : sizes) n += s;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd u = uniform_matrix(n, n, seed, 0.1, 1.0);
  Index off = 0;
  for (Index s : sizes) {
    m.block(off, off, s, s) = u.block(off, off, s, s);
    off += s;
  }
  m = (m + m.transpose()).eval() / 2.0;
  m.diagonal().setZero();
  return tsne::SquareSym<double>(m);
}

inline std::vector<int> block_tags(const std::vector<Index>& sizes) {
  std::vector<int> tags;
  for (std::size_t r = 0; r < sizes.size(); ++r)
    for (Index i = 0; i < sizes[r]; ++i) tags.push_back(static_cast<int>(r));
  return tags;
}

}  // namespace testing_support
