#pragma once

#include "tsne/core.hpp"

namespace tsne {

enum class Stage { EarlyExaggeration, Embedding };

inline const char* stage_name(Stage s) {
  return s == Stage::EarlyExaggeration ? "early_exaggeration" : "embedding";
}

/// The 2-D map at global iteration k.
template <typename Scalar = double>
struct EmbeddingState {
  Coords<Scalar> coords;
  Stage stage = Stage::EarlyExaggeration;
  long k = 0;

  Index n() const noexcept { return coords.rows(); }
};

/// Squared Euclidean distances between the rows of `rows`, exactly symmetric.
template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_sq_dists(const Eigen::MatrixBase<Derived>& rows) {
  using Scalar = typename Derived::Scalar;
  const Index n = rows.rows();
  Matrix<Scalar> d = Matrix<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const Scalar v = (rows.row(i) - rows.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

}  // namespace tsne
