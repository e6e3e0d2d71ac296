#pragma once

#include "tsne/core.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>
#include <vector>

namespace tsne {

/// Dense symmetric n x n matrix (n >= 2). Symmetry is checked bit-exactly
/// on construction, so every consumer may rely on A(i,j) == A(j,i).
template <typename Scalar = double>
class SquareSym {
public:
  explicit SquareSym(Matrix<Scalar> entries) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("SquareSym: matrix is not square");
    if (m_.rows() < 2) throw std::invalid_argument("SquareSym: n must be at least 2");
    for (Index j = 0; j < m_.cols(); ++j)
      for (Index i = j + 1; i < m_.rows(); ++i)
        if (m_(i, j) != m_(j, i)) throw std::invalid_argument("SquareSym: matrix is not symmetric");
  }

  /// Symmetrizes by averaging with the transpose first.
  static SquareSym symmetrized(const Matrix<Scalar>& m) {
    Matrix<Scalar> s = (m + m.transpose()) / Scalar(2);
    return SquareSym(std::move(s));
  }

  Index size() const noexcept { return m_.rows(); }
  const Matrix<Scalar>& matrix() const noexcept { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }

private:
  Matrix<Scalar> m_;
};

template <typename Scalar = double>
struct SpectralDecomp {
  Vector<Scalar> eigenvalues;   // ascending
  Matrix<Scalar> eigenvectors;  // column i pairs with eigenvalues[i]
};

struct ComponentLabels {
  std::vector<int> labels;
  int count = 0;
  std::vector<Index> sizes;

  Index n() const noexcept { return static_cast<Index>(labels.size()); }

  /// Relabels arbitrary integer tags to [0, R) by first occurrence.
  static ComponentLabels from_tags(const std::vector<int>& tags) {
    ComponentLabels out;
    out.labels.resize(tags.size());
    std::vector<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      int label = -1;
      for (const auto& [tag, l] : seen)
        if (tag == tags[i]) label = l;
      if (label < 0) {
        label = static_cast<int>(seen.size());
        seen.emplace_back(tags[i], label);
        out.sizes.push_back(0);
      }
      out.labels[i] = label;
      ++out.sizes[label];
    }
    out.count = static_cast<int>(seen.size());
    return out;
  }
};

/// Column sums of A: the diagonal of D(A).
template <typename Scalar>
Vector<Scalar> degree_operator(const SquareSym<Scalar>& a) {
  return a.matrix().colwise().sum().transpose();
}

/// L(A) = D(A) - A.
template <typename Scalar>
SquareSym<Scalar> laplacian(const SquareSym<Scalar>& a) {
  Matrix<Scalar> l = -a.matrix();
  const Vector<Scalar> deg = degree_operator(a);
  l.diagonal() += deg;
  return SquareSym<Scalar>(std::move(l));
}

/// H_n = (1 1^T - I) / (n(n-1)), the kernel of a map collapsed to a point.
template <typename Scalar = double>
SquareSym<Scalar> h_matrix(Index n) {
  if (n < 2) throw std::invalid_argument("h_matrix: n must be at least 2");
  const Scalar off = Scalar(1) / (Scalar(n) * Scalar(n - 1));
  Matrix<Scalar> h = Matrix<Scalar>::Constant(n, n, off);
  h.diagonal().setZero();
  return SquareSym<Scalar>(std::move(h));
}

/// Symmetric eigendecomposition with ascending eigenvalues and each
/// eigenvector's first non-negligible coordinate made positive.
template <typename Scalar>
SpectralDecomp<Scalar> eig_sym(const SquareSym<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("eig_sym: eigensolver did not converge");
  SpectralDecomp<Scalar> out{solver.eigenvalues(), solver.eigenvectors()};
  const Scalar tiny = Scalar(1e-10);
  for (Index c = 0; c < out.eigenvectors.cols(); ++c) {
    for (Index r = 0; r < out.eigenvectors.rows(); ++r) {
      const Scalar v = out.eigenvectors(r, c);
      if (std::abs(v) > tiny) {
        if (v < 0) out.eigenvectors.col(c) *= Scalar(-1);
        break;
      }
    }
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> eigenvalues_sym(const SquareSym<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalues_sym: eigensolver did not converge");
  return solver.eigenvalues();
}

/// Spectral norm of a symmetric matrix: the largest eigenvalue magnitude.
template <typename Scalar>
Scalar spectral_norm(const SquareSym<Scalar>& a) {
  const Vector<Scalar> ev = eigenvalues_sym(a);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Components of the graph with an edge wherever A(i,j) > threshold.
/// Labels are assigned in order of each component's first node.
template <typename Scalar>
ComponentLabels connected_components(const SquareSym<Scalar>& a, Scalar threshold = Scalar(1e-12)) {
  if (!(threshold >= 0)) throw std::invalid_argument("connected_components: threshold must be >= 0");
  const Index n = a.size();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i)
      if (a(i, j) > threshold) {
        const Index ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
  std::vector<int> roots(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) roots[i] = static_cast<int>(find(i));
  return ComponentLabels::from_tags(roots);
}

/// A with every entry outside the diagonal blocks of `labels` set to zero.
template <typename Scalar>
SquareSym<Scalar> block_restrict(const SquareSym<Scalar>& a, const ComponentLabels& labels) {
  if (labels.n() != a.size()) throw std::invalid_argument("block_restrict: labels do not cover n");
  Matrix<Scalar> m = a.matrix();
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (labels.labels[i] != labels.labels[j]) m(i, j) = Scalar(0);
  return SquareSym<Scalar>(std::move(m));
}

/// Orthonormal indicator basis: column r is 1_{H_r} / sqrt(n_r).
template <typename Scalar = double>
Matrix<Scalar> indicator_basis(const ComponentLabels& labels) {
  Matrix<Scalar> theta = Matrix<Scalar>::Zero(labels.n(), labels.count);
  for (Index i = 0; i < labels.n(); ++i) {
    const int r = labels.labels[i];
    theta(i, r) = Scalar(1) / std::sqrt(Scalar(labels.sizes[r]));
  }
  return theta;
}

}  // namespace tsne
