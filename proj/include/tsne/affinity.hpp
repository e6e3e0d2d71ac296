#pragma once

#include "tsne/embedding.hpp"
#include "tsne/spectral.hpp"

#include <vector>

namespace tsne {

/// n points in R^p stored one per row. Requires n >= 3, p >= 1, finite entries.
template <typename Scalar = double>
class DataMatrix {
public:
  explicit DataMatrix(Matrix<Scalar> rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 3) throw std::invalid_argument("DataMatrix: need at least 3 points");
    if (rows_.cols() < 1) throw std::invalid_argument("DataMatrix: dimension must be at least 1");
    if (!rows_.allFinite()) throw std::invalid_argument("DataMatrix: non-finite entry");
  }

  Index n() const noexcept { return rows_.rows(); }
  Index p() const noexcept { return rows_.cols(); }
  const Matrix<Scalar>& rows() const noexcept { return rows_; }

private:
  Matrix<Scalar> rows_;
};

template <typename Scalar = double>
struct Bandwidths {
  Vector<Scalar> tau2;
  Scalar target_perplexity = 0;
  Vector<Scalar> achieved_perplexity;
  /// Rows whose distances are all equal; perplexity does not depend on tau there.
  std::vector<bool> degenerate;
};

/// Joint input similarities: symmetric, zero diagonal, non-negative, summing to 1.
template <typename Scalar = double>
class AffinityP {
public:
  explicit AffinityP(SquareSym<Scalar> p) : p_(std::move(p)) {
    const auto& m = p_.matrix();
    if ((m.diagonal().array() != Scalar(0)).any()) throw std::invalid_argument("AffinityP: non-zero diagonal");
    if ((m.array() < Scalar(0)).any()) throw std::invalid_argument("AffinityP: negative entry");
    if (std::abs(m.sum() - Scalar(1)) > Scalar(1e-10)) throw std::invalid_argument("AffinityP: entries do not sum to 1");
  }

  Index size() const noexcept { return p_.size(); }
  const SquareSym<Scalar>& sym() const noexcept { return p_; }
  const Matrix<Scalar>& matrix() const noexcept { return p_.matrix(); }
  Scalar operator()(Index i, Index j) const { return p_(i, j); }

private:
  SquareSym<Scalar> p_;
};

template <typename Scalar = double>
struct AffinityQ {
  Matrix<Scalar> q;
  Scalar z = 0;  // sum over l != s of (1 + |y_l - y_s|^2)^-1
};

namespace detail {

// Perplexity exp(H) of the row distribution at log(tau^2) = log_tau2, with
// the nearest distance subtracted in the exponent.
template <typename Scalar>
Scalar row_perplexity(const Vector<Scalar>& d, Scalar dmin, Scalar log_tau2) {
  const Scalar inv = Scalar(0.5) * std::exp(-log_tau2);
  Scalar sum = 0, weighted = 0;
  for (Index j = 0; j < d.size(); ++j) {
    const Scalar e = -(d(j) - dmin) * inv;
    const Scalar w = std::exp(e);
    sum += w;
    weighted += w * e;
  }
  return std::exp(std::log(sum) - weighted / sum);
}

}  // namespace detail

/// Row-stochastic p_{j|i} with Gaussian kernels of variance tau_i^2.
template <typename Scalar>
Matrix<Scalar> conditional_affinities(const DataMatrix<Scalar>& x, const Vector<Scalar>& tau2) {
  const Index n = x.n();
  if (tau2.size() != n) throw std::invalid_argument("conditional_affinities: tau2 size mismatch");
  const Matrix<Scalar> d = pairwise_sq_dists(x.rows());
  Matrix<Scalar> cond = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (!(tau2(i) > 0) || !std::isfinite(tau2(i))) throw std::invalid_argument("conditional_affinities: tau2 must be positive");
    Scalar dmin = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d(i, j));
    Scalar sum = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      cond(i, j) = std::exp(-(d(i, j) - dmin) / (Scalar(2) * tau2(i)));
      sum += cond(i, j);
    }
    if (!(sum > 0) || !std::isfinite(sum))
      throw NumericError("conditional_affinities: kernel row " + std::to_string(i) + " underflowed (degenerate bandwidth)");
    cond.row(i) /= sum;
  }
  return cond;
}

template <typename Scalar>
Matrix<Scalar> conditional_affinities(const DataMatrix<Scalar>& x, const Bandwidths<Scalar>& tau) {
  return conditional_affinities(x, tau.tau2);
}

/// Bisection on log(tau_i^2) so that each row's perplexity matches `perplexity`.
template <typename Scalar>
Bandwidths<Scalar> calibrate_bandwidths(const DataMatrix<Scalar>& x, Scalar perplexity) {
  const Index n = x.n();
  if (!(perplexity > 1) || perplexity > Scalar(n - 1))
    throw std::invalid_argument("calibrate_bandwidths: perplexity must lie in (1, n-1]");
  constexpr int kMaxBisections = 100;
  constexpr Scalar kRelTol = Scalar(1e-5);
  constexpr Scalar kLo = -40, kHi = 40;

  const Matrix<Scalar> d = pairwise_sq_dists(x.rows());
  Bandwidths<Scalar> out;
  out.tau2.resize(n);
  out.achieved_perplexity.resize(n);
  out.degenerate.assign(static_cast<std::size_t>(n), false);
  out.target_perplexity = perplexity;

  Vector<Scalar> row(n - 1);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0, c = 0; j < n; ++j)
      if (j != i) row(c++) = d(i, j);
    const Scalar dmin = row.minCoeff(), dmax = row.maxCoeff();
    if (dmax - dmin <= Scalar(1e-12) * std::max(Scalar(1), dmax)) {
      out.degenerate[i] = true;
      out.tau2(i) = std::exp((kLo + kHi) / 2);
      out.achieved_perplexity(i) = detail::row_perplexity(row, dmin, (kLo + kHi) / 2);
      continue;
    }
    Scalar lo = kLo, hi = kHi;
    for (int e = 0; e < 8 && detail::row_perplexity(row, dmin, lo) > perplexity; ++e) lo -= (hi - lo);
    for (int e = 0; e < 8 && detail::row_perplexity(row, dmin, hi) < perplexity; ++e) hi += (hi - lo);
    if (detail::row_perplexity(row, dmin, lo) > perplexity || detail::row_perplexity(row, dmin, hi) < perplexity)
      throw NumericError("calibrate_bandwidths: target perplexity not bracketed for row " + std::to_string(i));

    bool converged = false;
    Scalar mid = (lo + hi) / 2, perp = 0;
    for (int it = 0; it < kMaxBisections; ++it) {
      mid = (lo + hi) / 2;
      perp = detail::row_perplexity(row, dmin, mid);
      if (std::abs(perp - perplexity) <= kRelTol * perplexity) {
        converged = true;
        break;
      }
      (perp < perplexity ? lo : hi) = mid;
    }
    if (!converged)
      throw NumericError("calibrate_bandwidths: bisection did not converge for row " + std::to_string(i));
    out.tau2(i) = std::exp(mid);
    out.achieved_perplexity(i) = perp;
  }
  return out;
}

/// p_ij = (p_{i|j} + p_{j|i}) / (2n).
template <typename Scalar>
AffinityP<Scalar> symmetrize(const Matrix<Scalar>& cond) {
  const Index n = cond.rows();
  if (cond.cols() != n) throw std::invalid_argument("symmetrize: matrix is not square");
  Matrix<Scalar> p = Matrix<Scalar>::Zero(n, n);
  const Scalar denom = Scalar(2) * Scalar(n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const Scalar v = (cond(i, j) + cond(j, i)) / denom;
      p(i, j) = v;
      p(j, i) = v;
    }
  return AffinityP<Scalar>(SquareSym<Scalar>(std::move(p)));
}

/// Calibrated input affinities in one call.
template <typename Scalar>
AffinityP<Scalar> affinity_from_data(const DataMatrix<Scalar>& x, Scalar perplexity) {
  return symmetrize(conditional_affinities(x, calibrate_bandwidths(x, perplexity)));
}

template <typename Scalar>
AffinityP<Scalar> affinity_from_data(const DataMatrix<Scalar>& x, const Vector<Scalar>& tau2) {
  return symmetrize(conditional_affinities(x, tau2));
}

namespace detail {

// Student-t kernel (1 + |y_i - y_j|^2)^-1 with zero diagonal and its total.
template <typename Scalar>
Scalar t_kernel(const Coords<Scalar>& y, Matrix<Scalar>& w) {
  const Index n = y.rows();
  w.setZero(n, n);
  Scalar z = 0;
  for (Index j = 0; j < n; ++j) {
    Scalar colsum = 0;
    for (Index i = j + 1; i < n; ++i) {
      const Scalar dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
      const Scalar v = Scalar(1) / (Scalar(1) + dx * dx + dy * dy);
      w(i, j) = v;
      w(j, i) = v;
      colsum += v;
    }
    z += colsum;
  }
  return Scalar(2) * z;
}

}  // namespace detail

/// Low-dimensional joint similarities q_ij.
template <typename Scalar>
AffinityQ<Scalar> q_matrix(const Coords<Scalar>& y) {
  if (y.rows() < 3) throw std::invalid_argument("q_matrix: need at least 3 points");
  AffinityQ<Scalar> out;
  out.z = detail::t_kernel(y, out.q);
  out.q /= out.z;
  return out;
}

/// Gradient kernel S_ij(alpha) = (alpha p_ij - q_ij) / (1 + |y_i - y_j|^2).
template <typename Scalar>
SquareSym<Scalar> s_matrix(const AffinityP<Scalar>& p, const Coords<Scalar>& y, Scalar alpha) {
  const Index n = p.size();
  if (y.rows() != n) throw std::invalid_argument("s_matrix: P and Y sizes differ");
  Matrix<Scalar> w;
  const Scalar z = detail::t_kernel(y, w);
  const auto& pm = p.matrix();
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const Scalar v = (alpha * pm(i, j) - w(i, j) / z) * w(i, j);
      w(i, j) = v;
      w(j, i) = v;
    }
  return SquareSym<Scalar>(std::move(w));
}

/// D_KL(P || Q) summed over pairs with p_ij > 0.
template <typename Scalar>
Scalar kl_divergence(const AffinityP<Scalar>& p, const AffinityQ<Scalar>& q) {
  Scalar kl = 0;
  const auto& pm = p.matrix();
  for (Index j = 0; j < pm.cols(); ++j)
    for (Index i = 0; i < pm.rows(); ++i)
      if (i != j && pm(i, j) > 0) kl += pm(i, j) * std::log(pm(i, j) / q.q(i, j));
  return kl;
}

}  // namespace tsne
