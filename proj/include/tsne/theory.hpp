#pragma once

#include "tsne/engine.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace tsne {

/// alpha = gamma n^(1-delta), h = h' = n^delta, K0 = floor((ln n)^2), sigma_n = (ln n)^-2.
/// K1 fills the usual 1000-iteration budget.
inline TuningParams theory_tuning(long n, double delta, double perplexity = 30.0, double gamma = 1.0) {
  if (n < 10) throw std::invalid_argument("theory_tuning: n must be at least 10");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("theory_tuning: delta must lie in (0,1)");
  if (!(gamma > 0.0)) throw std::invalid_argument("theory_tuning: gamma must be positive");
  const double dn = static_cast<double>(n);
  const double ln = std::log(dn);
  TuningParams t;
  t.delta = delta;
  t.alpha = gamma * std::pow(dn, 1.0 - delta);
  t.h = std::pow(dn, delta);
  t.h_prime = t.h;
  t.K0 = static_cast<long>(std::floor(ln * ln));
  t.K1 = std::max(0L, 1000 - t.K0);
  t.sigma_n = 1.0 / (ln * ln);
  t.perplexity = perplexity;
  return t;
}

/// Largest gamma <= 1 with h lambda_n(L(alpha P)) <= margin under the theory
/// schedule. With gamma = 1 that product is n lambda_n(L(P)), which is never
/// below n max_i deg_i >= 1.
template <typename Scalar>
double stable_gamma(const AffinityP<Scalar>& p, double margin = 0.9) {
  if (!(margin > 0.0)) throw std::invalid_argument("stable_gamma: margin must be positive");
  const Vector<Scalar> ev = eigenvalues_sym(laplacian(p.sym()));
  const double top = static_cast<double>(p.size()) * static_cast<double>(ev(ev.size() - 1));
  return top > margin ? margin / top : 1.0;
}

/// Early-exaggeration lengths compared in the early-stopping study:
/// floor((ln n)^2), n^(2/3) and n^(3/4), the last two rounded to nearest.
inline std::array<long, 3> early_stop_budgets(long n) {
  const double dn = static_cast<double>(n), ln = std::log(dn);
  return {static_cast<long>(std::floor(ln * ln)), std::lround(std::pow(dn, 2.0 / 3.0)), std::lround(std::pow(dn, 0.75))};
}

/// L(alpha P - H_n), the fixed operator the early-exaggeration stage tracks.
template <typename Scalar>
SquareSym<Scalar> surrogate_laplacian(const SquareSym<Scalar>& p, Scalar alpha) {
  return laplacian(SquareSym<Scalar>(alpha * p.matrix() - h_matrix<Scalar>(p.size()).matrix()));
}

/// Iterates y <- y - h L(alpha P - H_n) y, returning y^(0..k).
template <typename Scalar>
std::vector<Coords<Scalar>> power_surrogate_path(const SquareSym<Scalar>& p, Scalar alpha, Scalar h,
                                                 const Coords<Scalar>& y0, long k) {
  if (k < 0) throw std::invalid_argument("power_surrogate: k must be non-negative");
  if (y0.rows() != p.size()) throw std::invalid_argument("power_surrogate: y0 has the wrong size");
  const Matrix<Scalar> g = surrogate_laplacian(p, alpha).matrix();
  std::vector<Coords<Scalar>> path;
  path.reserve(static_cast<std::size_t>(k + 1));
  path.push_back(y0);
  for (long it = 0; it < k; ++it) {
    Coords<Scalar> next = path.back();
    next.noalias() -= h * (g * path.back());
    path.push_back(std::move(next));
  }
  return path;
}

template <typename Scalar>
Coords<Scalar> power_surrogate(const SquareSym<Scalar>& p, Scalar alpha, Scalar h, const Coords<Scalar>& y0, long k) {
  return power_surrogate_path(p, alpha, h, y0, k).back();
}

/// Eigenpairs of L(P) with u_1 pinned to 1/sqrt(n) and lambda_1 = 0, so the
/// remaining columns are orthogonal to the constant vector even when the
/// null space is degenerate.
template <typename Scalar = double>
struct FlowBasis {
  Vector<Scalar> lambda;
  Matrix<Scalar> u;

  Index n() const noexcept { return u.rows(); }

  /// Growth exponent of mode i under the flow: alpha lambda_i - 1/(n-1), and 0 for u_1.
  Scalar rate(Index i, Scalar alpha) const {
    return i == 0 ? Scalar(0) : alpha * lambda(i) - Scalar(1) / Scalar(n() - 1);
  }
};

template <typename Scalar>
FlowBasis<Scalar> flow_basis(const SquareSym<Scalar>& p) {
  const Index n = p.size();
  const Matrix<Scalar> l = laplacian(p).matrix();
  const Scalar shift = Scalar(1) + l.cwiseAbs().rowwise().sum().maxCoeff();
  Matrix<Scalar> shifted = l;
  shifted.array() -= shift / Scalar(n);
  const SpectralDecomp<Scalar> dec = eig_sym(SquareSym<Scalar>(std::move(shifted)));
  FlowBasis<Scalar> out{dec.eigenvalues, dec.eigenvectors};
  out.lambda(0) = 0;
  out.u.col(0).setConstant(Scalar(1) / std::sqrt(Scalar(n)));
  return out;
}

/// Y(t) = exp(-t L(alpha P - H_n)) y0, evaluated in the eigenbasis of L(P).
template <typename Scalar>
Coords<Scalar> gradient_flow(const FlowBasis<Scalar>& basis, Scalar alpha, const Coords<Scalar>& y0, Scalar t) {
  if (!(t >= 0)) throw std::invalid_argument("gradient_flow: t must be non-negative");
  if (y0.rows() != basis.n()) throw std::invalid_argument("gradient_flow: y0 has the wrong size");
  Coords<Scalar> coef = basis.u.transpose() * y0;
  for (Index i = 0; i < coef.rows(); ++i) coef.row(i) *= std::exp(-t * basis.rate(i, alpha));
  return basis.u * coef;
}

template <typename Scalar>
Coords<Scalar> gradient_flow(const SquareSym<Scalar>& p, Scalar alpha, const Coords<Scalar>& y0, Scalar t) {
  return gradient_flow(flow_basis(p), alpha, y0, t);
}

/// Per-mode coefficients e^{-t rate_i} (u_i^T y0) for each t in the grid.
template <typename Scalar = double>
struct RegularizationProfile {
  std::vector<Scalar> t_grid;
  Vector<Scalar> rates;                      // alpha lambda_i - 1/(n-1); 0 for mode 1
  std::array<Matrix<Scalar>, 2> coefficients;  // [l](t index, mode)
};

template <typename Scalar>
RegularizationProfile<Scalar> regularization_profile(const SquareSym<Scalar>& p, Scalar alpha, const Coords<Scalar>& y0,
                                                     const std::vector<Scalar>& t_grid) {
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0)) throw std::invalid_argument("regularization_profile: times must be non-negative");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("regularization_profile: times must ascend");
  }
  const FlowBasis<Scalar> basis = flow_basis(p);
  const Index n = basis.n();
  RegularizationProfile<Scalar> out;
  out.t_grid = t_grid;
  out.rates.resize(n);
  for (Index i = 0; i < n; ++i) out.rates(i) = basis.rate(i, alpha);
  const Coords<Scalar> proj = basis.u.transpose() * y0;
  for (int l = 0; l < 2; ++l) {
    out.coefficients[l].resize(static_cast<Index>(t_grid.size()), n);
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti)
      for (Index i = 0; i < n; ++i)
        out.coefficients[l](static_cast<Index>(ti), i) = std::exp(-t_grid[ti] * out.rates(i)) * proj(i, l);
  }
  return out;
}

/// Cluster positions z_{lr} = theta_r^T y_l / sqrt(n_r), i.e. block means.
template <typename Scalar = double>
struct LimitCenters {
  int R = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> centers;  // row r = (z_1r, z_2r)
  std::vector<Index> sizes;
};

template <typename Scalar = double>
struct NullSpaceLimit {
  Coords<Scalar> projected;
  LimitCenters<Scalar> centers;
};

template <typename Scalar>
LimitCenters<Scalar> limit_centers(const ComponentLabels& labels, const Coords<Scalar>& y0) {
  if (labels.n() != y0.rows()) throw std::invalid_argument("limit_centers: labels do not cover n");
  LimitCenters<Scalar> out;
  out.R = labels.count;
  out.sizes = labels.sizes;
  out.centers = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>::Zero(labels.count, 2);
  for (Index i = 0; i < labels.n(); ++i) out.centers.row(labels.labels[i]) += y0.row(i);
  for (int r = 0; r < labels.count; ++r) out.centers.row(r) /= Scalar(labels.sizes[r]);
  return out;
}

/// Projection of y0 onto the indicator span of the components of P*.
/// The labels must induce the same partition as P*'s connected components.
template <typename Scalar>
NullSpaceLimit<Scalar> null_space_limit(const SquareSym<Scalar>& pstar, const ComponentLabels& labels,
                                        const Coords<Scalar>& y0, Scalar threshold = Scalar(1e-12)) {
  if (labels.n() != pstar.size() || y0.rows() != pstar.size())
    throw std::invalid_argument("null_space_limit: size mismatch");
  const ComponentLabels comps = connected_components(pstar, threshold);
  bool same = comps.count == labels.count;
  std::vector<int> map(static_cast<std::size_t>(labels.count), -1);
  for (Index i = 0; same && i < labels.n(); ++i) {
    int& m = map[labels.labels[i]];
    if (m < 0) m = comps.labels[i];
    same = m == comps.labels[i];
  }
  if (!same) throw std::invalid_argument("null_space_limit: labels disagree with the components of P*");

  const Matrix<Scalar> theta = indicator_basis<Scalar>(labels);
  NullSpaceLimit<Scalar> out;
  out.projected = theta * (theta.transpose() * y0);
  out.centers = limit_centers(labels, y0);
  return out;
}

/// Split of one embedding step into repulsions from foreign clusters and a remainder.
template <typename Scalar = double>
struct ForceDecomposition {
  Coords<Scalar> displacement;          // y^(k+1) - y^(k)
  std::vector<Coords<Scalar>> forces;   // forces[r].row(i) = f_ir; zero row when i is in H_r
  Coords<Scalar> residual;              // epsilon_i

  /// max_i |displacement_i - sum_r f_ir - epsilon_i|, zero up to rounding.
  Scalar identity_residual() const {
    Coords<Scalar> acc = displacement - residual;
    for (const auto& f : forces) acc -= f;
    return acc.cwiseAbs().maxCoeff();
  }
};

/// f_ir = h' |H_r| / (n(n-1)) (y_i - mean_{j in H_r} y_j) for every foreign cluster r,
/// with epsilon_i the rest of the actual embedding step.
template <typename Scalar>
ForceDecomposition<Scalar> repulsion_forces(const AffinityP<Scalar>& p, const Coords<Scalar>& y,
                                            const ComponentLabels& labels, Scalar h_prime) {
  const Index n = y.rows();
  if (labels.n() != n || p.size() != n) throw std::invalid_argument("repulsion_forces: size mismatch");
  ForceDecomposition<Scalar> out;
  const EmbeddingState<Scalar> here{y, Stage::Embedding, 0};
  out.displacement = embed_step(here, p, h_prime).coords - y;
  const LimitCenters<Scalar> means = limit_centers(labels, y);
  const Scalar nn = Scalar(n) * Scalar(n - 1);
  out.residual = out.displacement;
  out.forces.assign(static_cast<std::size_t>(labels.count), Coords<Scalar>::Zero(n, 2));
  for (int r = 0; r < labels.count; ++r) {
    const Scalar scale = h_prime * Scalar(labels.sizes[r]) / nn;
    for (Index i = 0; i < n; ++i) {
      if (labels.labels[i] == r) continue;
      out.forces[r].row(i) = scale * (y.row(i) - means.centers.row(r));
    }
    out.residual -= out.forces[r];
  }
  return out;
}

}  // namespace tsne
