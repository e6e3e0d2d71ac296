#pragma once

#include "tsne/affinity.hpp"
#include "tsne/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace tsne {

/// Parameters of both stages: exaggeration alpha with step h for K0
/// iterations, then step h_prime for K1 iterations.
struct TuningParams {
  double alpha = 12.0;
  double h = 200.0;
  double h_prime = 200.0;
  long K0 = 50;
  long K1 = 950;
  double delta = 0.5;
  double perplexity = 30.0;
  double sigma_n = 1e-2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha >= 1.0)) throw std::invalid_argument("TuningParams: alpha must be >= 1");
    if (!(h >= 0.0) || !(h_prime >= 0.0)) throw std::invalid_argument("TuningParams: step sizes must be non-negative");
    if (K0 < 0 || K1 < 0) throw std::invalid_argument("TuningParams: iteration counts must be non-negative");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("TuningParams: delta must lie in (0,1)");
    if (!(perplexity > 1.0)) throw std::invalid_argument("TuningParams: perplexity must exceed 1");
    if (!(sigma_n > 0.0)) throw std::invalid_argument("TuningParams: sigma_n must be positive");
  }
};

template <typename Scalar>
Scalar diameter(const Coords<Scalar>& y) {
  Scalar best = 0;
  for (Index j = 0; j < y.rows(); ++j)
    for (Index i = j + 1; i < y.rows(); ++i) {
      const Scalar dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
      best = std::max(best, dx * dx + dy * dy);
    }
  return std::sqrt(best);
}

struct IterationScalars {
  long k = 0;
  Stage stage = Stage::EarlyExaggeration;
  double diameter = 0.0;
  double eta = 0.0;   // diameter squared
  Ratio diam_ratio;   // diameter(k) / diameter(k-1); 1 at k = 0
};

template <typename Scalar = double>
struct TrajectoryLog {
  std::vector<EmbeddingState<Scalar>> snapshots;  // strictly increasing k
  std::vector<IterationScalars> scalars;           // one per iteration 0..K0+K1
  long K0 = 0;
  long K1 = 0;
  TuningParams params;
  std::string rng = CounterRng::kName;

  const EmbeddingState<Scalar>* snapshot_at(long k) const {
    auto it = std::lower_bound(snapshots.begin(), snapshots.end(), k,
                               [](const EmbeddingState<Scalar>& s, long key) { return s.k < key; });
    return it != snapshots.end() && it->k == k ? &*it : nullptr;
  }

  const EmbeddingState<Scalar>& final_state() const { return snapshots.back(); }

  /// Log over hand-built states numbered 0..m-1; states with k <= K0 are tagged
  /// as early exaggeration.
  static TrajectoryLog from_states(std::vector<Coords<Scalar>> states, long K0) {
    TrajectoryLog log;
    log.K0 = K0;
    log.K1 = static_cast<long>(states.size()) - 1 - K0;
    double prev = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      const long kk = static_cast<long>(k);
      const Stage stage = kk <= K0 ? Stage::EarlyExaggeration : Stage::Embedding;
      const double d = static_cast<double>(diameter(states[k]));
      Ratio ratio{1.0, false};
      if (k > 0) ratio = (prev == 0.0 && d == 0.0) ? Ratio{1.0, false} : Ratio::of(d, prev);
      log.scalars.push_back({kk, stage, d, d * d, ratio});
      log.snapshots.push_back({std::move(states[k]), stage, kk});
      prev = d;
    }
    return log;
  }
};

/// y_l^(0) = sigma_n g_l / |g_l|_2 with g_1, g_2 standard normal on separate streams.
template <typename Scalar = double>
EmbeddingState<Scalar> init_random(Index n, Scalar sigma_n, std::uint64_t seed) {
  if (!(sigma_n > 0)) throw std::invalid_argument("init_random: sigma_n must be positive");
  if (n < 2) throw std::invalid_argument("init_random: need at least 2 points");
  EmbeddingState<Scalar> s;
  s.coords.resize(n, 2);
  for (int l = 0; l < 2; ++l) {
    CounterRng rng(seed, static_cast<std::uint64_t>(l));
    for (Index i = 0; i < n; ++i) s.coords(i, l) = static_cast<Scalar>(rng.normal());
    s.coords.col(l) *= sigma_n / s.coords.col(l).norm();
  }
  return s;
}

/// Eigenvectors of L(P) for its two smallest eigenvalues on the complement
/// of the constant vector, each scaled to norm sigma_n.
template <typename Scalar>
EmbeddingState<Scalar> init_spectral(const AffinityP<Scalar>& p, Scalar sigma_n) {
  const Index n = p.size();
  if (n < 3) throw std::invalid_argument("init_spectral: need at least 3 points");
  // Shifting the constant direction to -1 leaves 1/sqrt(n) as the unique
  // lowest mode, so columns 1 and 2 are the nontrivial ones even when the
  // null space of L(P) is degenerate.
  Matrix<Scalar> shifted = laplacian(p.sym()).matrix();
  shifted.array() -= Scalar(1) / Scalar(n);
  const SpectralDecomp<Scalar> dec = eig_sym(SquareSym<Scalar>(std::move(shifted)));
  EmbeddingState<Scalar> s;
  s.coords.resize(n, 2);
  for (int l = 0; l < 2; ++l) s.coords.col(l) = dec.eigenvectors.col(l + 1) * (sigma_n / dec.eigenvectors.col(l + 1).norm());
  return s;
}

/// L(S) Y computed as D(S) Y - S Y.
template <typename Scalar>
Coords<Scalar> apply_laplacian(const SquareSym<Scalar>& s, const Coords<Scalar>& y) {
  const Vector<Scalar> deg = degree_operator(s);
  Coords<Scalar> out = deg.asDiagonal() * y;
  out.noalias() -= s.matrix() * y;
  return out;
}

namespace detail {

template <typename Scalar>
EmbeddingState<Scalar> gradient_step(const EmbeddingState<Scalar>& state, const AffinityP<Scalar>& p,
                                     Scalar alpha, Scalar step) {
  if (state.n() != p.size()) throw std::invalid_argument("step: state and P sizes differ");
  const SquareSym<Scalar> s = s_matrix(p, state.coords, alpha);
  EmbeddingState<Scalar> next{state.coords - step * apply_laplacian(s, state.coords), state.stage, state.k + 1};
  if (!next.coords.allFinite()) throw DivergenceError("non-finite coordinate after step", next.k);
  if (next.coords.cwiseAbs().maxCoeff() > Scalar(1e12)) throw DivergenceError("coordinate magnitude exceeded 1e12", next.k);
  return next;
}

}  // namespace detail

/// One early-exaggeration step y <- [I - h L(S_alpha)] y.
template <typename Scalar>
EmbeddingState<Scalar> ee_step(const EmbeddingState<Scalar>& state, const AffinityP<Scalar>& p, Scalar alpha, Scalar h) {
  if (state.stage != Stage::EarlyExaggeration) throw std::logic_error("ee_step: state is not in the early exaggeration stage");
  return detail::gradient_step(state, p, alpha, h);
}

/// One embedding-stage step, identical to ee_step with alpha = 1.
template <typename Scalar>
EmbeddingState<Scalar> embed_step(const EmbeddingState<Scalar>& state, const AffinityP<Scalar>& p, Scalar h_prime) {
  if (state.stage != Stage::Embedding) throw std::logic_error("embed_step: state is not in the embedding stage");
  return detail::gradient_step(state, p, Scalar(1), h_prime);
}

enum class InitMode { Random, Spectral, Given };

template <typename Scalar = double>
struct InitSpec {
  InitMode mode = InitMode::Random;
  Coords<Scalar> given;  // used when mode == Given
};

struct RunOptions {
  long ee_stride = 1;
  long embed_stride = 5;
  std::size_t max_snapshots = 2000;
};

/// Iterations whose states are kept: every stride-th of each stage plus
/// 0, K0 and the final one, thinned uniformly to at most max_snapshots.
inline std::vector<long> snapshot_schedule(long K0, long K1, const RunOptions& opt) {
  if (opt.ee_stride < 1 || opt.embed_stride < 1) throw std::invalid_argument("snapshot strides must be >= 1");
  if (opt.max_snapshots < 3) throw std::invalid_argument("max_snapshots must be >= 3");
  std::vector<long> ks;
  for (long k = 0; k <= K0; k += opt.ee_stride) ks.push_back(k);
  for (long k = K0; k <= K0 + K1; k += opt.embed_stride) ks.push_back(k);
  ks.push_back(K0);
  ks.push_back(K0 + K1);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.size() <= opt.max_snapshots) return ks;

  std::vector<long> thinned{0, K0, K0 + K1};
  const std::size_t picks = opt.max_snapshots - 3;
  for (std::size_t i = 0; i < picks; ++i) thinned.push_back(ks[(i + 1) * (ks.size() - 1) / (picks + 1)]);
  std::sort(thinned.begin(), thinned.end());
  thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
  return thinned;
}

/// K0 early-exaggeration steps followed by K1 embedding steps.
template <typename Scalar>
TrajectoryLog<Scalar> run(const AffinityP<Scalar>& p, const TuningParams& params, const InitSpec<Scalar>& init = {},
                          const RunOptions& opt = {}) {
  params.validate();
  const Index n = p.size();
  EmbeddingState<Scalar> state;
  switch (init.mode) {
    case InitMode::Random: state = init_random<Scalar>(n, static_cast<Scalar>(params.sigma_n), params.seed); break;
    case InitMode::Spectral: state = init_spectral(p, static_cast<Scalar>(params.sigma_n)); break;
    case InitMode::Given:
      if (init.given.rows() != n) throw std::invalid_argument("run: given initialization has the wrong size");
      state.coords = init.given;
      break;
  }
  state.stage = Stage::EarlyExaggeration;
  state.k = 0;

  TrajectoryLog<Scalar> log;
  log.K0 = params.K0;
  log.K1 = params.K1;
  log.params = params;
  const std::vector<long> schedule = snapshot_schedule(params.K0, params.K1, opt);
  std::size_t next_snap = 0;

  double prev_diam = 0.0;
  auto record = [&](const EmbeddingState<Scalar>& s, Stage tag) {
    const double d = static_cast<double>(diameter(s.coords));
    Ratio ratio{1.0, false};
    if (s.k > 0) ratio = (prev_diam == 0.0 && d == 0.0) ? Ratio{1.0, false} : Ratio::of(d, prev_diam);
    log.scalars.push_back({s.k, tag, d, d * d, ratio});
    prev_diam = d;
    if (next_snap < schedule.size() && schedule[next_snap] == s.k) {
      log.snapshots.push_back(s);
      log.snapshots.back().stage = tag;
      ++next_snap;
    }
  };

  const Scalar alpha = static_cast<Scalar>(params.alpha);
  const Scalar h = static_cast<Scalar>(params.h), hp = static_cast<Scalar>(params.h_prime);
  record(state, Stage::EarlyExaggeration);
  for (long it = 0; it < params.K0; ++it) {
    state = ee_step(state, p, alpha, h);
    record(state, Stage::EarlyExaggeration);
  }
  state.stage = Stage::Embedding;
  for (long it = 0; it < params.K1; ++it) {
    state = embed_step(state, p, hp);
    record(state, Stage::Embedding);
  }
  return log;
}

template <typename Scalar>
TrajectoryLog<Scalar> run(const DataMatrix<Scalar>& x, const TuningParams& params, const InitSpec<Scalar>& init = {},
                          const RunOptions& opt = {}) {
  return run(affinity_from_data(x, static_cast<Scalar>(params.perplexity)), params, init, opt);
}

}  // namespace tsne
