#include "tsne/experiments.hpp"

#include <algorithm>

namespace tsne {

namespace {

constexpr std::uint64_t kDataSeedSalt = 0xda7a5eedULL;
constexpr double kSeparationThreshold = 0.2;
constexpr double kLocalizationBound = 10.0;
constexpr double kForceThreshold = 0.2;

const char* source_name(DataSource s) {
  switch (s) {
    case DataSource::Gmm: return "gmm";
    case DataSource::Spheres: return "spheres";
    case DataSource::Idx: return "idx";
    case DataSource::Csv: return "csv";
  }
  return "unknown";
}

const char* init_name(InitMode m) {
  switch (m) {
    case InitMode::Random: return "random";
    case InitMode::Spectral: return "spectral";
    case InitMode::Given: return "given";
  }
  return "unknown";
}

Json vec_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::vector<int> contiguous_labels(const std::vector<int>& raw, int& R) {
  const ComponentLabels c = ComponentLabels::from_tags(raw);
  R = c.count;
  return c.labels;
}

void prepare_out(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec || !std::filesystem::is_directory(out)) throw IoError(IoError::Kind::Open, "cannot create output directory " + out.string());
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

struct Prepared {
  LoadedData loaded;
  TuningParams params;
  AffinityP<double> p;
};

Prepared prepare(const ExperimentConfig& cfg) {
  LoadedData loaded = load_data(cfg);
  const DataMatrix<double> x(loaded.data.data);
  TuningParams params = resolve_params(cfg, x.n());
  AffinityP<double> p = affinity_from_data(x, params.perplexity);
  if (cfg.stable_gamma && cfg.theory_delta && !cfg.overrides.alpha) params.alpha *= stable_gamma(p);
  return {std::move(loaded), params, std::move(p)};
}

Json metadata_json(const ExperimentConfig& cfg, const LoadedData& d, const TuningParams& params) {
  Json m;
  m["source"] = source_name(cfg.source);
  m["n"] = d.data.n();
  m["p"] = d.data.data.cols();
  m["R"] = d.data.R;
  m["seed"] = cfg.seed;
  m["rng"] = CounterRng::kName;
  m["init"] = init_name(cfg.init);
  if (cfg.theory_delta) m["theory_delta"] = *cfg.theory_delta;
  if (cfg.theory_gamma) m["theory_gamma"] = *cfg.theory_gamma;
  if (cfg.stable_gamma) m["stable_gamma"] = true;
  m["params"] = params_json(params);
  m["data"] = d.metadata;
  return m;
}

}  // namespace

LoadedData load_data(const ExperimentConfig& cfg) {
  const std::uint64_t data_seed = cfg.seed ^ kDataSeedSalt;
  LoadedData out;
  switch (cfg.source) {
    case DataSource::Gmm:
      out.data = make_gmm(cfg.gmm, data_seed);
      out.metadata = {{"preset", "gmm"}, {"n", cfg.gmm.n}, {"p", cfg.gmm.p}, {"rho2", cfg.gmm.rho2},
                      {"pi", vec_json(cfg.gmm.pi)}, {"noise_scale", cfg.gmm.noise_scale}};
      break;
    case DataSource::Spheres:
      out.data = make_spheres(cfg.spheres, data_seed);
      out.metadata = {{"preset", "spheres"}, {"n", cfg.spheres.n}, {"p", cfg.spheres.p},
                      {"radii", vec_json(cfg.spheres.radii)}, {"sigma", cfg.spheres.sigma}, {"pi", vec_json(cfg.spheres.pi)}};
      break;
    case DataSource::Csv:
      out.data = load_csv(cfg.data_path, cfg.csv_has_labels);
      out.metadata = {{"path", cfg.data_path.string()}};
      break;
    case DataSource::Idx: {
      const Matrix<double> images = load_idx(cfg.data_path);
      out.metadata = {{"path", cfg.data_path.string()}};
      std::vector<int> labels;
      if (!cfg.labels_path.empty()) {
        labels = load_idx_labels(cfg.labels_path);
        out.metadata["labels_path"] = cfg.labels_path.string();
      }
      if (cfg.per_digit > 0) {
        if (labels.empty()) throw std::invalid_argument("digit subsampling needs an idx labels file");
        DigitSubsample sub = subsample_digits(images, labels, cfg.digits, cfg.per_digit, data_seed);
        out.metadata["digits"] = sub.digits;
        out.metadata["per_digit"] = cfg.per_digit;
        out.metadata["indices"] = sub.indices;
        out.data = std::move(sub.data);
      } else {
        out.data.data = images;
        if (!labels.empty()) {
          if (static_cast<Index>(labels.size()) != images.rows()) throw std::invalid_argument("idx label count differs from image count");
          out.data.labels = contiguous_labels(labels, out.data.R);
        }
      }
      break;
    }
  }
  out.data.validate();
  return out;
}

TuningParams resolve_params(const ExperimentConfig& cfg, Index n) {
  const auto& o = cfg.overrides;
  TuningParams p;
  if (cfg.theory_delta) p = theory_tuning(static_cast<long>(n), *cfg.theory_delta, o.perplexity.value_or(30.0),
                                           cfg.theory_gamma.value_or(1.0));
  if (o.alpha) p.alpha = *o.alpha;
  if (o.h) p.h = *o.h;
  if (o.h_prime) p.h_prime = *o.h_prime;
  if (o.perplexity) p.perplexity = *o.perplexity;
  if (o.sigma_n) p.sigma_n = *o.sigma_n;
  if (o.K0) p.K0 = *o.K0;
  if (o.K1) p.K1 = *o.K1;
  p.seed = cfg.seed;
  p.validate();
  return p;
}

Json params_json(const TuningParams& p) {
  return {{"alpha", p.alpha}, {"h", p.h},       {"h_prime", p.h_prime},       {"K0", p.K0},
          {"K1", p.K1},       {"delta", p.delta}, {"perplexity", p.perplexity}, {"sigma_n", p.sigma_n},
          {"seed", p.seed}};
}

Json ratio_json(const Ratio& r) {
  if (r.infinite) return "inf";
  return r.value;
}

Json diagnostic_report(const TrajectoryLog<double>& traj, const AffinityP<double>& p, const LabeledData& data) {
  const TuningParams& prm = traj.params;
  const Index n = p.size();
  Json rep;

  Json diam = Json::array(), eta = Json::array(), ratio = Json::array();
  for (const auto& s : traj.scalars) {
    diam.push_back(s.diameter);
    eta.push_back(s.eta);
    ratio.push_back(ratio_json(s.diam_ratio));
  }
  rep["diameter"] = std::move(diam);
  rep["eta"] = std::move(eta);
  rep["diam_ratio"] = std::move(ratio);

  const AffinityQ<double> q = q_matrix(traj.final_state().coords);
  rep["kl_divergence_final"] = kl_divergence(p, q);
  const double loc = localization_ratio(traj);
  rep["localization_ratio"] = loc;

  const DeviationSeries dev = surrogate_deviation(traj, p.sym(), prm.alpha, prm.h);
  rep["surrogate_deviation"] = {{"sup", dev.sup()}, {"k", dev.ks}, {"series", dev.values}, {"missing", dev.missing}};

  Json flags;
  flags["localization_within_10"] = loc <= kLocalizationBound;

  if (traj.K1 > 0) {
    const AmplificationTrace amp = amplification_trace(traj);
    Json ratios = Json::array();
    for (const auto& r : amp.ratios) ratios.push_back(ratio_json(r));
    rep["amplification_trace"] = {{"phase_end", amp.phase_end}, {"boundary_found", amp.boundary_found}, {"ratios", ratios}};

    const auto exp = expansion_check(traj, prm.h_prime, prm.sigma_n, n);
    bool all = !exp.empty();
    double min_ratio = exp.empty() ? 0.0 : exp.front().increment_ratio;
    Json inc = Json::array(), incr = Json::array();
    for (const auto& e : exp) {
      all = all && e.increased;
      min_ratio = std::min(min_ratio, e.increment_ratio);
      inc.push_back(e.increased);
      incr.push_back(e.increment_ratio);
    }
    rep["expansion_check"] = {{"all_increasing", all}, {"min_increment_ratio", min_ratio}, {"increased", inc}, {"increment_ratio", incr}};
    flags["expansion_strict"] = all;

    if (data.has_labels() && data.R >= 2) {
      const ComponentLabels labels = data.components();
      const auto fr = force_residual(traj, p, labels, prm.h_prime, amp.phase_end);
      double worst = 0.0, ident = 0.0;
      bool inf = false;
      Json ks = Json::array(), vals = Json::array();
      for (const auto& pt : fr) {
        ks.push_back(pt.k);
        vals.push_back(pt.infinite ? Json("inf") : Json(pt.ratio));
        inf = inf || pt.infinite;
        worst = std::max(worst, pt.ratio);
        ident = std::max(ident, pt.identity_residual);
      }
      rep["force_residual"] = {{"max_ratio", inf ? Json("inf") : Json(worst)}, {"max_identity_residual", ident}, {"k", ks}, {"series", vals}};
      flags["force_residual_below_0.2"] = !inf && !fr.empty() && worst < kForceThreshold;
    }
  }

  if (data.has_labels() && data.R >= 2) {
    const ComponentLabels labels = data.components();
    const Ratio sep = separation_ratio(traj.final_state().coords, labels);
    rep["separation_ratio"] = ratio_json(sep);
    if (const auto* ee = traj.snapshot_at(traj.K0)) rep["separation_ratio_end_of_ee"] = ratio_json(separation_ratio(ee->coords, labels));
    flags["separation_ratio_below_0.2"] = !sep.infinite && sep.value < kSeparationThreshold;

    const EigengapReport eg = eigengap_report(p, labels, prm.alpha, prm.h, prm.K0, prm.sigma_n);
    rep["eigengap"] = {{"R", eg.R},
                       {"nullity_P", eg.nullity_P},
                       {"h_lambda_R1", eg.h_lambda_R1},
                       {"h_lambda_n", eg.h_lambda_n},
                       {"h_lambda_R1_P", eg.h_lambda_R1_P},
                       {"h_lambda_n_P", eg.h_lambda_n_P},
                       {"kappa", eg.kappa},
                       {"condition_holds", eg.condition_holds},
                       {"offblock_laplacian_norm", eg.offblock_norm},
                       {"stop_budget", ratio_json(eg.stop_budget)},
                       {"R_n", eg.R_n}};
    flags["budget_exceeds_K0"] = eg.stop_budget.infinite || eg.stop_budget.value > static_cast<double>(prm.K0);
  }
  rep["flags"] = std::move(flags);
  return rep;
}

Json cmd_run(const ExperimentConfig& cfg) {
  const Prepared prep = prepare(cfg);
  prepare_out(cfg.out);
  RunOptions opt;
  opt.embed_stride = cfg.stride;
  const TrajectoryLog<double> traj = run(prep.p, prep.params, InitSpec<double>{cfg.init, {}}, opt);

  Json report;
  report["metadata"] = metadata_json(cfg, prep.loaded, prep.params);
  const Json diag = diagnostic_report(traj, prep.p, prep.loaded.data);
  for (const auto& [key, value] : diag.items()) report[key] = value;

  const Coords<double>& final_coords = traj.final_state().coords;
  write_embedding_csv(cfg.out / "embedding_final.csv", final_coords, prep.loaded.data.labels);
  write_trajectory(cfg.out / "trajectory.jsonl", traj);
  write_svg(cfg.out / "final.svg", final_coords, prep.loaded.data.labels);
  write_json(cfg.out / "report.json", report);
  return report;
}

namespace {

struct CompareResult {
  DeviationSeries dev;
  Coords<double> engine, surrogate;
};

CompareResult compare_once(const AffinityP<double>& p, TuningParams params, InitMode init) {
  params.K1 = 0;
  RunOptions opt;
  opt.ee_stride = 1;
  opt.max_snapshots = static_cast<std::size_t>(std::max<long>(params.K0 + 1, 3));
  const TrajectoryLog<double> traj = run(p, params, InitSpec<double>{init, {}}, opt);
  CompareResult r;
  r.dev = surrogate_deviation(traj, p.sym(), params.alpha, params.h);
  r.engine = traj.final_state().coords;
  r.surrogate = power_surrogate(p.sym(), params.alpha, params.h, traj.snapshots.front().coords, params.K0);
  return r;
}

}  // namespace

Json cmd_compare(const ExperimentConfig& cfg) {
  prepare_out(cfg.out);
  Json report;
  if (!cfg.sweep_n.empty()) {
    if (cfg.source != DataSource::Gmm) throw std::invalid_argument("--sweep-n needs the gmm preset");
    Json rows = Json::array();
    std::vector<double> sups;
    for (long n : cfg.sweep_n) {
      ExperimentConfig c = cfg;
      c.gmm.n = n;
      const Prepared prep = prepare(c);
      const CompareResult r = compare_once(prep.p, prep.params, cfg.init);
      sups.push_back(r.dev.sup());
      rows.push_back({{"n", n}, {"params", params_json(prep.params)}, {"sup_deviation", r.dev.sup()},
                      {"deviation_at_K0", r.dev.values.empty() ? 0.0 : r.dev.values.back()}});
    }
    bool monotone = true;
    for (std::size_t i = 1; i < sups.size(); ++i) monotone = monotone && sups[i] <= 1.2 * sups[i - 1];
    report["sweep"] = rows;
    report["non_increasing_with_20pct_slack"] = monotone;
    write_json(cfg.out / "sweep.json", report);
    return report;
  }

  const Prepared prep = prepare(cfg);
  const CompareResult r = compare_once(prep.p, prep.params, cfg.init);
  report["metadata"] = metadata_json(cfg, prep.loaded, prep.params);
  report["surrogate_deviation"] = {{"sup", r.dev.sup()}, {"k", r.dev.ks}, {"series", r.dev.values}, {"missing", r.dev.missing}};
  std::string csv = "k,deviation\n";
  for (std::size_t i = 0; i < r.dev.ks.size(); ++i) csv += std::to_string(r.dev.ks[i]) + ',' + format_double(r.dev.values[i]) + '\n';
  write_text(cfg.out / "deviation.csv", csv);
  write_text(cfg.out / "overlay.svg", render_svg_overlay(r.engine, r.surrogate, prep.loaded.data.labels));
  write_json(cfg.out / "compare.json", report);
  return report;
}

Json cmd_early_stop_study(const ExperimentConfig& cfg) {
  prepare_out(cfg.out);
  Index n = 0;
  switch (cfg.source) {
    case DataSource::Gmm: n = cfg.gmm.n; break;
    case DataSource::Spheres: n = cfg.spheres.n; break;
    default: break;
  }
  Json report;
  if (cfg.dry_run) {
    if (n == 0) n = load_data(cfg).data.n();
    const auto budgets = early_stop_budgets(static_cast<long>(n));
    report["n"] = n;
    report["K0"] = budgets;
    write_json(cfg.out / "early_stop.json", report);
    return report;
  }

  const Prepared prep = prepare(cfg);
  n = prep.p.size();
  const auto budgets = early_stop_budgets(static_cast<long>(n));
  const long total = prep.params.K0 + prep.params.K1;
  const ComponentLabels labels = prep.loaded.data.components();
  const bool clustered = prep.loaded.data.has_labels() && prep.loaded.data.R >= 2;

  report["metadata"] = metadata_json(cfg, prep.loaded, prep.params);
  report["n"] = n;
  report["K0"] = budgets;
  Json runs = Json::array();
  std::vector<Coords<double>> ee_panels, final_panels;
  std::vector<std::string> titles;
  for (long k0 : budgets) {
    TuningParams params = prep.params;
    params.K0 = k0;
    params.K1 = std::max(0L, total - k0);
    RunOptions opt;
    opt.ee_stride = std::max(1L, k0);
    opt.embed_stride = std::max(1L, params.K1);
    const TrajectoryLog<double> traj = run(prep.p, params, InitSpec<double>{cfg.init, {}}, opt);
    const Coords<double>& ee = traj.snapshot_at(k0)->coords;
    const Coords<double>& fin = traj.final_state().coords;
    Json row = {{"K0", k0}, {"K1", params.K1}};
    row["initial_diameter"] = traj.scalars.front().diameter;
    if (clustered) {
      row["separation_ratio_end_of_ee"] = ratio_json(separation_ratio(ee, labels));
      row["separation_ratio_final"] = ratio_json(separation_ratio(fin, labels));
    }
    runs.push_back(row);
    ee_panels.push_back(ee);
    final_panels.push_back(fin);
    titles.push_back("K0 = " + std::to_string(k0));
  }
  report["runs"] = runs;
  write_text(cfg.out / "early_stop_ee.svg", render_svg_panels(ee_panels, prep.loaded.data.labels, titles));
  write_text(cfg.out / "early_stop_final.svg", render_svg_panels(final_panels, prep.loaded.data.labels, titles));
  write_json(cfg.out / "early_stop.json", report);
  return report;
}

}  // namespace tsne
