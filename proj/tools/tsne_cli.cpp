// Command-line driver: run, compare and early-stop experiments.

#include "tsne/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Flags {
  std::string preset;
  std::string idx, idx_labels, csv;
  bool csv_no_labels = false;
  std::vector<int> digits{2, 4, 6, 8};
  long per_digit = 0;
  std::optional<double> theory_delta, theory_gamma;
  bool stable_gamma = false;
  std::optional<double> alpha, h, h_prime, perplexity, sigma_n;
  std::optional<long> k0, k1;
  std::optional<long> n, p;
  std::optional<double> rho2;
  std::string init = "random";
  long stride = 5;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::vector<long> sweep_n;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->set_help_flag("--help", "Print this help message and exit");
  cmd->add_option("--preset", f.preset, "Synthetic data preset")->check(CLI::IsMember({"gmm", "spheres"}));
  cmd->add_option("--idx", f.idx, "IDX image file");
  cmd->add_option("--idx-labels", f.idx_labels, "IDX label file");
  cmd->add_option("--digits", f.digits, "Digits kept when subsampling IDX data");
  cmd->add_option("--per-digit", f.per_digit, "Images drawn per digit (0 keeps all)");
  cmd->add_option("--csv", f.csv, "CSV data file, last column labels");
  cmd->add_flag("--csv-no-labels", f.csv_no_labels, "CSV file has no label column");
  cmd->add_option("--theory-delta", f.theory_delta, "Use the theory schedule with this delta");
  cmd->add_option("--theory-gamma", f.theory_gamma, "Scale the theory exaggeration by this factor")->check(CLI::PositiveNumber);
  cmd->add_flag("--stable-gamma", f.stable_gamma, "Shrink the theory exaggeration so h lambda_n(L(alpha P)) <= 0.9");
  cmd->add_option("--alpha", f.alpha, "Exaggeration factor");
  cmd->add_option("--h", f.h, "Early-exaggeration step size");
  cmd->add_option("--h-prime", f.h_prime, "Embedding step size");
  cmd->add_option("--k0", f.k0, "Early-exaggeration iterations");
  cmd->add_option("--k1", f.k1, "Embedding iterations");
  cmd->add_option("--perplexity", f.perplexity, "Target perplexity");
  cmd->add_option("--sigma-n", f.sigma_n, "Initialization scale");
  cmd->add_option("--init", f.init, "Initialization")->check(CLI::IsMember({"random", "spectral"}));
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--stride", f.stride, "Embedding-stage snapshot stride")->check(CLI::PositiveNumber);
  cmd->add_option("--n", f.n, "Preset sample size");
  cmd->add_option("--p", f.p, "Preset dimension");
  cmd->add_option("--rho2", f.rho2, "GMM squared mean separation");
}

tsne::ExperimentConfig to_config(const Flags& f) {
  const int sources = !f.preset.empty() + !f.idx.empty() + !f.csv.empty();
  if (sources > 1) throw std::invalid_argument("choose exactly one of --preset, --idx, --csv");
  tsne::ExperimentConfig c;
  if (!f.idx.empty()) {
    c.source = tsne::DataSource::Idx;
    c.data_path = f.idx;
    c.labels_path = f.idx_labels;
    c.digits = f.digits;
    c.per_digit = f.per_digit;
  } else if (!f.csv.empty()) {
    c.source = tsne::DataSource::Csv;
    c.data_path = f.csv;
    c.csv_has_labels = !f.csv_no_labels;
  } else {
    c.source = f.preset == "spheres" ? tsne::DataSource::Spheres : tsne::DataSource::Gmm;
  }
  if (f.n) c.gmm.n = c.spheres.n = *f.n;
  if (f.p) {
    c.gmm.p = c.spheres.p = *f.p;
    if (!f.rho2) c.gmm.rho2 = static_cast<double>(*f.p);
  }
  if (f.rho2) c.gmm.rho2 = *f.rho2;
  c.theory_delta = f.theory_delta;
  c.theory_gamma = f.theory_gamma;
  c.stable_gamma = f.stable_gamma;
  c.overrides = {f.alpha, f.h, f.h_prime, f.perplexity, f.sigma_n, f.k0, f.k1};
  c.init = f.init == "spectral" ? tsne::InitMode::Spectral : tsne::InitMode::Random;
  c.stride = f.stride;
  c.out = f.out;
  c.seed = f.seed;
  c.sweep_n = f.sweep_n;
  c.dry_run = f.dry_run;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage t-SNE with early exaggeration, surrogates and diagnostics"};
  app.require_subcommand(1);
  Flags f;
  auto* run = app.add_subcommand("run", "Run both stages and write embedding, trajectory, report and plot");
  auto* compare = app.add_subcommand("compare", "Compare early exaggeration against its power-iteration surrogate");
  auto* early = app.add_subcommand("early-stop", "Run the three early-exaggeration lengths from a shared start");
  for (auto* cmd : {run, compare, early}) add_common(cmd, f);
  compare->add_option("--sweep-n", f.sweep_n, "GMM sizes to sweep");
  early->add_flag("--dry-run", f.dry_run, "Only write the K0 plan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? tsne::kExitOk : tsne::kExitConfig;
  }

  try {
    const tsne::ExperimentConfig cfg = to_config(f);
    if (run->parsed()) tsne::cmd_run(cfg);
    else if (compare->parsed()) tsne::cmd_compare(cfg);
    else tsne::cmd_early_stop_study(cfg);
  } catch (const tsne::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tsne::kExitIo;
  } catch (const tsne::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tsne::kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tsne::kExitConfig;
  }
  return tsne::kExitOk;
}
