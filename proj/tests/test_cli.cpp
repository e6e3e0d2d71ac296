#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tsne/io.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "tsne_test_cli";

int cli(const std::string& args) {
  const std::string cmd = std::string(TSNE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path outdir(const std::string& name) {
  const fs::path dir = kRoot / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

const std::string kSmall = "--preset gmm --n 60 --p 10 --perplexity 10 ";

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli("") == 1);
  CHECK(cli("--help") == 0);
  CHECK(cli("run --help") == 0);
  CHECK(cli("run --bogus") == 1);
  CHECK(cli("run --preset gmm --csv x.csv --out " + outdir("both").string()) == 1);
  CHECK(cli("run --preset gmm --n 60 --p 10 --alpha 0.5 --out " + outdir("alpha").string()) == 1);
  CHECK(cli("run --csv " + (kRoot / "missing.csv").string() + " --out " + outdir("missing").string()) == 2);
  CHECK(cli("run " + kSmall + "--h 1e16 --k0 5 --k1 0 --out " + outdir("diverge").string()) == 3);
}

TEST_CASE("run writes its outputs and zero iterations keep the start") {
  const fs::path out = outdir("zero");
  REQUIRE(cli("run " + kSmall + "--k0 0 --k1 0 --seed 3 --out " + out.string()) == 0);
  for (const char* f : {"embedding_final.csv", "trajectory.jsonl", "final.svg", "report.json"}) CHECK(fs::exists(out / f));
  const auto traj = tsne::read_trajectory(out / "trajectory.jsonl");
  REQUIRE(traj.size() == 1);
  CHECK(traj[0].k == 0);

  const auto report = read_json(out / "report.json");
  const double sigma = report["metadata"]["params"]["sigma_n"].get<double>();
  const auto init = tsne::init_random<double>(60, sigma, 3);
  CHECK((traj[0].coords - init.coords).cwiseAbs().maxCoeff() == 0.0);

  std::istringstream csv(slurp(out / "embedding_final.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,y,label");
  for (tsne::Index i = 0; i < 60; ++i) {
    REQUIRE(std::getline(csv, line));
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) == init.coords(i, 0));
  }
}

TEST_CASE("runs are byte-for-byte deterministic") {
  const fs::path a = outdir("det_a"), b = outdir("det_b");
  const std::string args = "run " + kSmall + "--k0 10 --k1 10 --seed 9 --stride 2 --out ";
  REQUIRE(cli(args + a.string()) == 0);
  REQUIRE(cli(args + b.string()) == 0);
  for (const char* f : {"embedding_final.csv", "trajectory.jsonl", "final.svg"}) CHECK(slurp(a / f) == slurp(b / f));
  const auto traj = tsne::read_trajectory(a / "trajectory.jsonl");
  CHECK(traj.back().k == 20);

  const fs::path c = outdir("det_c");
  REQUIRE(cli("run " + kSmall + "--k0 10 --k1 10 --seed 10 --stride 2 --out " + c.string()) == 0);
  CHECK(slurp(a / "embedding_final.csv") != slurp(c / "embedding_final.csv"));
}

TEST_CASE("csv input") {
  const fs::path out = outdir("csv");
  fs::create_directories(kRoot);
  tsne::GmmPreset g;
  g.n = 40;
  g.p = 5;
  g.pi = {0.5, 0.5};
  tsne::write_csv(kRoot / "in.csv", tsne::make_gmm(g, 2));
  REQUIRE(cli("run --csv " + (kRoot / "in.csv").string() + " --perplexity 8 --k0 5 --k1 5 --out " + out.string()) == 0);
  const auto report = read_json(out / "report.json");
  CHECK(report["metadata"].contains("params"));
  CHECK(fs::exists(out / "embedding_final.csv"));
}

TEST_CASE("compare: zero step and zero iterations give zero deviation") {
  const fs::path out = outdir("cmp_h0");
  REQUIRE(cli("compare " + kSmall + "--alpha 4 --h 0 --k0 6 --out " + out.string()) == 0);
  const auto dev = read_json(out / "compare.json")["surrogate_deviation"];
  REQUIRE(dev["series"].size() == 7);
  for (const auto& v : dev["series"]) CHECK(v.get<double>() == 0.0);
  CHECK(fs::exists(out / "deviation.csv"));
  CHECK(fs::exists(out / "overlay.svg"));

  const fs::path zero = outdir("cmp_k0");
  REQUIRE(cli("compare " + kSmall + "--alpha 4 --h 1 --k0 0 --out " + zero.string()) == 0);
  const auto z = read_json(zero / "compare.json")["surrogate_deviation"];
  REQUIRE(z["series"].size() == 1);
  CHECK(z["series"][0].get<double>() == 0.0);

  const fs::path sweep = outdir("cmp_sweep");
  REQUIRE(cli("compare --preset gmm --p 10 --perplexity 10 --theory-delta 0.5 --stable-gamma --sweep-n 50 --sweep-n 100 --out " +
              sweep.string()) == 0);
  CHECK(read_json(sweep / "sweep.json")["sweep"].size() == 2);
}

TEST_CASE("early-stop plan and shared start") {
  const fs::path plan = outdir("plan");
  REQUIRE(cli("early-stop --preset gmm --n 1600 --dry-run --out " + plan.string()) == 0);
  CHECK(read_json(plan / "early_stop.json")["K0"] == nlohmann::json::array({54, 137, 253}));

  const fs::path out = outdir("study");
  REQUIRE(cli("early-stop " + kSmall + "--alpha 4 --h 1 --k1 10 --seed 5 --out " + out.string()) == 0);
  const auto report = read_json(out / "early_stop.json");
  const auto& runs = report["runs"];
  REQUIRE(runs.size() == 3);
  const double d0 = runs[0]["initial_diameter"].get<double>();
  for (const auto& r : runs) {
    CHECK(r["initial_diameter"].get<double>() == d0);
    CHECK(r.contains("separation_ratio_final"));
  }
  CHECK(fs::exists(out / "early_stop_ee.svg"));
  CHECK(fs::exists(out / "early_stop_final.svg"));
}
