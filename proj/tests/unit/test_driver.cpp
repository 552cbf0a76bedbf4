#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driver.hpp"
#include "error.hpp"
#include "helpers.hpp"
#include "oracle.hpp"
#include "sample_io.hpp"

using namespace qsym;
using nlohmann::json;
using qsym::testing::read_file;
using qsym::testing::TempDir;

namespace {

std::string fmt_text(int dim, const std::string& extra_sampler, const std::string& tail) {
  std::ostringstream o;
  o << "[system]\npotential = harmonic\ndim = " << dim << "\nbeads = 6\nbeta = 2 1/hw\n"
    << "[sampler]\ntimestep = 0.2 1/w\nfriction = 0.5 w\nsteps = 20000\nsample_stride = 5\nseed = 3\n"
    << extra_sampler << "[estimators]\nobservables = energy, pair_distribution"
    << (dim >= 2 ? ", density" : "") << "\npair_bins = 30\npair_max = 6 l_ho\n"
    << "density_bins = 9\ndensity_half_width = 3 l_ho\nmin_blocks = 16\n"
    << "[output]\nsnapshot_stride = 2\n"
    << tail;
  return o.str();
}

std::string toy_text(const std::string& extra_sampler = "", const std::string& tail = "",
                     int dim = 2) {
  return fmt_text(dim, extra_sampler, tail);
}

RunConfig config_in(const TempDir& dir, const std::string& text, const std::string& name) {
  RunConfig c = parse_config(text, "driver_test.cfg");
  c.output_dir = dir / name;
  return c;
}

// Numeric columns of a tsv table written by the driver.
std::vector<std::vector<double>> read_table(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<double>> rows;
  bool header = false;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::vector<double> v;
    for (double x; row >> x;) v.push_back(x);
    rows.push_back(v);
  }
  return rows;
}

json observable(const json& summary, const std::string& name, const std::string& channel) {
  for (const auto& o : summary["observables"])
    if (o["name"] == name && o["channel"] == channel) return o;
  return {};
}

}  // namespace

TEST_CASE("re-analysis reproduces the in-run summary exactly") {
  TempDir dir("drv");
  const auto cfg = config_in(dir, toy_text(), "run");
  const auto r = cmd_run(cfg, {});
  REQUIRE(r.status == RunStatus::Complete);
  CHECK(std::filesystem::exists(dir / "run/run.json"));
  CHECK(std::filesystem::exists(dir / "run/seed_3/samples.bin"));
  CHECK(std::filesystem::exists(dir / "run/seed_3/snapshots.bin"));
  CHECK(std::filesystem::exists(dir / "run/seed_3/checkpoint.json"));

  const auto again = cmd_analyze(dir / "run", std::nullopt, dir / "re");
  CHECK(read_file(again.summary_path) == read_file(r.summary_path));
  for (const char* f : {"pair_boson.tsv", "pair_fermion.tsv", "density_distinguishable.tsv",
                        "density_fermion_minus_half_boson.tsv"})
    CHECK(read_file(dir / (std::string("re/") + f)) == read_file(dir / (std::string("run/") + f)));

  const json s = json::parse(read_file(r.summary_path));
  CHECK(s["version"] == kVersion);
  CHECK(s["config_hash"] == cfg.hash());
  CHECK(s["seeds"] == json::array({3}));
  CHECK(s["units"] == "natural");
  // 10% burn-in of 20000 steps, stride 5
  CHECK(s["samples"] == 3600);
  CHECK(s["snapshots"] == 1800);
  for (const char* ch : {"distinguishable", "boson", "fermion"})
    CHECK(observable(s, "energy", ch).contains("stderr"));
  CHECK(s.contains("fermion_energy_free_energy_route"));

  const auto ref = harmonic_partition_discrete(2.0, 1.0, 2, 6);
  const json e = observable(s, "energy", "distinguishable");
  CHECK(std::abs(e["estimate"].get<double>() - ref.e_distinguishable) < 5 * e["stderr"].get<double>());
  const json x = observable(s, "exchange_ratio", "distinguishable");
  CHECK(x["estimate"].get<double>() > 0.0);
  CHECK(x["estimate"].get<double>() < 1.0);
}

TEST_CASE("rebinning preserves histogram integrals") {
  TempDir dir("drv");
  const auto cfg = config_in(dir, toy_text(), "run");
  cmd_run(cfg, {});
  const std::string coarse_text = toy_text();
  std::string t = coarse_text;
  t.replace(t.find("pair_bins = 30"), 14, "pair_bins = 10");
  t.replace(t.find("density_bins = 9"), 16, "density_bins = 3");
  cmd_analyze(dir / "run", parse_config(t), dir / "coarse");

  for (const char* ch : {"boson", "fermion"}) {
    const auto fine = read_table(dir / (std::string("run/pair_") + ch + ".tsv"));
    const auto coarse = read_table(dir / (std::string("coarse/pair_") + ch + ".tsv"));
    REQUIRE(fine.size() == 30);
    REQUIRE(coarse.size() == 10);
    for (int b = 0; b < 10; ++b) {
      const double mean = (fine[3 * b][1] + fine[3 * b + 1][1] + fine[3 * b + 2][1]) / 3.0;
      CHECK(coarse[b][1] == doctest::Approx(mean).epsilon(1e-8).scale(1e-12));
    }
    const auto rho_f = read_table(dir / (std::string("run/density_") + ch + ".tsv"));
    const auto rho_c = read_table(dir / (std::string("coarse/density_") + ch + ".tsv"));
    double sf = 0.0, sc = 0.0;
    for (const auto& row : rho_f) sf += row[2];
    for (const auto& row : rho_c) sc += row[2];
    // cells of 2/3 and 2 l_ho
    CHECK(sf * (2.0 / 3.0) * (2.0 / 3.0) == doctest::Approx(sc * 4.0).epsilon(1e-8));
  }
}

TEST_CASE("more seeds shrink the error bars") {
  TempDir dir("drv");
  const auto cfg = config_in(dir, toy_text(), "one");
  const json one = json::parse(read_file(cmd_run(cfg, {}).summary_path));
  RunOptions opts;
  opts.seeds = 4;
  opts.output_dir = dir / "four";
  opts.threads = 2;
  const json four = json::parse(read_file(cmd_run(cfg, opts).summary_path));
  CHECK(four["seeds"] == json::array({3, 4, 5, 6}));
  CHECK(four["samples"] == 4 * 3600);
  const double e1 = observable(one, "energy", "distinguishable")["stderr"];
  const double e4 = observable(four, "energy", "distinguishable")["stderr"];
  CHECK(e4 < 0.8 * e1);
  // The seed override is part of the recorded config.
  CHECK(four["config_hash"] != one["config_hash"]);
  CHECK(load_run_config(dir / "four").seeds == 4);
}

TEST_CASE("halted runs resume bit-identically") {
  TempDir dir("drv");
  const std::string meta = "[metadynamics]\nenabled = true\nheight = 0.5 kT\nwidth = 4 kT\n"
                           "bias_factor = 4\nstride = 200\nbuild_steps = 6000\n";
  const std::string text = toy_text("checkpoint_interval = 2500\n", meta);
  const auto cfg = config_in(dir, text, "straight");
  const auto straight = cmd_run(cfg, {});
  REQUIRE(straight.status == RunStatus::Complete);

  RunOptions halt;
  halt.output_dir = dir / "halted";
  halt.halt_at_step = 4000;  // inside the build phase
  CHECK(cmd_run(cfg, halt).status == RunStatus::Halted);
  halt.restart = dir / "halted";
  halt.halt_at_step = 13333;
  CHECK(cmd_run(cfg, halt).status == RunStatus::Halted);
  RunOptions resume;
  resume.restart = dir / "halted/seed_3/checkpoint.json";
  const auto resumed = cmd_run(cfg, resume);
  REQUIRE(resumed.status == RunStatus::Complete);

  for (const char* f : {"seed_3/samples.bin", "seed_3/snapshots.bin", "seed_3/hills.txt", "summary.json",
                        "pair_fermion.tsv"})
    CHECK(read_file(dir / (std::string("halted/") + f)) == read_file(dir / (std::string("straight/") + f)));

  // Restarting with another config is refused.
  RunConfig other = parse_config(toy_text("checkpoint_interval = 2000\n", meta));
  RunOptions wrong;
  wrong.restart = dir / "halted";
  CHECK_THROWS_AS(cmd_run(other, wrong), ConfigError);
  CHECK_THROWS_AS(load_restart_config(dir / "nowhere"), ConfigError);
  CHECK(load_restart_config(dir / "halted/seed_3").hash() == cfg.hash());
}

TEST_CASE("text sample format") {
  TempDir dir("drv");
  const auto cfg = config_in(dir, toy_text("", "format = text\n"), "txt");
  const auto r = cmd_run(cfg, {});
  CHECK(std::filesystem::exists(dir / "txt/seed_3/samples.tsv"));
  const auto binary = cmd_run(config_in(dir, toy_text(), "bin"), {});
  const json a = json::parse(read_file(r.summary_path));
  const json b = json::parse(read_file(binary.summary_path));
  // Text records carry 17 significant digits, so the estimates agree closely.
  CHECK(observable(a, "energy", "boson")["estimate"].get<double>() ==
        doctest::Approx(observable(b, "energy", "boson")["estimate"].get<double>()).epsilon(1e-12));
}

TEST_CASE("connected runs summarize the exchange variable") {
  TempDir dir("drv");
  const auto cfg = config_in(dir, toy_text("topology = connected\n"), "con");
  const json s = json::parse(read_file(cmd_run(cfg, {}).summary_path));
  CHECK(s["topology"] == "connected");
  CHECK(observable(s, "mean_s", "connected").contains("estimate"));
  CHECK_FALSE(std::filesystem::exists(dir / "con/seed_3/snapshots.bin"));
  CHECK_THROWS_AS(load_analysis(dir / "con", load_run_config(dir / "con")), ConfigError);
}

TEST_CASE("Bennett command on short toy legs") {
  TempDir dir("drv");
  std::string oo = toy_text("", "", 1);
  std::string con = toy_text("topology = connected\n", "", 1);
  for (std::string* t : {&oo, &con}) t->replace(t->find("steps = 20000"), 13, "steps = 200000");
  cmd_run(config_in(dir, oo, "oo"), {});
  cmd_run(config_in(dir, con, "con"), {});
  const auto r = cmd_bennett(dir / "oo", dir / "con", std::nullopt);
  CHECK(r.summary_path == dir / "oo/bennett/bennett.json");
  const json b = json::parse(read_file(r.summary_path));
  const double exact = harmonic_partition_discrete(2.0, 1.0, 1, 6).ratio;
  CHECK(std::abs(b["ratio"]["value"].get<double>() - exact) < 5 * b["ratio"]["stderr"].get<double>());
  CHECK(b.contains("energy_fermion_free_energy_route"));
  CHECK(read_table(dir / "oo/bennett/bennett_scan.tsv").size() == 11);

  CHECK_THROWS_AS(cmd_bennett(dir / "con", dir / "oo", std::nullopt), ConfigError);
  std::string hotter = oo;
  hotter.replace(hotter.find("beta = 2 1/hw"), 13, "beta = 1 1/hw");
  cmd_run(config_in(dir, hotter, "hot"), {});
  CHECK_THROWS_AS(cmd_bennett(dir / "hot", dir / "con", std::nullopt), ConfigError);
}

TEST_CASE("collapsed channels are reported, not estimated") {
  TempDir dir("drv");
  std::string cold = toy_text("", "", 1);
  cold.replace(cold.find("beta = 2 1/hw"), 13, "beta = 12 1/hw");
  const auto r = cmd_run(config_in(dir, cold, "cold"), {});
  REQUIRE(r.collapsed_channels == std::vector<std::string>{"fermion"});
  const json s = json::parse(read_file(r.summary_path));
  CHECK(s["channels"]["fermion"]["sign_collapse"] == true);
  CHECK_FALSE(s["channels"]["fermion"].contains("energy"));
  CHECK(s["channels"]["boson"]["sign_collapse"] == false);
  CHECK_FALSE(std::filesystem::exists(dir / "cold/pair_fermion.tsv"));
}

TEST_CASE("oracle outputs") {
  TempDir dir("drv");
  const auto toy = parse_config(toy_text("", "", 3));
  const auto r = cmd_oracle(toy, dir / "toy");
  const json j = json::parse(read_file(r.summary_path));
  CHECK(j["continuum"]["ratio"].get<double>() == doctest::Approx(std::pow(std::tanh(1.0), 3)));
  CHECK(j["discrete"]["beads"] == 6);
  const auto table = read_table(dir / "toy/pair_reference.tsv");
  REQUIRE(table.size() == 30);
  double integral = 0.0;
  for (const auto& row : table) integral += row[3] * 6.0 / 30.0;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));

  const auto free = parse_config("[system]\npotential = free\nbeta = 1 1/hw\n[sampler]\ntimestep = 0.1 1/w\n");
  CHECK_THROWS_AS(cmd_oracle(free, dir / "free"), ConfigError);
}
