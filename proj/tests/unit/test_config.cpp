#include <doctest.h>

#include <filesystem>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "helpers.hpp"
#include "units.hpp"

using namespace qsym;

namespace {

const std::string kToy = R"(# comment
[system]
potential = harmonic
dim = 3
beads = 10
beta = 3 1/hw

[sampler]
timestep = 0.05 1/w
friction = 1 w
steps = 1000

[output]
directory = out/x
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  text.replace(text.find(from), from.size(), to);
  return text;
}

}  // namespace

TEST_CASE("bundled configs parse") {
  const std::filesystem::path dir = std::filesystem::path(QSYM_SOURCE_DIR) / "configs";
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    INFO(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
    ++count;
  }
  CHECK(count >= 10);

  const RunConfig dot = load_config((dir / "dot_triplet.cfg").string());
  CHECK(dot.units == UnitSystem::Dot);
  CHECK(dot.system.num_beads == 15);
  CHECK(dot.system.beta == doctest::Approx(1.005));
  CHECK(dot.metadynamics);
  // 0.5 kT and 10 kT
  CHECK(dot.meta.initial_height == doctest::Approx(0.5 / 1.005));
  CHECK(dot.meta.width == doctest::Approx(10.0 / 1.005));
  CHECK(dot.meta.bias_factor == 6.0);
  CHECK(dot.estimators.density);
  CHECK(dot.estimators.density_grid.bins == 41);
  CHECK(dot.estimators.density_grid.half_width == doctest::Approx(3 * 14.6097).epsilon(1e-4));
  CHECK(dot.channels == std::vector<SymmetryChannel>{SymmetryChannel::Boson, SymmetryChannel::Fermion});
  const auto& d = std::get<QuantumDot>(dot.system.potential).dot;
  CHECK(d.wigner_parameter() == doctest::Approx(1.34));
}

TEST_CASE("defaults and units of a toy config") {
  const RunConfig c = parse_config(kToy);
  CHECK(c.units == UnitSystem::Natural);
  CHECK(c.system.beta == 3.0);
  CHECK(c.system.spring_constant() == doctest::Approx(10.0 / 18.0));
  CHECK(c.integrator.topology == Topology::Distinguishable);
  CHECK(c.integrator.n_steps == 1000);
  CHECK(c.seeds == 1);
  CHECK_FALSE(c.metadynamics);
  CHECK(c.energy);
  CHECK(c.estimators.pair.bins == 200);
  CHECK(c.estimators.pair.max == doctest::Approx(6.0 / std::sqrt(3.0)));
  CHECK(c.channels.size() == 3);
  CHECK(c.output_dir == "out/x");
  CHECK(c.format == SampleFormat::Binary);
}

TEST_CASE("temperature units") {
  const auto t = parse_config(replace(kToy, "beta = 3 1/hw", "temperature = 0.5 hw"));
  CHECK(t.system.beta == doctest::Approx(2.0));
  const std::string dot = R"([system]
potential = dot
temperature = 11.6 K
[sampler]
timestep = 1 fs
)";
  const auto d = parse_config(dot);
  CHECK(d.system.beta == doctest::Approx(1.0 / (units::dot::boltzmann * 11.6)));
  CHECK(d.system.dim == 2);
  CHECK(d.integrator.timestep == 1.0);
  CHECK(std::get<QuantumDot>(d.system.potential).dot.gamma_c == doctest::Approx(0.9));
}

TEST_CASE("canonical round trip and hashing") {
  const RunConfig c = parse_config(kToy);
  const std::string text = serialize(c.document);
  const RunConfig back = parse_config(text);
  CHECK(back.document == c.document);
  CHECK(serialize(back.document) == text);
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);

  // The output directory does not change the hash; physics does.
  CHECK(parse_config(replace(kToy, "out/x", "elsewhere")).hash() == c.hash());
  CHECK(parse_config(replace(kToy, "steps = 1000", "steps = 1001")).hash() != c.hash());
  // Key order and comments do not matter.
  const std::string shuffled = replace(replace(kToy, "dim = 3\nbeads = 10", "beads = 10\ndim = 3"),
                                       "# comment", "# other");
  CHECK(parse_config(shuffled).hash() == c.hash());

  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("diagnostics name the file, line and key") {
  SUBCASE("unknown key") {
    const auto msg = error_of(replace(kToy, "beads = 10", "bead = 10"));
    CHECK(msg.find("test.cfg:5") != std::string::npos);
    CHECK(msg.find("bead") != std::string::npos);
  }
  SUBCASE("unknown section") {
    CHECK(error_of(kToy + "[extras]\n").find("unknown section") != std::string::npos);
  }
  SUBCASE("missing unit") {
    const auto msg = error_of(replace(kToy, "beta = 3 1/hw", "beta = 3"));
    CHECK(msg.find("test.cfg:6") != std::string::npos);
    CHECK(msg.find("unit is required") != std::string::npos);
  }
  SUBCASE("unit of the wrong quantity") {
    const auto msg = error_of(replace(kToy, "timestep = 0.05 1/w", "timestep = 0.05 hw"));
    CHECK(msg.find("timestep") != std::string::npos);
    CHECK(msg.find("test.cfg:9") != std::string::npos);
  }
  SUBCASE("dot units in a toy config") {
    CHECK_FALSE(error_of(replace(kToy, "timestep = 0.05 1/w", "timestep = 1 fs")).empty());
  }
  SUBCASE("not a number") {
    CHECK(error_of(replace(kToy, "steps = 1000", "steps = many")).find("steps") != std::string::npos);
  }
  SUBCASE("duplicate key") {
    CHECK(error_of(replace(kToy, "steps = 1000", "steps = 1000\nsteps = 5")).find("twice") !=
          std::string::npos);
  }
  SUBCASE("two temperatures") {
    CHECK_FALSE(error_of(replace(kToy, "beta = 3 1/hw", "beta = 3 1/hw\ntemperature = 1 hw")).empty());
  }
  SUBCASE("metadynamics on the connected topology") {
    const std::string text = replace(kToy, "steps = 1000", "steps = 1000\ntopology = connected") +
                             "[metadynamics]\nenabled = true\n";
    CHECK(error_of(text).find("distinguishable") != std::string::npos);
  }
  SUBCASE("metadynamics keys without enabling it") {
    CHECK_FALSE(error_of(kToy + "[metadynamics]\nheight = 1 kT\n").empty());
  }
  SUBCASE("unknown channel and observable") {
    CHECK_FALSE(error_of(kToy + "[estimators]\nchannels = anyon\n").empty());
    CHECK_FALSE(error_of(kToy + "[estimators]\nobservables = entropy\n").empty());
  }
  SUBCASE("density needs two dimensions") {
    CHECK_FALSE(error_of(replace(kToy, "dim = 3", "dim = 1") + "[estimators]\nobservables = density\n").empty());
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), ConfigError);
  }
}

TEST_CASE("channel aliases and deduplication") {
  const auto c = parse_config(kToy + "[estimators]\nchannels = singlet, boson, triplet\n");
  CHECK(c.channels == std::vector<SymmetryChannel>{SymmetryChannel::Boson, SymmetryChannel::Fermion});
}

TEST_CASE("walls and metadynamics in thermal units") {
  const std::string text = replace(kToy, "steps = 1000",
                                   "steps = 1000\nwall_min = -5 kT\nwall_max = 20 kT\nwall_k = 2 1/kT") +
                           "[metadynamics]\nenabled = true\nheight = 0.5 kT\nwidth = 4 kT\n"
                           "bias_factor = 4\nstride = 100\nbuild_steps = 500\n";
  const auto c = parse_config(text);
  CHECK(c.integrator.walls.s_min == doctest::Approx(-5.0 / 3.0));
  CHECK(c.integrator.walls.s_max == doctest::Approx(20.0 / 3.0));
  CHECK(c.integrator.walls.k == doctest::Approx(6.0));
  CHECK(c.meta.initial_height == doctest::Approx(0.5 / 3.0));
  CHECK(c.meta.grid_spacing == doctest::Approx(4.0 / 30.0));
  CHECK(c.build_steps == 500);
}
