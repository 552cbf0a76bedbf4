#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "helpers.hpp"

using namespace qsym;
using qsym::testing::toy_spec;

namespace {

struct Synthetic {
  std::vector<TrajectorySample> samples;
};

// Samples with s spread over both signs, random energies and a random bias.
Synthetic make_samples(int n, double beta, std::uint64_t seed, bool biased) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Synthetic out;
  for (int k = 0; k < n; ++k) {
    TrajectorySample t;
    t.step = k;
    t.s = 0.8 + 0.6 * g(rng);
    t.bias_value = biased ? 0.3 * std::abs(g(rng)) : 0.0;
    t.potential_energy = 2.0 + 0.5 * g(rng);
    t.virial_oo = 0.4 * g(rng);
    t.virial_connected = 0.1 + 0.4 * g(rng);
    t.pair_distance = 1.0 + 0.2 * g(rng);
    out.samples.push_back(t);
  }
  (void)beta;
  return out;
}

// Direct evaluation of <O W_I w> / <W_I w>.
double direct_average(const Synthetic& d, double beta, int dim, double c, int which) {
  double num = 0.0, den = 0.0;
  for (const auto& t : d.samples) {
    const double w = std::exp(beta * (t.bias_value + t.wall_value));
    const double x = w * std::exp(-beta * t.s);
    double a = 1.0, b = 1.0;
    if (which == 1) {
      a = t.potential_energy + dim / beta + t.virial_oo;
      b = t.potential_energy + dim / (2 * beta) + t.virial_connected;
    } else if (which == 2) {
      a = b = t.pair_distance;
    }
    num += w * a + c * x * b;
    den += w + c * x;
  }
  return num / den;
}

EstimatorSpec scalar_only() {
  EstimatorSpec e;
  e.pair_distribution = false;
  return e;
}

}  // namespace

TEST_CASE("channel averages match direct sums") {
  const SystemSpec spec = toy_spec(4, 3, 2.0);
  for (bool biased : {false, true}) {
    const auto d = make_samples(5000, spec.beta, biased ? 2 : 1, biased);
    Analysis a(spec, scalar_only());
    for (const auto& t : d.samples) a.add(t);
    CHECK(a.sample_count() == 5000);
    CHECK(a.energy(SymmetryChannel::Distinguishable).value ==
          doctest::Approx(direct_average(d, spec.beta, 3, 0.0, 1)).epsilon(1e-12));
    CHECK(a.energy(SymmetryChannel::Boson).value ==
          doctest::Approx(direct_average(d, spec.beta, 3, 1.0, 1)).epsilon(1e-12));
    CHECK(a.energy(SymmetryChannel::Fermion).value ==
          doctest::Approx(direct_average(d, spec.beta, 3, -1.0, 1)).epsilon(1e-12));
    CHECK(a.weighted_average(Observable::PairDistance, SymmetryChannel::Fermion).value ==
          doctest::Approx(direct_average(d, spec.beta, 3, -1.0, 2)).epsilon(1e-12));

    double w = 0.0, x = 0.0;
    for (const auto& t : d.samples) {
      const double wt = std::exp(spec.beta * t.bias_value);
      w += wt;
      x += wt * std::exp(-spec.beta * t.s);
    }
    CHECK(a.exchange_ratio().value == doctest::Approx(x / w).epsilon(1e-12));
    CHECK(a.mean_weight(SymmetryChannel::Fermion).value == doctest::Approx(1 - x / w).epsilon(1e-12));
    CHECK(a.mean_weight(SymmetryChannel::Boson).value == doctest::Approx(1 + x / w).epsilon(1e-12));
    if (!biased) CHECK(a.effective_sample_size() == doctest::Approx(5000.0));
    else CHECK(a.effective_sample_size() < 5000.0);

    const double eb = direct_average(d, spec.beta, 3, 1.0, 1);
    const double r = x / w;
    CHECK(a.fermion_energy_via_free_energy().value ==
          doctest::Approx(eb - std::log((1 - r) / (1 + r)) / spec.beta).epsilon(1e-12));
  }
}

TEST_CASE("huge reweighting factors do not overflow") {
  const SystemSpec spec = toy_spec(4, 1, 1.0);
  Analysis a(spec, scalar_only());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 1000; ++k) {
    TrajectorySample t;
    t.s = 1.0 + 0.1 * g(rng);
    t.bias_value = 800.0 + 5.0 * g(rng);
    t.potential_energy = 1.0;
    a.add(t);
  }
  const auto e = a.energy(SymmetryChannel::Boson);
  CHECK(std::isfinite(e.value));
  // E_oo = E_O + 1/(2 beta) for constant V and zero virials.
  CHECK(e.value > 1.5);
  CHECK(e.value < 2.0);
}

TEST_CASE("sign collapse is reported for a cancelling channel") {
  const SystemSpec spec = toy_spec(4, 3, 1.0);
  Analysis a(spec, scalar_only());
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int k = 0; k < 4000; ++k) {
    TrajectorySample t;
    t.s = 1e-3 * g(rng);
    t.potential_energy = 1.0;
    a.add(t);
  }
  CHECK(a.sign_collapsed(SymmetryChannel::Fermion));
  CHECK_FALSE(a.sign_collapsed(SymmetryChannel::Boson));
  CHECK_THROWS_AS(a.energy(SymmetryChannel::Fermion), SignCollapse);
  CHECK_NOTHROW(a.energy(SymmetryChannel::Boson));
  try {
    a.check_sign(SymmetryChannel::Fermion);
  } catch (const SignCollapse& e) {
    CHECK(std::abs(e.mean_weight) < 2 * e.stderr_weight);
  }
}

TEST_CASE("merging analyses equals one pass") {
  const SystemSpec spec = toy_spec(4, 3, 2.0);
  const auto d = make_samples(3000, spec.beta, 5, true);
  Analysis whole(spec, scalar_only()), first(spec, scalar_only()), second(spec, scalar_only());
  for (std::size_t k = 0; k < d.samples.size(); ++k) {
    whole.add(d.samples[k]);
    (k < 1200 ? first : second).add(d.samples[k]);
  }
  first.merge(second);
  CHECK(first.sample_count() == whole.sample_count());
  CHECK(first.energy(SymmetryChannel::Boson).value ==
        doctest::Approx(whole.energy(SymmetryChannel::Boson).value).epsilon(1e-12));
  CHECK(first.effective_sample_size() == doctest::Approx(whole.effective_sample_size()));

  EstimatorSpec other = scalar_only();
  other.min_blocks = 16;
  Analysis mismatched(spec, other);
  CHECK_THROWS_AS(first.merge(mismatched), InvalidArgument);
}

TEST_CASE("pair histogram normalization and placement") {
  const SystemSpec spec = toy_spec(3, 1, 1.0);
  EstimatorSpec e;
  e.pair.bins = 10;
  e.pair.max = 5.0;
  Analysis a(spec, e);
  BeadConfiguration c(spec, false);
  // Distances 0.25, 1.25 and 7 (overflow).
  c.position(1, 0)[0] = 0.25;
  c.position(1, 1)[0] = 1.25;
  c.position(1, 2)[0] = 7.0;
  TrajectorySample t;
  t.s = 50.0;  // e^{-beta s} negligible: all channels agree
  for (int k = 0; k < 100; ++k) a.add(t, &c);
  CHECK(a.snapshot_count() == 100);
  const auto h = a.pair_distribution(SymmetryChannel::Boson);
  REQUIRE(h.values.size() == 10);
  CHECK(h.bin_width == doctest::Approx(0.5));
  CHECK(h.values[0] == doctest::Approx(1.0 / 3.0 / 0.5));
  CHECK(h.values[2] == doctest::Approx(1.0 / 3.0 / 0.5));
  CHECK(h.values[1] == 0.0);
  CHECK(h.overflow == doctest::Approx(1.0 / 3.0));
  double integral = h.overflow;
  for (double v : h.values) integral += v * h.bin_width;
  CHECK(integral == doctest::Approx(1.0));
  CHECK(h.effective_samples[0] == doctest::Approx(100.0));
}

TEST_CASE("density integrates to two particles") {
  const SystemSpec spec = toy_spec(4, 2, 1.0);
  EstimatorSpec e;
  e.pair_distribution = false;
  e.density = true;
  e.density_grid.bins = 8;
  e.density_grid.half_width = 2.0;
  Analysis a(spec, e);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.4);
  for (int k = 0; k < 500; ++k) {
    BeadConfiguration c(spec, false);
    for (double& x : c.positions()) x = g(rng);
    TrajectorySample t;
    const double dx = c.position(0, 0)[0] - c.position(1, 0)[0];
    t.s = 2.0 + dx * dx;
    a.add(t, &c);
  }
  for (auto ch : {SymmetryChannel::Distinguishable, SymmetryChannel::Boson, SymmetryChannel::Fermion}) {
    const auto rho = a.density(ch);
    double total = 0.0;
    for (double v : rho.values) total += v * rho.cell * rho.cell;
    CHECK(total == doctest::Approx(2.0).epsilon(1e-3));
  }
  const auto combo = a.density_combination(1.0, -0.5);
  const auto rf = a.density(SymmetryChannel::Fermion);
  const auto rb = a.density(SymmetryChannel::Boson);
  for (std::size_t k = 0; k < combo.values.size(); ++k)
    CHECK(combo.values[k] == doctest::Approx(rf.values[k] - 0.5 * rb.values[k]).epsilon(1e-10));

  const double area = combo.cell * combo.cell;
  std::vector<std::size_t> column;
  double column_sum = 0.0;
  for (std::size_t iy = 0; iy < 8; ++iy) {
    column.push_back(3 * 8 + iy);
    column_sum += combo.value(3, iy) * area;
  }
  const Estimate col = a.density_integral(1.0, -0.5, column);
  CHECK(col.value == doctest::Approx(column_sum).epsilon(1e-10));
  CHECK(col.error > 0.0);
  const std::size_t one[] = {27};
  const Estimate cell = a.density_integral(1.0, -0.5, one);
  CHECK(cell.value == doctest::Approx(combo.values[27] * area).epsilon(1e-10));
  CHECK(cell.error == doctest::Approx(combo.errors[27] * area).epsilon(1e-10));
  std::vector<std::size_t> all(64);
  for (std::size_t k = 0; k < 64; ++k) all[k] = k;
  CHECK(a.density_integral(0.0, 1.0, all).value == doctest::Approx(2.0).epsilon(1e-3));
  const std::size_t outside[] = {64};
  CHECK_THROWS_AS(a.density_integral(1.0, 0.0, outside), InvalidArgument);
}

TEST_CASE("histogram read-outs need snapshots") {
  const SystemSpec spec = toy_spec(4, 2, 1.0);
  EstimatorSpec e;
  e.density = true;
  Analysis a(spec, e);
  TrajectorySample t;
  t.s = 1.0;
  a.add(t);
  CHECK_THROWS_AS(a.pair_distribution(SymmetryChannel::Boson), InvalidArgument);
  CHECK_THROWS_AS(a.density(SymmetryChannel::Boson), InvalidArgument);
  Analysis scalars(spec, scalar_only());
  CHECK_THROWS_AS(scalars.pair_distribution(SymmetryChannel::Boson), InvalidArgument);
  EstimatorSpec bad;
  bad.density = true;
  CHECK_THROWS_AS(Analysis(toy_spec(4, 1), bad), InvalidArgument);
}

TEST_CASE("Bennett ratio for Gaussian legs") {
  // s ~ N(mu, sigma^2) in the distinguishable ensemble implies
  // s ~ N(mu - beta sigma^2, sigma^2) in the connected one, and
  // Z_O/Z_oo = <e^{-beta s}>_oo = exp(-beta mu + beta^2 sigma^2 / 2).
  const double beta = 1.0, mu = 1.5, sigma = 1.0;
  const double exact = std::exp(-beta * mu + 0.5 * beta * beta * sigma * sigma);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> a(mu, sigma), b(mu - beta * sigma * sigma, sigma);
  BennettLeg oo, con;
  for (int k = 0; k < 100000; ++k) oo.add(a(rng));
  for (int k = 0; k < 50000; ++k) con.add(b(rng));
  const auto r = bennett_ratio(oo, con, beta);
  CHECK(std::abs(r.ratio - exact) < 4 * r.error);
  CHECK(r.error < 0.01 * exact);
  CHECK(r.scan.size() == 11);
  double drift = 0.0;
  for (const auto& pt : r.scan) drift = std::max(drift, std::abs(pt.ratio - r.ratio));
  CHECK(r.plateau == (drift < r.error));
  // Finite-sample drift across C* +/- 1 stays near one standard error.
  CHECK(drift < 2 * r.error);
  CHECK(r.scan.front().shift == doctest::Approx(r.shift - 1.0));
  CHECK(r.scan.back().shift == doctest::Approx(r.shift + 1.0));
  // count balance at C*
  CHECK(oo.effective_size() * r.mean_fermi_distinguishable ==
        doctest::Approx(con.effective_size() * r.mean_fermi_connected).epsilon(1e-6));
  // The estimator is exact in the shift for any C; check one far point.
  const auto far = bennett_at(oo, con, beta, r.shift + 3.0);
  CHECK(std::abs(far.ratio - exact) < 5 * far.error);
}

TEST_CASE("Bennett with reweighted legs") {
  // The oo leg sampled from N(mu + 1, sigma^2) and reweighted back to N(mu, sigma^2).
  const double beta = 1.0, mu = 1.5, sigma = 1.0;
  const double exact = std::exp(-beta * mu + 0.5 * beta * beta * sigma * sigma);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> shifted(mu + 0.5, sigma), b(mu - beta * sigma * sigma, sigma);
  BennettLeg oo, con;
  for (int k = 0; k < 100000; ++k) {
    const double s = shifted(rng);
    // log p(s) - log q(s)
    const double lw = (-(s - mu) * (s - mu) + (s - mu - 0.5) * (s - mu - 0.5)) / (2 * sigma * sigma);
    oo.add(s, lw);
  }
  for (int k = 0; k < 50000; ++k) con.add(b(rng));
  CHECK(oo.effective_size() < 100000.0);
  const auto r = bennett_ratio(oo, con, beta);
  CHECK(std::abs(r.ratio - exact) < 4 * r.error);
}

TEST_CASE("Bennett detects missing overlap") {
  BennettLeg oo, con;
  for (int k = 0; k < 100; ++k) {
    oo.add(1000.0 + k);
    con.add(-1000.0 - k);
  }
  CHECK_THROWS_AS(bennett_ratio(oo, con, 1.0), NoOverlap);
  BennettLeg tiny;
  tiny.add(1.0);
  CHECK_THROWS_AS(bennett_ratio(tiny, con, 1.0), InvalidArgument);
}

TEST_CASE("free-energy route to the fermion energy") {
  // 1D harmonic well at beta hbar omega = 3: the route is exact.
  CHECK(fermion_energy_via_free_energy(1.057366, 0.905148, 3.0) == doctest::Approx(2.057366).epsilon(1e-5));
  // 3D: the route combines E_B and r of the same ensemble; it does not equal E_F.
  CHECK(fermion_energy_via_free_energy(3.186859, 0.741582, 3.0) == doctest::Approx(3.8228).epsilon(1e-4));
  CHECK_THROWS_AS(fermion_energy_via_free_energy(1.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(fermion_energy_via_free_energy(1.0, -1.5, 1.0), InvalidArgument);

  const Estimate e = fermion_energy_via_free_energy(Estimate{1.0, 0.01}, Estimate{0.5, 0.02}, 2.0);
  CHECK(e.value == doctest::Approx(1.0 + std::log(3.0) / 2.0));
  // dE/dr = 2 / ((1 - r^2) beta)
  CHECK(e.error == doctest::Approx(std::hypot(0.01, 2.0 / (0.75 * 2.0) * 0.02)));
}

TEST_CASE("characteristic lengths and default binning") {
  const SystemSpec toy = toy_spec(10, 3, 3.0);
  CHECK(characteristic_length(toy) == doctest::Approx(1.0 / std::sqrt(3.0)));
  const auto e = EstimatorSpec::defaults_for(toy);
  CHECK(e.pair.max == doctest::Approx(6.0 / std::sqrt(3.0)));
  CHECK(e.density);
  CHECK_FALSE(EstimatorSpec::defaults_for(toy_spec(10, 1)).density);
  const SystemSpec dot = qsym::testing::dot_spec();
  CHECK(characteristic_length(dot) == doctest::Approx(14.6097).epsilon(1e-4));
}
