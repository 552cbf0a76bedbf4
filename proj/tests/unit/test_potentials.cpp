#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "error.hpp"
#include "potentials.hpp"
#include "units.hpp"

using namespace qsym;

namespace {

void check_gradient(const PotentialSpec& pot, int dim, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<double, 3> r1{}, r2{}, g1{}, g2{};
    for (int d = 0; d < dim; ++d) {
      r1[d] = u(rng);
      r2[d] = u(rng);
    }
    std::span<double> s1(r1.data(), dim), s2(r2.data(), dim);
    gradient(pot, s1, s2, std::span<double>(g1.data(), dim), std::span<double>(g2.data(), dim));
    const double h = 1e-6 * scale;
    for (int p = 0; p < 2; ++p)
      for (int d = 0; d < dim; ++d) {
        auto& r = p == 0 ? r1 : r2;
        const double x = r[d];
        r[d] = x + h;
        const double up = evaluate(pot, s1, s2);
        r[d] = x - h;
        const double down = evaluate(pot, s1, s2);
        r[d] = x;
        const double fd = (up - down) / (2 * h);
        const double an = p == 0 ? g1[d] : g2[d];
        CHECK(an == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
      }
  }
}

DotParams reference_dot() { return DotParams::from_wigner(5.1, 1.38, 1.34, 0.07, 12.5); }

}  // namespace

TEST_CASE("harmonic potential values and gradients") {
  const PotentialSpec pot = IsotropicHarmonic{2.0, 0.5};
  const std::array<double, 2> a{1.0, 2.0}, b{-1.0, 0.0};
  // 1/2 m w^2 (|a|^2 + |b|^2) = 1/2 * 2 * 6
  CHECK(evaluate(pot, a, b) == doctest::Approx(6.0));
  std::mt19937_64 rng(1);
  for (int dim = 1; dim <= 3; ++dim) check_gradient(pot, dim, rng, 2.0);
}

TEST_CASE("free particles have no potential") {
  const std::array<double, 3> a{1.0, 2.0, 3.0}, b{0.0, 0.0, 0.0};
  CHECK(evaluate(FreeParticles{}, a, b) == 0.0);
}

TEST_CASE("dot gradient matches finite differences") {
  const DotParams dot = reference_dot();
  std::mt19937_64 rng(2);
  check_gradient(QuantumDot{dot}, 2, rng, 2.0 * dot.length0());
}

TEST_CASE("dot frequencies and lengths") {
  const auto [wx, wy] = solve_dot_frequencies(5.1, 1.38);
  CHECK(wy / wx == doctest::Approx(1.38));
  CHECK(std::sqrt(0.5 * (wx * wx + wy * wy)) * units::dot::hbar == doctest::Approx(5.1));
  CHECK(units::dot::hbar * wx == doctest::Approx(4.2321).epsilon(1e-4));
  CHECK(units::dot::hbar * wy == doctest::Approx(5.8403).epsilon(1e-4));

  const DotParams dot = reference_dot();
  CHECK(dot.length0() == doctest::Approx(14.6097).epsilon(1e-4));
  CHECK(dot.mass() == doctest::Approx(397.994).epsilon(1e-5));
  CHECK(dot.eta() == doctest::Approx(1.38));
  CHECK(dot.hbar_omega0() == doctest::Approx(5.1));
  CHECK(dot.softening == doctest::Approx(1e-3 * dot.length0()));
}

TEST_CASE("Wigner parameter and Coulomb scaling") {
  // gamma_C = 0.9 with GaAs-like constants gives R_W of about 1.39.
  const DotParams material = DotParams::from_material(5.1, 1.38, 0.07, 12.5, 0.9);
  CHECK(material.wigner_parameter() == doctest::Approx(1.391).epsilon(1e-3));

  const DotParams dot = reference_dot();
  CHECK(dot.wigner_parameter() == doctest::Approx(1.34));
  CHECK(dot.gamma_c == doctest::Approx(0.8667).epsilon(1e-4));
  // Hand value: R_W hbar w0 l0 at the same point.
  CHECK(dot.coulomb_strength() == doctest::Approx(1.34 * 5.1 * dot.length0()));
}

TEST_CASE("dot Coulomb term is softened at contact") {
  const DotParams dot = reference_dot();
  const std::array<double, 2> origin{0.0, 0.0};
  const double v = evaluate(QuantumDot{dot}, origin, origin);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(dot.coulomb_strength() / dot.softening));
}

TEST_CASE("invalid potential arguments") {
  const std::array<double, 2> a{0.0, 0.0};
  const std::array<double, 3> b{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(evaluate(IsotropicHarmonic{}, a, b), InvalidArgument);
  CHECK_THROWS_AS(evaluate(QuantumDot{reference_dot()}, b, b), InvalidArgument);
  CHECK_THROWS_AS(solve_dot_frequencies(-1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(DotParams::from_material(5.1, 1.0, 0.07, 12.5, 1.5), InvalidArgument);
  std::array<double, 1> small{};
  CHECK_THROWS_AS(gradient(IsotropicHarmonic{}, a, a, small, small), InvalidArgument);
}
