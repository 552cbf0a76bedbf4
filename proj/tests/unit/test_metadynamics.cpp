#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "error.hpp"
#include "metadynamics.hpp"

using namespace qsym;

namespace {

MetadynamicsParams params(double beta = 2.0) {
  return MetadynamicsParams::in_thermal_units(beta, 0.5, 4.0, 4.0, 100);
}

}  // namespace

TEST_CASE("thermal-unit parameters") {
  const auto p = params(2.0);
  CHECK(p.initial_height == doctest::Approx(0.25));
  CHECK(p.width == doctest::Approx(2.0));
  CHECK(p.grid_spacing == doctest::Approx(0.2));
  CHECK(p.grid_min == doctest::Approx(-30.0));
  CHECK(p.grid_max == doctest::Approx(30.0));
}

TEST_CASE("well-tempered heights decay with the accumulated bias") {
  const double beta = 2.0;
  BiasState bias(params(beta));
  CHECK(bias.empty());
  CHECK(bias.next_height(0.3, beta) == doctest::Approx(0.25));
  bias.deposit(0.3, beta);
  const double v = bias.value(0.3);
  CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
  // w0 exp(-beta V / (gamma - 1))
  CHECK(bias.next_height(0.3, beta) == doctest::Approx(0.25 * std::exp(-beta * v / 3.0)));
  bias.deposit(0.3, beta);
  REQUIRE(bias.deposited_count() == 2);
  CHECK(bias.gaussians()[1].height < bias.gaussians()[0].height);

  // Repeated deposits at one point: V grows like (gamma - 1) kT ln(1 + n ...), heights fall.
  double previous = bias.gaussians()[1].height;
  for (int k = 0; k < 200; ++k) {
    bias.deposit(0.3, beta);
    const double h = bias.gaussians().back().height;
    CHECK(h < previous);
    previous = h;
  }
  // Continuum limit for a fixed centre: dV/dn = w0 exp(-beta V/(gamma-1)), so
  // V(n) = (gamma-1)/beta ln(1 + n w0 beta/(gamma-1)).
  const double n = static_cast<double>(bias.deposited_count());
  const double expect = 3.0 / beta * std::log(1.0 + n * 0.25 * beta / 3.0);
  CHECK(bias.exact_value(0.3) == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("grid interpolant tracks the exact Gaussian sum") {
  const double beta = 1.0;
  BiasState bias(params(beta));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> centre(0.0, 6.0);
  for (int k = 0; k < 150; ++k) bias.deposit(centre(rng), beta);
  std::uniform_real_distribution<double> u(-25.0, 25.0);
  double max_v = 0.0;
  for (int k = 0; k < 2000; ++k) max_v = std::max(max_v, bias.exact_value(u(rng)));
  for (int k = 0; k < 2000; ++k) {
    const double s = u(rng);
    CHECK(std::abs(bias.value(s) - bias.exact_value(s)) < 1e-5 * max_v);
    CHECK(std::abs(bias.derivative(s) - bias.exact_derivative(s)) < 1e-4 * max_v);
  }
}

TEST_CASE("interpolated derivative is the derivative of the interpolant") {
  BiasState bias(params(1.0));
  bias.add_gaussian(1.0, 0.7);
  bias.add_gaussian(-3.0, 0.2);
  const double h = 1e-6;
  for (double s : {-5.03, -1.11, 0.0, 0.77, 4.2}) {
    const double fd = (bias.value(s + h) - bias.value(s - h)) / (2 * h);
    CHECK(bias.derivative(s) == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
  }
}

TEST_CASE("bias is held constant outside the grid") {
  BiasState bias(params(1.0));
  bias.add_gaussian(59.0, 1.0);
  const double edge = bias.value(60.0);
  CHECK(bias.value(80.0) == edge);
  CHECK(bias.derivative(80.0) == 0.0);
  CHECK(bias.value(-80.0) == bias.value(-60.0));
}

TEST_CASE("hills round trip") {
  const double beta = 1.5;
  BiasState bias(params(beta));
  for (double s : {0.0, 1.3, -2.2, 7.5, 0.1}) bias.deposit(s, beta);
  std::stringstream buf;
  bias.write_hills(buf, {"note = test"});
  const BiasState back = BiasState::read_hills(buf);
  CHECK(back == bias);
  CHECK(back.params().bias_factor == bias.params().bias_factor);
  for (double s : {-3.0, 0.5, 4.0}) CHECK(back.value(s) == bias.value(s));
}

TEST_CASE("malformed hills files are rejected") {
  BiasState bias(params(1.0));
  bias.add_gaussian(0.0, 1.0);
  std::stringstream buf;
  bias.write_hills(buf);
  std::string text = buf.str();
  text += "5\t1.0\t0.5\t2.0\n";
  std::istringstream in(text);
  CHECK_THROWS_AS(BiasState::read_hills(in), IoError);
  std::istringstream junk("# width = 2\n0 x y\n");
  CHECK_THROWS(BiasState::read_hills(junk));
}

TEST_CASE("reweighting factor") {
  const double beta = 2.0;
  BiasState bias(params(beta));
  bias.deposit(0.0, beta);
  const auto f = reweight_factor(bias, 0.5, beta);
  CHECK(f.sign == 1);
  CHECK(f.log_weight == doctest::Approx(beta * bias.value(0.5)));
}

TEST_CASE("parameter validation") {
  auto p = params();
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.bias_factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = p;
  bad.width = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = p;
  bad.stride = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = p;
  bad.grid_max = bad.grid_min;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  BiasState bias(p);
  CHECK_THROWS_AS(bias.add_gaussian(NAN, 1.0), NumericalAbort);
  CHECK_THROWS_AS(bias.add_gaussian(0.0, -1.0), NumericalAbort);
  BiasState blank;
  CHECK_THROWS_AS(blank.add_gaussian(0.0, 1.0), InvalidArgument);
  CHECK(blank.value(1.0) == 0.0);
}
