#include "metadynamics.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "error.hpp"

namespace qsym {

void MetadynamicsParams::validate() const {
  if (!(initial_height > 0.0)) throw InvalidArgument("metadynamics: initial height must be > 0");
  if (!(width > 0.0)) throw InvalidArgument("metadynamics: width must be > 0");
  if (!(bias_factor > 1.0)) throw InvalidArgument("metadynamics: bias factor must be > 1");
  if (stride < 1) throw InvalidArgument("metadynamics: deposition stride must be >= 1");
  if (!(grid_max > grid_min)) throw InvalidArgument("metadynamics: empty grid range");
  if (!(grid_spacing > 0.0) || grid_spacing > grid_max - grid_min)
    throw InvalidArgument("metadynamics: invalid grid spacing");
  if ((grid_max - grid_min) / grid_spacing > 1e7)
    throw InvalidArgument("metadynamics: grid has more than 1e7 nodes");
}

MetadynamicsParams MetadynamicsParams::in_thermal_units(double beta, double height_kt,
                                                        double width_kt, double bias_factor,
                                                        std::int64_t stride, double grid_min_kt,
                                                        double grid_max_kt) {
  const double kt = 1.0 / beta;
  MetadynamicsParams p;
  p.initial_height = height_kt * kt;
  p.width = width_kt * kt;
  p.bias_factor = bias_factor;
  p.stride = stride;
  p.grid_min = grid_min_kt * kt;
  p.grid_max = grid_max_kt * kt;
  p.grid_spacing = p.width / 10.0;
  p.validate();
  return p;
}

BiasState::BiasState(MetadynamicsParams params) : params_(params) {
  params_.validate();
  const auto cells = static_cast<std::size_t>(
      std::ceil((params_.grid_max - params_.grid_min) / params_.grid_spacing - 1e-9));
  spacing_ = (params_.grid_max - params_.grid_min) / static_cast<double>(cells);
  grid_value_.assign(cells + 1, 0.0);
  grid_derivative_.assign(cells + 1, 0.0);
}

double BiasState::value(double s) const {
  if (grid_value_.empty()) return 0.0;
  const std::size_t last = grid_value_.size() - 1;
  if (!(s > params_.grid_min)) return grid_value_.front();
  if (!(s < params_.grid_max)) return grid_value_[last];
  const double x = (s - params_.grid_min) / spacing_;
  const std::size_t k = std::min(static_cast<std::size_t>(x), last - 1);
  const double t = x - static_cast<double>(k);
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * grid_value_[k] +
         (t3 - 2 * t2 + t) * spacing_ * grid_derivative_[k] +
         (-2 * t3 + 3 * t2) * grid_value_[k + 1] + (t3 - t2) * spacing_ * grid_derivative_[k + 1];
}

double BiasState::derivative(double s) const {
  if (grid_value_.empty()) return 0.0;
  if (!(s > params_.grid_min) || !(s < params_.grid_max)) return 0.0;
  const std::size_t last = grid_value_.size() - 1;
  const double x = (s - params_.grid_min) / spacing_;
  const std::size_t k = std::min(static_cast<std::size_t>(x), last - 1);
  const double t = x - static_cast<double>(k);
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * grid_value_[k] + (-6 * t2 + 6 * t) * grid_value_[k + 1]) / spacing_ +
         (3 * t2 - 4 * t + 1) * grid_derivative_[k] + (3 * t2 - 2 * t) * grid_derivative_[k + 1];
}

double BiasState::exact_value(double s) const {
  const double inv2s2 = 1.0 / (2.0 * params_.width * params_.width);
  double sum = 0.0;
  for (const auto& g : gaussians_) {
    const double d = s - g.center;
    sum += g.height * std::exp(-d * d * inv2s2);
  }
  return sum;
}

double BiasState::exact_derivative(double s) const {
  const double inv_s2 = 1.0 / (params_.width * params_.width);
  double sum = 0.0;
  for (const auto& g : gaussians_) {
    const double d = s - g.center;
    sum -= g.height * d * inv_s2 * std::exp(-0.5 * d * d * inv_s2);
  }
  return sum;
}

double BiasState::next_height(double s, double beta) const {
  return params_.initial_height * std::exp(-beta * value(s) / (params_.bias_factor - 1.0));
}

void BiasState::deposit(double s, double beta) { add_gaussian(s, next_height(s, beta)); }

void BiasState::add_gaussian(double center, double height) {
  if (grid_value_.empty()) throw InvalidArgument("bias: not initialized with parameters");
  if (!std::isfinite(center) || !(height > 0.0) || !std::isfinite(height))
    throw NumericalAbort(fmt::format("bias: invalid Gaussian (center {}, height {})", center, height));
  gaussians_.push_back({center, height});
  const double inv_s2 = 1.0 / (params_.width * params_.width);
  for (std::size_t k = 0; k < grid_value_.size(); ++k) {
    const double d = params_.grid_min + static_cast<double>(k) * spacing_ - center;
    const double g = height * std::exp(-0.5 * d * d * inv_s2);
    grid_value_[k] += g;
    grid_derivative_[k] -= g * d * inv_s2;
  }
}

void BiasState::write_hills(std::ostream& out, const std::vector<std::string>& header_lines) const {
  for (const auto& line : header_lines) out << "# " << line << '\n';
  out << fmt::format("# initial_height = {:.17g}\n", params_.initial_height);
  out << fmt::format("# width = {:.17g}\n", params_.width);
  out << fmt::format("# bias_factor = {:.17g}\n", params_.bias_factor);
  out << fmt::format("# stride = {}\n", params_.stride);
  out << fmt::format("# grid_min = {:.17g}\n", params_.grid_min);
  out << fmt::format("# grid_max = {:.17g}\n", params_.grid_max);
  out << fmt::format("# grid_spacing = {:.17g}\n", params_.grid_spacing);
  out << "# index\tcenter\theight\twidth\n";
  for (std::size_t k = 0; k < gaussians_.size(); ++k)
    out << fmt::format("{}\t{:.17g}\t{:.17g}\t{:.17g}\n", k, gaussians_[k].center,
                       gaussians_[k].height, params_.width);
}

BiasState BiasState::read_hills(std::istream& in) {
  MetadynamicsParams p;
  std::vector<Gaussian> hills;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key, eq;
      double value = 0.0;
      if (!(ss >> key >> eq >> value) || eq != "=") continue;
      if (key == "initial_height") p.initial_height = value;
      else if (key == "width") p.width = value;
      else if (key == "bias_factor") p.bias_factor = value;
      else if (key == "stride") p.stride = static_cast<std::int64_t>(value);
      else if (key == "grid_min") p.grid_min = value;
      else if (key == "grid_max") p.grid_max = value;
      else if (key == "grid_spacing") p.grid_spacing = value;
      continue;
    }
    std::istringstream ss(line);
    std::size_t index = 0;
    Gaussian g;
    double width = 0.0;
    if (!(ss >> index >> g.center >> g.height >> width))
      throw IoError(fmt::format("hills file line {}: expected 'index center height width'", lineno));
    if (index != hills.size())
      throw IoError(fmt::format("hills file line {}: index {} out of sequence", lineno, index));
    if (p.width > 0.0 && width != p.width)
      throw IoError(fmt::format("hills file line {}: width differs from header", lineno));
    hills.push_back(g);
  }
  BiasState bias(p);
  for (const auto& g : hills) bias.add_gaussian(g.center, g.height);
  return bias;
}

ReweightFactor reweight_factor(const BiasState& bias, double s, double beta) {
  return {1, beta * bias.value(s)};
}

}  // namespace qsym
