#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "model.hpp"
#include "potentials.hpp"

namespace qsym::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("qsym_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline SystemSpec toy_spec(int beads, int dim, double beta = 3.0) {
  SystemSpec s;
  s.mass = 1.0;
  s.beta = beta;
  s.num_beads = beads;
  s.dim = dim;
  s.potential = IsotropicHarmonic{1.0, 1.0};
  return s;
}

inline SystemSpec dot_spec(int beads = 15, double eta = 1.38) {
  SystemSpec s;
  const DotParams d = DotParams::from_wigner(5.1, eta, 1.34, 0.07, 12.5);
  s.mass = d.mass();
  s.hbar = units::dot::hbar;
  s.beta = 0.067 * beads;
  s.num_beads = beads;
  s.dim = 2;
  s.potential = QuantumDot{d};
  return s;
}

/// Positions drawn uniformly in [-scale, scale].
inline BeadConfiguration random_configuration(const SystemSpec& spec, std::mt19937_64& rng,
                                              double scale = 1.0) {
  BeadConfiguration c(spec, false);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& x : c.positions()) x = u(rng);
  return c;
}

}  // namespace qsym::testing
