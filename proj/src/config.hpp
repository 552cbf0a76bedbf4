#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "estimators.hpp"
#include "metadynamics.hpp"
#include "model.hpp"
#include "sampler.hpp"

namespace qsym {

/// One `key = value [unit]` line of a config file.
struct ConfigEntry {
  std::string value;  // number or text, as written
  std::string unit;   // empty for dimensionless numbers and text
  int line = 0;

  friend bool operator==(const ConfigEntry& a, const ConfigEntry& b) {
    return a.value == b.value && a.unit == b.unit;
  }
};

/// Parsed but not yet interpreted config: section -> key -> entry.
struct ConfigDocument {
  std::string source = "<config>";
  std::map<std::string, std::map<std::string, ConfigEntry>> sections;

  friend bool operator==(const ConfigDocument& a, const ConfigDocument& b) {
    return a.sections == b.sections;
  }
};

enum class UnitSystem { Natural, Dot };
enum class SampleFormat { Binary, Text };

struct RunConfig {
  ConfigDocument document;
  UnitSystem units = UnitSystem::Natural;

  SystemSpec system;
  IntegratorSpec integrator;
  int seeds = 1;
  double burn_in_fraction = 0.1;
  std::int64_t checkpoint_interval = 0;  // 0: only at the end

  bool metadynamics = false;
  MetadynamicsParams meta;
  std::int64_t build_steps = 0;
  std::string bias_file;  // frozen hills to load instead of building

  EstimatorSpec estimators;
  bool energy = true;
  std::vector<SymmetryChannel> channels = {SymmetryChannel::Distinguishable, SymmetryChannel::Boson,
                                           SymmetryChannel::Fermion};

  std::string output_dir = "out";
  SampleFormat format = SampleFormat::Binary;
  int snapshot_stride = 5;  // in samples

  /// Canonical text, excluding the output directory.
  std::string canonical() const;
  /// FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Strict parsing: unknown sections/keys, missing units, and unit/quantity
/// mismatches throw ConfigError naming the file, line and key.
ConfigDocument parse_document(std::string_view text, std::string source = "<config>");
RunConfig interpret(const ConfigDocument& document);
RunConfig parse_config(std::string_view text, std::string source = "<config>");
RunConfig load_config(const std::string& path);

/// Canonical serialization: fixed section order, sorted keys, numbers as
/// written. parse(serialize(x)) reproduces the same document.
std::string serialize(const ConfigDocument& document, bool include_output_dir = true);

std::uint64_t fnv1a(std::string_view bytes);

const char* to_string(UnitSystem units);
const char* to_string(SampleFormat format);

}  // namespace qsym
