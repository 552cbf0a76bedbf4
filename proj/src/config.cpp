#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "error.hpp"
#include "units.hpp"

namespace qsym {

namespace {

enum class Kind { Text, Count, Number, Flag, Energy, InverseEnergy, Time, InverseTime, Length, Mass };

struct KeySpec {
  const char* section;
  const char* key;
  Kind kind;
};

constexpr const char* kSectionOrder[] = {"system", "sampler", "metadynamics", "estimators",
                                         "output"};

constexpr KeySpec kSchema[] = {
    {"system", "potential", Kind::Text},
    {"system", "dim", Kind::Count},
    {"system", "beads", Kind::Count},
    {"system", "temperature", Kind::Energy},
    {"system", "beta", Kind::InverseEnergy},
    {"system", "beta_per_bead", Kind::InverseEnergy},
    {"system", "mass", Kind::Mass},
    {"system", "omega", Kind::InverseTime},
    {"system", "hbar_omega0", Kind::Energy},
    {"system", "eta", Kind::Number},
    {"system", "m_star", Kind::Mass},
    {"system", "epsilon_r", Kind::Number},
    {"system", "gamma_c", Kind::Number},
    {"system", "wigner", Kind::Number},
    {"system", "softening", Kind::Length},

    {"sampler", "topology", Kind::Text},
    {"sampler", "timestep", Kind::Time},
    {"sampler", "friction", Kind::InverseTime},
    {"sampler", "steps", Kind::Count},
    {"sampler", "sample_stride", Kind::Count},
    {"sampler", "seed", Kind::Count},
    {"sampler", "seeds", Kind::Count},
    {"sampler", "burn_in_fraction", Kind::Number},
    {"sampler", "checkpoint_interval", Kind::Count},
    {"sampler", "wall_min", Kind::Energy},
    {"sampler", "wall_max", Kind::Energy},
    {"sampler", "wall_k", Kind::InverseEnergy},

    {"metadynamics", "enabled", Kind::Flag},
    {"metadynamics", "height", Kind::Energy},
    {"metadynamics", "width", Kind::Energy},
    {"metadynamics", "bias_factor", Kind::Number},
    {"metadynamics", "stride", Kind::Count},
    {"metadynamics", "build_steps", Kind::Count},
    {"metadynamics", "grid_min", Kind::Energy},
    {"metadynamics", "grid_max", Kind::Energy},
    {"metadynamics", "grid_spacing", Kind::Energy},
    {"metadynamics", "bias_file", Kind::Text},

    {"estimators", "observables", Kind::Text},
    {"estimators", "channels", Kind::Text},
    {"estimators", "pair_bins", Kind::Count},
    {"estimators", "pair_max", Kind::Length},
    {"estimators", "density_bins", Kind::Count},
    {"estimators", "density_half_width", Kind::Length},
    {"estimators", "block_capacity", Kind::Count},
    {"estimators", "histogram_block_capacity", Kind::Count},
    {"estimators", "min_blocks", Kind::Count},

    {"output", "directory", Kind::Text},
    {"output", "format", Kind::Text},
    {"output", "snapshot_stride", Kind::Count},
};

const KeySpec* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : kSchema)
    if (section == k.section && key == k.key) return &k;
  return nullptr;
}

bool is_number_kind(Kind k) { return k != Kind::Text && k != Kind::Flag; }
bool needs_unit(Kind k) { return is_number_kind(k) && k != Kind::Count && k != Kind::Number; }

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void fail(const ConfigDocument& doc, int line, const std::string& msg) {
  if (line > 0) throw ConfigError(fmt::format("{}:{}: {}", doc.source, line, msg));
  throw ConfigError(fmt::format("{}: {}", doc.source, msg));
}

class Reader {
 public:
  explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

  const ConfigEntry* find(const char* section, const char* key) const {
    const auto s = doc_.sections.find(section);
    if (s == doc_.sections.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
  bool has(const char* section, const char* key) const { return find(section, key) != nullptr; }

  std::string text(const char* section, const char* key, std::string fallback) const {
    const auto* e = find(section, key);
    return e ? e->value : fallback;
  }

  double number(const char* section, const char* key, double fallback) const {
    const auto* e = find(section, key);
    return e ? *parse_number(e->value) : fallback;
  }

  std::int64_t count(const char* section, const char* key, std::int64_t fallback) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    const double v = *parse_number(e->value);
    if (v < 0.0 || v != std::floor(v) || v > 9.0e18)
      fail(doc_, e->line, fmt::format("[{}] {} must be a non-negative integer", section, key));
    return static_cast<std::int64_t>(v);
  }

  bool flag(const char* section, const char* key, bool fallback) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "yes" || e->value == "on") return true;
    if (e->value == "false" || e->value == "no" || e->value == "off") return false;
    fail(doc_, e->line, fmt::format("[{}] {} must be true or false", section, key));
  }

  /// Value converted to internal units via `scale(unit)`; nullopt for an
  /// unknown unit.
  template <class Scale>
  double quantity(const char* section, const char* key, double fallback, Scale scale) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    const auto factor = scale(e->unit);
    if (!factor)
      fail(doc_, e->line,
           fmt::format("[{}] {}: unit '{}' is not valid here", section, key, e->unit));
    return *parse_number(e->value) * *factor;
  }

  [[noreturn]] void error(const char* section, const char* key, const std::string& msg) const {
    const auto* e = find(section, key);
    fail(doc_, e ? e->line : 0, fmt::format("[{}] {}: {}", section, key, msg));
  }

 private:
  const ConfigDocument& doc_;
};

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

const char* to_string(UnitSystem units) {
  return units == UnitSystem::Natural ? "natural" : "dot";
}

const char* to_string(SampleFormat format) {
  return format == SampleFormat::Binary ? "binary" : "text";
}

ConfigDocument parse_document(std::string_view text, std::string source) {
  ConfigDocument doc;
  doc.source = std::move(source);
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(doc, line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (std::find_if(std::begin(kSectionOrder), std::end(kSectionOrder),
                       [&](const char* s) { return section == s; }) == std::end(kSectionOrder))
        fail(doc, line_no, fmt::format("unknown section [{}]", section));
      doc.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(doc, line_no, "expected 'key = value'");
    if (section.empty()) fail(doc, line_no, "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view rhs = trim(line.substr(eq + 1));
    const KeySpec* spec = find_key(section, key);
    if (!spec) fail(doc, line_no, fmt::format("unknown key '{}' in [{}]", key, section));
    if (rhs.empty()) fail(doc, line_no, fmt::format("[{}] {}: missing value", section, key));

    ConfigEntry entry;
    entry.line = line_no;
    if (is_number_kind(spec->kind)) {
      const auto sp = rhs.find_first_of(" \t");
      const std::string_view num = rhs.substr(0, sp);
      const auto v = parse_number(num);
      if (!v) fail(doc, line_no, fmt::format("[{}] {}: '{}' is not a number", section, key, num));
      entry.value = fmt::format("{}", *v);
      if (sp != std::string_view::npos) entry.unit = std::string(trim(rhs.substr(sp)));
      if (needs_unit(spec->kind) && entry.unit.empty())
        fail(doc, line_no, fmt::format("[{}] {}: a unit is required", section, key));
      if (!needs_unit(spec->kind) && !entry.unit.empty())
        fail(doc, line_no, fmt::format("[{}] {}: dimensionless, no unit allowed", section, key));
    } else {
      std::string value(rhs);
      if (key == "observables" || key == "channels") {
        // normalize "a,b" / "a, b"
        std::string norm;
        std::istringstream in(value);
        for (std::string item; std::getline(in, item, ',');) {
          const auto t = trim(item);
          if (t.empty()) continue;
          if (!norm.empty()) norm += ", ";
          norm += t;
        }
        value = norm;
      }
      entry.value = value;
    }
    auto& keys = doc.sections[section];
    if (keys.count(key))
      fail(doc, line_no, fmt::format("[{}] {} given twice (first on line {})", section, key,
                                     keys[key].line));
    keys[key] = entry;
  }
  return doc;
}

std::string serialize(const ConfigDocument& doc, bool include_output_dir) {
  std::string out;
  for (const char* name : kSectionOrder) {
    const auto s = doc.sections.find(name);
    if (s == doc.sections.end()) continue;
    out += fmt::format("[{}]\n", name);
    for (const auto& [key, e] : s->second) {
      if (!include_output_dir && std::string_view(name) == "output" && key == "directory") continue;
      out += e.unit.empty() ? fmt::format("{} = {}\n", key, e.value)
                            : fmt::format("{} = {} {}\n", key, e.value, e.unit);
    }
    out += '\n';
  }
  return out;
}

RunConfig interpret(const ConfigDocument& doc) {
  Reader in(doc);
  RunConfig cfg;
  cfg.document = doc;

  const std::string potential = in.text("system", "potential", "harmonic");
  if (potential == "quantum_dot" || potential == "dot") {
    cfg.units = UnitSystem::Dot;
  } else if (potential == "harmonic" || potential == "free") {
    cfg.units = UnitSystem::Natural;
  } else {
    in.error("system", "potential", "expected free, harmonic or quantum_dot");
  }
  const bool dot = cfg.units == UnitSystem::Dot;

  SystemSpec& sys = cfg.system;
  sys.dim = static_cast<int>(in.count("system", "dim", dot ? 2 : 3));
  sys.num_beads = static_cast<int>(in.count("system", "beads", dot ? 15 : 10));
  sys.hbar = dot ? units::dot::hbar : 1.0;

  // Temperature first: "kT" units depend on it.
  auto energy_no_kt = [&](const std::string& u) -> std::optional<double> {
    if (!dot && u == "hw") return 1.0;
    if (dot && u == "meV") return 1.0;
    if (dot && u == "eV") return 1000.0;
    if (dot && u == "K") return units::dot::boltzmann;
    return std::nullopt;
  };
  auto inverse_energy_no_kt = [&](const std::string& u) -> std::optional<double> {
    if (!dot && u == "1/hw") return 1.0;
    if (dot && u == "1/meV") return 1.0;
    return std::nullopt;
  };
  const int given = in.has("system", "temperature") + in.has("system", "beta") +
                    in.has("system", "beta_per_bead");
  if (given != 1) in.error("system", "beta", "give exactly one of temperature, beta, beta_per_bead");
  if (in.has("system", "temperature")) {
    const double t = in.quantity("system", "temperature", 0.0, energy_no_kt);
    if (!(t > 0.0)) in.error("system", "temperature", "must be positive");
    sys.beta = 1.0 / t;
  } else if (in.has("system", "beta")) {
    sys.beta = in.quantity("system", "beta", 0.0, inverse_energy_no_kt);
  } else {
    sys.beta = in.quantity("system", "beta_per_bead", 0.0, inverse_energy_no_kt) * sys.num_beads;
  }
  if (!(sys.beta > 0.0)) in.error("system", "beta", "inverse temperature must be positive");
  const double kt = 1.0 / sys.beta;

  auto energy = [&](const std::string& u) -> std::optional<double> {
    if (u == "kT") return kt;
    return energy_no_kt(u);
  };
  auto inverse_energy = [&](const std::string& u) -> std::optional<double> {
    if (u == "1/kT") return sys.beta;
    return inverse_energy_no_kt(u);
  };
  auto time = [&](const std::string& u) -> std::optional<double> {
    if (!dot && u == "1/w") return 1.0;
    if (dot && u == "fs") return 1.0;
    if (dot && u == "ps") return 1000.0;
    return std::nullopt;
  };
  auto inverse_time = [&](const std::string& u) -> std::optional<double> {
    if (!dot && u == "w") return 1.0;
    if (dot && u == "1/fs") return 1.0;
    if (dot && u == "1/ps") return 1e-3;
    return std::nullopt;
  };
  auto mass = [&](const std::string& u) -> std::optional<double> {
    if (!dot && u == "m") return 1.0;
    if (dot && u == "m_e") return units::dot::electron_mass;
    return std::nullopt;
  };

  if (dot) {
    for (const char* k : {"mass", "omega"})
      if (in.has("system", k)) in.error("system", k, "not used by the quantum dot");
    const double hw0 = in.quantity("system", "hbar_omega0", 5.1, energy_no_kt);
    const double eta = in.number("system", "eta", 1.0);
    const double m_star = in.quantity("system", "m_star", 0.07 * units::dot::electron_mass, mass) /
                          units::dot::electron_mass;
    const double eps = in.number("system", "epsilon_r", 12.5);
    if (in.has("system", "gamma_c") && in.has("system", "wigner"))
      in.error("system", "wigner", "give gamma_c or wigner, not both");
    // softening: nm, or l0 (resolved once l0 is known)
    double soft_over_l0 = 1e-3;
    std::optional<double> soft_nm;
    if (const auto* e = in.find("system", "softening")) {
      if (e->unit == "l0" || e->unit == "l_char") soft_over_l0 = *parse_number(e->value);
      else if (e->unit == "nm") soft_nm = *parse_number(e->value);
      else in.error("system", "softening", fmt::format("unit '{}' is not valid here", e->unit));
    }
    DotParams d;
    try {
      d = in.has("system", "wigner")
              ? DotParams::from_wigner(hw0, eta, in.number("system", "wigner", 0.0), m_star, eps,
                                       soft_over_l0)
              : DotParams::from_material(hw0, eta, m_star, eps,
                                         in.number("system", "gamma_c", 0.9), soft_over_l0);
    } catch (const InvalidArgument& e) {
      in.error("system", "potential", e.what());
    }
    if (soft_nm) d.softening = *soft_nm;
    sys.mass = d.mass();
    sys.potential = QuantumDot{d};
  } else {
    for (const char* k : {"hbar_omega0", "eta", "m_star", "epsilon_r", "gamma_c", "wigner", "softening"})
      if (in.has("system", k)) in.error("system", k, "only used by the quantum dot");
    sys.mass = in.quantity("system", "mass", 1.0, mass);
    if (potential == "harmonic") {
      sys.potential = IsotropicHarmonic{in.quantity("system", "omega", 1.0, inverse_time), sys.mass};
    } else {
      if (in.has("system", "omega")) in.error("system", "omega", "not used by free particles");
      sys.potential = FreeParticles{};
    }
  }
  try {
    sys.validate();
  } catch (const InvalidArgument& e) {
    in.error("system", "potential", e.what());
  }
  const double lchar = characteristic_length(sys);
  auto length = [&](const std::string& u) -> std::optional<double> {
    if (u == "l_char") return lchar;
    if (!dot && u == "l_ho") return 1.0;
    if (dot && u == "nm") return 1.0;
    if (dot && u == "l0") return std::get<QuantumDot>(sys.potential).dot.length0();
    return std::nullopt;
  };

  // [sampler]
  IntegratorSpec& integ = cfg.integrator;
  const std::string topo = in.text("sampler", "topology", "distinguishable");
  if (topo == "distinguishable" || topo == "oo") integ.topology = Topology::Distinguishable;
  else if (topo == "connected" || topo == "O") integ.topology = Topology::Connected;
  else in.error("sampler", "topology", "expected distinguishable or connected");
  integ.timestep = in.quantity("sampler", "timestep", dot ? 1.0 : 0.023, time);
  integ.friction = in.quantity("sampler", "friction", -1.0, inverse_time);
  integ.n_steps = in.count("sampler", "steps", 100000);
  integ.sample_stride = in.count("sampler", "sample_stride", 1);
  integ.seed = static_cast<std::uint64_t>(in.count("sampler", "seed", 1));
  cfg.seeds = static_cast<int>(in.count("sampler", "seeds", 1));
  if (cfg.seeds < 1) in.error("sampler", "seeds", "must be >= 1");
  cfg.burn_in_fraction = in.number("sampler", "burn_in_fraction", 0.1);
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0))
    in.error("sampler", "burn_in_fraction", "must lie in [0, 1)");
  cfg.checkpoint_interval = in.count("sampler", "checkpoint_interval", 0);
  const bool walls = in.has("sampler", "wall_k");
  if (walls) {
    if (!in.has("sampler", "wall_min") || !in.has("sampler", "wall_max"))
      in.error("sampler", "wall_k", "walls need wall_min and wall_max");
    integ.walls.k = in.quantity("sampler", "wall_k", 0.0, inverse_energy);
    integ.walls.s_min = in.quantity("sampler", "wall_min", 0.0, energy);
    integ.walls.s_max = in.quantity("sampler", "wall_max", 0.0, energy);
  } else if (in.has("sampler", "wall_min") || in.has("sampler", "wall_max")) {
    in.error("sampler", "wall_min", "wall bounds given without wall_k");
  }
  try {
    integ.validate();
  } catch (const InvalidArgument& e) {
    in.error("sampler", "timestep", e.what());
  }

  // [metadynamics]
  cfg.metadynamics = in.flag("metadynamics", "enabled", false);
  if (cfg.metadynamics) {
    MetadynamicsParams& m = cfg.meta;
    m.initial_height = in.quantity("metadynamics", "height", 0.5 * kt, energy);
    m.width = in.quantity("metadynamics", "width", 4.0 * kt, energy);
    m.bias_factor = in.number("metadynamics", "bias_factor", 4.0);
    m.stride = in.count("metadynamics", "stride", 2000);
    m.grid_min = in.quantity("metadynamics", "grid_min", -60.0 * kt, energy);
    m.grid_max = in.quantity("metadynamics", "grid_max", 60.0 * kt, energy);
    m.grid_spacing = in.quantity("metadynamics", "grid_spacing", m.width / 10.0, energy);
    cfg.build_steps = in.count("metadynamics", "build_steps", 0);
    cfg.bias_file = in.text("metadynamics", "bias_file", "");
    try {
      m.validate();
    } catch (const InvalidArgument& e) {
      in.error("metadynamics", "width", e.what());
    }
    if (integ.topology != Topology::Distinguishable)
      in.error("metadynamics", "enabled", "metadynamics requires the distinguishable topology");
    if (!cfg.bias_file.empty() && cfg.build_steps > 0)
      in.error("metadynamics", "bias_file", "a loaded bias is frozen; set build_steps = 0");
  } else {
    for (const char* k : {"height", "width", "bias_factor", "stride", "build_steps", "grid_min",
                          "grid_max", "grid_spacing", "bias_file"})
      if (in.has("metadynamics", k)) in.error("metadynamics", k, "metadynamics is not enabled");
  }

  // [estimators]
  EstimatorSpec& est = cfg.estimators;
  est = EstimatorSpec::defaults_for(sys);
  if (in.has("estimators", "observables")) {
    est.pair_distribution = false;
    est.density = false;
    cfg.energy = false;
    std::istringstream list(in.text("estimators", "observables", ""));
    for (std::string item; std::getline(list, item, ',');) {
      const std::string t(trim(item));
      if (t == "energy") cfg.energy = true;
      else if (t == "pair_distribution") est.pair_distribution = true;
      else if (t == "density") est.density = true;
      else in.error("estimators", "observables", fmt::format("unknown observable '{}'", t));
    }
  }
  {
    cfg.channels.clear();
    std::istringstream list(in.text("estimators", "channels", "distinguishable, boson, fermion"));
    for (std::string item; std::getline(list, item, ',');) {
      const std::string t(trim(item));
      SymmetryChannel ch;
      if (t == "distinguishable") ch = SymmetryChannel::Distinguishable;
      else if (t == "boson" || t == "singlet") ch = SymmetryChannel::Boson;
      else if (t == "fermion" || t == "triplet") ch = SymmetryChannel::Fermion;
      else in.error("estimators", "channels", fmt::format("unknown channel '{}'", t));
      if (std::find(cfg.channels.begin(), cfg.channels.end(), ch) == cfg.channels.end())
        cfg.channels.push_back(ch);
    }
    if (cfg.channels.empty()) in.error("estimators", "channels", "at least one channel is required");
  }
  est.pair.bins = static_cast<std::size_t>(in.count("estimators", "pair_bins", est.pair.bins));
  est.pair.max = in.quantity("estimators", "pair_max", est.pair.max, length);
  est.density_grid.bins =
      static_cast<std::size_t>(in.count("estimators", "density_bins", est.density_grid.bins));
  est.density_grid.half_width =
      in.quantity("estimators", "density_half_width", est.density_grid.half_width, length);
  est.block_capacity =
      static_cast<std::size_t>(in.count("estimators", "block_capacity", est.block_capacity));
  est.histogram_block_capacity = static_cast<std::size_t>(
      in.count("estimators", "histogram_block_capacity", est.histogram_block_capacity));
  est.min_blocks = static_cast<std::size_t>(in.count("estimators", "min_blocks", est.min_blocks));
  if (est.block_capacity % 2 || est.histogram_block_capacity % 2)
    in.error("estimators", "block_capacity", "block capacities must be even");
  try {
    est.validate(sys);
  } catch (const InvalidArgument& e) {
    in.error("estimators", "observables", e.what());
  }

  // [output]
  cfg.output_dir = in.text("output", "directory", "out");
  const std::string format = in.text("output", "format", "binary");
  if (format == "binary") cfg.format = SampleFormat::Binary;
  else if (format == "text") cfg.format = SampleFormat::Text;
  else in.error("output", "format", "expected binary or text");
  cfg.snapshot_stride = static_cast<int>(in.count("output", "snapshot_stride", 5));
  if (cfg.snapshot_stride < 1) in.error("output", "snapshot_stride", "must be >= 1");
  return cfg;
}

RunConfig parse_config(std::string_view text, std::string source) {
  return interpret(parse_document(text, std::move(source)));
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string RunConfig::canonical() const { return serialize(document, false); }

std::string RunConfig::hash() const { return fmt::format("{:016x}", fnv1a(canonical())); }

}  // namespace qsym
