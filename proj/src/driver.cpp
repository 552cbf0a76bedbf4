#include "driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "error.hpp"
#include "oracle.hpp"
#include "sample_io.hpp"
#include "units.hpp"

namespace qsym {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string seed_dir(const std::string& run_dir, std::uint64_t seed) {
  return (fs::path(run_dir) / fmt::format("seed_{}", seed)).string();
}

std::string samples_path(const std::string& dir, SampleFormat format) {
  return (fs::path(dir) / (format == SampleFormat::Binary ? "samples.bin" : "samples.tsv")).string();
}

std::string join(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

std::string seeds_text(const RunConfig& cfg) {
  std::string out;
  for (auto s : seed_list(cfg)) out += (out.empty() ? "" : ",") + std::to_string(s);
  return out;
}

std::vector<std::string> table_header(const RunConfig& cfg, const std::string& hash) {
  return {fmt::format("version = {}", kVersion), fmt::format("config_hash = {}", hash),
          fmt::format("seeds = {}", seeds_text(cfg)), fmt::format("units = {}", to_string(cfg.units))};
}

std::string header_block(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += "# " + l + "\n";
  return out;
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"stderr", e.error}}; }

std::string fmt_num(double v) { return std::isfinite(v) ? fmt::format("{:.10g}", v) : "nan"; }

int thread_count(int requested, std::size_t jobs) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("QSYM_NUM_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min<int>(n, static_cast<int>(jobs)));
}

/// Runs `job(i)` for i in [0, n) on a small pool; rethrows the first failure in index order.
template <class Job>
void parallel_for(std::size_t n, int threads, Job job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string resolve_bias_file(const RunConfig& cfg) {
  fs::path p(cfg.bias_file);
  if (p.is_relative()) {
    const fs::path base = fs::path(cfg.document.source).parent_path();
    if (!base.empty() && fs::exists(base / p)) p = base / p;
  }
  return p.string();
}

BiasState load_bias(const RunConfig& cfg) {
  const std::string path = resolve_bias_file(cfg);
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open bias file '{}'", path));
  return BiasState::read_hills(in);
}

json file_meta(const RunConfig& cfg, const std::string& hash, std::uint64_t seed) {
  return {{"version", kVersion},
          {"config_hash", hash},
          {"seed", seed},
          {"units", to_string(cfg.units)},
          {"topology", to_string(cfg.integrator.topology)},
          {"beta", cfg.system.beta},
          {"beads", cfg.system.num_beads},
          {"dim", cfg.system.dim}};
}

void write_hills_file(const std::string& path, const BiasState& bias,
                      const std::vector<std::string>& header) {
  std::ostringstream out;
  bias.write_hills(out, header);
  write_text_atomic(path, out.str());
}

RunStatus run_seed(const RunConfig& cfg, const std::string& hash, std::uint64_t seed,
                   const std::string& dir, bool resume, std::int64_t halt_at) {
  fs::create_directories(dir);
  const SystemSpec& spec = cfg.system;
  IntegratorSpec integ = cfg.integrator;
  integ.seed = seed;
  const std::string cp_path = join(dir, "checkpoint.json");

  std::optional<Checkpoint> cp;
  if (resume && fs::exists(cp_path)) {
    cp = read_checkpoint(cp_path, spec);
    if (cp->config_hash != hash)
      throw ConfigError(fmt::format("checkpoint {} belongs to config {}, not {}", cp_path,
                                    cp->config_hash, hash));
    if (cp->seed != seed)
      throw ConfigError(fmt::format("checkpoint {} is for seed {}, expected {}", cp_path, cp->seed, seed));
  }

  std::optional<Sampler> sampler;
  if (cp) {
    sampler.emplace(Sampler::restore(spec, integ, cp->state));
  } else {
    std::optional<BiasState> bias;
    if (cfg.metadynamics) bias = cfg.bias_file.empty() ? BiasState(cfg.meta) : load_bias(cfg);
    sampler.emplace(spec, integ, initial_configuration(spec, seed), std::move(bias));
  }

  const std::int64_t build = cfg.metadynamics ? cfg.build_steps : 0;
  const std::int64_t total = build + integ.n_steps;
  // Biased runs discard the build phase; unbiased runs a leading fraction.
  const std::int64_t keep_after =
      cfg.metadynamics ? build
                       : static_cast<std::int64_t>(std::floor(cfg.burn_in_fraction * integ.n_steps));
  const bool want_snapshots =
      integ.topology == Topology::Distinguishable &&
      (cfg.estimators.pair_distribution || cfg.estimators.density);

  const json meta = file_meta(cfg, hash, seed);
  SampleWriter samples(samples_path(dir, cfg.format), cfg.format, meta,
                       cp ? std::optional<std::uint64_t>(cp->samples_bytes) : std::nullopt);
  std::optional<SnapshotWriter> snapshots;
  if (want_snapshots)
    snapshots.emplace(join(dir, "snapshots.bin"), meta,
                      cp ? std::optional<std::uint64_t>(cp->snapshots_bytes) : std::nullopt);
  std::int64_t written = cp ? cp->samples_written : 0;

  const auto on_sample = [&](const TrajectorySample& t, const BeadConfiguration& c) {
    if (t.step <= keep_after) return;
    samples.write(t);
    ++written;
    if (snapshots && (t.step / integ.sample_stride) % cfg.snapshot_stride == 0)
      snapshots->write(t.step, c);
  };
  const std::vector<std::string> hills_header = {
      fmt::format("version = {}", kVersion), fmt::format("config_hash = {}", hash),
      fmt::format("seed = {}", seed)};
  const auto save = [&] {
    samples.flush();
    if (snapshots) snapshots->flush();
    Checkpoint c;
    c.config_hash = hash;
    c.seed = seed;
    c.state = sampler->state();
    c.samples_bytes = samples.bytes();
    c.snapshots_bytes = snapshots ? snapshots->bytes() : 0;
    c.samples_written = written;
    write_checkpoint(cp_path, c);
  };

  const std::int64_t interval = cfg.checkpoint_interval > 0 ? cfg.checkpoint_interval : total;
  while (sampler->step() < total) {
    const std::int64_t step = sampler->step();
    if (halt_at >= 0 && step >= halt_at) {
      save();
      return RunStatus::Halted;
    }
    std::int64_t stop = std::min(total, (step / interval + 1) * interval);
    if (halt_at >= 0) stop = std::min(stop, halt_at);
    if (step < build) {
      stop = std::min(stop, build);
      sampler->set_depositing(true);
      sampler->run(stop - step);
      if (sampler->step() == build) {
        sampler->set_depositing(false);
        write_hills_file(join(dir, "hills.txt"), *sampler->bias(), hills_header);
      }
    } else {
      sampler->set_depositing(false);
      sampler->run(stop - step, on_sample);
    }
    if (stop % interval == 0 || stop == total || stop == halt_at) save();
  }
  if (sampler->bias()) write_hills_file(join(dir, "hills.txt"), *sampler->bias(), hills_header);
  if (halt_at == total) return RunStatus::Halted;
  return RunStatus::Complete;
}

void write_manifest(const std::string& run_dir, const RunConfig& cfg) {
  json m = {{"version", kVersion},
            {"config_hash", cfg.hash()},
            {"config", cfg.canonical()},
            {"seeds", seed_list(cfg)},
            {"units", to_string(cfg.units)},
            {"format", to_string(cfg.format)}};
  write_text_atomic(join(run_dir, "run.json"), m.dump(2) + "\n");
}

std::string run_dir_from_restart(const std::string& restart) {
  fs::path p(restart);
  if (fs::is_directory(p)) {
    // a run directory, or one of its seed directories
    if (fs::exists(p / "run.json")) return p.string();
    if (fs::exists(p.parent_path() / "run.json")) return p.parent_path().string();
  } else if (fs::exists(p)) {
    const fs::path run = p.parent_path().parent_path();
    if (fs::exists(run / "run.json")) return run.string();
  }
  throw ConfigError(fmt::format("'{}' is not a checkpoint or run directory", restart));
}

void write_pair_table(const std::string& path, const HistogramResult& h,
                      const std::vector<std::string>& header) {
  std::string out = header_block(header);
  out += "r\tg\tstderr\tn_eff\n";
  for (std::size_t b = 0; b < h.values.size(); ++b)
    out += fmt::format("{}\t{}\t{}\t{}\n", fmt_num(h.centers[b]), fmt_num(h.values[b]),
                       fmt_num(h.errors[b]), fmt_num(h.effective_samples[b]));
  write_text_atomic(path, out);
}

void write_density_table(const std::string& path, const GridResult& g,
                         const std::vector<std::string>& header) {
  std::string out = header_block(header);
  out += "x\ty\trho\tstderr\tn_eff\n";
  for (std::size_t ix = 0; ix < g.bins; ++ix)
    for (std::size_t iy = 0; iy < g.bins; ++iy)
      out += fmt::format("{}\t{}\t{}\t{}\t{}\n", fmt_num(g.centers[ix]), fmt_num(g.centers[iy]),
                         fmt_num(g.value(ix, iy)), fmt_num(g.error(ix, iy)),
                         fmt_num(g.effective_samples[ix * g.bins + iy]));
  write_text_atomic(path, out);
}

/// Summary of a connected-topology run: only the CV statistics are meaningful.
CommandResult analyze_connected(const std::string& run_dir, const RunConfig& cfg,
                                const std::string& out_dir) {
  BlockedSums sums(2, cfg.estimators.block_capacity);
  for (auto seed : seed_list(cfg)) {
    SampleReader reader(samples_path(seed_dir(run_dir, seed), cfg.format));
    while (auto t = reader.next()) {
      auto c = sums.current();
      c[0] += 1.0;
      c[1] += t->s;
      sums.commit_sample();
    }
  }
  const Estimate est = block_jackknife(
      sums, [](std::span<const double> v, std::span<double> out) { out[0] = v[1] / v[0]; }, 1,
      cfg.estimators.min_blocks)[0];
  json summary = {{"version", kVersion},
                  {"config_hash", cfg.hash()},
                  {"seeds", seed_list(cfg)},
                  {"topology", "connected"},
                  {"samples", sums.samples()},
                  {"observables", json::array({{{"name", "mean_s"}, {"channel", "connected"},
                                                {"estimate", est.value}, {"stderr", est.error}}})}};
  CommandResult r;
  r.output_dir = out_dir;
  r.summary_path = join(out_dir, "summary.json");
  write_text_atomic(r.summary_path, summary.dump(2) + "\n");
  return r;
}

CommandResult analyze_into(const std::string& run_dir, const RunConfig& cfg,
                           const std::string& hash, const std::string& out_dir) {
  fs::create_directories(out_dir);
  if (cfg.integrator.topology == Topology::Connected) return analyze_connected(run_dir, cfg, out_dir);

  const Analysis a = load_analysis(run_dir, cfg);
  const auto header = table_header(cfg, hash);
  CommandResult result;
  result.output_dir = out_dir;

  json obs = json::array();
  auto add = [&](const std::string& name, const std::string& channel, const Estimate& e) {
    obs.push_back({{"name", name},
                   {"channel", channel},
                   {"estimate", e.value},
                   {"stderr", e.error},
                   {"samples", a.sample_count()},
                   {"config_hash", hash}});
  };

  json channels = json::object();
  for (auto ch : cfg.channels) {
    const std::string name = to_string(ch);
    json entry = json::object();
    if (ch != SymmetryChannel::Distinguishable) {
      const Estimate w = a.mean_weight(ch);
      entry["mean_weight"] = estimate_json(w);
      add("mean_weight", name, w);
      if (a.sign_collapsed(ch)) {
        entry["sign_collapse"] = true;
        result.collapsed_channels.push_back(name);
        channels[name] = entry;
        continue;
      }
      entry["sign_collapse"] = false;
    }
    if (cfg.energy) {
      const Estimate e = a.energy(ch);
      entry["energy"] = estimate_json(e);
      add("energy", name, e);
    }
    const Estimate rr = a.weighted_average(Observable::PairDistance, ch);
    entry["pair_distance"] = estimate_json(rr);
    add("pair_distance", name, rr);
    if (cfg.estimators.pair_distribution && a.snapshot_count() > 0)
      write_pair_table(join(out_dir, fmt::format("pair_{}.tsv", name).c_str()),
                       a.pair_distribution(ch), header);
    if (cfg.estimators.density && a.snapshot_count() > 0)
      write_density_table(join(out_dir, fmt::format("density_{}.tsv", name).c_str()),
                          a.density(ch), header);
    channels[name] = entry;
  }

  const Estimate ratio = a.exchange_ratio();
  add("exchange_ratio", "distinguishable", ratio);
  json summary = {{"version", kVersion},
                  {"config_hash", hash},
                  {"seeds", seed_list(cfg)},
                  {"units", to_string(cfg.units)},
                  {"topology", "distinguishable"},
                  {"samples", a.sample_count()},
                  {"snapshots", a.snapshot_count()},
                  {"effective_sample_size", a.effective_sample_size()},
                  {"exchange_ratio", estimate_json(ratio)},
                  {"channels", channels}};

  const bool boson_ok = !a.sign_collapsed(SymmetryChannel::Boson);
  const bool fermion_ok = !a.sign_collapsed(SymmetryChannel::Fermion);
  if (cfg.energy && boson_ok && ratio.value < 1.0) {
    const Estimate ef = a.fermion_energy_via_free_energy();
    summary["fermion_energy_free_energy_route"] = estimate_json(ef);
    add("energy_free_energy_route", "fermion", ef);
  }
  if (cfg.estimators.density && a.snapshot_count() > 0 && boson_ok && fermion_ok)
    write_density_table(join(out_dir, "density_fermion_minus_half_boson.tsv"),
                        a.density_combination(1.0, -0.5), header);

  summary["observables"] = obs;
  summary["collapsed_channels"] = result.collapsed_channels;
  result.summary_path = join(out_dir, "summary.json");
  write_text_atomic(result.summary_path, summary.dump(2) + "\n");
  return result;
}

BennettLeg read_leg(const std::string& run_dir, const RunConfig& cfg) {
  BennettLeg leg;
  const bool weighted = cfg.metadynamics || cfg.integrator.walls.enabled();
  for (auto seed : seed_list(cfg)) {
    SampleReader reader(samples_path(seed_dir(run_dir, seed), cfg.format));
    while (auto t = reader.next()) {
      if (weighted) leg.add(t->s, cfg.system.beta * (t->bias_value + t->wall_value));
      else leg.add(t->s);
    }
  }
  return leg;
}

}  // namespace

std::vector<std::uint64_t> seed_list(const RunConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.seeds; ++i) seeds.push_back(cfg.integrator.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

RunConfig load_run_config(const std::string& run_dir) {
  const std::string path = join(run_dir, "run.json");
  if (!fs::exists(path)) throw ConfigError(fmt::format("'{}' has no run.json manifest", run_dir));
  const json m = read_json_file(path);
  RunConfig cfg = parse_config(m.at("config").get<std::string>(), path);
  if (cfg.hash() != m.at("config_hash").get<std::string>())
    throw ConfigError(fmt::format("{}: config does not match its recorded hash", path));
  cfg.output_dir = run_dir;
  return cfg;
}

RunConfig load_restart_config(const std::string& restart) {
  return load_run_config(run_dir_from_restart(restart));
}

Analysis load_analysis(const std::string& run_dir, const RunConfig& cfg) {
  if (cfg.integrator.topology != Topology::Distinguishable)
    throw ConfigError("symmetry-channel estimators need a distinguishable-topology run");
  const SystemSpec& spec = cfg.system;
  std::optional<Analysis> total;
  for (auto seed : seed_list(cfg)) {
    const std::string dir = seed_dir(run_dir, seed);
    Analysis a(spec, cfg.estimators);
    SampleReader reader(samples_path(dir, cfg.format));
    const std::string snap_path = join(dir, "snapshots.bin");
    const bool want = cfg.estimators.pair_distribution || cfg.estimators.density;
    std::optional<SnapshotReader> snaps;
    if (want && fs::exists(snap_path)) snaps.emplace(snap_path, spec.num_beads, spec.dim);
    BeadConfiguration config(spec, false);
    std::optional<std::int64_t> snap_step = snaps ? snaps->next(config) : std::nullopt;
    while (auto t = reader.next()) {
      const bool match = snap_step && *snap_step == t->step;
      a.add(*t, match ? &config : nullptr);
      if (match) snap_step = snaps->next(config);
    }
    if (total) total->merge(a);
    else total.emplace(std::move(a));
  }
  return std::move(*total);
}

CommandResult cmd_run(RunConfig cfg, const RunOptions& options) {
  if (options.seeds) {
    if (*options.seeds < 1) throw ConfigError("--seeds must be >= 1");
    cfg.seeds = *options.seeds;
    cfg.document.sections["sampler"]["seeds"] = ConfigEntry{std::to_string(*options.seeds), "", 0};
  }
  const bool resume = !options.restart.empty();
  std::string run_dir = options.output_dir.value_or(cfg.output_dir);
  if (resume) {
    run_dir = run_dir_from_restart(options.restart);
    const RunConfig stored = load_run_config(run_dir);
    if (stored.hash() != cfg.hash())
      throw ConfigError(fmt::format("restart: run {} was made with config {}, this config is {}",
                                    run_dir, stored.hash(), cfg.hash()));
  }
  fs::create_directories(run_dir);
  cfg.output_dir = run_dir;
  const std::string hash = cfg.hash();
  if (!resume) write_manifest(run_dir, cfg);

  const auto seeds = seed_list(cfg);
  std::vector<RunStatus> status(seeds.size(), RunStatus::Complete);
  parallel_for(seeds.size(), thread_count(options.threads, seeds.size()), [&](std::size_t i) {
    status[i] = run_seed(cfg, hash, seeds[i], seed_dir(run_dir, seeds[i]), resume,
                         options.halt_at_step);
  });

  CommandResult result;
  result.output_dir = run_dir;
  if (std::find(status.begin(), status.end(), RunStatus::Halted) != status.end()) {
    result.status = RunStatus::Halted;
    return result;
  }
  return analyze_into(run_dir, cfg, hash, run_dir);
}

CommandResult cmd_analyze(const std::string& run_dir,
                          const std::optional<RunConfig>& estimators_override,
                          const std::optional<std::string>& output_dir) {
  RunConfig cfg = load_run_config(run_dir);
  const std::string hash = cfg.hash();
  if (estimators_override) {
    cfg.estimators = estimators_override->estimators;
    cfg.energy = estimators_override->energy;
    cfg.channels = estimators_override->channels;
    cfg.estimators.validate(cfg.system);
  }
  return analyze_into(run_dir, cfg, hash, output_dir.value_or(run_dir));
}

CommandResult cmd_oracle(const RunConfig& cfg, const std::optional<std::string>& output_dir) {
  const std::string out_dir = output_dir.value_or(cfg.output_dir);
  fs::create_directories(out_dir);
  const std::string hash = cfg.hash();
  const auto header = table_header(cfg, hash);
  const SystemSpec& spec = cfg.system;
  CommandResult result;
  result.output_dir = out_dir;
  result.summary_path = join(out_dir, "oracle.json");
  json j = {{"version", kVersion}, {"config_hash", hash}, {"units", to_string(cfg.units)}};

  if (const auto* h = std::get_if<IsotropicHarmonic>(&spec.potential)) {
    const double hw = spec.hbar * h->omega;
    auto to_json = [&](const HarmonicPartition& p) {
      return json{{"z1_beta", p.z1_beta},   {"z1_2beta", p.z1_2beta},
                  {"z_boson", p.z_boson},   {"z_fermion", p.z_fermion},
                  {"ratio", p.ratio},       {"energy_boson", p.e_boson},
                  {"energy_fermion", p.e_fermion},
                  {"energy_distinguishable", p.e_distinguishable},
                  {"energy_fermion_free_energy_route",
                   fermion_energy_via_free_energy(p.e_boson, p.ratio, spec.beta)}};
    };
    j["system"] = "harmonic";
    j["beta"] = spec.beta;
    j["dim"] = spec.dim;
    j["continuum"] = to_json(harmonic_partition(spec.beta, hw, spec.dim));
    j["discrete"] = to_json(harmonic_partition_discrete(spec.beta, hw, spec.dim, spec.num_beads));
    j["discrete"]["beads"] = spec.num_beads;

    const auto& pair = cfg.estimators.pair;
    const double width = pair.max / static_cast<double>(pair.bins);
    std::string table = header_block(header) + "r\tg_distinguishable\tg_boson\tg_fermion\n";
    for (std::size_t b = 0; b < pair.bins; ++b) {
      const double lo = width * static_cast<double>(b);
      table += fmt_num(lo + 0.5 * width);
      for (auto ch : {SymmetryChannel::Distinguishable, SymmetryChannel::Boson, SymmetryChannel::Fermion})
        table += "\t" + fmt_num(harmonic_pair_bin_average(spec.beta, h->omega, h->mass, spec.dim, ch,
                                                          lo, lo + width));
      table += "\n";
    }
    write_text_atomic(join(out_dir, "pair_reference.tsv"), table);
  } else if (const auto* d = std::get_if<QuantumDot>(&spec.potential)) {
    const SpectrumTable spectrum = dot_exact_diagonalize_converged(d->dot);
    {
      std::ostringstream out;
      spectrum.write(out, header);
      write_text_atomic(join(out_dir, "spectrum.tsv"), out.str());
    }
    const double kb = units::dot::boltzmann;
    std::string table = header_block(header) +
                        "T_K\tE_singlet\tE_triplet\tF_singlet\tF_triplet\n";
    for (int t = 1; t <= 60; ++t) {
      const double beta = 1.0 / (kb * t);
      table += fmt::format("{}\t{}\t{}\t{}\t{}\n", t,
                           fmt_num(dot_thermal_energy(spectrum, beta, SymmetryChannel::Boson)),
                           fmt_num(dot_thermal_energy(spectrum, beta, SymmetryChannel::Fermion)),
                           fmt_num(dot_free_energy(spectrum, beta, SymmetryChannel::Boson)),
                           fmt_num(dot_free_energy(spectrum, beta, SymmetryChannel::Fermion)));
    }
    write_text_atomic(join(out_dir, "thermal_energies.tsv"), table);
    j["system"] = "dot";
    j["beta"] = spec.beta;
    j["temperature_K"] = 1.0 / (kb * spec.beta);
    j["cutoff"] = spectrum.cutoff;
    j["previous_cutoff"] = spectrum.previous_cutoff;
    j["basis_size"] = spectrum.basis_size;
    j["extrapolated"] = spectrum.extrapolated;
    j["residual"] = spectrum.residual;
    j["hbar_omega_x"] = spectrum.hbar_omega_x;
    j["hbar_omega_y"] = spectrum.hbar_omega_y;
    j["ground_even"] = spectrum.ground(Parity::Even);
    j["ground_odd"] = spectrum.ground(Parity::Odd);
    j["energy_singlet"] = dot_thermal_energy(spectrum, spec.beta, SymmetryChannel::Boson);
    j["energy_triplet"] = dot_thermal_energy(spectrum, spec.beta, SymmetryChannel::Fermion);
    j["free_energy_singlet"] = dot_free_energy(spectrum, spec.beta, SymmetryChannel::Boson);
    j["free_energy_triplet"] = dot_free_energy(spectrum, spec.beta, SymmetryChannel::Fermion);
    j["energy_center_of_mass"] = dot_center_of_mass_energy(spectrum, spec.beta);
  } else {
    throw ConfigError("no reference solution exists for free particles");
  }
  write_text_atomic(result.summary_path, j.dump(2) + "\n");
  return result;
}

CommandResult cmd_bennett(const std::string& oo_dir, const std::string& connected_dir,
                          const std::optional<std::string>& output_dir) {
  const RunConfig oo = load_run_config(oo_dir);
  const RunConfig con = load_run_config(connected_dir);
  if (oo.integrator.topology != Topology::Distinguishable)
    throw ConfigError(fmt::format("{} is not a distinguishable-topology run", oo_dir));
  if (con.integrator.topology != Topology::Connected)
    throw ConfigError(fmt::format("{} is not a connected-topology run", connected_dir));
  const SystemSpec& a = oo.system;
  const SystemSpec& b = con.system;
  if (a.beta != b.beta || a.num_beads != b.num_beads || a.dim != b.dim || a.mass != b.mass ||
      potential_name(a.potential) != potential_name(b.potential))
    throw ConfigError("Bennett legs must simulate the same physical system");
  if (con.metadynamics) throw ConfigError("the connected leg must be unbiased");

  const BennettResult r = bennett_ratio(read_leg(oo_dir, oo), read_leg(connected_dir, con), a.beta);
  const std::string out_dir = output_dir.value_or((fs::path(oo_dir) / "bennett").string());
  fs::create_directories(out_dir);
  const std::string hash = oo.hash() + "+" + con.hash();

  json j = {{"version", kVersion},
            {"config_hash", {oo.hash(), con.hash()}},
            {"ratio", {{"value", r.ratio}, {"stderr", r.error}}},
            {"shift", r.shift},
            {"mean_fermi_distinguishable", r.mean_fermi_distinguishable},
            {"mean_fermi_connected", r.mean_fermi_connected},
            {"plateau", r.plateau}};
  const Analysis an = load_analysis(oo_dir, oo);
  const Estimate eb = an.energy(SymmetryChannel::Boson);
  j["energy_boson"] = estimate_json(eb);
  if (r.ratio < 1.0)
    j["energy_fermion_free_energy_route"] =
        estimate_json(fermion_energy_via_free_energy(eb, {r.ratio, r.error}, a.beta));
  if (!an.sign_collapsed(SymmetryChannel::Fermion))
    j["energy_fermion_virial"] = estimate_json(an.energy(SymmetryChannel::Fermion));

  std::string scan = header_block(table_header(oo, hash)) + "shift\tratio\tstderr\n";
  for (const auto& p : r.scan)
    scan += fmt::format("{}\t{}\t{}\n", fmt_num(p.shift), fmt_num(p.ratio), fmt_num(p.error));
  write_text_atomic(join(out_dir, "bennett_scan.tsv"), scan);

  CommandResult result;
  result.output_dir = out_dir;
  result.summary_path = join(out_dir, "bennett.json");
  write_text_atomic(result.summary_path, j.dump(2) + "\n");
  return result;
}

}  // namespace qsym
