#include "sample_io.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include <fmt/format.h>

#include "error.hpp"

namespace qsym {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSampleMagic = "QSYM-SAMPLES 1";
constexpr const char* kSnapshotMagic = "QSYM-SNAPSHOTS 1";
constexpr std::size_t kRecordBytes = TrajectorySample::field_count * sizeof(double);

std::ofstream open_for_write(const std::string& path, std::optional<std::uint64_t> resume_bytes) {
  if (resume_bytes) {
    std::error_code ec;
    if (!fs::exists(path, ec)) throw IoError(fmt::format("cannot resume '{}': file is missing", path));
    if (fs::file_size(path) < *resume_bytes)
      throw IoError(fmt::format("cannot resume '{}': file is shorter than the checkpoint", path));
    fs::resize_file(path, *resume_bytes, ec);
    if (ec) throw IoError(fmt::format("cannot truncate '{}': {}", path, ec.message()));
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError(fmt::format("cannot open '{}' for appending", path));
    return out;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  return out;
}

}  // namespace

SampleWriter::SampleWriter(std::string path, SampleFormat format, const nlohmann::json& meta,
                           std::optional<std::uint64_t> resume_bytes)
    : path_(std::move(path)), format_(format), out_(open_for_write(path_, resume_bytes)) {
  if (resume_bytes) {
    bytes_ = *resume_bytes;
    return;
  }
  std::string header;
  if (format_ == SampleFormat::Binary) {
    header = fmt::format("{}\n{}\n", kSampleMagic, meta.dump());
  } else {
    header = fmt::format("# {} text\n# meta = {}\n", kSampleMagic, meta.dump());
    const auto& names = TrajectorySample::field_names();
    for (std::size_t k = 0; k < names.size(); ++k) header += (k ? "\t" : "") + std::string(names[k]);
    header += '\n';
  }
  out_ << header;
  bytes_ = header.size();
}

void SampleWriter::write(const TrajectorySample& sample) {
  const auto a = sample.to_array();
  if (format_ == SampleFormat::Binary) {
    out_.write(reinterpret_cast<const char*>(a.data()), kRecordBytes);
    bytes_ += kRecordBytes;
  } else {
    std::string line = fmt::format("{}", sample.step);
    for (std::size_t k = 1; k < a.size(); ++k) line += fmt::format("\t{:.17g}", a[k]);
    line += '\n';
    out_ << line;
    bytes_ += line.size();
  }
  if (!out_) throw IoError(fmt::format("write to '{}' failed", path_));
}

void SampleWriter::flush() {
  out_.flush();
  if (!out_) throw IoError(fmt::format("flush of '{}' failed", path_));
}

SampleReader::SampleReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError(fmt::format("cannot open sample file '{}'", path));
  std::string magic;
  std::getline(in_, magic);
  if (magic == kSampleMagic) {
    format_ = SampleFormat::Binary;
    std::string meta;
    std::getline(in_, meta);
    meta_ = nlohmann::json::parse(meta, nullptr, false);
  } else if (magic == fmt::format("# {} text", kSampleMagic)) {
    format_ = SampleFormat::Text;
    std::string meta, names;
    std::getline(in_, meta);
    std::getline(in_, names);
    const std::string prefix = "# meta = ";
    if (meta.rfind(prefix, 0) != 0) throw IoError(fmt::format("'{}': missing metadata line", path));
    meta_ = nlohmann::json::parse(meta.substr(prefix.size()), nullptr, false);
  } else {
    throw IoError(fmt::format("'{}' is not a sample file", path));
  }
  if (meta_.is_discarded()) throw IoError(fmt::format("'{}': corrupt metadata", path));
}

std::optional<TrajectorySample> SampleReader::next() {
  std::array<double, TrajectorySample::field_count> a{};
  if (format_ == SampleFormat::Binary) {
    in_.read(reinterpret_cast<char*>(a.data()), kRecordBytes);
    if (in_.gcount() == 0) return std::nullopt;
    if (static_cast<std::size_t>(in_.gcount()) != kRecordBytes)
      throw IoError(fmt::format("'{}': truncated sample record", path_));
    return TrajectorySample::from_array(a);
  }
  std::string line;
  if (!std::getline(in_, line) || line.empty()) return std::nullopt;
  std::istringstream row(line);
  for (double& v : a)
    if (!(row >> v)) throw IoError(fmt::format("'{}': malformed sample row", path_));
  return TrajectorySample::from_array(a);
}

SnapshotWriter::SnapshotWriter(std::string path, const nlohmann::json& meta,
                               std::optional<std::uint64_t> resume_bytes)
    : path_(std::move(path)), out_(open_for_write(path_, resume_bytes)) {
  if (resume_bytes) {
    bytes_ = *resume_bytes;
    return;
  }
  const std::string header = fmt::format("{}\n{}\n", kSnapshotMagic, meta.dump());
  out_ << header;
  bytes_ = header.size();
}

void SnapshotWriter::write(std::int64_t step, const BeadConfiguration& config) {
  out_.write(reinterpret_cast<const char*>(&step), sizeof(step));
  const auto pos = config.positions();
  out_.write(reinterpret_cast<const char*>(pos.data()),
             static_cast<std::streamsize>(pos.size() * sizeof(double)));
  bytes_ += sizeof(step) + pos.size() * sizeof(double);
  if (!out_) throw IoError(fmt::format("write to '{}' failed", path_));
}

void SnapshotWriter::flush() {
  out_.flush();
  if (!out_) throw IoError(fmt::format("flush of '{}' failed", path_));
}

SnapshotReader::SnapshotReader(const std::string& path, int num_beads, int dim)
    : path_(path), in_(path, std::ios::binary), num_beads_(num_beads), dim_(dim) {
  if (!in_) throw IoError(fmt::format("cannot open snapshot file '{}'", path));
  std::string magic, meta;
  std::getline(in_, magic);
  if (magic != kSnapshotMagic) throw IoError(fmt::format("'{}' is not a snapshot file", path));
  std::getline(in_, meta);
  meta_ = nlohmann::json::parse(meta, nullptr, false);
  if (meta_.is_discarded()) throw IoError(fmt::format("'{}': corrupt metadata", path));
}

std::optional<std::int64_t> SnapshotReader::next(BeadConfiguration& into) {
  if (into.num_beads() != num_beads_ || into.dim() != dim_) into = BeadConfiguration(num_beads_, dim_, false);
  std::int64_t step = 0;
  in_.read(reinterpret_cast<char*>(&step), sizeof(step));
  if (in_.gcount() == 0) return std::nullopt;
  auto pos = into.positions();
  const auto want = static_cast<std::streamsize>(pos.size() * sizeof(double));
  in_.read(reinterpret_cast<char*>(pos.data()), want);
  if (in_.gcount() != want) throw IoError(fmt::format("'{}': truncated snapshot record", path_));
  return step;
}

nlohmann::json to_json(const Checkpoint& cp) {
  nlohmann::json j;
  j["format_version"] = cp.format_version;
  j["config_hash"] = cp.config_hash;
  j["seed"] = cp.seed;
  j["step"] = cp.state.step;
  j["rng"] = cp.state.rng;
  j["normal"] = cp.state.normal;
  j["depositing"] = cp.state.depositing;
  j["positions"] = std::vector<double>(cp.state.config.positions().begin(),
                                       cp.state.config.positions().end());
  j["momenta"] = std::vector<double>(cp.state.config.momenta().begin(),
                                     cp.state.config.momenta().end());
  if (cp.state.bias) {
    const auto& b = *cp.state.bias;
    const auto& p = b.params();
    nlohmann::json bias;
    bias["initial_height"] = p.initial_height;
    bias["width"] = p.width;
    bias["bias_factor"] = p.bias_factor;
    bias["stride"] = p.stride;
    bias["grid_min"] = p.grid_min;
    bias["grid_max"] = p.grid_max;
    bias["grid_spacing"] = p.grid_spacing;
    nlohmann::json g = nlohmann::json::array();
    for (const auto& gauss : b.gaussians()) g.push_back({gauss.center, gauss.height});
    bias["gaussians"] = std::move(g);
    j["bias"] = std::move(bias);
  }
  j["samples_bytes"] = cp.samples_bytes;
  j["snapshots_bytes"] = cp.snapshots_bytes;
  j["samples_written"] = cp.samples_written;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j, const SystemSpec& spec) {
  try {
    Checkpoint cp;
    cp.format_version = j.at("format_version").get<int>();
    if (cp.format_version != 1)
      throw IoError(fmt::format("checkpoint format version {} is not supported", cp.format_version));
    cp.config_hash = j.at("config_hash").get<std::string>();
    cp.seed = j.at("seed").get<std::uint64_t>();
    cp.state.step = j.at("step").get<std::int64_t>();
    cp.state.rng = j.at("rng").get<std::string>();
    cp.state.normal = j.at("normal").get<std::string>();
    cp.state.depositing = j.at("depositing").get<bool>();
    cp.state.config = BeadConfiguration(spec, true);
    const auto pos = j.at("positions").get<std::vector<double>>();
    const auto mom = j.at("momenta").get<std::vector<double>>();
    if (pos.size() != spec.coordinate_count() || mom.size() != spec.coordinate_count())
      throw IoError("checkpoint: configuration shape does not match the system");
    std::copy(pos.begin(), pos.end(), cp.state.config.positions().begin());
    std::copy(mom.begin(), mom.end(), cp.state.config.momenta().begin());
    if (j.contains("bias")) {
      const auto& b = j.at("bias");
      MetadynamicsParams p;
      p.initial_height = b.at("initial_height").get<double>();
      p.width = b.at("width").get<double>();
      p.bias_factor = b.at("bias_factor").get<double>();
      p.stride = b.at("stride").get<std::int64_t>();
      p.grid_min = b.at("grid_min").get<double>();
      p.grid_max = b.at("grid_max").get<double>();
      p.grid_spacing = b.at("grid_spacing").get<double>();
      BiasState bias(p);
      for (const auto& g : b.at("gaussians")) bias.add_gaussian(g.at(0).get<double>(), g.at(1).get<double>());
      cp.state.bias = std::move(bias);
    }
    cp.samples_bytes = j.at("samples_bytes").get<std::uint64_t>();
    cp.snapshots_bytes = j.at("snapshots_bytes").get<std::uint64_t>();
    cp.samples_written = j.at("samples_written").get<std::int64_t>();
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("checkpoint: {}", e.what()));
  }
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp));
    out << content;
    out.flush();
    if (!out) throw IoError(fmt::format("write to '{}' failed", tmp));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot rename '{}' to '{}': {}", tmp, path, ec.message()));
}

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  write_text_atomic(path, to_json(cp).dump(1) + "\n");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError(fmt::format("'{}' is not valid JSON", path));
  return j;
}

Checkpoint read_checkpoint(const std::string& path, const SystemSpec& spec) {
  return checkpoint_from_json(read_json_file(path), spec);
}

}  // namespace qsym
