#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "sample.hpp"
#include "sampler.hpp"

namespace qsym {

/// Sample streams. Binary files start with a one-line magic, then one line of
/// JSON metadata, then fixed-size little-endian records of
/// TrajectorySample::field_count doubles. Text files carry the metadata as
/// "# key = value" comments followed by a tab-separated table.
class SampleWriter {
 public:
  /// Opens `path` fresh, or, with `resume_bytes`, truncates an existing file to
  /// that length and appends.
  SampleWriter(std::string path, SampleFormat format, const nlohmann::json& meta,
               std::optional<std::uint64_t> resume_bytes = std::nullopt);

  void write(const TrajectorySample& sample);
  void flush();
  std::uint64_t bytes() const { return bytes_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  SampleFormat format_;
  std::ofstream out_;
  std::uint64_t bytes_ = 0;
};

class SampleReader {
 public:
  explicit SampleReader(const std::string& path);
  const nlohmann::json& meta() const { return meta_; }
  std::optional<TrajectorySample> next();

 private:
  std::string path_;
  std::ifstream in_;
  SampleFormat format_ = SampleFormat::Binary;
  nlohmann::json meta_;
};

/// Bead snapshots: magic line, JSON metadata line, then records of an int64
/// step followed by 2 P dim doubles.
class SnapshotWriter {
 public:
  SnapshotWriter(std::string path, const nlohmann::json& meta,
                 std::optional<std::uint64_t> resume_bytes = std::nullopt);
  void write(std::int64_t step, const BeadConfiguration& config);
  void flush();
  std::uint64_t bytes() const { return bytes_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::uint64_t bytes_ = 0;
};

class SnapshotReader {
 public:
  SnapshotReader(const std::string& path, int num_beads, int dim);
  const nlohmann::json& meta() const { return meta_; }
  /// Next snapshot, or nullopt at the end of the file.
  std::optional<std::int64_t> next(BeadConfiguration& into);

 private:
  std::string path_;
  std::ifstream in_;
  nlohmann::json meta_;
  int num_beads_, dim_;
};

/// Resumable state of one seed's trajectory plus the output file positions.
struct Checkpoint {
  int format_version = 1;
  std::string config_hash;
  std::uint64_t seed = 0;
  SamplerState state;
  std::uint64_t samples_bytes = 0;
  std::uint64_t snapshots_bytes = 0;
  std::int64_t samples_written = 0;
};

nlohmann::json to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const nlohmann::json& j, const SystemSpec& spec);

/// Writes via a temporary file and rename, so a crash never leaves a torn file.
void write_text_atomic(const std::string& path, const std::string& content);
void write_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::string& path, const SystemSpec& spec);

nlohmann::json read_json_file(const std::string& path);

}  // namespace qsym
