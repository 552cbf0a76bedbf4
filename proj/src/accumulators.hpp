#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qsym {

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Streaming sums over a fixed set of channels, kept per block for error
/// analysis.
///
/// Every stored number is relative to a shared log-scale reference: a stored
/// value v stands for v * exp(log_reference()). Samples whose log-magnitude
/// exceeds the reference raise it and rescale everything already stored, so
/// weights spanning hundreds of e-folds never overflow.
///
/// Blocks start one sample long. When `capacity` blocks are full, adjacent
/// pairs are merged and the block length doubles, so between capacity/2 and
/// capacity blocks are always available.
class BlockedSums {
 public:
  BlockedSums() = default;
  BlockedSums(std::size_t channels, std::size_t capacity);

  std::size_t channels() const { return channels_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t samples() const { return samples_; }
  std::size_t block_length() const { return block_length_; }
  double log_reference() const { return log_ref_; }
  bool has_reference() const { return has_ref_; }

  /// Raises the reference to at least `log_magnitude`. Returns the factor
  /// exp(old - new) applied to stored sums (1 if unchanged).
  double raise_reference(double log_magnitude);

  /// Channel sums of the block receiving the current sample.
  std::span<double> current() {
    return {data_.data() + full_blocks_ * channels_, channels_};
  }
  void commit_sample();

  /// Concatenates another accumulator's stream after this one.
  void merge(const BlockedSums& other);

  /// Blocks holding at least one sample (the trailing partial block included).
  std::size_t block_count() const { return full_blocks_ + (in_current_ > 0 ? 1 : 0); }
  std::span<const double> block(std::size_t b) const {
    return {data_.data() + b * channels_, channels_};
  }
  std::vector<double> totals() const;

 private:
  void halve();
  void rescale(double factor);

  std::size_t channels_ = 0;
  std::size_t capacity_ = 0;
  std::vector<double> data_;
  std::size_t full_blocks_ = 0;
  std::size_t in_current_ = 0;
  std::size_t block_length_ = 1;
  std::size_t samples_ = 0;
  double log_ref_ = 0.0;
  bool has_ref_ = false;
};

/// f maps channel sums to `outputs` values; it must be invariant under a
/// common rescaling of the sums.
using SumsFunction = std::function<void(std::span<const double> sums, std::span<double> out)>;

/// Block jackknife of f over the blocks of `sums`.
///
/// Blocks are grouped 1, 2, 4, ... at a time while at least `min_blocks`
/// groups remain. Per output, the block length keeps doubling while the error
/// estimate grows by more than 10%; the error at the first level where it
/// stops growing is reported.
std::vector<Estimate> block_jackknife(const BlockedSums& sums, const SumsFunction& f,
                                      std::size_t outputs, std::size_t min_blocks = 32);

/// Jackknife of f over contiguous blocks of per-sample data, for estimators
/// that need the raw stream (e.g. an iterative solve). `f(begin, end_excluded_block)`
/// is evaluated on the full range and on each leave-one-block-out range.
double jackknife_error(std::size_t n, std::size_t blocks,
                       const std::function<double(std::size_t skip_begin, std::size_t skip_end)>& f);

/// Numerically stable running log(sum exp(x_k)).
class LogSumExp {
 public:
  void add(double log_value);
  double value() const;  // -inf when empty
  void merge(const LogSumExp& other);

 private:
  double max_ = -INFINITY;
  double sum_ = 0.0;
};

}  // namespace qsym
