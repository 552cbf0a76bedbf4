#include "accumulators.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace qsym {

BlockedSums::BlockedSums(std::size_t channels, std::size_t capacity)
    : channels_(channels), capacity_(capacity) {
  if (channels == 0) throw InvalidArgument("blocked sums: need at least one channel");
  if (capacity < 4 || capacity % 2 != 0)
    throw InvalidArgument("blocked sums: capacity must be even and >= 4");
  data_.assign(capacity * channels, 0.0);
}

void BlockedSums::rescale(double factor) {
  const std::size_t used = (full_blocks_ + 1) * channels_;
  for (std::size_t k = 0; k < used && k < data_.size(); ++k) data_[k] *= factor;
}

double BlockedSums::raise_reference(double log_magnitude) {
  if (!has_ref_) {
    has_ref_ = true;
    log_ref_ = log_magnitude;
    return 1.0;
  }
  if (!(log_magnitude > log_ref_)) return 1.0;
  const double factor = std::exp(log_ref_ - log_magnitude);
  rescale(factor);
  log_ref_ = log_magnitude;
  return factor;
}

void BlockedSums::halve() {
  const std::size_t pairs = full_blocks_ / 2;
  for (std::size_t b = 0; b < pairs; ++b) {
    double* dst = data_.data() + b * channels_;
    const double* a = data_.data() + 2 * b * channels_;
    const double* c = a + channels_;
    for (std::size_t k = 0; k < channels_; ++k) dst[k] = a[k] + c[k];
  }
  std::fill(data_.begin() + pairs * channels_, data_.end(), 0.0);
  full_blocks_ = pairs;
  block_length_ *= 2;
}

void BlockedSums::commit_sample() {
  ++samples_;
  if (++in_current_ < block_length_) return;
  in_current_ = 0;
  if (++full_blocks_ == capacity_) halve();
}

std::vector<double> BlockedSums::totals() const {
  std::vector<double> t(channels_, 0.0);
  const std::size_t n = block_count();
  for (std::size_t b = 0; b < n; ++b) {
    const double* src = data_.data() + b * channels_;
    for (std::size_t k = 0; k < channels_; ++k) t[k] += src[k];
  }
  return t;
}

void BlockedSums::merge(const BlockedSums& other) {
  if (other.channels_ != channels_) throw InvalidArgument("blocked sums: channel count mismatch");
  if (other.samples_ == 0) return;
  if (samples_ == 0) {
    const std::size_t cap = capacity_;
    *this = other;
    if (cap != capacity_) throw InvalidArgument("blocked sums: capacity mismatch");
    return;
  }
  double other_factor = 1.0;
  if (other.log_ref_ > log_ref_) {
    rescale(std::exp(log_ref_ - other.log_ref_));
    log_ref_ = other.log_ref_;
  } else {
    other_factor = std::exp(other.log_ref_ - log_ref_);
  }

  using Blocks = std::vector<std::vector<double>>;
  auto extract = [&](const BlockedSums& src, double factor) {
    Blocks out;
    for (std::size_t b = 0; b < src.block_count(); ++b) {
      auto blk = src.block(b);
      std::vector<double> v(blk.begin(), blk.end());
      for (double& x : v) x *= factor;
      out.push_back(std::move(v));
    }
    return out;
  };
  auto pair_merge = [&](Blocks& blocks) {
    Blocks merged;
    for (std::size_t b = 0; b < blocks.size(); b += 2) {
      std::vector<double> v = blocks[b];
      if (b + 1 < blocks.size())
        for (std::size_t k = 0; k < channels_; ++k) v[k] += blocks[b + 1][k];
      merged.push_back(std::move(v));
    }
    blocks = std::move(merged);
  };

  Blocks mine = extract(*this, 1.0);
  Blocks theirs = extract(other, other_factor);
  std::size_t len_mine = block_length_, len_theirs = other.block_length_;
  while (len_mine < len_theirs) {
    pair_merge(mine);
    len_mine *= 2;
  }
  while (len_theirs < len_mine) {
    pair_merge(theirs);
    len_theirs *= 2;
  }
  for (auto& b : theirs) mine.push_back(std::move(b));
  while (mine.size() >= capacity_) {
    pair_merge(mine);
    len_mine *= 2;
  }
  std::fill(data_.begin(), data_.end(), 0.0);
  for (std::size_t b = 0; b < mine.size(); ++b)
    std::copy(mine[b].begin(), mine[b].end(), data_.begin() + b * channels_);
  full_blocks_ = mine.size();
  in_current_ = 0;
  block_length_ = len_mine;
  samples_ += other.samples_;
}

std::vector<Estimate> block_jackknife(const BlockedSums& sums, const SumsFunction& f,
                                      std::size_t outputs, std::size_t min_blocks) {
  std::vector<Estimate> result(outputs);
  const std::vector<double> totals = sums.totals();
  std::vector<double> full(outputs);
  f(totals, full);
  for (std::size_t o = 0; o < outputs; ++o) result[o].value = full[o];

  const std::size_t nblocks = sums.block_count();
  if (nblocks < 2) {
    for (auto& r : result) r.error = std::nan("");
    return result;
  }

  // errors[level][output]
  std::vector<std::vector<double>> errors;
  std::vector<double> leave_out(sums.channels());
  std::vector<double> group(sums.channels());
  std::vector<double> theta(outputs);
  for (std::size_t width = 1;; width *= 2) {
    const std::size_t groups = (nblocks + width - 1) / width;
    if (groups < 2 || (width > 1 && groups < min_blocks)) break;
    std::vector<double> mean(outputs, 0.0), sq(outputs, 0.0);
    std::vector<std::vector<double>> thetas(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      std::fill(group.begin(), group.end(), 0.0);
      for (std::size_t b = g * width; b < std::min(nblocks, (g + 1) * width); ++b) {
        auto blk = sums.block(b);
        for (std::size_t k = 0; k < group.size(); ++k) group[k] += blk[k];
      }
      for (std::size_t k = 0; k < group.size(); ++k) leave_out[k] = totals[k] - group[k];
      f(leave_out, theta);
      thetas[g] = theta;
      for (std::size_t o = 0; o < outputs; ++o) mean[o] += theta[o];
    }
    for (std::size_t o = 0; o < outputs; ++o) mean[o] /= static_cast<double>(groups);
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t o = 0; o < outputs; ++o) {
        const double d = thetas[g][o] - mean[o];
        sq[o] += d * d;
      }
    std::vector<double> err(outputs);
    const double n = static_cast<double>(groups);
    for (std::size_t o = 0; o < outputs; ++o) err[o] = std::sqrt((n - 1.0) / n * sq[o]);
    errors.push_back(std::move(err));
  }

  for (std::size_t o = 0; o < outputs; ++o) {
    std::size_t level = 0;
    while (level + 1 < errors.size() && errors[level + 1][o] > 1.1 * errors[level][o]) ++level;
    result[o].error = errors[level][o];
  }
  return result;
}

double jackknife_error(std::size_t n, std::size_t blocks,
                       const std::function<double(std::size_t, std::size_t)>& f) {
  blocks = std::min(blocks, n);
  if (blocks < 2) return std::nan("");
  std::vector<double> theta(blocks);
  double mean = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * n / blocks;
    const std::size_t hi = (b + 1) * n / blocks;
    theta[b] = f(lo, hi);
    mean += theta[b];
  }
  mean /= static_cast<double>(blocks);
  double sq = 0.0;
  for (double t : theta) sq += (t - mean) * (t - mean);
  const double nb = static_cast<double>(blocks);
  return std::sqrt((nb - 1.0) / nb * sq);
}

void LogSumExp::add(double log_value) {
  if (log_value == -INFINITY) return;
  if (log_value > max_) {
    sum_ = sum_ * std::exp(max_ - log_value) + 1.0;
    max_ = log_value;
  } else {
    sum_ += std::exp(log_value - max_);
  }
}

double LogSumExp::value() const { return sum_ > 0.0 ? max_ + std::log(sum_) : -INFINITY; }

void LogSumExp::merge(const LogSumExp& other) {
  if (other.sum_ <= 0.0) return;
  if (other.max_ > max_) {
    sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
    max_ = other.max_;
  } else {
    sum_ += other.sum_ * std::exp(other.max_ - max_);
  }
}

}  // namespace qsym
