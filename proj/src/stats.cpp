#include "faceq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faceq/error.hpp"

namespace faceq {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch, "correlation needs two sequences of equal length >= 2");
  }
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::kDegenerateConstantInput, "correlation of a constant sequence");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch, "spearman needs two sequences of equal length >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyScores, "mean of an empty sequence");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyScores, "median of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double population_stddev(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kEmptyScores, "percentile of an empty sequence");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must lie in [0, 100]");
  }
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? v[lo] : v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace faceq
