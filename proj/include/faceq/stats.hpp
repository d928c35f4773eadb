#pragma once

#include <span>
#include <vector>

namespace faceq {

// 1-based ranks; tied values share the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of tie-averaged ranks. Throws LengthMismatch for
// unequal or < 2 lengths, DegenerateConstantInput if either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

double pearson(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
// Mean of the two middle values for even lengths.
double median(std::span<const double> values);
// Divide-by-N standard deviation.
double population_stddev(std::span<const double> values);
double sample_stddev(std::span<const double> values);

// Linear interpolation between closest ranks (numpy's default), p in [0, 100].
double percentile(std::span<const double> values, double p);

}  // namespace faceq
