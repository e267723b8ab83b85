#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace jumpscatter {

double mean(std::span<const double> x);
/// Population standard deviation (divides by n).
double stddev(std::span<const double> x);
double median(std::vector<double> x);

/// Empirical quantile as an order statistic: the ceil(p*n)-th smallest value.
/// Depends only on ranks, so monotone transforms commute with it.
double order_statistic_quantile(std::span<const double> sorted, double p);
std::vector<double> quantile_boundaries(std::span<const double> values, std::span<const double> probs);
/// Number of boundaries strictly below `value`; bins are (-inf,b0], (b0,b1], ...
int bin_index(double value, std::span<const double> boundaries);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
    double slope_stderr{0.0};
};
LinearFit least_squares_line(std::span<const double> x, std::span<const double> y);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is visited
/// exactly once; results written per-index are independent of the thread count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace jumpscatter
