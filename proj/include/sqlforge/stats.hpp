#pragma once
// Bypass-rate aggregation, run summaries, correlation coefficients with
// p-values, and percentile bootstrap intervals.

#include "sqlforge/evaluation.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge::stats {

struct BypassSummary {
    std::string detector_id;
    std::size_t bypassed = 0;
    std::size_t tested = 0;  // error verdicts excluded
    double rate_pct = 0.0;
};

/// Throws NoData when the detector has no non-error records.
BypassSummary bypass_rate(std::span<const eval::EvaluationRecord> records, std::string_view detector_id);

struct MeanSigma {
    double mean = 0.0;
    std::optional<double> sigma;  // sample deviation; absent for a single value
};

/// Throws NoData on an empty list.
MeanSigma mean_sigma(std::span<const double> values);

struct RunSummary {
    std::string config_digest;
    std::vector<double> rates_pct;
    double mean_pct = 0.0;
    std::optional<double> sigma_pct;
};

RunSummary summarize_runs(std::string config_digest, std::vector<double> rates_pct);

/// Unweighted mean over per-target rates.
double overall_mean(std::span<const double> rates_pct);

enum class Method { pearson, spearman, kendall };
std::string_view to_string(Method m);

struct CorrelationResult {
    Method method = Method::pearson;
    double coefficient = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// All three require equal lengths, n >= 3 (InvalidParams) and non-constant
/// inputs (DegenerateInput). Pearson and Spearman p-values are two-sided
/// from the t distribution with n-2 degrees of freedom.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

/// Tau-b. Exact two-sided p from the permutation distribution when n <= 10
/// and neither input has ties; otherwise the normal approximation with
/// continuity correction and tie-corrected variance.
CorrelationResult kendall(std::span<const double> x, std::span<const double> y);

/// Ranks starting at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Number of permutations of n items with exactly k inversions, k = 0..n(n-1)/2.
std::vector<double> inversion_counts(std::size_t n);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap of the mean: `resamples` draws with replacement,
/// (alpha/2, 1-alpha/2) quantiles with linear interpolation. Each resample
/// uses its own derived seed, so the result does not depend on `workers`.
Interval bootstrap_ci(std::span<const double> samples, std::size_t resamples, double alpha,
                      std::uint64_t seed = 0, std::size_t workers = 0);

struct CorrelationRow {
    std::string metric;
    CorrelationResult pearson;
    CorrelationResult spearman;
    CorrelationResult kendall;
};

CorrelationRow correlate(std::string metric, std::span<const double> x, std::span<const double> y);

std::string correlation_csv_header();
std::string correlation_csv_line(const CorrelationRow& row);

}  // namespace sqlforge::stats
