#include "sqlforge/stats.hpp"

#include "sqlforge/error.hpp"
#include "sqlforge/util.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace sqlforge::stats {

BypassSummary bypass_rate(std::span<const eval::EvaluationRecord> records, std::string_view detector_id) {
    BypassSummary s;
    s.detector_id = std::string(detector_id);
    for (const auto& r : records) {
        if (r.detector_id != detector_id || r.outcome == eval::Outcome::error) continue;
        ++s.tested;
        if (r.outcome == eval::Outcome::bypassed) ++s.bypassed;
    }
    if (s.tested == 0) throw Error(ErrorKind::NoData, "no non-error records for detector " + s.detector_id);
    s.rate_pct = 100.0 * static_cast<double>(s.bypassed) / static_cast<double>(s.tested);
    return s;
}

MeanSigma mean_sigma(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::NoData, "no values");
    MeanSigma out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.sigma = std::sqrt(ss / (n - 1.0));
    }
    return out;
}

RunSummary summarize_runs(std::string config_digest, std::vector<double> rates_pct) {
    RunSummary s;
    s.config_digest = std::move(config_digest);
    const MeanSigma ms = mean_sigma(rates_pct);
    s.rates_pct = std::move(rates_pct);
    s.mean_pct = ms.mean;
    s.sigma_pct = ms.sigma;
    return s;
}

double overall_mean(std::span<const double> rates_pct) {
    if (rates_pct.empty()) throw Error(ErrorKind::NoData, "no per-target rates");
    return std::accumulate(rates_pct.begin(), rates_pct.end(), 0.0) / static_cast<double>(rates_pct.size());
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::pearson: return "pearson";
        case Method::spearman: return "spearman";
        case Method::kendall: return "kendall";
    }
    return "?";
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::InvalidParams, "correlation inputs differ in length");
    if (x.size() < 3) throw Error(ErrorKind::InvalidParams, "correlation needs at least 3 observations");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) throw Error(ErrorKind::DegenerateInput, "constant input has no correlation");
}

double product_moment(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double t_test_p(double r, std::size_t n) {
    if (std::abs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t dist(df);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

}  // namespace

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    CorrelationResult r{Method::pearson, product_moment(x, y), 1.0, x.size()};
    r.p_value = t_test_p(r.coefficient, r.n);
    return r;
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    CorrelationResult r{Method::spearman, product_moment(rx, ry), 1.0, x.size()};
    r.p_value = t_test_p(r.coefficient, r.n);
    return r;
}

std::vector<double> inversion_counts(std::size_t n) {
    // Mahonian numbers: row n from row n-1 by a sliding window of width n.
    std::vector<double> row{1.0};
    for (std::size_t m = 2; m <= n; ++m) {
        std::vector<double> next(row.size() + m - 1, 0.0);
        for (std::size_t k = 0; k < next.size(); ++k) {
            for (std::size_t j = 0; j < m && j <= k; ++j) {
                if (k - j < row.size()) next[k] += row[k - j];
            }
        }
        row = std::move(next);
    }
    return row;
}

CorrelationResult kendall(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    double concordant = 0.0, discordant = 0.0, tied_x = 0.0, tied_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0) tied_x += 1.0;
            if (dy == 0.0) tied_y += 1.0;
            if (dx == 0.0 || dy == 0.0) continue;
            if ((dx > 0) == (dy > 0)) concordant += 1.0;
            else discordant += 1.0;
        }
    }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double denom = std::sqrt((pairs - tied_x) * (pairs - tied_y));
    if (denom == 0.0) throw Error(ErrorKind::DegenerateInput, "kendall tau undefined");

    CorrelationResult r{Method::kendall, std::clamp((concordant - discordant) / denom, -1.0, 1.0), 1.0, n};

    if (n <= 10 && tied_x == 0.0 && tied_y == 0.0) {
        const auto counts = inversion_counts(n);
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto lo = static_cast<std::size_t>(std::min(concordant, discordant));
        double tail = 0.0;
        for (std::size_t k = 0; k <= lo; ++k) tail += counts[k];
        r.p_value = std::min(1.0, 2.0 * tail / total);
        return r;
    }

    // Tie groups for the variance correction.
    auto tie_sums = [](std::span<const double> v) {
        std::vector<double> sorted(v.begin(), v.end());
        std::sort(sorted.begin(), sorted.end());
        double a = 0.0, b = 0.0, c = 0.0;
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            a += t * (t - 1.0) * (2.0 * t + 5.0);
            b += t * (t - 1.0) * (t - 2.0);
            c += t * (t - 1.0);
            i = j;
        }
        return std::array<double, 3>{a, b, c};
    };
    const auto tx = tie_sums(x);
    const auto ty = tie_sums(y);
    const double nd = static_cast<double>(n);
    const double var = (nd * (nd - 1.0) * (2.0 * nd + 5.0) - tx[0] - ty[0]) / 18.0 +
                       tx[1] * ty[1] / (9.0 * nd * (nd - 1.0) * (nd - 2.0)) +
                       tx[2] * ty[2] / (2.0 * nd * (nd - 1.0));
    const double s = concordant - discordant;
    const double z = std::max(0.0, std::abs(s) - 1.0) / std::sqrt(var);
    const boost::math::normal_distribution<double> normal;
    r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(normal, z)), 0.0, 1.0);
    return r;
}

Interval bootstrap_ci(std::span<const double> samples, std::size_t resamples, double alpha, std::uint64_t seed,
                      std::size_t workers) {
    if (samples.size() < 2) throw Error(ErrorKind::NoData, "bootstrap needs at least 2 samples");
    if (resamples < 100) throw Error(ErrorKind::InvalidParams, "bootstrap needs at least 100 resamples");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidParams, "alpha must lie in (0, 1)");

    const std::size_t n = samples.size();
    std::vector<double> means(resamples);
    auto one = [&](std::size_t r) {
        Rng rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(r))));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += samples[rng.below(n)];
        means[r] = sum / static_cast<double>(n);
    };
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, resamples);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < resamples; r = next++) one(r);
            });
        }
    }
    std::sort(means.begin(), means.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(resamples - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, resamples - 1);
        const double frac = pos - static_cast<double>(lo);
        return means[lo] + (means[hi] - means[lo]) * frac;
    };
    return {quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)};
}

CorrelationRow correlate(std::string metric, std::span<const double> x, std::span<const double> y) {
    return {std::move(metric), pearson(x, y), spearman(x, y), kendall(x, y)};
}

std::string correlation_csv_header() { return "metric,pearson_r,pearson_p,spearman_rho,spearman_p,kendall_tau,kendall_p"; }

std::string correlation_csv_line(const CorrelationRow& row) {
    return csv_field(row.metric) + "," + fixed(row.pearson.coefficient, 3) + "," + fixed(row.pearson.p_value, 3) + "," +
           fixed(row.spearman.coefficient, 3) + "," + fixed(row.spearman.p_value, 3) + "," +
           fixed(row.kendall.coefficient, 3) + "," + fixed(row.kendall.p_value, 3);
}

}  // namespace sqlforge::stats
