#include "stgnn/powerlaw.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace stgnn {

InterEventTimes collect_inter_event_times(const TemporalGraph& g) {
    InterEventTimes out;
    bool any_repeat = false;
    for (const auto& [key, times] : g.pair_index()) {
        if (times.size() < 2) {
            continue;
        }
        any_repeat = true;
        for (std::size_t i = 1; i < times.size(); ++i) {
            double gap = times[i] - times[i - 1];
            if (gap > 0.0) {
                out.intervals.push_back(gap);
            } else {
                ++out.zeros_dropped;
            }
        }
    }
    if (!any_repeat) {
        throw Error("no node pair has two or more events; the window size must be given explicitly");
    }
    if (out.zeros_dropped > 0) {
        std::cerr << "warning: dropped " << out.zeros_dropped << " zero inter-event gap(s)\n";
    }
    return out;
}

namespace {

std::vector<double> sorted_positive(std::span<const double> xs) {
    std::vector<double> sorted(xs.begin(), xs.end());
    for (double x : sorted) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw ContractError("power-law samples must be finite and positive");
        }
    }
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

// KS distance of the tail sorted[first..] against the fitted CDF. Runs of
// equal values are treated as one jump of the empirical CDF.
double ks_distance(std::span<const double> tail, double alpha, double xmin) {
    const double n = static_cast<double>(tail.size());
    double worst = 0.0;
    std::size_t j = 0;
    while (j < tail.size()) {
        std::size_t k = j;
        while (k < tail.size() && tail[k] == tail[j]) {
            ++k;
        }
        double model = 1.0 - std::pow(tail[j] / xmin, 1.0 - alpha);
        double below = static_cast<double>(j) / n;
        double above = static_cast<double>(k) / n;
        worst = std::max({worst, std::abs(model - below), std::abs(above - model)});
        j = k;
    }
    return worst;
}

PowerLawFit fit_tail(std::span<const double> tail, double log_sum, double xmin) {
    PowerLawFit fit;
    fit.xmin = xmin;
    fit.n_tail = tail.size();
    double denom = log_sum - static_cast<double>(tail.size()) * std::log(xmin);
    if (!(denom > 0.0)) {
        throw Error("degenerate power-law fit: all tail values equal xmin");
    }
    fit.alpha = 1.0 + static_cast<double>(tail.size()) / denom;
    fit.c = power_law_constant(fit.alpha, fit.xmin);
    fit.ks_distance = ks_distance(tail, fit.alpha, fit.xmin);
    return fit;
}

} // namespace

PowerLawFit fit_power_law_fixed_xmin(std::span<const double> xs, double xmin) {
    if (!(xmin > 0.0)) {
        throw ContractError("xmin must be positive");
    }
    auto sorted = sorted_positive(xs);
    auto first = std::lower_bound(sorted.begin(), sorted.end(), xmin);
    std::span<const double> tail(&*first, static_cast<std::size_t>(sorted.end() - first));
    if (tail.empty()) {
        throw Error("no samples at or above xmin");
    }
    double log_sum = 0.0;
    for (double x : tail) {
        log_sum += std::log(x);
    }
    return fit_tail(tail, log_sum, xmin);
}

PowerLawFit fit_power_law(std::span<const double> xs, std::size_t max_candidates) {
    if (xs.size() < 10) {
        throw ContractError("power-law fit needs at least 10 samples");
    }
    if (max_candidates == 0) {
        throw ContractError("max_candidates must be positive");
    }
    auto sorted = sorted_positive(xs);
    if (sorted.front() == sorted.back()) {
        throw Error("degenerate power-law fit: all samples are identical");
    }

    // First index of each distinct value; the largest value is never a
    // candidate because its tail has no spread.
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i == 0 || sorted[i] != sorted[i - 1]) {
            starts.push_back(i);
        }
    }
    starts.pop_back();

    std::vector<std::size_t> candidates;
    if (starts.size() <= max_candidates) {
        candidates = starts;
    } else {
        const double last = static_cast<double>(starts.size() - 1);
        const double steps = static_cast<double>(max_candidates - 1);
        for (std::size_t i = 0; i < max_candidates; ++i) {
            auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(i) * last / steps));
            if (candidates.empty() || candidates.back() != starts[idx]) {
                candidates.push_back(starts[idx]);
            }
        }
    }

    // suffix_log[i] = sum of log(sorted[i..])
    std::vector<double> suffix_log(sorted.size() + 1, 0.0);
    for (std::size_t i = sorted.size(); i-- > 0;) {
        suffix_log[i] = suffix_log[i + 1] + std::log(sorted[i]);
    }

    PowerLawFit best;
    best.ks_distance = std::numeric_limits<double>::infinity();
    for (std::size_t start : candidates) {
        std::span<const double> tail(sorted.data() + start, sorted.size() - start);
        PowerLawFit fit = fit_tail(tail, suffix_log[start], sorted[start]);
        if (fit.ks_distance < best.ks_distance) {
            best = fit;
        }
    }
    return best;
}

double intimate_window_size(const PowerLawFit& fit, double p) {
    if (!(fit.alpha > 1.0) || !(fit.xmin > 0.0) || !(fit.c > 0.0)) {
        throw ContractError("invalid power-law fit");
    }
    if (!(p >= 0.0)) {
        throw ContractError("coverage proportion must be non-negative");
    }
    if (p >= 1.0) {
        throw ContractError("coverage proportion must be below 1 (the window would be infinite)");
    }
    return std::pow((fit.alpha - 1.0) / (fit.c * (1.0 - p)), 1.0 / (fit.alpha - 1.0));
}

double power_law_inverse_ccdf(double alpha, double xmin, double p) {
    return xmin * std::pow(1.0 - p, -1.0 / (alpha - 1.0));
}

} // namespace stgnn
