#pragma once

#include "stgnn/temporal_graph.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace stgnn {

/// Continuous power law p(x) = c x^{-alpha} on [xmin, inf).
struct PowerLawFit {
    double alpha = 0.0;
    double xmin = 0.0;
    /// (alpha - 1) * xmin^{1 - alpha}
    double c = 0.0;
    std::size_t n_tail = 0;
    double ks_distance = 0.0;
};

struct InterEventTimes {
    std::vector<double> intervals;
    std::size_t zeros_dropped = 0;
};

/// Consecutive gaps of every pair with at least two events, pooled over all
/// pairs. Zero gaps are dropped and counted. Throws Error when no pair has a
/// repeat contact.
[[nodiscard]] InterEventTimes collect_inter_event_times(const TemporalGraph& g);

[[nodiscard]] inline double power_law_constant(double alpha, double xmin) {
    return (alpha - 1.0) * std::pow(xmin, 1.0 - alpha);
}

/// Maximum-likelihood exponent for a fixed cutoff, with the KS distance of the
/// resulting tail fit.
[[nodiscard]] PowerLawFit fit_power_law_fixed_xmin(std::span<const double> xs, double xmin);

/// Maximum-likelihood fit whose cutoff minimizes the KS distance between the
/// empirical and fitted tail CDFs. Candidate cutoffs are the distinct sample
/// values, quantile-subsampled to at most `max_candidates`; equal distances
/// resolve to the smaller cutoff.
[[nodiscard]] PowerLawFit fit_power_law(std::span<const double> xs,
                                        std::size_t max_candidates = 250);

/// Window that is expected to cover a fraction `p` of the inter-event gaps:
/// ((alpha - 1) / (c (1 - p)))^{1 / (alpha - 1)}.
[[nodiscard]] double intimate_window_size(const PowerLawFit& fit, double p);

/// xmin (1 - p)^{-1 / (alpha - 1)}, the inverse of the fitted CCDF.
[[nodiscard]] double power_law_inverse_ccdf(double alpha, double xmin, double p);

} // namespace stgnn
