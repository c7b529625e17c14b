#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "adamz/graph.hpp"
#include "adamz/rng.hpp"

namespace adamz {

// Central-finite-difference gradient checking. Uses forward evaluation only,
// so it is independent of the tape's backward pass.

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
};

// |a - b| relative to max(|a|, |b|), with a floor that turns the comparison
// absolute for near-zero gradients (finite differences of O(1) losses carry
// ~1e-11 cancellation noise).
inline double grad_rel_error(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
    return std::fabs(analytic - numeric) / denom;
}

// loss_fn must rebuild the forward pass from the current parameter values.
// Checks d(loss)/d(p[i]) for every parameter component when sample_per_param
// is 0, otherwise for at most that many seeded-random components per
// parameter.
inline GradCheckResult finite_difference_check(const std::function<double()>& loss_fn,
                                               const std::vector<Parameter*>& params,
                                               const std::vector<std::vector<double>>& analytic,
                                               double h = 1e-5, int sample_per_param = 0,
                                               uint64_t sample_seed = 0) {
    GradCheckResult res;
    Rng pick(Rng::derive(sample_seed, 0x6fd));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        std::vector<int> idx;
        if (sample_per_param <= 0 || p.size() <= sample_per_param) {
            idx.resize(static_cast<size_t>(p.size()));
            for (int i = 0; i < p.size(); ++i) idx[static_cast<size_t>(i)] = i;
        } else {
            for (int s = 0; s < sample_per_param; ++s) {
                idx.push_back(static_cast<int>(pick.below(static_cast<uint64_t>(p.size()))));
            }
        }
        for (int i : idx) {
            const double saved = p.value[static_cast<size_t>(i)];
            p.value[static_cast<size_t>(i)] = saved + h;
            const double lp = loss_fn();
            p.value[static_cast<size_t>(i)] = saved - h;
            const double lm = loss_fn();
            p.value[static_cast<size_t>(i)] = saved;
            const double numeric = (lp - lm) / (2.0 * h);
            const double err = grad_rel_error(analytic[pi][static_cast<size_t>(i)], numeric);
            res.max_rel_error = std::max(res.max_rel_error, err);
            ++res.checked;
        }
    }
    return res;
}

}  // namespace adamz
