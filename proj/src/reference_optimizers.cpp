#include "adamz/reference_optimizers.hpp"

#include <algorithm>
#include <cmath>

// Deliberately plain translations of the published update rules, one loop
// per optimizer, nothing shared with optim.cpp.

namespace adamz::reference {

Trajectory sgd(std::vector<double> theta, const Trajectory& grads, double lr) {
    Trajectory out;
    for (const auto& g : grads) {
        for (size_t i = 0; i < theta.size(); ++i) theta[i] = theta[i] - lr * g[i];
        out.push_back(theta);
    }
    return out;
}

AsgdResult asgd(std::vector<double> theta, const Trajectory& grads, double lr) {
    AsgdResult res;
    Trajectory iterates;
    for (const auto& g : grads) {
        for (size_t i = 0; i < theta.size(); ++i) theta[i] = theta[i] - lr * g[i];
        iterates.push_back(theta);
        res.live.push_back(theta);
        // brute-force mean over all post-update iterates so far
        std::vector<double> mean(theta.size(), 0.0);
        for (const auto& it : iterates) {
            for (size_t i = 0; i < mean.size(); ++i) mean[i] += it[i];
        }
        for (size_t i = 0; i < mean.size(); ++i) mean[i] /= static_cast<double>(iterates.size());
        res.averaged.push_back(mean);
    }
    return res;
}

Trajectory adagrad(std::vector<double> theta, const Trajectory& grads, double lr, double eps) {
    Trajectory out;
    std::vector<double> G(theta.size(), 0.0);
    for (const auto& g : grads) {
        for (size_t i = 0; i < theta.size(); ++i) {
            G[i] = G[i] + g[i] * g[i];
            theta[i] = theta[i] - lr * g[i] / std::sqrt(G[i] + eps);
        }
        out.push_back(theta);
    }
    return out;
}

Trajectory rmsprop(std::vector<double> theta, const Trajectory& grads, double lr, double decay,
                   double eps) {
    Trajectory out;
    std::vector<double> E(theta.size(), 0.0);
    for (const auto& g : grads) {
        for (size_t i = 0; i < theta.size(); ++i) {
            E[i] = decay * E[i] + (1.0 - decay) * g[i] * g[i];
            theta[i] = theta[i] - lr * g[i] / std::sqrt(E[i] + eps);
        }
        out.push_back(theta);
    }
    return out;
}

Trajectory adam(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                double beta2, double eps) {
    Trajectory out;
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
    long t = 0;
    for (const auto& g : grads) {
        ++t;
        for (size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double mhat = m[i] / (1.0 - std::pow(beta1, static_cast<double>(t)));
            const double vhat = v[i] / (1.0 - std::pow(beta2, static_cast<double>(t)));
            theta[i] = theta[i] - lr * mhat / (std::sqrt(vhat) + eps);
        }
        out.push_back(theta);
    }
    return out;
}

Trajectory adamax(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                  double beta2, double eps) {
    Trajectory out;
    std::vector<double> m(theta.size(), 0.0), u(theta.size(), 0.0);
    long t = 0;
    for (const auto& g : grads) {
        ++t;
        for (size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            u[i] = std::max(beta2 * u[i], std::fabs(g[i]));
            const double mhat = m[i] / (1.0 - std::pow(beta1, static_cast<double>(t)));
            theta[i] = theta[i] - lr * mhat / std::max(u[i], eps);
        }
        out.push_back(theta);
    }
    return out;
}

Trajectory nadam(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                 double beta2, double eps) {
    Trajectory out;
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), mhat_prev(theta.size(), 0.0);
    long t = 0;
    for (const auto& g : grads) {
        ++t;
        for (size_t i = 0; i < theta.size(); ++i) {
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double vhat = v[i] / (1.0 - std::pow(beta2, static_cast<double>(t)));
            theta[i] = theta[i] - lr * (beta1 * mhat_prev[i] + (1.0 - beta1) * g[i]) /
                                      (std::sqrt(vhat) + eps);
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            mhat_prev[i] = m[i] / (1.0 - std::pow(beta1, static_cast<double>(t)));
        }
        out.push_back(theta);
    }
    return out;
}

Trajectory adamw(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                 double beta2, double eps, double weight_decay) {
    Trajectory out;
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
    long t = 0;
    for (const auto& g : grads) {
        ++t;
        for (size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double mhat = m[i] / (1.0 - std::pow(beta1, static_cast<double>(t)));
            const double vhat = v[i] / (1.0 - std::pow(beta2, static_cast<double>(t)));
            theta[i] = theta[i] - lr * mhat / (std::sqrt(vhat) + eps) - lr * weight_decay * theta[i];
        }
        out.push_back(theta);
    }
    return out;
}

namespace {

double pop_std(const std::vector<double>& xs, size_t first, size_t last) {
    const double n = static_cast<double>(last - first);
    double mean = 0.0;
    for (size_t i = first; i < last; ++i) mean += xs[i];
    mean /= n;
    double var = 0.0;
    for (size_t i = first; i < last; ++i) var += (xs[i] - mean) * (xs[i] - mean);
    return std::sqrt(var / n);
}

// One adjustment decision over a full history vector; window = newest
// patience+1 entries, which the caller guarantees exist.
int adjust(std::vector<double>& history, double& lr, double gamma_over, double gamma_stag,
           double sigma_stag, int patience, int stagnation_period, double lr_min, double lr_max) {
    int tag = 0;
    if (history.size() >= static_cast<size_t>(patience) + 1) {
        const size_t last = history.size();
        const size_t first = last - static_cast<size_t>(patience) - 1;
        double mx = history[first], mn = history[first];
        for (size_t i = first; i < last; ++i) {
            mx = std::max(mx, history[i]);
            mn = std::min(mn, history[i]);
        }
        if (history.back() >= mx && mx > mn) {
            lr *= gamma_over;
            tag = 1;
        } else {
            const size_t sfirst = last - static_cast<size_t>(stagnation_period) - 1;
            if (pop_std(history, sfirst, last) < sigma_stag * pop_std(history, first, last)) {
                lr *= gamma_stag;
                tag = 2;
            }
        }
    }
    lr = std::max(lr_min, std::min(lr, lr_max));
    return tag;
}

}  // namespace

AdamzRefResult adamz(std::vector<double> theta, const Trajectory& grads,
                     const std::vector<double>& losses, const AdamzRefConfig& cfg) {
    AdamzRefResult res;
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
    std::vector<double> history;
    double lr = cfg.lr;
    long t = 0;
    for (size_t step = 0; step < grads.size(); ++step) {
        std::vector<double> g = grads[step];
        double sq = 0.0;
        for (double gi : g) sq += gi * gi;
        const double norm = std::sqrt(sq);
        res.pre_clip_norm.push_back(norm);
        if (norm > cfg.max_grad_norm) {
            for (double& gi : g) gi *= cfg.max_grad_norm / norm;
        }
        res.lr_used.push_back(lr);
        ++t;
        for (size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
            const double vhat = v[i] / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
            theta[i] = theta[i] - lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        res.thetas.push_back(theta);
        history.push_back(losses[step]);
        res.adjustments.push_back(adjust(history, lr, cfg.gamma_over, cfg.gamma_stag,
                                         cfg.sigma_stag, cfg.patience, cfg.stagnation_period,
                                         cfg.lr_min, cfg.lr_max));
        res.lr_after.push_back(lr);
    }
    return res;
}

ControllerTrace controller(const std::vector<double>& losses, double lr0, double gamma_over,
                           double gamma_stag, double sigma_stag, int patience,
                           int stagnation_period, double lr_min, double lr_max) {
    ControllerTrace trace;
    std::vector<double> history;
    double lr = lr0;
    for (double loss : losses) {
        history.push_back(loss);
        trace.adjustments.push_back(adjust(history, lr, gamma_over, gamma_stag, sigma_stag,
                                           patience, stagnation_period, lr_min, lr_max));
        trace.lr_after.push_back(lr);
    }
    return trace;
}

}  // namespace adamz::reference
