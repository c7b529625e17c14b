#pragma once

#include <cstdint>
#include <vector>

namespace adamz::reference {

// Straight-line scalar-loop reference trajectories for every optimizer.
// These share no code with the adamz::Optimizer implementations; they exist
// to check them (selftest, unit tests, acceptance suite).
//
// Inputs: theta0[P] initial parameters, grads[T][P] per-step gradients.
// Output: parameter vector after each of the T steps.

using Trajectory = std::vector<std::vector<double>>;

Trajectory sgd(std::vector<double> theta, const Trajectory& grads, double lr);

struct AsgdResult {
    Trajectory live;
    Trajectory averaged;  // brute-force mean of the post-update iterates
};
AsgdResult asgd(std::vector<double> theta, const Trajectory& grads, double lr);

Trajectory adagrad(std::vector<double> theta, const Trajectory& grads, double lr, double eps);
Trajectory rmsprop(std::vector<double> theta, const Trajectory& grads, double lr, double decay,
                   double eps);
Trajectory adam(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                double beta2, double eps);
Trajectory adamax(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                  double beta2, double eps);
Trajectory nadam(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                 double beta2, double eps);
Trajectory adamw(std::vector<double> theta, const Trajectory& grads, double lr, double beta1,
                 double beta2, double eps, double weight_decay);

struct AdamzRefConfig {
    double lr, beta1, beta2, eps;
    double gamma_over, gamma_stag, sigma_stag;
    int patience, stagnation_period;
    double max_grad_norm;
    double lr_min, lr_max;
};

struct AdamzRefResult {
    Trajectory thetas;
    std::vector<double> lr_used;        // rate applied at each step
    std::vector<double> lr_after;       // rate after the step's adjustment
    std::vector<int> adjustments;       // 0 none, 1 overshoot, 2 stagnation
    std::vector<double> pre_clip_norm;
};
AdamzRefResult adamz(std::vector<double> theta, const Trajectory& grads,
                     const std::vector<double>& losses, const AdamzRefConfig& cfg);

// Hand simulation of just the learning-rate rules over a loss sequence
// (no parameters involved); used by the controller replay checks.
struct ControllerTrace {
    std::vector<double> lr_after;
    std::vector<int> adjustments;
};
ControllerTrace controller(const std::vector<double>& losses, double lr0, double gamma_over,
                           double gamma_stag, double sigma_stag, int patience,
                           int stagnation_period, double lr_min, double lr_max);

}  // namespace adamz::reference
