#pragma once

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "adamz/graph.hpp"

namespace adamz {

enum class Adjustment { none, overshoot, stagnation };
const char* to_string(Adjustment a);

// Outcome of one optimizer step. pre_clip_norm is NaN for optimizers that do
// not clip. lr_after is the rate carried into the next step (it differs from
// lr_used only when AdamZ adjusted).
struct StepReport {
    double lr_used = 0.0;
    Adjustment adjustment = Adjustment::none;
    double pre_clip_norm = std::numeric_limits<double>::quiet_NaN();
    double lr_after = 0.0;
};

class Optimizer {
public:
    explicit Optimizer(std::vector<Parameter*> params) : params_(std::move(params)) {}
    virtual ~Optimizer() = default;

    // current_loss is consumed only by loss-tracking optimizers (AdamZ);
    // the others ignore it.
    virtual StepReport step(double current_loss) = 0;
    virtual double learning_rate() const = 0;
    virtual std::string_view name() const = 0;

    void zero_grad() {
        for (Parameter* p : params_) p->zero_grad();
    }

    // ASGD evaluates with averaged iterates; everyone else with the live ones.
    virtual bool has_eval_parameters() const { return false; }
    virtual std::vector<std::vector<double>> eval_parameters() const { return {}; }

    long step_count() const { return t_; }

protected:
    std::vector<Parameter*> params_;
    long t_ = 0;
};

// Rescale all gradients so their global L2 norm is at most max_norm; returns
// the pre-clip norm. Throws DivergenceError if any gradient is not finite.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

// --- configs (paper defaults) ------------------------------------------

struct SgdConfig {
    double lr = 0.01;
};

struct AsgdConfig {
    double lr = 0.01;
};

struct AdagradConfig {
    double lr = 0.01;
    double eps = 1e-8;
};

struct RmspropConfig {
    double lr = 0.01;
    double decay = 0.99;  // gamma
    double eps = 1e-8;
};

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamwConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // lambda
};

struct AdamzConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double gamma_over = 0.5;
    double gamma_stag = 1.2;
    double sigma_stag = 0.2;
    int patience = 100;           // p
    int stagnation_period = 10;   // s
    double max_grad_norm = 1.0;   // N_max
    double lr_min = 1e-7;
    double lr_max = 1.0;
};

// --- optimizers ----------------------------------------------------------

class Sgd : public Optimizer {
public:
    Sgd(std::vector<Parameter*> params, SgdConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "sgd"; }

private:
    SgdConfig cfg_;
};

class Asgd : public Optimizer {
public:
    Asgd(std::vector<Parameter*> params, AsgdConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "asgd"; }
    bool has_eval_parameters() const override { return true; }
    std::vector<std::vector<double>> eval_parameters() const override { return averaged_; }

private:
    AsgdConfig cfg_;
    std::vector<std::vector<double>> averaged_;
};

class Adagrad : public Optimizer {
public:
    Adagrad(std::vector<Parameter*> params, AdagradConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "adagrad"; }

private:
    AdagradConfig cfg_;
    std::vector<std::vector<double>> accum_;  // G_t
};

class Rmsprop : public Optimizer {
public:
    Rmsprop(std::vector<Parameter*> params, RmspropConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "rmsprop"; }

private:
    RmspropConfig cfg_;
    std::vector<std::vector<double>> sq_avg_;  // E[g^2]_t
};

class Adam : public Optimizer {
public:
    Adam(std::vector<Parameter*> params, AdamConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "adam"; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
};

class Adamax : public Optimizer {
public:
    Adamax(std::vector<Parameter*> params, AdamConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "adamax"; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, u_;  // u: infinity-norm accumulator
};

class Nadam : public Optimizer {
public:
    Nadam(std::vector<Parameter*> params, AdamConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "nadam"; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_, mhat_prev_;
};

class Adamw : public Optimizer {
public:
    Adamw(std::vector<Parameter*> params, AdamwConfig cfg);
    StepReport step(double) override;
    double learning_rate() const override { return cfg_.lr; }
    std::string_view name() const override { return "adamw"; }

private:
    AdamwConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
};

// Loss-history ring buffer plus the dynamic learning rate and its adjustment
// rules. Holds exactly patience+1 entries; older losses are unreachable.
class AdamzController {
public:
    explicit AdamzController(const AdamzConfig& cfg);

    void record_loss(double loss);

    // Applies at most one adjustment (overshoot wins over stagnation), then
    // clamps the rate into [lr_min, lr_max]. Adjustments are suppressed until
    // patience+1 losses have been recorded.
    Adjustment adjust_learning_rate();

    double learning_rate() const { return lr_; }
    int history_size() const { return static_cast<int>(history_.size()); }
    const AdamzConfig& config() const { return cfg_; }

private:
    double window_std(int last_n) const;  // population std over the newest last_n entries

    AdamzConfig cfg_;
    double lr_;
    std::vector<double> history_;  // ring buffer, capacity patience+1
};

class Adamz : public Optimizer {
public:
    // Accepts the closed degenerate bounds (gamma_over = 1, gamma_stag = 1,
    // max_grad_norm = inf) so the controller can be switched off; the
    // make_optimizer factory enforces the strict constraints.
    Adamz(std::vector<Parameter*> params, AdamzConfig cfg);

    // In order: clip gradients to max_grad_norm, Adam-style update at the
    // current rate, record the loss, adjust the rate for the next step.
    StepReport step(double current_loss) override;
    double learning_rate() const override { return controller_.learning_rate(); }
    std::string_view name() const override { return "adamz"; }
    const AdamzController& controller() const { return controller_; }

private:
    AdamzConfig cfg_;
    AdamzController controller_;
    std::vector<std::vector<double>> m_, v_;
};

// --- factory -------------------------------------------------------------

// The nine supported kinds, in the paper's reporting order.
const std::vector<std::string>& optimizer_kinds();

// Override keys: lr, beta1, beta2, eps, gamma_over, gamma_stag, sigma_stag,
// patience, stagnation_period, max_grad_norm, lr_min, lr_max, weight_decay,
// rms_decay. Unknown kinds, keys a kind does not accept, and constraint
// violations all throw ValidationError.
std::unique_ptr<Optimizer> make_optimizer(const std::string& kind,
                                          std::vector<Parameter*> params,
                                          const std::map<std::string, double>& overrides = {});

// True if `key` is a hyperparameter of `kind` (used by the CLI to fan out
// unprefixed --set overrides).
bool optimizer_accepts_key(const std::string& kind, const std::string& key);

}  // namespace adamz
