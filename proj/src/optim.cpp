#include "adamz/optim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace adamz {

namespace {

std::vector<std::vector<double>> zero_buffers(const std::vector<Parameter*>& params) {
    std::vector<std::vector<double>> out;
    out.reserve(params.size());
    for (const Parameter* p : params) out.emplace_back(p->value.size(), 0.0);
    return out;
}

// The Adam update rule, shared by Adam and AdamZ so that AdamZ with its
// controller disabled is bit-identical to Adam.
void adam_update_buffers(std::vector<Parameter*>& params, std::vector<std::vector<double>>& m,
                         std::vector<std::vector<double>>& v, long t, double lr, double beta1,
                         double beta2, double eps) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        auto& mp = m[pi];
        auto& vp = v[pi];
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            mp[i] = beta1 * mp[i] + (1.0 - beta1) * g;
            vp[i] = beta2 * vp[i] + (1.0 - beta2) * g * g;
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

[[noreturn]] void fail_constraint(const std::string& msg) { throw ValidationError(msg); }

void require(bool ok, const std::string& constraint, double got) {
    if (!ok) {
        std::ostringstream os;
        os << constraint << " (got " << got << ")";
        fail_constraint(os.str());
    }
}

double population_std(const double* x, int n) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        var += d * d;
    }
    return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

const char* to_string(Adjustment a) {
    switch (a) {
        case Adjustment::overshoot: return "overshoot";
        case Adjustment::stagnation: return "stagnation";
        default: return "none";
    }
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
    if (!(max_norm > 0.0)) fail_constraint("max_grad_norm must be positive");
    double sq = 0.0;
    for (const Parameter* p : params) {
        for (double g : p->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) {
        throw DivergenceError("gradient norm is not finite; training has diverged");
    }
    if (norm > max_norm) {
        const double s = max_norm / norm;
        for (Parameter* p : params) {
            for (double& g : p->grad) g *= s;
        }
    }
    return norm;
}

// --- SGD family ------------------------------------------------------------

Sgd::Sgd(std::vector<Parameter*> params, SgdConfig cfg) : Optimizer(std::move(params)), cfg_(cfg) {
    require(cfg.lr > 0.0, "lr must be positive", cfg.lr);
}

StepReport Sgd::step(double) {
    ++t_;
    for (Parameter* p : params_) {
        for (size_t i = 0; i < p->value.size(); ++i) p->value[i] -= cfg_.lr * p->grad[i];
    }
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

Asgd::Asgd(std::vector<Parameter*> params, AsgdConfig cfg) : Optimizer(std::move(params)), cfg_(cfg) {
    require(cfg.lr > 0.0, "lr must be positive", cfg.lr);
    averaged_ = zero_buffers(params_);
}

StepReport Asgd::step(double) {
    ++t_;
    const double inv_t = 1.0 / static_cast<double>(t_);
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        auto& avg = averaged_[pi];
        for (size_t i = 0; i < p.value.size(); ++i) {
            p.value[i] -= cfg_.lr * p.grad[i];
            avg[i] += (p.value[i] - avg[i]) * inv_t;
        }
    }
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

Adagrad::Adagrad(std::vector<Parameter*> params, AdagradConfig cfg)
    : Optimizer(std::move(params)), cfg_(cfg) {
    require(cfg.lr > 0.0, "lr must be positive", cfg.lr);
    require(cfg.eps > 0.0, "eps must be positive", cfg.eps);
    accum_ = zero_buffers(params_);
}

StepReport Adagrad::step(double) {
    ++t_;
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        auto& acc = accum_[pi];
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            acc[i] += g * g;
            p.value[i] -= cfg_.lr * g / std::sqrt(acc[i] + cfg_.eps);
        }
    }
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

Rmsprop::Rmsprop(std::vector<Parameter*> params, RmspropConfig cfg)
    : Optimizer(std::move(params)), cfg_(cfg) {
    require(cfg.lr > 0.0, "lr must be positive", cfg.lr);
    require(cfg.decay >= 0.0 && cfg.decay < 1.0, "rms_decay must satisfy 0 <= rms_decay < 1", cfg.decay);
    require(cfg.eps > 0.0, "eps must be positive", cfg.eps);
    sq_avg_ = zero_buffers(params_);
}

StepReport Rmsprop::step(double) {
    ++t_;
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        auto& sq = sq_avg_[pi];
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            sq[i] = cfg_.decay * sq[i] + (1.0 - cfg_.decay) * g * g;
            p.value[i] -= cfg_.lr * g / std::sqrt(sq[i] + cfg_.eps);
        }
    }
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

// --- Adam family -------------------------------------------------------------

namespace {
void validate_adam_core(double lr, double beta1, double beta2, double eps) {
    require(lr > 0.0, "lr must be positive", lr);
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must satisfy 0 <= beta1 < 1", beta1);
    require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must satisfy 0 <= beta2 < 1", beta2);
    require(eps > 0.0, "eps must be positive", eps);
}
}  // namespace

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : Optimizer(std::move(params)), cfg_(cfg) {
    validate_adam_core(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    m_ = zero_buffers(params_);
    v_ = zero_buffers(params_);
}

StepReport Adam::step(double) {
    ++t_;
    adam_update_buffers(params_, m_, v_, t_, cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps);
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

Adamax::Adamax(std::vector<Parameter*> params, AdamConfig cfg)
    : Optimizer(std::move(params)), cfg_(cfg) {
    validate_adam_core(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    m_ = zero_buffers(params_);
    u_ = zero_buffers(params_);
}

StepReport Adamax::step(double) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        auto& mp = m_[pi];
        auto& up = u_[pi];
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            mp[i] = cfg_.beta1 * mp[i] + (1.0 - cfg_.beta1) * g;
            up[i] = std::max(cfg_.beta2 * up[i], std::fabs(g));
            const double mhat = mp[i] / bc1;
            // u_t can be 0 while gradients stay 0; floor the divisor at eps
            p.value[i] -= cfg_.lr * mhat / std::max(up[i], cfg_.eps);
        }
    }
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

Nadam::Nadam(std::vector<Parameter*> params, AdamConfig cfg)
    : Optimizer(std::move(params)), cfg_(cfg) {
    validate_adam_core(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    m_ = zero_buffers(params_);
    v_ = zero_buffers(params_);
    mhat_prev_ = zero_buffers(params_);
}

// Update direction uses the previous step's bias-corrected first moment
// (zero at t=1): theta -= lr * (beta1*mhat_{t-1} + (1-beta1)*g) / (sqrt(vhat)+eps).
StepReport Nadam::step(double) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        auto& mp = m_[pi];
        auto& vp = v_[pi];
        auto& mh = mhat_prev_[pi];
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            vp[i] = cfg_.beta2 * vp[i] + (1.0 - cfg_.beta2) * g * g;
            const double vhat = vp[i] / bc2;
            const double direction = cfg_.beta1 * mh[i] + (1.0 - cfg_.beta1) * g;
            p.value[i] -= cfg_.lr * direction / (std::sqrt(vhat) + cfg_.eps);
            mp[i] = cfg_.beta1 * mp[i] + (1.0 - cfg_.beta1) * g;
            mh[i] = mp[i] / bc1;
        }
    }
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

Adamw::Adamw(std::vector<Parameter*> params, AdamwConfig cfg)
    : Optimizer(std::move(params)), cfg_(cfg) {
    validate_adam_core(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    require(cfg.weight_decay >= 0.0, "weight_decay must be non-negative", cfg.weight_decay);
    m_ = zero_buffers(params_);
    v_ = zero_buffers(params_);
}

StepReport Adamw::step(double) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        auto& mp = m_[pi];
        auto& vp = v_[pi];
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            mp[i] = cfg_.beta1 * mp[i] + (1.0 - cfg_.beta1) * g;
            vp[i] = cfg_.beta2 * vp[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            // decoupled decay applies to the pre-step value
            const double pre = p.value[i];
            p.value[i] = pre - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps) - cfg_.lr * cfg_.weight_decay * pre;
        }
    }
    return {cfg_.lr, Adjustment::none, std::numeric_limits<double>::quiet_NaN(), cfg_.lr};
}

// --- AdamZ ---------------------------------------------------------------------

AdamzController::AdamzController(const AdamzConfig& cfg) : cfg_(cfg), lr_(cfg.lr) {
    require(cfg.lr_min > 0.0, "lr_min must be positive", cfg.lr_min);
    require(cfg.lr_min <= cfg.lr_max, "lr_min must not exceed lr_max", cfg.lr_max);
    require(cfg.lr >= cfg.lr_min && cfg.lr <= cfg.lr_max, "lr must lie within [lr_min, lr_max]", cfg.lr);
    require(cfg.gamma_over > 0.0 && cfg.gamma_over <= 1.0,
            "gamma_over must satisfy 0 < gamma_over <= 1", cfg.gamma_over);
    require(cfg.gamma_stag >= 1.0, "gamma_stag must satisfy gamma_stag >= 1", cfg.gamma_stag);
    require(cfg.sigma_stag > 0.0, "sigma_stag must be positive", cfg.sigma_stag);
    require(cfg.patience >= 1, "patience must be at least 1", cfg.patience);
    require(cfg.stagnation_period >= 1 && cfg.stagnation_period <= cfg.patience,
            "stagnation_period must satisfy 0 < stagnation_period <= patience", cfg.stagnation_period);
    require(cfg.max_grad_norm > 0.0, "max_grad_norm must be positive", cfg.max_grad_norm);
    history_.reserve(static_cast<size_t>(cfg.patience) + 1);
}

void AdamzController::record_loss(double loss) {
    const size_t capacity = static_cast<size_t>(cfg_.patience) + 1;
    if (history_.size() == capacity) {
        history_.erase(history_.begin());
    }
    history_.push_back(loss);
}

double AdamzController::window_std(int last_n) const {
    const int n = std::min<int>(last_n, static_cast<int>(history_.size()));
    return population_std(history_.data() + (history_.size() - static_cast<size_t>(n)), n);
}

Adjustment AdamzController::adjust_learning_rate() {
    Adjustment tag = Adjustment::none;
    if (static_cast<int>(history_.size()) >= cfg_.patience + 1) {
        double mx = history_[0], mn = history_[0];
        for (double v : history_) {
            mx = v > mx ? v : mx;
            mn = v < mn ? v : mn;
        }
        const double current = history_.back();
        // Overshoot: the current loss tops the whole window. A fully flat
        // window does not count (ties only trigger against a varied window).
        if (current >= mx && mx > mn) {
            lr_ *= cfg_.gamma_over;
            tag = Adjustment::overshoot;
        } else {
            const double sd_short = window_std(cfg_.stagnation_period + 1);
            const double sd_long = window_std(cfg_.patience + 1);
            if (sd_short < cfg_.sigma_stag * sd_long) {
                lr_ *= cfg_.gamma_stag;
                tag = Adjustment::stagnation;
            }
        }
    }
    lr_ = std::max(cfg_.lr_min, std::min(lr_, cfg_.lr_max));
    return tag;
}

Adamz::Adamz(std::vector<Parameter*> params, AdamzConfig cfg)
    : Optimizer(std::move(params)), cfg_(cfg), controller_(cfg) {
    validate_adam_core(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    m_ = zero_buffers(params_);
    v_ = zero_buffers(params_);
}

StepReport Adamz::step(double current_loss) {
    if (!std::isfinite(current_loss)) {
        throw DivergenceError("adamz received a non-finite loss; training has diverged");
    }
    StepReport rep;
    rep.pre_clip_norm = clip_grad_norm(params_, cfg_.max_grad_norm);
    rep.lr_used = controller_.learning_rate();
    ++t_;
    adam_update_buffers(params_, m_, v_, t_, rep.lr_used, cfg_.beta1, cfg_.beta2, cfg_.eps);
    controller_.record_loss(current_loss);
    rep.adjustment = controller_.adjust_learning_rate();
    rep.lr_after = controller_.learning_rate();
    return rep;
}

// --- factory ---------------------------------------------------------------------

const std::vector<std::string>& optimizer_kinds() {
    static const std::vector<std::string> kinds = {"adam",   "adamw", "sgd",  "rmsprop", "adagrad",
                                                   "adamax", "asgd",  "nadam", "adamz"};
    return kinds;
}

namespace {

const std::map<std::string, std::vector<std::string>>& accepted_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"sgd", {"lr"}},
        {"asgd", {"lr"}},
        {"adagrad", {"lr", "eps"}},
        {"rmsprop", {"lr", "eps", "rms_decay"}},
        {"adam", {"lr", "beta1", "beta2", "eps"}},
        {"adamax", {"lr", "beta1", "beta2", "eps"}},
        {"nadam", {"lr", "beta1", "beta2", "eps"}},
        {"adamw", {"lr", "beta1", "beta2", "eps", "weight_decay"}},
        {"adamz",
         {"lr", "beta1", "beta2", "eps", "gamma_over", "gamma_stag", "sigma_stag", "patience",
          "stagnation_period", "max_grad_norm", "lr_min", "lr_max"}},
    };
    return keys;
}

double take(const std::map<std::string, double>& ov, const std::string& key, double fallback) {
    auto it = ov.find(key);
    return it == ov.end() ? fallback : it->second;
}

int take_int(const std::map<std::string, double>& ov, const std::string& key, int fallback) {
    auto it = ov.find(key);
    if (it == ov.end()) return fallback;
    const double v = it->second;
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
        fail_constraint(key + " must be a positive integer (got " + std::to_string(v) + ")");
    }
    return static_cast<int>(v);
}

void check_keys(const std::string& kind, const std::map<std::string, double>& ov) {
    const auto& allowed = accepted_keys().at(kind);
    for (const auto& [key, value] : ov) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail_constraint("optimizer '" + kind + "' does not accept hyperparameter '" + key + "'");
        }
    }
}

}  // namespace

bool optimizer_accepts_key(const std::string& kind, const std::string& key) {
    auto it = accepted_keys().find(kind);
    if (it == accepted_keys().end()) return false;
    return std::find(it->second.begin(), it->second.end(), key) != it->second.end();
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& kind, std::vector<Parameter*> params,
                                          const std::map<std::string, double>& overrides) {
    if (accepted_keys().find(kind) == accepted_keys().end()) {
        fail_constraint("unknown optimizer kind '" + kind + "'");
    }
    check_keys(kind, overrides);
    if (kind == "sgd") {
        SgdConfig cfg;
        cfg.lr = take(overrides, "lr", cfg.lr);
        return std::make_unique<Sgd>(std::move(params), cfg);
    }
    if (kind == "asgd") {
        AsgdConfig cfg;
        cfg.lr = take(overrides, "lr", cfg.lr);
        return std::make_unique<Asgd>(std::move(params), cfg);
    }
    if (kind == "adagrad") {
        AdagradConfig cfg;
        cfg.lr = take(overrides, "lr", cfg.lr);
        cfg.eps = take(overrides, "eps", cfg.eps);
        return std::make_unique<Adagrad>(std::move(params), cfg);
    }
    if (kind == "rmsprop") {
        RmspropConfig cfg;
        cfg.lr = take(overrides, "lr", cfg.lr);
        cfg.eps = take(overrides, "eps", cfg.eps);
        cfg.decay = take(overrides, "rms_decay", cfg.decay);
        return std::make_unique<Rmsprop>(std::move(params), cfg);
    }
    if (kind == "adam" || kind == "adamax" || kind == "nadam") {
        AdamConfig cfg;
        cfg.lr = take(overrides, "lr", cfg.lr);
        cfg.beta1 = take(overrides, "beta1", cfg.beta1);
        cfg.beta2 = take(overrides, "beta2", cfg.beta2);
        cfg.eps = take(overrides, "eps", cfg.eps);
        if (kind == "adam") return std::make_unique<Adam>(std::move(params), cfg);
        if (kind == "adamax") return std::make_unique<Adamax>(std::move(params), cfg);
        return std::make_unique<Nadam>(std::move(params), cfg);
    }
    if (kind == "adamw") {
        AdamwConfig cfg;
        cfg.lr = take(overrides, "lr", cfg.lr);
        cfg.beta1 = take(overrides, "beta1", cfg.beta1);
        cfg.beta2 = take(overrides, "beta2", cfg.beta2);
        cfg.eps = take(overrides, "eps", cfg.eps);
        cfg.weight_decay = take(overrides, "weight_decay", cfg.weight_decay);
        return std::make_unique<Adamw>(std::move(params), cfg);
    }
    // adamz; the factory enforces the strict open-interval constraints.
    AdamzConfig cfg;
    cfg.lr = take(overrides, "lr", cfg.lr);
    cfg.beta1 = take(overrides, "beta1", cfg.beta1);
    cfg.beta2 = take(overrides, "beta2", cfg.beta2);
    cfg.eps = take(overrides, "eps", cfg.eps);
    cfg.gamma_over = take(overrides, "gamma_over", cfg.gamma_over);
    cfg.gamma_stag = take(overrides, "gamma_stag", cfg.gamma_stag);
    cfg.sigma_stag = take(overrides, "sigma_stag", cfg.sigma_stag);
    cfg.patience = take_int(overrides, "patience", cfg.patience);
    cfg.stagnation_period = take_int(overrides, "stagnation_period", cfg.stagnation_period);
    cfg.max_grad_norm = take(overrides, "max_grad_norm", cfg.max_grad_norm);
    cfg.lr_min = take(overrides, "lr_min", cfg.lr_min);
    cfg.lr_max = take(overrides, "lr_max", cfg.lr_max);
    require(cfg.gamma_over > 0.0 && cfg.gamma_over < 1.0,
            "gamma_over must satisfy 0 < gamma_over < 1", cfg.gamma_over);
    require(cfg.gamma_stag > 1.0, "gamma_stag must satisfy gamma_stag > 1", cfg.gamma_stag);
    return std::make_unique<Adamz>(std::move(params), cfg);
}

}  // namespace adamz
