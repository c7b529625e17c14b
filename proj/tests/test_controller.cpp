#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adamz/optim.hpp"
#include "adamz/reference_optimizers.hpp"
#include "adamz/rng.hpp"

using namespace adamz;

namespace {

AdamzConfig small_cfg(int patience = 4, int period = 2) {
    AdamzConfig cfg;
    cfg.patience = patience;
    cfg.stagnation_period = period;
    return cfg;
}

Adjustment feed(AdamzController& c, double loss) {
    c.record_loss(loss);
    return c.adjust_learning_rate();
}

}  // namespace

TEST_CASE("no adjustment until patience+1 losses are recorded") {
    AdamzController c(small_cfg(4, 2));
    // four arbitrary losses (history 1..4 of the required 5): always none
    CHECK(feed(c, 9.0) == Adjustment::none);
    CHECK(feed(c, 1.0) == Adjustment::none);
    CHECK(feed(c, 8.0) == Adjustment::none);
    CHECK(feed(c, 2.0) == Adjustment::none);
    CHECK(c.learning_rate() == 0.01);
    // fifth entry fills the window; a strict max now triggers overshoot
    CHECK(feed(c, 10.0) == Adjustment::overshoot);
    CHECK(c.learning_rate() == doctest::Approx(0.005).epsilon(1e-15));
}

TEST_CASE("overshoot halves the rate (strict window max)") {
    AdamzController c(small_cfg());
    for (double l : {1.0, 1.1, 0.9, 1.05}) feed(c, l);
    CHECK(feed(c, 1.2) == Adjustment::overshoot);
    CHECK(c.learning_rate() == doctest::Approx(0.01 * 0.5).epsilon(1e-15));
}

TEST_CASE("tie with a varied window still triggers overshoot") {
    AdamzController c(small_cfg());
    for (double l : {1.2, 1.1, 0.9, 1.05}) feed(c, l);
    CHECK(feed(c, 1.2) == Adjustment::overshoot);
}

TEST_CASE("stagnation multiplies the rate by 1.2") {
    AdamzController c(small_cfg(4, 2));
    // varied long window, constant short window (last 3 entries)
    for (double l : {2.0, 1.0}) feed(c, l);
    for (double l : {0.5, 0.5}) feed(c, l);
    CHECK(feed(c, 0.5) == Adjustment::stagnation);
    CHECK(c.learning_rate() == doctest::Approx(0.012).epsilon(1e-15));
}

TEST_CASE("all-identical window: both stds zero, no adjustment") {
    AdamzController c(small_cfg(4, 2));
    for (int i = 0; i < 4; ++i) feed(c, 1.5);
    CHECK(feed(c, 1.5) == Adjustment::none);
    CHECK(c.learning_rate() == 0.01);
}

TEST_CASE("lower bound clamps after overshoot") {
    AdamzConfig cfg = small_cfg();
    cfg.lr = 2e-7;
    AdamzController c(cfg);
    for (double l : {1.0, 1.1, 0.9, 1.05}) feed(c, l);
    CHECK(feed(c, 1.2) == Adjustment::overshoot);
    CHECK(c.learning_rate() == doctest::Approx(1e-7).epsilon(1e-15));
}

TEST_CASE("upper bound clamps repeated stagnation growth") {
    AdamzConfig cfg = small_cfg(4, 2);
    cfg.lr = 0.9;
    AdamzController c(cfg);
    feed(c, 3.0);
    feed(c, 1.0);
    for (int i = 0; i < 3; ++i) feed(c, 0.5);
    CHECK(c.learning_rate() == doctest::Approx(1.0).epsilon(1e-15));  // 0.9*1.2 clamped
    for (int i = 0; i < 40; ++i) feed(c, 0.5);
    CHECK(c.learning_rate() <= 1.0);
}

TEST_CASE("monotone triggers hold for random warmed-up histories") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const int patience = 2 + static_cast<int>(rng.below(8));
        const int period = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(patience)));
        AdamzController c(small_cfg(patience, period));
        double mx = -1.0;
        for (int i = 0; i < patience; ++i) {
            const double l = rng.uniform(0.0, 2.0);
            mx = std::max(mx, l);
            feed(c, l);
        }
        // strictly above everything seen: must report overshoot
        CHECK(feed(c, mx + rng.uniform(0.01, 1.0)) == Adjustment::overshoot);
    }
}

TEST_CASE("constant short window with varied long window always stagnates") {
    Rng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const int patience = 3 + static_cast<int>(rng.below(7));
        const int period = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(patience - 1)));
        AdamzController c(small_cfg(patience, period));
        const double plateau = rng.uniform(0.1, 1.0);
        // long window varied and containing a value above the plateau
        feed(c, plateau + rng.uniform(0.5, 2.0));
        for (int i = 0; i < patience - period - 1; ++i) feed(c, plateau + rng.uniform(-0.2, 0.4));
        for (int i = 0; i < period; ++i) feed(c, plateau);
        CHECK(feed(c, plateau) == Adjustment::stagnation);
    }
}

TEST_CASE("at most one adjustment per step; overshoot precedes stagnation") {
    // a window where the current loss is the max AND the short window is flat
    AdamzController c(small_cfg(4, 2));
    feed(c, 0.5);
    feed(c, 0.2);
    feed(c, 3.0);
    feed(c, 3.0);
    CHECK(feed(c, 3.0) == Adjustment::overshoot);  // ties max of varied window
    CHECK(c.learning_rate() == doctest::Approx(0.005).epsilon(1e-15));
}

TEST_CASE("history ring keeps exactly patience+1 entries") {
    AdamzController c(small_cfg(4, 2));
    // a huge early loss masks overshoot only while it is inside the window
    feed(c, 100.0);
    for (double l : {1.0, 1.1, 0.9, 1.05}) feed(c, l);
    CHECK(c.history_size() == 5);
    // recording 2.0 evicts 100.0, so 2.0 is now the window max
    CHECK(feed(c, 2.0) == Adjustment::overshoot);
    CHECK(c.history_size() == 5);
}

TEST_CASE("120-step scripted run matches the hand-simulated oracle exactly") {
    // paper-default controller (p=100, s=10) over a scripted sequence with a
    // plateau and two spikes
    std::vector<double> losses;
    Rng rng(2024);
    for (int i = 0; i < 101; ++i) losses.push_back(1.0 + 0.2 * rng.uniform());  // warm-up
    for (int i = 0; i < 8; ++i) losses.push_back(0.8);                          // plateau
    losses.push_back(5.0);                                                      // spike
    for (int i = 0; i < 10; ++i) losses.push_back(0.7 + 0.01 * rng.uniform());

    const auto oracle = reference::controller(losses, 0.01, 0.5, 1.2, 0.2, 100, 10, 1e-7, 1.0);

    AdamzConfig cfg;  // defaults
    AdamzController c(cfg);
    for (size_t i = 0; i < losses.size(); ++i) {
        const Adjustment tag = feed(c, losses[i]);
        const int got = tag == Adjustment::none ? 0 : tag == Adjustment::overshoot ? 1 : 2;
        CHECK(got == oracle.adjustments[i]);
        CHECK(c.learning_rate() == doctest::Approx(oracle.lr_after[i]).epsilon(1e-15));
    }
}

TEST_CASE("controller config validation") {
    AdamzConfig cfg;
    cfg.stagnation_period = 200;  // > patience
    CHECK_THROWS_AS(AdamzController{cfg}, ValidationError);
    AdamzConfig bad_lr;
    bad_lr.lr = 2.0;  // above lr_max
    CHECK_THROWS_AS(AdamzController{bad_lr}, ValidationError);
    AdamzConfig low;
    low.lr_min = 0.0;
    CHECK_THROWS_AS(AdamzController{low}, ValidationError);
}
