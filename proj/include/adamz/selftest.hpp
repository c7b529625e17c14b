#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adamz::selftest {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Embedded oracle suites: optimizer scalar-loop oracles, finite-difference
// gradient checks, IDX fixture round-trip. inject_idx_fault corrupts the IDX
// fixture on purpose (testing aid for the failure path).
std::vector<SuiteResult> run_all(bool inject_idx_fault = false);

// Drives one optimizer kind against its scalar-loop reference over
// n_trajectories random (gradient sequence, hyperparameter) draws of at most
// 10 steps each. Also reused by the acceptance suite at its full draw count.
bool check_optimizer_against_reference(const std::string& kind, int n_trajectories, uint64_t seed,
                                       double tol, std::string* why);

}  // namespace adamz::selftest
