#pragma once

#include <string>
#include <vector>

namespace freshcl {

struct SelfCheckOptions {
    // Test hook: negates the analytic dot-regression feature gradient inside
    // the gradient check, which must then fail.
    bool inject_dr_grad_sign_bug = false;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double metric = 0.0; // worst observed deviation for the check
    std::string detail;
};

// Release gate: frame geometry, exact loss values, every finite-difference
// gradient agreement, the gating contract, frozen-tensor immutability, and
// run determinism.
std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options = {});

bool all_passed(const std::vector<CheckResult>& results);

} // namespace freshcl
