#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scatter {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct SelftestOptions {
    double fault = 0.0;  // added to the DC bin of one wavelet in every filter bank used
    std::uint64_t seed = 1;
};

/// Invariant suite behind `selftest`: filters, oracle equivalence, gradients,
/// covariance, stability, memory bound and file round trips.
std::vector<CheckResult> run_selftest(const SelftestOptions& opt);

}  // namespace scatter
