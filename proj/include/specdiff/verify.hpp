#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace specdiff {

struct CheckResult {
    std::string name;
    double worst = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// End-to-end property suite behind the `verify` command: Parseval, DFT vs
// direct summation, perfect reconstruction for both banks, finite-difference
// gradient checks for every loss, the loss identities, and the DDIM algebra.
std::vector<CheckResult> run_verification_suite(std::uint64_t seed = 2024);

std::string format_check(const CheckResult& r);

}  // namespace specdiff
