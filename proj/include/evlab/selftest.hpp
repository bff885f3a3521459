#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evlab/dynamics.hpp"

namespace evlab::selftest {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct Options {
    std::uint64_t seed = 1;
    std::string out_dir = "selftest_out";
    std::vector<int> only;  // empty = run all criteria
};

/// Runs the acceptance criteria and writes the per-criterion dataset files
/// under out_dir. Deterministic for a fixed seed.
std::vector<CriterionResult> run_acceptance(const Options& opts);

/// One pass/fail line per criterion on stdout; returns the process exit
/// code (0 iff all pass).
int run_and_report(const Options& opts);

/// Box-counting dimension of a planar point set: least-squares slope of
/// log2 N(delta) against k for dyadic box sizes delta = 2^-k.
double box_counting_dimension(std::span<const dynamics::StateVector> points, int kmin,
                              int kmax);

}  // namespace evlab::selftest
