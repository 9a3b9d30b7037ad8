// Runs the full acceptance battery and prints one line per criterion.

#include <iostream>

#include "bdssep/acceptance.hpp"

int main() {
    bdssep::RunOptions opts;
    const bdssep::AcceptanceSummary summary = bdssep::run_acceptance(std::cout, opts);
    std::cout << (summary.all_pass() ? "acceptance: all criteria pass\n"
                                     : "acceptance: criteria failed\n");
    return summary.all_pass() ? 0 : 4;
}
