// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The same checks back `cmsthermo verify`.

#include <cstdio>

#include "cmsthermo/checks.hpp"

int main() {
    const auto results = cms::run_acceptance();
    bool all = true;
    double total = 0.0;
    for (const auto& r : results) {
        std::printf("[%s] criterion %2d: %s (%.2fs)\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds);
        if (!r.pass || !r.detail.empty()) std::printf("        %s\n", r.detail.c_str());
        all = all && r.pass;
        total += r.seconds;
    }
    std::printf("%zu criteria, %s, %.1fs total\n", results.size(), all ? "all passed" : "FAILURES",
                total);
    return all ? 0 : 1;
}
