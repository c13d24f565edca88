// Runs every acceptance criterion and prints the full check table followed by
// one PASS/FAIL line per criterion. Exit status is nonzero if any fails.
#include <cstring>
#include <iostream>

#include "msd/verify.hpp"

int main(int argc, char** argv) {
    msd::SuiteOptions options;
    options.suite = msd::Suite::full;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--suite") == 0 && i + 1 < argc) {
            const char* name = argv[++i];
            if (std::strcmp(name, "quick") == 0) {
                options.suite = msd::Suite::quick;
            } else if (std::strcmp(name, "full") != 0) {
                std::cerr << "unknown suite " << name << "\n";
                return 2;
            }
        } else {
            std::cerr << "usage: acceptance [--suite quick|full]\n";
            return 2;
        }
    }
    const auto results = msd::run_acceptance(options, &std::cerr);
    msd::print_report(std::cout, results);
    for (const auto& r : results) {
        if (!r.passed()) return 1;
    }
    return 0;
}
