// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. See README for the criterion list.
#include <cstring>
#include <iostream>
#include <sstream>

#include "switching/acceptance.hpp"

int main(int argc, char** argv) {
    switching::AcceptanceOptions opt;
    for (int a = 1; a < argc; ++a) {
        if (std::strcmp(argv[a], "--seed") == 0 && a + 1 < argc) {
            opt.seed = std::strtoull(argv[++a], nullptr, 10);
        } else if (std::strcmp(argv[a], "--coarsen") == 0 && a + 1 < argc) {
            opt.coarsen = std::atoi(argv[++a]);
        } else if (std::strcmp(argv[a], "--only") == 0 && a + 1 < argc) {
            std::stringstream ss(argv[++a]);
            std::string tok;
            while (std::getline(ss, tok, ',')) opt.only.push_back(std::atoi(tok.c_str()));
        } else {
            std::cerr << "usage: acceptance [--seed N] [--coarsen N] [--only 1,2,...]\n";
            return 2;
        }
    }

    const auto results = switching::run_acceptance(opt, std::cout);
    int failures = 0;
    for (const auto& r : results) failures += r.pass ? 0 : 1;
    std::cout << results.size() - failures << "/" << results.size() << " criteria passed\n";
    return failures;
}
