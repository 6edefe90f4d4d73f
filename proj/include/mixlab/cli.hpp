#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixlab/chain.hpp"
#include "mixlab/verify.hpp"

namespace mixlab {

/// Everything a run depends on. Serializes to JSON; feeding that JSON back
/// through --config reproduces the run.
struct RunConfig {
    std::string command;            // e.g. "spectral", "coverage tstar", "verify"
    std::string chain;              // builder spec or chain file
    double lazy = 0.0;
    std::uint64_t seed = 1;
    std::size_t replicates = 100'000;
    unsigned threads = 0;
    bool csv = false;
    std::string out;                // empty = stdout

    long long start = -1;           // start state; -1 = worst case over starts
    std::size_t tmax = 100;
    std::string metric = "all";     // all | tv | l2 | sep | entropy (series output)
    long long from = -1;            // hitting: Monte Carlo pair
    long long to = -1;
    double theta = 2.0;
    double delta = 1.0;
    std::size_t gamma = 1;
    std::string mode = "auto";      // auto | exact | mc
    double c = 96.0;
    std::size_t m = 2;
    std::string convention = "both-endpoints";
    std::string family = "cycle";
    std::vector<std::size_t> sizes;
    std::string experiment;
    std::string golden = "off";     // off | compare | freeze
    std::string golden_dir = "tests/goldens";
};

Json run_config_to_json(const RunConfig& c);
/// Keys missing from `j` keep the values already in `base`.
RunConfig run_config_from_json(const Json& j, RunConfig base = {});

/// "cycle:8", "torus2d:3", "hypercube:4", "complete:6" (with self-loops),
/// "complete-noloops:6", or a path to a chain JSON file. Laziness applies to
/// the cycle, torus and hypercube builders.
MarkovChain parse_chain_spec(const std::string& spec, double laziness);

/// {"n": int, "rows": [[[col, prob], ...], ...], "labels": [...]} plus the
/// derived "stationary" and "reversible" fields on output (ignored on input).
Json chain_to_json(const MarkovChain& chain);
MarkovChain chain_from_json(const Json& j);

/// Exit code 0 on success, 1 when an assertion or golden comparison fails,
/// 2 on usage or input errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixlab
