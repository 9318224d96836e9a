#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace nsx {

// Differentiable scalar objective over an ordered numeric variable vector.
struct Objective {
    virtual ~Objective() = default;
    virtual const std::vector<std::string>& vars() const = 0;
    virtual double eval(const std::vector<double>& x) const = 0;
    virtual void grad(const std::vector<double>& x, std::vector<double>& g) const = 0;
};

struct SearchConfig {
    int max_enumerations = 10000; // M_e: update steps per trial
    double learning_rate = 0.1;   // step scale for real coordinates
    uint64_t seed = 1;            // drives initial states in search_multi
    // Per-coordinate closed domains and integer flags, aligned with
    // Objective::vars().
    std::vector<std::pair<double, double>> domains;
    std::vector<bool> integer;
    int jobs = 1; // concurrent trials in search_multi
};

enum class StopReason {
    Accepted,  // accept() returned true
    Budget,    // M_e enumerations exhausted
    Cycle,     // revisited a cached state (fixed point or oscillation)
    Stall,     // zero gradient in every unclamped direction
    NonFinite, // loss or gradient left the finite range; caller should resample
};

struct SearchOutcome {
    bool found = false;
    std::vector<double> x; // accepted point when found, else final point
    int enumerations = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    StopReason reason = StopReason::Budget;
    int trial = 0;      // which trial produced this outcome (search_multi)
    int trials_run = 0; // trials executed (search_multi)
};

using AcceptFn = std::function<bool(const std::vector<double>&)>;
// Test/diagnostic hook, called after every enumeration.
using TraceFn = std::function<void(int enumeration, const std::vector<double>& x, double loss)>;

// One gradient-descent trial from x0: updates one coordinate per enumeration
// (the one with the largest gradient magnitude; ties go to the lowest index),
// integer coordinates by +/-1, real coordinates by -learning_rate*gradient,
// clamped into the domains. Checks accept() after every update and returns
// immediately on success. Terminates on budget, revisit of a cached state,
// zero gradient or non-finite loss.
SearchOutcome search(const Objective& obj, const AcceptFn& accept, const SearchConfig& cfg,
                     const std::vector<double>& x0, const TraceFn& trace = {});

// Runs up to `trials` independent searches from seeded uniform random initial
// states (trial t uses seed mixed with t) and returns the outcome of the
// lowest-index successful trial, or the best-loss exhausted outcome. The
// result is deterministic for a fixed seed regardless of cfg.jobs.
SearchOutcome search_multi(const Objective& obj, const AcceptFn& accept, const SearchConfig& cfg,
                           int trials);

} // namespace nsx
