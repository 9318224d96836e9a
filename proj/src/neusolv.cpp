#include "nsx/neusolv.hpp"

#include <atomic>
#include <cassert>
#include <cmath>
#include <cstring>
#include <thread>
#include <unordered_set>

#include "nsx/error.hpp"
#include "nsx/rng.hpp"

namespace nsx {

namespace {

struct VecHash {
    size_t operator()(const std::vector<double>& v) const {
        uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (double d : v) {
            uint64_t bits;
            std::memcpy(&bits, &d, sizeof bits);
            h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return size_t(h);
    }
};

double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

} // namespace

SearchOutcome search(const Objective& obj, const AcceptFn& accept, const SearchConfig& cfg,
                     const std::vector<double>& x0, const TraceFn& trace) {
    const size_t n = obj.vars().size();
    if (x0.size() != n || cfg.domains.size() != n || cfg.integer.size() != n)
        throw Error("search: dimension mismatch between objective, domains and start point");

    SearchOutcome out;
    std::vector<double> x = x0;
    for (size_t i = 0; i < n; ++i) x[i] = clamp(x[i], cfg.domains[i].first, cfg.domains[i].second);

    double loss = obj.eval(x);
    if (!std::isfinite(loss)) {
        out.reason = StopReason::NonFinite;
        out.x = x;
        return out;
    }
    out.best_loss = loss;
    out.best_x = x;

    std::unordered_set<std::vector<double>, VecHash> visited;
    visited.insert(x);

    std::vector<double> g(n);
    for (int e = 1; e <= cfg.max_enumerations; ++e) {
        obj.grad(x, g);

        // A coordinate sitting on a bound reports derivative 0 in the
        // direction of the violated bound.
        int pick = -1;
        double pick_mag = 0.0;
        bool finite = true;
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(g[i])) {
                finite = false;
                break;
            }
            double gi = g[i];
            if (x[i] <= cfg.domains[i].first && gi > 0.0) gi = 0.0;
            if (x[i] >= cfg.domains[i].second && gi < 0.0) gi = 0.0;
            const double mag = std::fabs(gi);
            if (mag > pick_mag) {
                pick_mag = mag;
                pick = int(i);
            }
        }
        if (!finite) {
            out.reason = StopReason::NonFinite;
            out.enumerations = e - 1;
            out.x = x;
            return out;
        }
        if (pick < 0) {
            // Fixed point: the update leaves x unchanged. The enumeration
            // still happens and its accept check can succeed (a constant
            // zero loss is satisfiable everywhere).
            out.enumerations = e;
            out.x = x;
            if (accept && accept(x)) {
                out.found = true;
                out.reason = StopReason::Accepted;
                return out;
            }
            out.reason = StopReason::Stall;
            return out;
        }

        if (cfg.integer[pick]) {
            x[pick] += g[pick] > 0.0 ? -1.0 : 1.0;
        } else {
            x[pick] -= cfg.learning_rate * g[pick];
        }
        x[pick] = clamp(x[pick], cfg.domains[pick].first, cfg.domains[pick].second);

        loss = obj.eval(x);
        if (!std::isfinite(loss)) {
            // A poisoned candidate (division by zero in the encoded loss)
            // ends the trial; restarts resample.
            out.reason = StopReason::NonFinite;
            out.enumerations = e;
            out.x = x;
            return out;
        }
        if (loss < out.best_loss) {
            out.best_loss = loss;
            out.best_x = x;
        }
        if (trace) trace(e, x, loss);
        if (accept && accept(x)) {
            out.found = true;
            out.reason = StopReason::Accepted;
            out.enumerations = e;
            out.x = x;
            assert(accept(out.x));
            return out;
        }
        if (!visited.insert(x).second) {
            out.reason = StopReason::Cycle;
            out.enumerations = e;
            out.x = x;
            return out;
        }
    }
    out.reason = StopReason::Budget;
    out.enumerations = cfg.max_enumerations;
    out.x = x;
    return out;
}

namespace {

std::vector<double> random_start(const SearchConfig& cfg, uint64_t trial_seed) {
    Rng rng(trial_seed);
    std::vector<double> x(cfg.domains.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const auto [lo, hi] = cfg.domains[i];
        if (cfg.integer[i])
            x[i] = double(rng.uniform_int((long long)std::ceil(lo), (long long)std::floor(hi)));
        else
            x[i] = rng.uniform(lo, hi);
    }
    return x;
}

} // namespace

SearchOutcome search_multi(const Objective& obj, const AcceptFn& accept, const SearchConfig& cfg,
                           int trials) {
    if (trials < 1) throw Error("search_multi: trials must be >= 1");

    std::vector<SearchOutcome> results(trials);
    std::vector<char> ran(trials, 0);

    if (cfg.jobs <= 1) {
        for (int t = 0; t < trials; ++t) {
            results[t] = search(obj, accept, cfg, random_start(cfg, mix_seed(cfg.seed, t)));
            results[t].trial = t;
            ran[t] = 1;
            if (results[t].found) break;
        }
    } else {
        std::atomic<int> next{0};
        std::atomic<int> lowest_found{trials};
        auto worker = [&] {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= trials) return;
                // A trial above an already-found index cannot win.
                if (t > lowest_found.load()) continue;
                results[t] = search(obj, accept, cfg, random_start(cfg, mix_seed(cfg.seed, t)));
                results[t].trial = t;
                ran[t] = 1;
                if (results[t].found) {
                    int cur = lowest_found.load();
                    while (t < cur && !lowest_found.compare_exchange_weak(cur, t)) {
                    }
                }
            }
        };
        std::vector<std::thread> pool;
        const int nthreads = std::min(cfg.jobs, trials);
        pool.reserve(nthreads);
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Lowest-index found trial wins; otherwise the best-loss exhausted trial.
    for (int t = 0; t < trials; ++t) {
        if (ran[t] && results[t].found) {
            SearchOutcome out = results[t];
            out.trials_run = t + 1;
            return out;
        }
    }
    int best = -1;
    for (int t = 0; t < trials; ++t) {
        if (!ran[t]) continue;
        if (best < 0 || results[t].best_loss < results[best].best_loss) best = t;
    }
    SearchOutcome out = best >= 0 ? results[best] : SearchOutcome{};
    out.trials_run = trials;
    return out;
}

} // namespace nsx
