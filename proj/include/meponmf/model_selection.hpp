#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "meponmf/annealing.hpp"
#include "meponmf/common.hpp"
#include "meponmf/facade.hpp"

namespace meponmf {

/// Persistence of each feature count m: delta(m) = beta_cr(m+1) / beta_cr(m),
/// the temperature range over which exactly m distinct features suffice.
/// m_star is the most persistent count (ties to the smallest m).
struct PersistenceReport {
    struct Delta {
        Index m = 0;
        double delta = 0.0;
    };
    std::vector<Delta> deltas;
    Index m_star = 0;
    std::vector<std::pair<Index, double>> log_ratios;  // (m, ln delta(m))
};

/// Compute persistence ratios from a transition log with at least two
/// entries. Throws InsufficientTransitions otherwise.
inline PersistenceReport persistence(const TransitionLog& transitions) {
    const auto& e = transitions.entries;
    if (e.size() < 2)
        throw InsufficientTransitions("persistence: need at least 2 recorded transitions");
    PersistenceReport rep;
    double best = -1.0;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        if (e[i + 1].m != e[i].m + 1) continue;  // by construction m is consecutive
        double d = e[i + 1].beta_cr / e[i].beta_cr;
        rep.deltas.push_back({e[i].m, d});
        rep.log_ratios.emplace_back(e[i].m, std::log(d));
        if (d > best) {  // strict: ties stay at the smallest m
            best = d;
            rep.m_star = e[i].m;
        }
    }
    if (rep.deltas.empty())
        throw InsufficientTransitions("persistence: no consecutive transition pair");
    return rep;
}

/// Estimate the true feature count: one hierarchical fit visits every
/// m <= k_max, so a single transition log yields the whole persistence curve.
inline PersistenceReport sweep_true_k(const DataMatrix& X, const SolverConfig& cfg) {
    return persistence(fit(X, cfg).transitions);
}

}  // namespace meponmf
