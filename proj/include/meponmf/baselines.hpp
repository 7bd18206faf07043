#pragma once

#include <cstdint>
#include <vector>

#include "meponmf/common.hpp"
#include "meponmf/data_matrix.hpp"
#include "meponmf/facade.hpp"
#include "meponmf/rng.hpp"

namespace meponmf {

/// Plain multiplicative-update NMF under the Frobenius objective
/// (Lee-Seung rules), used as the unconstrained comparison baseline.
/// Factors are initialized Uniform[0.1, 1.1) from the seed; denominators are
/// floored at 1e-16. The squared-Frobenius objective is non-increasing per
/// iteration; pass `objective_trace` to record it (adds one product per step).
///
/// Note: k may exceed min(d, n); the overcomplete case is well-defined for
/// multiplicative updates and is exercised by the benchmark comparisons.
inline FactorPair mu_nmf(const DataMatrix& X, Index k, int iters, std::uint64_t seed,
                         std::vector<double>* objective_trace = nullptr) {
    if (k < 1) throw DomainError("mu_nmf: k must be >= 1");
    if (iters < 1) throw DomainError("mu_nmf: iters must be >= 1");
    const Index d = X.dim(), n = X.count();
    const double floor_eps = 1e-16;

    CounterRng rng(seed);
    Matrix W(d, k), H(k, n);
    for (Index j = 0; j < k; ++j)
        for (Index r = 0; r < d; ++r) W(r, j) = 0.1 + rng.uniform01();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) H(j, i) = 0.1 + rng.uniform01();

    if (objective_trace != nullptr) {
        objective_trace->clear();
        objective_trace->push_back((X.values - W * H).squaredNorm());
    }
    for (int it = 0; it < iters; ++it) {
        H.array() *= (W.transpose() * X.values).array() /
                     (W.transpose() * W * H).cwiseMax(floor_eps).array();
        W.array() *= (X.values * H.transpose()).array() /
                     (W * (H * H.transpose())).cwiseMax(floor_eps).array();
        if (objective_trace != nullptr)
            objective_trace->push_back((X.values - W * H).squaredNorm());
    }
    FactorPair out;
    out.W = std::move(W);
    out.H = std::move(H);
    out.orientation = Orientation::HOrthogonal;  // labels the Gram arrangement only
    return out;
}

}  // namespace meponmf
