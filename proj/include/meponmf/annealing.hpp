#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "meponmf/common.hpp"
#include "meponmf/config.hpp"
#include "meponmf/data_matrix.hpp"
#include "meponmf/rng.hpp"

namespace meponmf {

/// Annealer snapshot at one temperature: k feature vectors, their weights,
/// and the soft association PMF p(j|i).
///
/// Invariants: assoc columns sum to 1 (within 1e-10), weights are positive
/// and sum to 1 (within 1e-10).
struct AnnealerState {
    Matrix features;  // d x k, column j is feature j
    Vector alphas;    // k
    Matrix assoc;     // k x n, column-stochastic
    double beta = 0.0;

    Index k() const { return features.cols(); }

    void validate() const {
        if (features.cols() != alphas.size() || features.cols() != assoc.rows())
            throw ShapeMismatch("AnnealerState: inconsistent feature count");
        if ((alphas.array() <= 0.0).any())
            throw NumericalError("AnnealerState: non-positive feature weight");
        if (std::abs(alphas.sum() - 1.0) > 1e-10)
            throw NumericalError("AnnealerState: feature weights must sum to 1");
        for (Index i = 0; i < assoc.cols(); ++i)
            if (std::abs(assoc.col(i).sum() - 1.0) > 1e-10)
                throw NumericalError("AnnealerState: association column does not sum to 1");
        if ((assoc.array() < 0.0).any() || (assoc.array() > 1.0).any())
            throw NumericalError("AnnealerState: association entry outside [0,1]");
    }
};

/// One inner loop at fixed temperature.
struct InnerLoopReport {
    int iterations = 0;
    double final_free_energy = 0.0;
    std::vector<double> free_energy_trace;  // initial value plus one per iteration
    bool converged = false;
    int degenerate_repairs = 0;
};

struct SplitEvent {
    Index parent_index = 0;
    double beta_at_split = 0.0;
    Index new_k = 0;
};

/// Ordered record of (m, beta) pairs: the scheduled temperature at which the
/// m-th distinct feature appeared. Simultaneous splits at one temperature
/// step share a beta value, so beta_cr is validated as non-decreasing.
struct TransitionLog {
    struct Entry {
        Index m = 0;
        double beta_cr = 0.0;
    };
    std::vector<Entry> entries;

    void validate() const {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].m != static_cast<Index>(i) + 2)
                throw DomainError("TransitionLog: m must increase by 1 starting at 2");
            if (i > 0 && entries[i].beta_cr < entries[i - 1].beta_cr)
                throw DomainError("TransitionLog: beta_cr must be non-decreasing");
        }
    }
};

/// Squared Euclidean distances d_ij = ||x_i - w_j||^2 as a k x n matrix.
inline Matrix squared_distances(const Matrix& X, const Matrix& features) {
    const Index k = features.cols(), n = X.cols();
    Matrix D(k, n);
    for (Index i = 0; i < n; ++i)
        D.col(i) = (features.colwise() - X.col(i)).colwise().squaredNorm().transpose();
    return D;
}

namespace detail {

// Exponentials shifted by the per-column maximum of (log alpha_j - beta d_ij),
// so each column has max entry 1 and normalizers never vanish.
inline Matrix shifted_weights(const Vector& alphas, const Matrix& dist, double beta) {
    Matrix L = (-beta) * dist;
    L.colwise() += alphas.array().log().matrix();
    for (Index i = 0; i < L.cols(); ++i) {
        double m = L.col(i).maxCoeff();
        L.col(i) = (L.col(i).array() - m).exp();
    }
    return L;
}

}  // namespace detail

/// Gibbs association update:
///   p(j|i) = alpha_j exp(-beta d_ij) / sum_m alpha_m exp(-beta d_im),
/// evaluated in max-shifted form. beta = 0 yields p(j|i) = alpha_j.
inline Matrix gibbs_update(const DataMatrix& X, const AnnealerState& state) {
    if ((state.alphas.array() <= 0.0).any())
        throw NumericalError("gibbs_update: feature weights must be positive");
    if (state.beta < 0.0) throw NumericalError("gibbs_update: negative temperature");
    Matrix E = detail::shifted_weights(state.alphas, squared_distances(X.values, state.features),
                                       state.beta);
    for (Index i = 0; i < E.cols(); ++i) {
        double z = E.col(i).sum();
        if (!(z > 0.0)) throw NumericalError("gibbs_update: zero normalizer");  // unreachable
        E.col(i) /= z;
    }
    return E;
}

struct FeatureUpdate {
    Matrix features;  // d x k
    Vector alphas;    // k, sums to 1
    int repaired = 0;
};

/// Stationary feature/weight update at fixed associations:
///   alpha_j = sum_i p_i p(j|i),   w_j = sum_i p_i p(j|i) x_i / alpha_j.
/// A feature whose mass underflows (alpha_j < 1e-300) is re-seeded at the
/// currently worst-reconstructed column with weight 1e-6, and the weights
/// are renormalized.
inline FeatureUpdate feature_update(const DataMatrix& X, const Matrix& assoc) {
    const Index k = assoc.rows();
    FeatureUpdate out;
    out.alphas = assoc * X.weights;
    Matrix S = X.values * (assoc * X.weights.asDiagonal()).transpose();  // d x k
    out.features.resize(X.dim(), k);
    std::vector<Index> dead;
    for (Index j = 0; j < k; ++j) {
        if (out.alphas[j] < 1e-300) {
            dead.push_back(j);
            out.features.col(j).setZero();
        } else {
            out.features.col(j) = S.col(j) / out.alphas[j];
        }
    }
    for (Index j : dead) {
        Matrix D = squared_distances(X.values, out.features);
        for (Index jj : dead) D.row(jj).setConstant(std::numeric_limits<double>::infinity());
        Index worst = 0;
        (X.weights.transpose().array() * D.colwise().minCoeff().array()).maxCoeff(&worst);
        out.features.col(j) = X.values.col(worst);
        out.alphas[j] = 1e-6;
        ++out.repaired;
    }
    out.alphas /= out.alphas.sum();
    return out;
}

/// Solve the capacity fixed point
///   alpha_j = c_j / sum_i [ p_i exp(-beta d_ij) / sum_m alpha_m exp(-beta d_im) ]
/// by iterating it from state.alphas until the max relative change drops
/// below 1e-10 (cap 10,000 iterations). The result is normalized to sum 1
/// (the Gibbs PMF is scale-invariant in alpha). Throws FixedPointDivergence
/// unless the capacity residual max_j |sum_i p_i p(j|i) - c_j| ends below 1e-8.
inline Vector alpha_fixed_point(const DataMatrix& X, const AnnealerState& state, const Vector& c) {
    const Index k = state.k();
    if (c.size() != k) throw ShapeMismatch("alpha_fixed_point: capacity size mismatch");
    if ((state.alphas.array() <= 0.0).any())
        throw NumericalError("alpha_fixed_point: weights must be positive");
    // Shift by the per-column max of -beta d_ij; the shift cancels between
    // numerator and denominator of the fixed-point map.
    Matrix E = detail::shifted_weights(Vector::Ones(k), squared_distances(X.values, state.features),
                                       state.beta);
    Vector alpha = state.alphas;
    const int max_iters = 10000;
    auto mass = [&](const Vector& a) -> Vector {
        Vector denom = E.transpose() * a;  // n
        return E * (X.weights.array() / denom.array()).matrix();  // T_j = sum_i p_i E_ji / denom_i
    };
    // The map is 1-homogeneous in alpha (the Gibbs PMF only sees ratios), so
    // iterates are renormalized each round to keep them inside double range.
    for (int it = 0; it < max_iters; ++it) {
        Vector t = mass(alpha);
        Vector next(k);
        for (Index j = 0; j < k; ++j)
            next[j] = t[j] > 0.0 ? c[j] / t[j] : alpha[j];
        double s = next.sum();
        if (!(s > 0.0) || !next.allFinite())
            throw FixedPointDivergence("alpha_fixed_point: iterates left the simplex");
        next /= s;
        double rel = ((next - alpha).cwiseAbs().array() / alpha.array()).maxCoeff();
        alpha = next;
        if (rel < 1e-10) break;
    }
    double worst = ((alpha.array() * mass(alpha).array()).matrix() - c).cwiseAbs().maxCoeff();
    if (!(worst < 1e-8))  // NaN-safe
        throw FixedPointDivergence("alpha_fixed_point: capacity residual " +
                                   std::to_string(worst) + " not met at iteration cap");
    return alpha;
}

/// Capacity residuals |sum_i p_i p(j|i) - c_j| for a given association.
inline Vector capacity_residuals(const DataMatrix& X, const Matrix& assoc, const Vector& c) {
    return ((assoc * X.weights) - c).cwiseAbs();
}

/// Free energy at fixed weights and features,
///   F = -(1/beta) sum_i p_i log sum_j alpha_j exp(-beta ||x_i - w_j||^2),
/// in shifted log-sum-exp form.
inline double free_energy(const DataMatrix& X, const AnnealerState& state) {
    if (!(state.beta > 0.0)) throw NumericalError("free_energy: beta must be positive");
    Matrix L = (-state.beta) * squared_distances(X.values, state.features);
    L.colwise() += state.alphas.array().log().matrix();
    double acc = 0.0;
    for (Index i = 0; i < L.cols(); ++i) {
        double m = L.col(i).maxCoeff();
        acc += X.weights[i] * (m + std::log((L.col(i).array() - m).exp().sum()));
    }
    return -acc / state.beta;
}

/// Analytic free-energy gradient with respect to the features:
///   dF/dw_j = 2 (P_j w_j - sum_i p_i p(j|i) x_i),  P_j = sum_i p_i p(j|i),
/// returned as a d x k matrix. Associations are recomputed from the state.
inline Matrix free_energy_gradient(const DataMatrix& X, const AnnealerState& state) {
    Matrix assoc = gibbs_update(X, state);
    Vector mass = assoc * X.weights;
    Matrix S = X.values * (assoc * X.weights.asDiagonal()).transpose();
    return 2.0 * (state.features * mass.asDiagonal() - S);
}

namespace detail {

// Capacities active while the feature count is still growing: the first k
// entries renormalized to sum 1.
inline Vector active_capacities(const SolverConfig& cfg, Index k) {
    Vector c = cfg.capacities->head(k);
    double s = c.sum();
    if (!(s > 0.0))
        throw DomainError("active capacities sum to zero at k=" + std::to_string(k));
    return c / s;
}

// Quantity traced for convergence. For the capacity variant the traced value
// is the constrained free energy F_tilde + (1/beta) sum_j c_j log alpha_j,
// which equals the entropy-penalized expected distortion at the feasible
// Gibbs point and decreases under the alternating updates.
inline double inner_merit(const DataMatrix& X, const AnnealerState& state, const SolverConfig& cfg) {
    double f = free_energy(X, state);
    if (cfg.variant == Variant::CapacityConstrained) {
        Vector c = active_capacities(cfg, state.k());
        f += (c.array() * state.alphas.array().log()).sum() / state.beta;
    }
    return f;
}

}  // namespace detail

/// Alternate association and feature/weight updates at fixed temperature
/// until the traced free energy stalls: |dF| <= inner_tol * (1 + |F|), or
/// inner_max_iters is hit. On return the association matrix is refreshed to
/// match the final features. The trace is non-increasing within 1e-10 per
/// step (descent property), except across a degenerate-feature repair.
inline std::pair<AnnealerState, InnerLoopReport> inner_converge(const DataMatrix& X,
                                                                AnnealerState state,
                                                                const SolverConfig& cfg) {
    InnerLoopReport report;
    double prev = detail::inner_merit(X, state, cfg);
    report.free_energy_trace.push_back(prev);
    for (int it = 1; it <= cfg.inner_max_iters; ++it) {
        state.assoc = gibbs_update(X, state);
        FeatureUpdate fu = feature_update(X, state.assoc);
        state.features = std::move(fu.features);
        if (cfg.variant == Variant::OptimallyWeighted) {
            state.alphas = std::move(fu.alphas);
        } else {
            state.alphas = alpha_fixed_point(X, state, detail::active_capacities(cfg, state.k()));
        }
        report.degenerate_repairs += fu.repaired;
        double cur = detail::inner_merit(X, state, cfg);
        report.free_energy_trace.push_back(cur);
        report.iterations = it;
        if (std::abs(cur - prev) <= cfg.inner_tol * (1.0 + std::abs(prev))) {
            report.converged = true;
            prev = cur;
            break;
        }
        prev = cur;
    }
    report.final_free_energy = prev;
    state.assoc = gibbs_update(X, state);
    return {std::move(state), std::move(report)};
}

/// One feature's instability diagnosis: the top eigenpair of its
/// association-weighted covariance C_j = sum_i p(i|j) (x_i-w_j)(x_i-w_j)^T.
struct TransitionCandidate {
    Index feature = 0;
    double lambda_max = 0.0;
    Vector direction;  // principal eigenvector, largest-|entry| made positive
};

namespace detail {

// Top eigenpair of A A^T via the smaller of A A^T or A^T A.
inline std::pair<double, Vector> principal_component(const Matrix& A) {
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    if (A.rows() <= A.cols()) {
        es.compute(Matrix(A * A.transpose()));
        if (es.info() != Eigen::Success) throw EigenFailure("principal_component: no convergence");
        Index last = es.eigenvalues().size() - 1;
        return {es.eigenvalues()[last], es.eigenvectors().col(last)};
    }
    es.compute(Matrix(A.transpose() * A));
    if (es.info() != Eigen::Success) throw EigenFailure("principal_component: no convergence");
    Index last = es.eigenvalues().size() - 1;
    double lam = es.eigenvalues()[last];
    Vector v = A * es.eigenvectors().col(last);
    double n = v.norm();
    if (n > 0.0) v /= n;
    return {lam, v};
}

inline void fix_sign(Vector& v) {
    Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
}

}  // namespace detail

/// Covariance eigen-diagnosis for every feature. Features with vanishing
/// mass or a failed eigensolve are reported with lambda_max = 0 (never split).
inline std::vector<TransitionCandidate> transition_candidates(const DataMatrix& X,
                                                              const AnnealerState& state) {
    std::vector<TransitionCandidate> out;
    Vector mass = state.assoc * X.weights;  // P_j
    for (Index j = 0; j < state.k(); ++j) {
        TransitionCandidate cand;
        cand.feature = j;
        cand.direction = Vector::Zero(X.dim());
        if (mass[j] > 1e-300) {
            Vector q = (state.assoc.row(j).transpose().array() * X.weights.array()) / mass[j];
            Matrix A = (X.values.colwise() - state.features.col(j)) * q.cwiseSqrt().asDiagonal();
            try {
                auto [lam, v] = detail::principal_component(A);
                cand.lambda_max = std::max(0.0, lam);
                cand.direction = v;
                detail::fix_sign(cand.direction);
            } catch (const EigenFailure&) {
                cand.lambda_max = 0.0;  // report and skip, never split on a failed solve
            }
        }
        out.push_back(std::move(cand));
    }
    return out;
}

/// Indices of features satisfying the critical-temperature condition
/// 2 beta lambda_max(C_j) >= 1 at the state's current temperature.
inline std::vector<Index> detect_phase_transition(const DataMatrix& X, const AnnealerState& state) {
    std::vector<Index> flagged;
    for (const auto& cand : transition_candidates(X, state))
        if (2.0 * state.beta * cand.lambda_max >= 1.0) flagged.push_back(cand.feature);
    return flagged;
}

/// Duplicate feature t displaced by delta along `direction` (or a seeded
/// random unit vector when no usable direction is given), halving the parent
/// weight between parent and child. The association row is halved the same
/// way, so the state stays valid. Throws CapacityReached at the k_max budget.
inline AnnealerState split_feature(AnnealerState state, Index t, double delta, std::uint64_t seed,
                                   Index k_max, const Vector* direction = nullptr,
                                   SplitEvent* event = nullptr) {
    const Index k = state.k();
    if (k >= k_max) throw CapacityReached("split_feature: feature budget exhausted");
    if (t < 0 || t >= k) throw DomainError("split_feature: parent index out of range");
    Vector u;
    if (direction != nullptr && direction->size() == state.features.rows() &&
        direction->norm() > 1e-12) {
        u = *direction / direction->norm();
    } else {
        CounterRng rng(seed);
        u = rng.unit_vector(state.features.rows());
    }
    AnnealerState out;
    out.beta = state.beta;
    out.features.resize(state.features.rows(), k + 1);
    out.features.leftCols(k) = state.features;
    out.features.col(k) = state.features.col(t) + delta * u;
    out.alphas.resize(k + 1);
    out.alphas.head(k) = state.alphas;
    out.alphas[k] = 0.5 * state.alphas[t];
    out.alphas[t] = 0.5 * state.alphas[t];
    out.assoc.resize(k + 1, state.assoc.cols());
    out.assoc.topRows(k) = state.assoc;
    out.assoc.row(k) = 0.5 * state.assoc.row(t);
    out.assoc.row(t) *= 0.5;
    if (event != nullptr) *event = SplitEvent{t, state.beta, k + 1};
    return out;
}

/// Full annealing run over X (expects unit-norm columns when called on real
/// data; the engine itself never rescales).
struct AnnealResult {
    AnnealerState state;
    TransitionLog transitions;
    std::vector<InnerLoopReport> reports;  // one per temperature step
    std::vector<SplitEvent> splits;
    double max_capacity_residual = 0.0;  // capacity variant, across converged steps
    Vector final_capacity_residuals;     // capacity variant, at the last step
    SolverConfig config;                 // as resolved and executed
};

/// Anneal from a single feature at the weighted centroid: at each scheduled
/// temperature run the inner loop, then (below the feature budget) split
/// every feature flagged by the transition condition in ascending index
/// order, then advance beta geometrically until it exceeds beta_max.
///
/// The transition check is skipped on the final step so that returned
/// features always come out of a converged inner loop (a split immediately
/// before termination would leak the raw perturbation into the factors).
inline AnnealResult anneal(const DataMatrix& X, const SolverConfig& config) {
    SolverConfig cfg = resolve_config(config, X);
    AnnealResult res;
    res.config = cfg;

    AnnealerState state;
    state.features = X.values * X.weights;  // d x 1 weighted centroid
    state.alphas = Vector::Ones(1);
    state.assoc = Matrix::Ones(1, X.count());
    state.beta = cfg.beta_init;

    const long step_cap = 200000;
    long steps = 0;
    std::uint64_t split_count = 0;
    double last_beta = state.beta;
    while (state.beta <= cfg.beta_max) {
        if (++steps > step_cap)
            throw ScheduleError("anneal: schedule exceeded " + std::to_string(step_cap) + " steps");
        auto [next, report] = inner_converge(X, state, cfg);
        state = std::move(next);
        if (cfg.variant == Variant::CapacityConstrained) {
            Vector resid =
                capacity_residuals(X, state.assoc, detail::active_capacities(cfg, state.k()));
            res.max_capacity_residual = std::max(res.max_capacity_residual, resid.maxCoeff());
            res.final_capacity_residuals = resid;
        }
        res.reports.push_back(std::move(report));

        const bool final_step = state.beta * cfg.gamma > cfg.beta_max;
        if (state.k() < cfg.k_max && !final_step) {
            auto cands = transition_candidates(X, state);
            for (const auto& cand : cands) {
                if (state.k() >= cfg.k_max) break;
                if (2.0 * state.beta * cand.lambda_max < 1.0) continue;
                SplitEvent ev;
                state = split_feature(state, cand.feature, cfg.perturb_delta,
                                      CounterRng::substream(cfg.seed, ++split_count), cfg.k_max,
                                      &cand.direction, &ev);
                res.splits.push_back(ev);
                res.transitions.entries.push_back({state.k(), state.beta});
            }
        }
        last_beta = state.beta;
        state.beta *= cfg.gamma;
    }
    state.beta = last_beta;  // the last temperature the inner loop actually ran at
    res.state = std::move(state);
    return res;
}

}  // namespace meponmf
