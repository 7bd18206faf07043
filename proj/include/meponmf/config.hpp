#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "meponmf/common.hpp"
#include "meponmf/data_matrix.hpp"

namespace meponmf {

/// Which update rule fixes the feature weights.
enum class Variant {
    OptimallyWeighted,    // weights solved jointly with features
    CapacityConstrained,  // weights driven to prescribed per-feature capacities
};

/// Which factor carries the one-nonzero-per-vector constraint.
enum class Orientation { HOrthogonal, WOrthogonal };

inline const char* to_string(Variant v) {
    return v == Variant::OptimallyWeighted ? "optimal" : "capacity";
}
inline const char* to_string(Orientation o) {
    return o == Orientation::HOrthogonal ? "h" : "w";
}

/// Solver configuration. beta_init/beta_max <= 0 mean "derive from the data":
/// beta_init = 0.1 / (2 lambda_max(Cov X)) (one decade below the first
/// predicted critical temperature) and beta_max = 1e6 * beta_init.
struct SolverConfig {
    int k_max = 1;
    double beta_init = 0.0;
    double beta_max = 0.0;
    double gamma = 1.05;  // geometric growth factor, > 1
    double inner_tol = 1e-8;
    int inner_max_iters = 500;
    double perturb_delta = 1e-4;  // split displacement, relative to unit columns
    Variant variant = Variant::OptimallyWeighted;
    std::optional<Vector> capacities;  // required iff CapacityConstrained
    Orientation orientation = Orientation::HOrthogonal;
    std::uint64_t seed = 0;

    bool resolved() const { return beta_init > 0.0 && beta_max > 0.0; }

    /// Throws DomainError unless the configuration is complete and coherent.
    void validate() const {
        if (k_max < 1) throw DomainError("SolverConfig: k_max must be >= 1");
        if (!(gamma > 1.0)) throw DomainError("SolverConfig: gamma must be > 1");
        if (!(beta_init > 0.0) || !std::isfinite(beta_init))
            throw DomainError("SolverConfig: beta_init must be positive and finite");
        if (!(beta_max > beta_init) || !std::isfinite(beta_max))
            throw DomainError("SolverConfig: beta_max must exceed beta_init");
        if (!(inner_tol > 0.0)) throw DomainError("SolverConfig: inner_tol must be positive");
        if (inner_max_iters < 1) throw DomainError("SolverConfig: inner_max_iters must be >= 1");
        if (!(perturb_delta > 0.0)) throw DomainError("SolverConfig: perturb_delta must be positive");
        if (variant == Variant::CapacityConstrained) {
            if (!capacities) throw DomainError("SolverConfig: capacity variant requires capacities");
            const Vector& c = *capacities;
            if (c.size() != k_max)
                throw DomainError("SolverConfig: capacities must have k_max entries");
            if ((c.array() < 0.0).any() || (c.array() > 1.0).any())
                throw DomainError("SolverConfig: capacities must lie in [0,1]");
            if (std::abs(c.sum() - 1.0) > 1e-12)
                throw DomainError("SolverConfig: capacities must sum to 1");
        } else if (capacities) {
            throw DomainError("SolverConfig: capacities given without capacity variant");
        }
    }
};

/// Largest eigenvalue of the weighted covariance sum_i p_i (x_i-c)(x_i-c)^T.
/// Solved on the smaller of the d x d covariance or the n x n Gram form.
inline double covariance_lambda_max(const DataMatrix& X) {
    const Index d = X.dim(), n = X.count();
    Vector mean = X.values * X.weights;
    Matrix V = X.values.colwise() - mean;
    V = V * X.weights.cwiseSqrt().asDiagonal();  // cov = V V^T
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    if (d <= n)
        es.compute(Matrix(V * V.transpose()), Eigen::EigenvaluesOnly);
    else
        es.compute(Matrix(V.transpose() * V), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenFailure("covariance_lambda_max: eigensolve failed");
    return es.eigenvalues().maxCoeff();
}

/// Fill data-dependent defaults for beta_init/beta_max and validate.
inline SolverConfig resolve_config(SolverConfig cfg, const DataMatrix& X) {
    if (cfg.beta_init <= 0.0) {
        double lam = covariance_lambda_max(X);
        cfg.beta_init = lam > 1e-300 ? 0.1 / (2.0 * lam) : 1.0;
    }
    if (cfg.beta_max <= 0.0) cfg.beta_max = 1e6 * cfg.beta_init;
    cfg.validate();
    return cfg;
}

}  // namespace meponmf
