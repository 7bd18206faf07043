#pragma once

#include <utility>

#include "meponmf/annealing.hpp"
#include "meponmf/common.hpp"
#include "meponmf/config.hpp"
#include "meponmf/data_matrix.hpp"
#include "meponmf/metrics.hpp"

namespace meponmf {

/// Assembled nonnegative factor pair X ~ W H. Exactly one of the factors has
/// disjoint supports: one nonzero per column of H (HOrthogonal) or per row of
/// W (WOrthogonal).
struct FactorPair {
    Matrix W;  // d x k
    Matrix H;  // k x n
    Orientation orientation = Orientation::HOrthogonal;

    void validate() const {
        if (W.cols() != H.rows()) throw ShapeMismatch("FactorPair: inner dimensions differ");
        if ((W.array() < 0.0).any() || (H.array() < 0.0).any())
            throw DomainError("FactorPair: negative factor entry");
        if (orientation == Orientation::HOrthogonal) {
            for (Index i = 0; i < H.cols(); ++i)
                if ((H.col(i).array() != 0.0).count() > 1)
                    throw DomainError("FactorPair: H column with multiple nonzeros");
        } else {
            for (Index r = 0; r < W.rows(); ++r)
                if ((W.row(r).array() != 0.0).count() > 1)
                    throw DomainError("FactorPair: W row with multiple nonzeros");
        }
    }
};

struct OnmfResult {
    FactorPair factors;
    TransitionLog transitions;
    MetricsReport metrics;
    double elapsed_seconds = 0.0;
    AnnealResult details;  // full annealing record, used by the CLI outputs
};

/// Replace each soft association column by an indicator at its argmax.
/// Ties break toward the lowest feature index. The result has at most one
/// nonzero per column, so M M^T is exactly diagonal.
inline Matrix harden_assignments(const Matrix& assoc) {
    Matrix hard = Matrix::Zero(assoc.rows(), assoc.cols());
    for (Index i = 0; i < assoc.cols(); ++i) {
        Index best = 0;
        assoc.col(i).maxCoeff(&best);  // Eigen returns the first maximizer
        hard(best, i) = 1.0;
    }
    return hard;
}

/// Replace assignment indicators by per-column least-squares scales:
///   H(j(i), i) = theta_i = x_i^T w_j(i) / ||w_j(i)||^2,
/// with x_i the original (unnormalized) column of X. theta_i >= 0 since both
/// X and W are nonnegative.
inline Matrix post_process_theta(const DataMatrix& X, const Matrix& W, const Matrix& hard) {
    if (hard.cols() != X.count() || W.rows() != X.dim() || W.cols() != hard.rows())
        throw ShapeMismatch("post_process_theta: incompatible shapes");
    Vector wsq = W.colwise().squaredNorm();
    Matrix H = Matrix::Zero(hard.rows(), hard.cols());
    for (Index i = 0; i < hard.cols(); ++i) {
        Index j = 0;
        double m = hard.col(i).maxCoeff(&j);
        if (m <= 0.0) throw DomainError("post_process_theta: unassigned column");
        if (!(wsq[j] > 0.0))
            throw DegenerateFeature("post_process_theta: assigned feature has zero norm");
        H(j, i) = X.values.col(i).dot(W.col(j)) / wsq[j];
    }
    return H;
}

/// End-to-end solve: normalize columns, anneal, harden the final soft
/// assignment, rescale by theta, and score against the original matrix.
///
/// The W-orthogonal orientation is the exact transpose dual: the solver runs
/// on X^T (with uniform weights over the transposed columns) and the factors
/// are swapped back as W = H'^T, H = W'^T, so equal seeds give bit-identical
/// duality. Column weights only apply to the H-orthogonal orientation.
inline OnmfResult fit(const DataMatrix& X, const SolverConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();

    if (cfg.orientation == Orientation::WOrthogonal) {
        DataMatrix Xt = DataMatrix::from_values(X.values.transpose());
        SolverConfig inner_cfg = cfg;
        inner_cfg.orientation = Orientation::HOrthogonal;
        OnmfResult inner = fit(Xt, inner_cfg);
        OnmfResult out;
        out.factors.W = inner.factors.H.transpose();
        out.factors.H = inner.factors.W.transpose();
        out.factors.orientation = Orientation::WOrthogonal;
        out.transitions = std::move(inner.transitions);
        out.details = std::move(inner.details);
        out.metrics = inner.metrics;  // E, O, S are transpose-invariant as computed below
        std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        out.elapsed_seconds = dt.count();
        out.metrics.elapsed_seconds = out.elapsed_seconds;
        out.factors.validate();
        return out;
    }

    DataMatrix Xn = normalize_columns(X);
    AnnealResult ar = anneal(Xn, resolve_config(cfg, Xn));

    OnmfResult out;
    Matrix hard = harden_assignments(ar.state.assoc);
    out.factors.W = ar.state.features;
    out.factors.H = post_process_theta(X, out.factors.W, hard);
    out.factors.orientation = Orientation::HOrthogonal;

    out.metrics.recon_error_pct = 100.0 * recon_error(X.values, out.factors.W, out.factors.H);
    out.metrics.orthogonality_pct = 100.0 * orthogonality(out.factors.H);
    out.metrics.sparsity_pct = 100.0 * sparsity(out.factors.H, X.count());

    out.details = std::move(ar);
    out.transitions = out.details.transitions;
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    out.elapsed_seconds = dt.count();
    out.metrics.elapsed_seconds = out.elapsed_seconds;
    out.factors.validate();
    return out;
}

}  // namespace meponmf
