#pragma once

#include <chrono>
#include <utility>

#include "meponmf/common.hpp"

namespace meponmf {

/// Evaluation summary, all percentages.
struct MetricsReport {
    double recon_error_pct = 0.0;    // 100 * ||X - WH||_F / ||X||_F
    double orthogonality_pct = 0.0;  // in [0, 100]
    double sparsity_pct = 0.0;       // in [0, 100]
    double elapsed_seconds = 0.0;
};

/// Relative Frobenius reconstruction error ||X - WH||_F / ||X||_F.
inline double recon_error(const Matrix& X, const Matrix& W, const Matrix& H) {
    if (W.rows() != X.rows() || H.cols() != X.cols() || W.cols() != H.rows())
        throw ShapeMismatch("recon_error: incompatible factor shapes");
    double denom = X.norm();
    if (!(denom > 0.0)) throw DomainError("recon_error: zero data matrix");
    return (X - W * H).norm() / denom;
}

/// Orthogonality of the constrained factor G (arranged so G G^T is k x k):
///   1 - ||G G^T - diag(G G^T)||_F / ||G G^T||_F.
/// 1 exactly iff the rows of G have pairwise disjoint supports.
inline double orthogonality(const Matrix& G) {
    Matrix gram = G * G.transpose();
    double total = gram.norm();
    if (!(total > 0.0)) throw DegenerateGram("orthogonality: zero Gram matrix");
    Matrix off = gram;
    off.diagonal().setZero();
    return 1.0 - off.norm() / total;
}

/// Average support sparsity of a feature-major factor A (k rows, each a
/// support vector of length n_support): 1 - (1/k) sum_j nnz_j / n_support.
/// Entries count as nonzero above eps0 = 1e-8 * max|A|, so exact zeros from
/// hard assignment are unaffected while near-zero fuzz in dense baselines is.
inline double sparsity(const Matrix& A, Index n_support) {
    if (A.cols() != n_support) throw ShapeMismatch("sparsity: support length mismatch");
    const double eps0 = 1e-8 * A.cwiseAbs().maxCoeff();
    const Index k = A.rows();
    double acc = 0.0;
    for (Index j = 0; j < k; ++j) {
        Index nnz = (A.row(j).cwiseAbs().array() > eps0).count();
        acc += static_cast<double>(nnz) / static_cast<double>(n_support);
    }
    return 1.0 - acc / static_cast<double>(k);
}

/// Wall-clock a callable on a monotonic clock; returns (result, seconds).
template <typename F>
auto timed(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto result = std::forward<F>(f)();
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    return std::make_pair(std::move(result), dt.count());
}

}  // namespace meponmf
