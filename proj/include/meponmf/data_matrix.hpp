#pragma once

#include <cmath>
#include <utility>

#include "meponmf/common.hpp"

namespace meponmf {

/// Nonnegative d x n data matrix with per-column importance weights and the
/// original Euclidean column norms (kept so a normalized copy can be undone).
///
/// Invariants, enforced at construction and checkable via validate():
///   - every entry is finite and >= 0
///   - weights is a probability vector (sum 1 within 1e-12, entries in [0,1])
///   - column_norms[i] > 0 (zero columns are rejected, not dropped)
struct DataMatrix {
    Matrix values;        // d x n
    Vector weights;       // n, sums to 1
    Vector column_norms;  // n, norms of the columns the matrix was built from

    Index dim() const { return values.rows(); }
    Index count() const { return values.cols(); }

    /// Build with uniform weights 1/n.
    static DataMatrix from_values(Matrix v) {
        const Index n = v.cols();
        if (n == 0) throw DomainError("DataMatrix: matrix has no columns");
        Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
        w /= w.sum();  // exact unit sum regardless of n
        return from_values(std::move(v), std::move(w));
    }

    static DataMatrix from_values(Matrix v, Vector w) {
        DataMatrix out;
        out.values = std::move(v);
        out.weights = std::move(w);
        out.column_norms = out.values.colwise().norm();
        out.validate();
        return out;
    }

    void validate() const {
        if (values.size() == 0) throw DomainError("DataMatrix: empty matrix");
        if (!values.allFinite()) throw DomainError("DataMatrix: non-finite entry");
        if ((values.array() < 0.0).any()) throw DomainError("DataMatrix: negative entry");
        if (weights.size() != values.cols())
            throw WeightError("DataMatrix: weight count does not match column count");
        if (!weights.allFinite() || (weights.array() < 0.0).any() || (weights.array() > 1.0).any())
            throw WeightError("DataMatrix: weights must lie in [0,1]");
        if (std::abs(weights.sum() - 1.0) > 1e-12)
            throw WeightError("DataMatrix: weights must sum to 1");
        for (Index i = 0; i < column_norms.size(); ++i)
            if (!(column_norms[i] > 0.0))
                throw DomainError("DataMatrix: zero column at index " + std::to_string(i));
    }
};

/// Rescale every column to unit Euclidean norm. column_norms keeps the norms
/// carried by the input, so values * diag(column_norms) restores the matrix
/// the input was originally built from. Idempotent on unit columns.
inline DataMatrix normalize_columns(const DataMatrix& X) {
    DataMatrix out = X;
    for (Index i = 0; i < X.count(); ++i) {
        double n = X.values.col(i).norm();
        if (!(n > 0.0)) throw DomainError("normalize_columns: zero column at index " + std::to_string(i));
        out.values.col(i) /= n;
    }
    return out;
}

}  // namespace meponmf
