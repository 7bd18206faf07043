#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "meponmf/common.hpp"
#include "meponmf/data_matrix.hpp"
#include "meponmf/rng.hpp"

namespace meponmf {

/// i.i.d. Gamma-entry matrix with additive uniform noise.
struct GammaSpec {
    Index d = 1;
    Index n = 1;
    double shape_alpha = 10.0;
    double scale_theta = 1.0;
    double noise_amplitude = 1.0;  // entries get + Uniform[0, noise_amplitude)
    std::uint64_t seed = 0;
};

/// Entries i.i.d. Gamma(shape, scale) + Uniform[0, noise). Column j is drawn
/// from substream (seed, j), so output is independent of generation order.
inline DataMatrix gamma_synthetic(const GammaSpec& spec) {
    if (spec.d < 1 || spec.n < 1) throw DomainError("gamma_synthetic: d and n must be positive");
    if (!(spec.shape_alpha > 0.0) || !(spec.scale_theta > 0.0))
        throw DomainError("gamma_synthetic: shape and scale must be positive");
    if (spec.noise_amplitude < 0.0)
        throw DomainError("gamma_synthetic: noise amplitude must be nonnegative");
    Matrix m(spec.d, spec.n);
    for (Index j = 0; j < spec.n; ++j) {
        CounterRng rng(CounterRng::substream(spec.seed, static_cast<std::uint64_t>(j)));
        for (Index r = 0; r < spec.d; ++r) {
            double v = rng.gamma(spec.shape_alpha, spec.scale_theta);
            if (spec.noise_amplitude > 0.0) v += rng.uniform(spec.noise_amplitude);
            m(r, j) = v;
        }
    }
    return DataMatrix::from_values(std::move(m));
}

/// Isotropic clusters around given nonnegative centers, optionally refined
/// into sub-clusters placed tangentially (orthogonal to the parent center
/// direction) so the sub-structure survives column normalization.
struct ClusterSpec {
    Index d = 2;
    Index n = 0;
    std::vector<Vector> centers;  // nonnegative, one per top-level cluster
    double spread = 0.0;          // per-point Gaussian radius
    int sub_count = 0;            // 0 = flat clusters
    double sub_offset = 0.0;      // distance scale of sub-centers from the parent
    std::uint64_t seed = 0;
};

struct ClusteredData {
    DataMatrix matrix;
    std::vector<int> labels;              // top-level cluster per column
    std::vector<int> sub_labels;          // sub-cluster per column (-1 when flat)
    std::vector<Vector> effective_centers;
};

namespace detail {

// Deterministic orthonormal tangent frame at `center`: Gram-Schmidt of the
// standard basis against the center direction, first d-1 surviving vectors.
inline std::vector<Vector> tangent_frame(const Vector& center) {
    const Index d = center.size();
    std::vector<Vector> frame;
    Vector u = center.norm() > 0.0 ? Vector(center / center.norm()) : Vector(Vector::Unit(d, 0));
    for (Index axis = 0; axis < d && frame.size() < static_cast<std::size_t>(d - 1); ++axis) {
        Vector v = Vector::Unit(d, axis);
        v -= v.dot(u) * u;
        for (const Vector& f : frame) v -= v.dot(f) * f;
        double nrm = v.norm();
        if (nrm > 1e-10) frame.push_back(v / nrm);
    }
    return frame;
}

}  // namespace detail

/// Draw columns around (sub-)centers with nonnegativity enforced by
/// rejection (at most 1000 attempts per point, else RejectionOverflow).
/// Points are dealt round-robin over the effective centers; ground-truth
/// labels are returned alongside. Negative coordinates of deterministic
/// sub-center placements are clamped to zero.
inline ClusteredData clustered_synthetic(const ClusterSpec& spec) {
    if (spec.centers.empty()) throw DomainError("clustered_synthetic: no centers");
    if (spec.n < 1) throw DomainError("clustered_synthetic: n must be positive");
    if (spec.spread < 0.0 || spec.sub_offset < 0.0)
        throw DomainError("clustered_synthetic: spreads must be nonnegative");
    for (const Vector& c : spec.centers) {
        if (c.size() != spec.d) throw DomainError("clustered_synthetic: center dimension mismatch");
        if ((c.array() < 0.0).any()) throw DomainError("clustered_synthetic: negative center");
    }
    if (spec.sub_count > 0 && spec.d < 2)
        throw DomainError("clustered_synthetic: sub-clusters need d >= 2");

    ClusteredData out;
    std::vector<int> parent_of;
    std::vector<int> sub_of;
    if (spec.sub_count <= 0) {
        for (std::size_t c = 0; c < spec.centers.size(); ++c) {
            out.effective_centers.push_back(spec.centers[c]);
            parent_of.push_back(static_cast<int>(c));
            sub_of.push_back(-1);
        }
    } else {
        for (std::size_t c = 0; c < spec.centers.size(); ++c) {
            auto frame = detail::tangent_frame(spec.centers[c]);
            for (int s = 0; s < spec.sub_count; ++s) {
                Vector offset = Vector::Zero(spec.d);
                if (frame.size() >= 2) {
                    // evenly spaced on a tangent circle
                    double ang = 2.0 * 3.141592653589793 * s / spec.sub_count;
                    offset = std::cos(ang) * frame[0] + std::sin(ang) * frame[1];
                } else if (!frame.empty()) {
                    // d == 2: collinear spacing along the single tangent
                    double t = spec.sub_count > 1
                                   ? 2.0 * s / (spec.sub_count - 1.0) - 1.0
                                   : 0.0;
                    offset = t * frame[0];
                }
                Vector sc = (spec.centers[c] + spec.sub_offset * offset).cwiseMax(0.0);
                out.effective_centers.push_back(sc);
                parent_of.push_back(static_cast<int>(c));
                sub_of.push_back(s);
            }
        }
    }

    const std::size_t kcenters = out.effective_centers.size();
    Matrix m(spec.d, spec.n);
    out.labels.resize(static_cast<std::size_t>(spec.n));
    out.sub_labels.resize(static_cast<std::size_t>(spec.n));
    for (Index i = 0; i < spec.n; ++i) {
        std::size_t c = static_cast<std::size_t>(i) % kcenters;
        const Vector& center = out.effective_centers[c];
        CounterRng rng(CounterRng::substream(spec.seed, static_cast<std::uint64_t>(i)));
        Vector x;
        if (spec.spread == 0.0) {
            x = center;
        } else {
            bool accepted = false;
            for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
                x = center;
                for (Index r = 0; r < spec.d; ++r) x[r] += spec.spread * rng.normal();
                accepted = (x.array() >= 0.0).all();
            }
            if (!accepted)
                throw RejectionOverflow("clustered_synthetic: nonnegativity rejection exceeded "
                                        "1000 attempts at column " + std::to_string(i));
        }
        m.col(i) = x;
        out.labels[static_cast<std::size_t>(i)] = parent_of[c];
        out.sub_labels[static_cast<std::size_t>(i)] = sub_of[c];
    }
    out.matrix = DataMatrix::from_values(std::move(m));
    return out;
}

}  // namespace meponmf
