#include "melroi/stain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "melroi/errors.hpp"
#include "melroi/kernels/kernels.hpp"

namespace melroi {

namespace {

constexpr float kOdFloor = 0.15f;
constexpr double kAngleLowPercentile = 1.0;
constexpr double kAngleHighPercentile = 99.0;
constexpr double kMaxConcPercentile = 99.0;

// Linear interpolation between order statistics; v must be sorted.
double percentile(const std::vector<double>& v, double p) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

Eigen::Matrix<double, 3, 2> matrix_of(const StainProfile& p) {
    Eigen::Matrix<double, 3, 2> m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = p.stain_matrix[r * 2 + c];
    return m;
}

} // namespace

double StainProfile::column_norm(int col) const {
    double s = 0.0;
    for (int r = 0; r < 3; ++r) s += stain_matrix[r * 2 + col] * stain_matrix[r * 2 + col];
    return std::sqrt(s);
}

StainProfile default_reference_profile() {
    StainProfile p;
    const double h[3] = {0.65, 0.70, 0.29};
    const double e[3] = {0.07, 0.99, 0.11};
    const double hn = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
    const double en = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    for (int r = 0; r < 3; ++r) {
        p.stain_matrix[r * 2 + 0] = h[r] / hn;
        p.stain_matrix[r * 2 + 1] = e[r] / en;
    }
    p.max_concentrations = {1.9, 1.0};
    return p;
}

void validate_profile(const StainProfile& profile) {
    const Eigen::Matrix<double, 3, 2> m = matrix_of(profile);
    const Eigen::Vector3d h = m.col(0);
    const Eigen::Vector3d e = m.col(1);
    if (h.norm() < 1e-12 || e.norm() < 1e-12)
        throw DegenerateStains("stain vector has zero norm");
    if (h.normalized().cross(e.normalized()).norm() < 1e-6)
        throw DegenerateStains("stain vectors are parallel within 1e-6");
    if (profile.max_concentrations[0] <= 0.0 || profile.max_concentrations[1] <= 0.0)
        throw DegenerateStains("max_concentrations must be positive");
}

std::array<float, 6> deconvolution_matrix(const StainProfile& profile) {
    validate_profile(profile);
    const Eigen::Matrix<double, 3, 2> m = matrix_of(profile);
    const Eigen::Matrix<double, 2, 3> pinv = (m.transpose() * m).inverse() * m.transpose();
    std::array<float, 6> out{};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) out[r * 3 + c] = static_cast<float>(pinv(r, c));
    return out;
}

ConcentrationPlanes compute_concentrations(const Planes8& planes, const StainProfile& profile) {
    const auto& k = kernels::active_kernels();
    const std::size_t n = planes.pixel_count();
    std::vector<float> od_r(n), od_g(n), od_b(n);
    k.od_from_bytes(planes.r.data(), n, od_r.data());
    k.od_from_bytes(planes.g.data(), n, od_g.data());
    k.od_from_bytes(planes.b.data(), n, od_b.data());
    ConcentrationPlanes conc;
    conc.width = planes.width;
    conc.height = planes.height;
    conc.h.resize(n);
    conc.e.resize(n);
    const std::array<float, 6> pinv = deconvolution_matrix(profile);
    k.od_to_conc(od_r.data(), od_g.data(), od_b.data(), n, pinv.data(), conc.h.data(),
                 conc.e.data());
    return conc;
}

StainProfile estimate_stains(const Planes8& sample) {
    const auto& k = kernels::active_kernels();
    const std::size_t n = sample.pixel_count();
    std::vector<float> od_r(n), od_g(n), od_b(n);
    k.od_from_bytes(sample.r.data(), n, od_r.data());
    k.od_from_bytes(sample.g.data(), n, od_g.data());
    k.od_from_bytes(sample.b.data(), n, od_b.data());

    // Keep strongly stained pixels only.
    std::vector<float> fr, fg, fb;
    fr.reserve(n);
    fg.reserve(n);
    fb.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (od_r[i] >= kOdFloor && od_g[i] >= kOdFloor && od_b[i] >= kOdFloor) {
            fr.push_back(od_r[i]);
            fg.push_back(od_g[i]);
            fb.push_back(od_b[i]);
        }
    }
    const std::size_t m = fr.size();
    if (m < 1000)
        throw InsufficientTissue("estimate_stains: only " + std::to_string(m) +
                                 " usable pixels after OD filtering (need 1000)");

    // Second-moment matrix of the OD cloud; its top eigenvectors are the
    // leading right-singular directions of the (uncentered) data matrix.
    Eigen::Matrix3d sm = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < m; ++i) {
        const Eigen::Vector3d od(fr[i], fg[i], fb[i]);
        sm += od * od.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sm);
    if (eig.info() != Eigen::Success)
        throw DegenerateStains("estimate_stains: eigendecomposition failed");
    const Eigen::Vector3d evals = eig.eigenvalues(); // ascending
    if (evals(2) <= 0.0 || evals(1) <= 1e-9 * evals(2))
        throw DegenerateStains("estimate_stains: OD cloud is rank-1 (single color)");
    Eigen::Vector3d v1 = eig.eigenvectors().col(2);
    Eigen::Vector3d v2 = eig.eigenvectors().col(1);
    auto fix_sign = [](Eigen::Vector3d& v) {
        int arg = 0;
        for (int i = 1; i < 3; ++i)
            if (std::fabs(v(i)) > std::fabs(v(arg))) arg = i;
        if (v(arg) < 0) v = -v;
    };
    fix_sign(v1);
    fix_sign(v2);

    std::vector<double> angles(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Eigen::Vector3d od(fr[i], fg[i], fb[i]);
        angles[i] = std::atan2(od.dot(v2), od.dot(v1));
    }
    std::sort(angles.begin(), angles.end());
    const double lo = percentile(angles, kAngleLowPercentile);
    const double hi = percentile(angles, kAngleHighPercentile);

    auto direction = [&](double phi) {
        Eigen::Vector3d d = std::cos(phi) * v1 + std::sin(phi) * v2;
        if (d.sum() < 0) d = -d;
        for (int i = 0; i < 3; ++i) d(i) = std::max(d(i), 0.0);
        const double norm = d.norm();
        if (norm < 1e-9) throw DegenerateStains("estimate_stains: degenerate stain direction");
        return Eigen::Vector3d(d / norm);
    };
    Eigen::Vector3d d1 = direction(lo);
    Eigen::Vector3d d2 = direction(hi);
    // Hematoxylin-like column (higher blue OD) first.
    if (d2(2) > d1(2)) std::swap(d1, d2);

    StainProfile profile;
    for (int r = 0; r < 3; ++r) {
        profile.stain_matrix[r * 2 + 0] = d1(r);
        profile.stain_matrix[r * 2 + 1] = d2(r);
    }
    profile.max_concentrations = {1.0, 1.0}; // placeholder for validation
    validate_profile(profile);

    const std::array<float, 6> pinv = deconvolution_matrix(profile);
    std::vector<float> ch(m), ce(m);
    k.od_to_conc(fr.data(), fg.data(), fb.data(), m, pinv.data(), ch.data(), ce.data());
    std::vector<double> hs(ch.begin(), ch.end());
    std::vector<double> es(ce.begin(), ce.end());
    std::sort(hs.begin(), hs.end());
    std::sort(es.begin(), es.end());
    profile.max_concentrations[0] = percentile(hs, kMaxConcPercentile);
    profile.max_concentrations[1] = percentile(es, kMaxConcPercentile);
    if (profile.max_concentrations[0] <= 1e-6 || profile.max_concentrations[1] <= 1e-6)
        throw DegenerateStains("estimate_stains: nonpositive max concentration");
    return profile;
}

Image8 normalize_patch(const Image8& patch, const StainProfile& source,
                       const StainProfile& reference) {
    validate_profile(source);
    validate_profile(reference);
    const auto& k = kernels::active_kernels();
    const Planes8 planes = to_planes(patch);
    const ConcentrationPlanes conc = compute_concentrations(planes, source);
    const std::size_t n = planes.pixel_count();

    const float scale[2] = {
        static_cast<float>(reference.max_concentrations[0] / source.max_concentrations[0]),
        static_cast<float>(reference.max_concentrations[1] / source.max_concentrations[1])};
    float stains[6];
    for (int i = 0; i < 6; ++i) stains[i] = static_cast<float>(reference.stain_matrix[i]);

    Planes8 out;
    out.width = planes.width;
    out.height = planes.height;
    out.r.resize(n);
    out.g.resize(n);
    out.b.resize(n);
    k.conc_render(conc.h.data(), conc.e.data(), n, scale, stains, out.r.data(), out.g.data(),
                  out.b.data());
    return from_planes(out);
}

Image8 render_concentrations(const ConcentrationPlanes& conc, const StainProfile& profile) {
    validate_profile(profile);
    const auto& k = kernels::active_kernels();
    const std::size_t n = conc.h.size();
    const float scale[2] = {1.0f, 1.0f};
    float stains[6];
    for (int i = 0; i < 6; ++i) stains[i] = static_cast<float>(profile.stain_matrix[i]);
    Planes8 out;
    out.width = conc.width;
    out.height = conc.height;
    out.r.resize(n);
    out.g.resize(n);
    out.b.resize(n);
    k.conc_render(conc.h.data(), conc.e.data(), n, scale, stains, out.r.data(), out.g.data(),
                  out.b.data());
    return from_planes(out);
}

} // namespace melroi
