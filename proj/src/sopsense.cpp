#include "sopfx/sopsense.hpp"

#include "sopfx/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sopfx::sop {

JonesMatrix JonesMatrix::operator*(const JonesMatrix& o) const {
    JonesMatrix r;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j);
    }
    return r;
}

JonesMatrix JonesMatrix::operator*(cplx s) const {
    JonesMatrix r = *this;
    for (auto& row : r.m) {
        for (cplx& v : row) v *= s;
    }
    return r;
}

JonesVector JonesMatrix::operator*(const JonesVector& v) const {
    return {(*this)(0, 0) * v[0] + (*this)(0, 1) * v[1], (*this)(1, 0) * v[0] + (*this)(1, 1) * v[1]};
}

JonesMatrix JonesMatrix::adjoint() const {
    JonesMatrix r;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) r(i, j) = std::conj((*this)(j, i));
    }
    return r;
}

JonesMatrix JonesMatrix::transpose() const {
    JonesMatrix r;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) r(i, j) = (*this)(j, i);
    }
    return r;
}

cplx JonesMatrix::det() const { return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0); }

JonesMatrix JonesMatrix::inverse() const {
    const cplx d = det();
    if (d == cplx{}) throw InvalidInput("JonesMatrix::inverse: singular matrix");
    JonesMatrix r;
    r(0, 0) = (*this)(1, 1) / d;
    r(1, 1) = (*this)(0, 0) / d;
    r(0, 1) = -(*this)(0, 1) / d;
    r(1, 0) = -(*this)(1, 0) / d;
    return r;
}

double JonesMatrix::unitarity_error() const {
    const JonesMatrix p = (*this) * adjoint();
    double s = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) s += std::norm(p(i, j) - (i == j ? cplx{1.0} : cplx{}));
    }
    return std::sqrt(s);
}

Vec3 jones_to_stokes(const JonesVector& v) {
    const double px = std::norm(v[0]);
    const double py = std::norm(v[1]);
    const double s0 = px + py;
    if (!(s0 > 0.0)) throw InvalidInput("jones_to_stokes: S0 = 0");
    const cplx c = std::conj(v[0]) * v[1];
    return {(px - py) / s0, 2.0 * c.real() / s0, 2.0 * c.imag() / s0};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 apply(const Rot3& r, const Vec3& v) {
    return {r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2], r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2]};
}

// ---------------------------------------------------------------------------

JonesMatrix taps_to_jones(const rx::TapSet& taps, JonesMode mode) {
    JonesMatrix j;
    const std::size_t map[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (std::size_t p = 0; p < 4; ++p) {
        const CVec& t = taps[p];
        if (t.empty()) throw InvalidInput("taps_to_jones: empty tap vector");
        cplx v{};
        if (mode == JonesMode::DcResponse) {
            for (const cplx& c : t) v += c;
        } else {
            v = t[t.size() / 2];
        }
        j.m[map[p][0]][map[p][1]] = v;
    }
    bool all_zero = true;
    for (const auto& row : j.m) {
        for (const cplx& v : row) all_zero = all_zero && v == cplx{};
    }
    if (all_zero) throw InvalidInput("taps_to_jones: all-zero matrix");
    return j;
}

Vec3 probe_stokes(const JonesMatrix& m, const JonesVector& probe, ProbeSide side) {
    const JonesVector v = side == ProbeSide::Row ? m.transpose() * probe : m * probe;
    return jones_to_stokes(v);
}

StokesTrajectory probe_stokes(const rx::TapTrajectory& traj, const JonesVector& probe, JonesMode mode,
                              ProbeSide side) {
    if (probe[0] == cplx{} && probe[1] == cplx{}) throw InvalidInput("probe_stokes: zero probe vector");
    StokesTrajectory out;
    out.sample_rate_norm = traj.sop_sample_rate_norm;
    out.samples.reserve(traj.snapshots.size());
    for (const rx::TapSnapshot& s : traj.snapshots) {
        out.samples.push_back(probe_stokes(taps_to_jones(s.h, mode), probe, side));
    }
    return out;
}

Vec3 centroid(const StokesTrajectory& traj) {
    if (traj.samples.empty()) throw InvalidInput("centroid: empty trajectory");
    Vec3 m{0.0, 0.0, 0.0};
    for (const Vec3& s : traj.samples) {
        for (int i = 0; i < 3; ++i) m[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)];
    }
    const double n = static_cast<double>(traj.samples.size());
    for (double& v : m) v /= n;
    const double len = norm(m);
    if (!(len > kCentroidMinNorm)) {
        throw DiagnosticError("centroid: degenerate trajectory, mean Stokes norm " + std::to_string(len) +
                              " is not above " + std::to_string(kCentroidMinNorm));
    }
    for (double& v : m) v /= len;
    return m;
}

Rot3 rotation_to_north_pole(const Vec3& c) {
    const Vec3 z{0.0, 0.0, 1.0};
    const Vec3 axis = cross(c, z);
    const double s = norm(axis);
    const double cos_t = std::clamp(dot(c, z), -1.0, 1.0);
    Rot3 r{};
    if (s < 1e-15) {
        if (cos_t > 0.0) {
            r = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
        } else {
            r = {{{1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {0.0, 0.0, -1.0}}};
        }
        return r;
    }
    const Vec3 k{axis[0] / s, axis[1] / s, axis[2] / s};
    const double theta = std::atan2(s, cos_t);
    const double st = std::sin(theta);
    const double vt = 1.0 - std::cos(theta);
    const double ct = std::cos(theta);
    r[0] = {ct + k[0] * k[0] * vt, k[0] * k[1] * vt - k[2] * st, k[0] * k[2] * vt + k[1] * st};
    r[1] = {k[1] * k[0] * vt + k[2] * st, ct + k[1] * k[1] * vt, k[1] * k[2] * vt - k[0] * st};
    r[2] = {k[2] * k[0] * vt - k[1] * st, k[2] * k[1] * vt + k[0] * st, ct + k[2] * k[2] * vt};
    return r;
}

StokesTrajectory rotate_to_north_pole(const StokesTrajectory& traj, const Vec3& c) {
    const Rot3 r = rotation_to_north_pole(c);
    StokesTrajectory out;
    out.sample_rate_norm = traj.sample_rate_norm;
    out.samples.reserve(traj.samples.size());
    for (const Vec3& s : traj.samples) out.samples.push_back(apply(r, s));
    return out;
}

std::pair<RVec, RVec> remove_dc(const StokesTrajectory& traj) {
    const std::size_t n = traj.samples.size();
    RVec s1(n);
    RVec s2(n);
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s1[i] = traj.samples[i][0];
        s2[i] = traj.samples[i][1];
        m1 += s1[i];
        m2 += s2[i];
    }
    if (n > 0) {
        m1 /= static_cast<double>(n);
        m2 /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        s1[i] -= m1;
        s2[i] -= m2;
    }
    return {std::move(s1), std::move(s2)};
}

double angular_rmse(const StokesTrajectory& ref, const StokesTrajectory& test) {
    const std::size_t n = ref.samples.size();
    if (n == 0) throw InvalidInput("angular_rmse: empty trajectories");
    if (test.samples.size() != n) {
        throw InvalidInput("angular_rmse: length mismatch (" + std::to_string(n) + " vs " +
                           std::to_string(test.samples.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& a = ref.samples[i];
        const Vec3& b = test.samples[i];
        if (std::abs(norm(a) - 1.0) > 1e-6 || std::abs(norm(b) - 1.0) > 1e-6) {
            throw InvalidInput("angular_rmse: sample " + std::to_string(i) + " is not unit-norm");
        }
        const double ang = std::acos(std::clamp(dot(a, b), -1.0, 1.0));
        acc += ang * ang;
    }
    return 180.0 / std::numbers::pi * std::sqrt(acc / static_cast<double>(n));
}

} // namespace sopfx::sop
