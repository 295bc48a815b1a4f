#pragma once

// Jones calculus and Stokes-space primitives shared by the channel model and
// the sensing back-end.
//
// Stokes convention, for a Jones vector v = (vx, vy):
//   S0 = |vx|^2 + |vy|^2
//   S1 = (|vx|^2 - |vy|^2) / S0
//   S2 = 2 Re(conj(vx) vy) / S0
//   S3 = 2 Im(conj(vx) vy) / S0
// so (1, i)/sqrt(2) maps to +S3.

#include "sopfx/types.hpp"

#include <array>
#include <vector>

namespace sopfx::sop {

using Vec3 = std::array<double, 3>;
using Rot3 = std::array<std::array<double, 3>, 3>;
using JonesVector = std::array<cplx, 2>;

struct JonesMatrix {
    std::array<std::array<cplx, 2>, 2> m{};

    static JonesMatrix identity() {
        JonesMatrix j;
        j.m[0][0] = 1.0;
        j.m[1][1] = 1.0;
        return j;
    }

    cplx& operator()(int r, int c) { return m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }
    const cplx& operator()(int r, int c) const { return m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }

    JonesMatrix operator*(const JonesMatrix& o) const;
    JonesMatrix operator*(cplx s) const;
    JonesVector operator*(const JonesVector& v) const;
    JonesMatrix adjoint() const;
    JonesMatrix transpose() const;
    JonesMatrix inverse() const;
    cplx det() const;
    /// Frobenius norm of J J^H - I.
    double unitarity_error() const;
};

struct StokesTrajectory {
    std::vector<Vec3> samples;
    double sample_rate_norm = 1.0; ///< samples per symbol period
};

/// Normalized Stokes vector; throws InvalidInput when S0 == 0.
Vec3 jones_to_stokes(const JonesVector& v);

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 apply(const Rot3& r, const Vec3& v);

} // namespace sopfx::sop
