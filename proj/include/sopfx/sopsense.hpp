#pragma once

// Sensing back-end: equalizer taps -> Jones matrices -> Stokes trajectory on
// the Poincare sphere -> centroid rotation, DC removal and angular RMSE.

#include "sopfx/polarization.hpp"
#include "sopfx/rxdsp.hpp"

#include <utility>

namespace sopfx::sop {

enum class JonesMode {
    DcResponse, ///< entry (p, q) = sum_k h_pq[k]
    CenterTap,  ///< entry (p, q) = h_pq[center]
};

/// Which side of the matrix the probe enters from.
enum class ProbeSide {
    /// v = M^T p: the probe weights the matrix rows. Each equalizer output has
    /// an arbitrary carrier phase; with a basis probe v is a single row, so
    /// that phase is global and the Stokes vector is well defined.
    Row,
    /// v = M p: the probe is the matrix input. Sensitive to the relative phase
    /// of the two equalizer outputs.
    Column,
};

/// Throws InvalidInput for an all-zero matrix.
JonesMatrix taps_to_jones(const rx::TapSet& taps, JonesMode mode = JonesMode::DcResponse);

Vec3 probe_stokes(const JonesMatrix& m, const JonesVector& probe, ProbeSide side = ProbeSide::Row);

/// Per-snapshot Stokes vectors. Throws InvalidInput for a zero probe or when
/// S0 vanishes at any sample.
StokesTrajectory probe_stokes(const rx::TapTrajectory& traj, const JonesVector& probe = {cplx{1.0}, cplx{0.0}},
                              JonesMode mode = JonesMode::DcResponse, ProbeSide side = ProbeSide::Row);

/// Normalized mean. Throws DiagnosticError when the mean norm is <= 0.1.
Vec3 centroid(const StokesTrajectory& traj);

inline constexpr double kCentroidMinNorm = 0.1;

/// Rodrigues rotation taking unit vector c to (0, 0, 1). c = -z maps by a
/// half-turn about S1.
Rot3 rotation_to_north_pole(const Vec3& c);
StokesTrajectory rotate_to_north_pole(const StokesTrajectory& traj, const Vec3& c);

/// Mean-removed S1 and S2 series.
std::pair<RVec, RVec> remove_dc(const StokesTrajectory& traj);

/// (180/pi) sqrt(mean(acos(clamp(a_i . b_i))^2)). Throws InvalidInput on
/// length mismatch, empty input, or samples off the unit sphere by more than 1e-6.
double angular_rmse(const StokesTrajectory& ref, const StokesTrajectory& test);

} // namespace sopfx::sop
