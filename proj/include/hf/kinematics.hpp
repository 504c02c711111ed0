// Discrete kinematics on structured grids: central-difference deformation
// gradients from displacement snapshots, the 2D -> 3D lifts, and the
// polyconvexity-friendly invariant set used by the constitutive models.
#pragma once

#include <cmath>

#include "hf/types.hpp"

namespace hf {

// ---------------------------------------------------------------------------
// Finite-difference deformation gradients, F = I + grad(u).
// Interior nodes use second-order central differences, boundary nodes the
// second-order one-sided 3-point stencil; both are exact for quadratic u.
// ---------------------------------------------------------------------------

// d/dx along a grid line; `get(i)` returns the sampled value at node index i
// in that line, n is the line length, h the spacing.
template <typename Get>
Real line_derivative(const Get& get, int i, int n, Real h) {
  if (i == 0) return (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h);
  if (i == n - 1)
    return (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h);
  return (get(i + 1) - get(i - 1)) / (2.0 * h);
}

// u: displacement series with components (u1, u2).  Returns a tensor series
// with components (F11, F12, F21, F22).
FieldSnapshotSeries central_diff_defgrad(const FieldSnapshotSeries& u);

// ---------------------------------------------------------------------------
// Plane lifts.  The in-plane 2x2 gradient is embedded into a 3x3 tensor with
// an out-of-plane stretch chosen by the modeling assumption:
//   - incompressible plane stress: F33 = 1 / det(F2)  (det F3 = 1 exactly)
//   - plane strain:                F33 = 1
// ---------------------------------------------------------------------------

enum class LiftMode { IncompressiblePlaneStress, PlaneStrain };

const char* to_string(LiftMode m);
LiftMode lift_mode_from_string(const std::string& s);

template <typename T>
Mat3T<T> lift_plane(const Mat2T<T>& F2, LiftMode mode) {
  const T det = F2(0, 0) * F2(1, 1) - F2(0, 1) * F2(1, 0);
  if (!(det > T(0)))
    throw InvertedElementError("lift_plane: non-positive in-plane determinant");
  Mat3T<T> F = Mat3T<T>::Zero();
  F.template topLeftCorner<2, 2>() = F2;
  F(2, 2) = (mode == LiftMode::IncompressiblePlaneStress) ? T(1) / det : T(1);
  return F;
}

// ---------------------------------------------------------------------------
// Invariants of C = F^T F with two structural directions:
//   I1 = tr C, I2 = tr(cof C), I4v = v.Cv, I4w = w.Cw, J = det F.
// ---------------------------------------------------------------------------

struct StructuralDirections {
  Vec3 v = Vec3::UnitX();
  Vec3 w = Vec3::UnitY();
};

struct Invariants {
  Real I1, I2, I4v, I4w, J;
};

template <typename T>
Mat3T<T> cofactor(const Mat3T<T>& A) {
  Mat3T<T> c;
  c(0, 0) = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  c(0, 1) = A(1, 2) * A(2, 0) - A(1, 0) * A(2, 2);
  c(0, 2) = A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0);
  c(1, 0) = A(0, 2) * A(2, 1) - A(0, 1) * A(2, 2);
  c(1, 1) = A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0);
  c(1, 2) = A(0, 1) * A(2, 0) - A(0, 0) * A(2, 1);
  c(2, 0) = A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1);
  c(2, 1) = A(0, 2) * A(1, 0) - A(0, 0) * A(1, 2);
  c(2, 2) = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  return c;
}

inline Invariants invariants(const Mat3& F, const StructuralDirections& dirs = {}) {
  const Real J = F.determinant();
  if (!(J > 0)) throw InvertedElementError("invariants: det F <= 0");
  const Mat3 C = F.transpose() * F;
  Invariants inv;
  inv.I1 = C.trace();
  inv.I2 = cofactor<Real>(C).trace();
  inv.I4v = dirs.v.dot(C * dirs.v);
  inv.I4w = dirs.w.dot(C * dirs.w);
  inv.J = J;
  return inv;
}

// Reference (undeformed) values: invariants at F = I.
inline Invariants reference_invariants() { return Invariants{3.0, 3.0, 1.0, 1.0, 1.0}; }

}  // namespace hf
