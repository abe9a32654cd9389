// Rotating-frame Bloch dynamics for a single isochromat: instantaneous RF
// rotations and free precession with relaxation and gradient-induced phase.
//
// Conventions, fixed project-wide:
//  - rotations are right-handed, so a 90 deg pulse about +x takes
//    (0,0,1) to (0,-1,0);
//  - longitudinal relaxation recovers toward m0 with rate 1/T1,
//    transverse decays with rate 1/T2;
//  - the static field is homogeneous (no off-resonance term), so phase
//    only accumulates under applied gradients.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace blochgame {

// gyromagnetic ratio of 1H over 2*pi, Hz/T
inline constexpr double kGammaBar = 42.5774e6;

template <class Scalar>
using Magnetization3 = Eigen::Matrix<Scalar, 3, 1>;

using Magnetization = Magnetization3<double>;

struct TissueParams {
  double t1;  // s
  double t2;  // s
  double m0;  // equilibrium longitudinal magnetization, dimensionless

  TissueParams(double t1_s, double t2_s, double m0_eq)
      : t1(t1_s), t2(t2_s), m0(m0_eq) {
    if (!(t1 > 0.0) || !(t2 > 0.0)) throw std::invalid_argument("TissueParams: T1 and T2 must be positive");
    if (t2 > t1) throw std::invalid_argument("TissueParams: T2 must not exceed T1");
    if (!(m0 >= 0.0)) throw std::invalid_argument("TissueParams: M0 must be non-negative");
  }
};

// Rotation by `flip` about the transverse axis at angle `axis_phase` from +x:
// R = Rz(phase) * Rx(flip) * Rz(-phase).
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> rf_rotation_matrix(Scalar flip, Scalar axis_phase) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar ca = std::cos(flip), sa = std::sin(flip);
  const Scalar cp = std::cos(axis_phase), sp = std::sin(axis_phase);
  Mat3 rx;
  rx << 1, 0, 0,
        0, ca, -sa,
        0, sa, ca;
  Mat3 rz;
  rz << cp, -sp, 0,
        sp, cp, 0,
        0, 0, 1;
  Mat3 rzi;
  rzi << cp, sp, 0,
         -sp, cp, 0,
         0, 0, 1;
  return rz * rx * rzi;
}

template <class Scalar>
Magnetization3<Scalar> rf_rotate(const Magnetization3<Scalar>& m, Scalar flip, Scalar axis_phase) {
  return rf_rotation_matrix(flip, axis_phase) * m;
}

// Free precession over dt decomposes into a linear map plus a constant
// recovery term: m' = A m + b, with A = diag(e2, e2, e1) * Rz(dphi) and
// b = (0, 0, m0 (1 - e1)). Precomputable per (tissue, dt).
template <class Scalar>
struct FreePrecession {
  Scalar e1, e2;       // exp(-dt/T1), exp(-dt/T2)
  Scalar cosp, sinp;   // z-rotation by dphi
  Scalar recover;      // m0 (1 - e1)

  FreePrecession(const TissueParams& tissue, Scalar dt, Scalar dphi) {
    if (dt < Scalar(0)) throw std::invalid_argument("free_precess: dt must be non-negative");
    e1 = std::exp(-dt / Scalar(tissue.t1));
    e2 = std::exp(-dt / Scalar(tissue.t2));
    cosp = std::cos(dphi);
    sinp = std::sin(dphi);
    recover = Scalar(tissue.m0) * (Scalar(1) - e1);
  }

  Magnetization3<Scalar> apply(const Magnetization3<Scalar>& m) const {
    return {e2 * (cosp * m.x() - sinp * m.y()),
            e2 * (sinp * m.x() + cosp * m.y()),
            e1 * m.z() + recover};
  }
};

template <class Scalar>
Magnetization3<Scalar> free_precess(const Magnetization3<Scalar>& m, const TissueParams& tissue,
                                    Scalar dt, Scalar dphi) {
  return FreePrecession<Scalar>(tissue, dt, dphi).apply(m);
}

// Phase accumulated by an isochromat at position x under a constant
// gradient lobe of amplitude g and duration dt. The caller applies the
// sign appropriate to the lobe's role in the sequence.
inline double gradient_phase(double g, double x, double dt) {
  return 2.0 * std::numbers::pi * kGammaBar * g * x * dt;
}

}  // namespace blochgame
