// qcore.hpp
// Exact polarization-qubit algebra: states, the arm-phase channel, the
// symmetric/antisymmetric two-photon projectors, and the analytic quantities
// (overlap, purity, fidelity, Hilbert-Schmidt distance, spectrum, entropy).
//
// Basis conventions, fixed globally:
//   single qubit:  (|V>, |H>)
//   two photons:   (|VV>, |VH>, |HV>, |HH>)

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace homsim {

using cplx = std::complex<double>;

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec2 = Eigen::Vector2cd;
using Vec4 = Eigen::Vector4cd;

// Structural tolerance (hermiticity, unit trace, normalization).
inline constexpr double kStructureTol = 1e-12;
// Smallest admissible density-matrix eigenvalue is -kPositivityTol.
inline constexpr double kPositivityTol = 1e-10;

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const cplx& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

/// Normalized single-photon polarization state, amplitudes in (|V>, |H>) order.
class PureQubit {
 public:
  PureQubit(cplx amp_v, cplx amp_h) : ket_(amp_v, amp_h) {
    if (!is_finite(amp_v) || !is_finite(amp_h))
      throw std::domain_error("PureQubit: non-finite amplitude");
    const double norm2 = std::norm(amp_v) + std::norm(amp_h);
    if (std::abs(norm2 - 1.0) > kStructureTol)
      throw std::domain_error("PureQubit: amplitudes not normalized");
  }

  const Vec2& ket() const { return ket_; }
  cplx amp_v() const { return ket_(0); }
  cplx amp_h() const { return ket_(1); }

 private:
  Vec2 ket_;
};

/// 2x2 density matrix; construction enforces hermiticity, unit trace,
/// positivity and the qubit purity range [1/2, 1].
class QubitDensity {
 public:
  explicit QubitDensity(const Mat2& m) : m_(m) { validate(); }

  const Mat2& matrix() const { return m_; }

 private:
  void validate() const {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (!is_finite(m_(i, j)))
          throw std::domain_error("QubitDensity: non-finite entry");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kStructureTol)
      throw std::domain_error("QubitDensity: not Hermitian");
    if (std::abs(m_.trace() - cplx(1.0, 0.0)) > kStructureTol)
      throw std::domain_error("QubitDensity: trace != 1");
    // Closed-form 2x2 spectrum: t/2 +- sqrt((t/2)^2 - det), t = 1.
    const double det = std::real(m_.determinant());
    const double disc = std::max(0.25 - det, 0.0);
    const double lo = 0.5 - std::sqrt(disc);
    if (lo < -kPositivityTol)
      throw std::domain_error("QubitDensity: negative eigenvalue");
    const double pur = std::real((m_ * m_).trace());
    if (pur < 0.5 - kPositivityTol || pur > 1.0 + kPositivityTol)
      throw std::domain_error("QubitDensity: purity outside [1/2, 1]");
  }

  Mat2 m_;
};

/// 4x4 density matrix on the two-photon product space.
class JointDensity {
 public:
  explicit JointDensity(const Mat4& m) : m_(m) { validate(); }

  const Mat4& matrix() const { return m_; }

 private:
  void validate() const {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (!is_finite(m_(i, j)))
          throw std::domain_error("JointDensity: non-finite entry");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kStructureTol)
      throw std::domain_error("JointDensity: not Hermitian");
    if (std::abs(m_.trace() - cplx(1.0, 0.0)) > kStructureTol)
      throw std::domain_error("JointDensity: trace != 1");
    Eigen::SelfAdjointEigenSolver<Mat4> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPositivityTol)
      throw std::domain_error("JointDensity: negative eigenvalue");
  }

  Mat4 m_;
};

/// 4x4 operator on the two-photon space (projectors, the flip operator).
class JointOperator {
 public:
  explicit JointOperator(Mat4 m) : m_(std::move(m)) {}
  const Mat4& matrix() const { return m_; }

 private:
  Mat4 m_;
};

/// Qubit eigenvalue pair, sorted, summing to one.
struct Spectrum {
  double lambda1;
  double lambda2;

  Spectrum(double l1, double l2) : lambda1(l1), lambda2(l2) {
    if (!is_finite(l1) || !is_finite(l2))
      throw std::domain_error("Spectrum: non-finite eigenvalue");
    if (l1 < l2) throw std::domain_error("Spectrum: eigenvalues not sorted");
    if (std::abs(l1 + l2 - 1.0) > kStructureTol)
      throw std::domain_error("Spectrum: eigenvalues do not sum to 1");
    if (l1 < -kStructureTol || l1 > 1.0 + kStructureTol || l2 < -kStructureTol)
      throw std::domain_error("Spectrum: eigenvalue outside [0, 1]");
  }
};

/// State e^{i phi} cos(theta) |V> + sin(theta) |H>.
inline PureQubit pure_from_angles(double theta, double phi) {
  if (!is_finite(theta) || !is_finite(phi))
    throw std::domain_error("pure_from_angles: non-finite angle");
  const cplx av = std::polar(1.0, phi) * std::cos(theta);
  const cplx ah(std::sin(theta), 0.0);
  const double n = std::sqrt(std::norm(av) + std::norm(ah));
  return PureQubit(av / n, ah / n);
}

inline QubitDensity density(const PureQubit& psi) {
  Mat2 m = psi.ket() * psi.ket().adjoint();
  return QubitDensity(0.5 * (m + m.adjoint().eval()));
}

/// p |V><V| + (1-p)/2 (|X><X| + |Y><Y|) with |X>, |Y> the +-45 deg linear
/// polarizations. The bracket sums to the identity, so the result equals
/// p |V><V| + (1-p)/2 I; the projector form is what the preparation realizes.
inline QubitDensity mixed_state(double p) {
  if (!is_finite(p) || p < 0.0 || p > 1.0)
    throw std::domain_error("mixed_state: p outside [0, 1]");
  const Vec2 v = pure_from_angles(0.0, 0.0).ket();
  const Vec2 x = pure_from_angles(M_PI / 4.0, 0.0).ket();
  const Vec2 y = pure_from_angles(-M_PI / 4.0, 0.0).ket();
  Mat2 m = p * (v * v.adjoint()) +
           0.5 * (1.0 - p) * (x * x.adjoint() + y * y.adjoint());
  return QubitDensity(0.5 * (m + m.adjoint().eval()));
}

/// U rho U^dag with U = diag(e^{i phi}, 1); models the extra phase the fiber
/// puts on the V component of one arm. Trace and spectrum are preserved.
inline QubitDensity apply_arm_phase(const QubitDensity& rho, double phi) {
  if (!is_finite(phi)) throw std::domain_error("apply_arm_phase: non-finite phase");
  Mat2 u = Mat2::Zero();
  u(0, 0) = std::polar(1.0, phi);
  u(1, 1) = cplx(1.0, 0.0);
  Mat2 m = u * rho.matrix() * u.adjoint();
  return QubitDensity(0.5 * (m + m.adjoint().eval()));
}

inline PureQubit apply_arm_phase(const PureQubit& psi, double phi) {
  if (!is_finite(phi)) throw std::domain_error("apply_arm_phase: non-finite phase");
  return PureQubit(std::polar(1.0, phi) * psi.amp_v(), psi.amp_h());
}

/// Kronecker product rhoA (x) rhoB in the fixed (|VV>,|VH>,|HV>,|HH>) order.
inline JointDensity tensor(const QubitDensity& a, const QubitDensity& b) {
  Mat4 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m.block<2, 2>(2 * i, 2 * j) = a.matrix()(i, j) * b.matrix();
  return JointDensity(m);
}

/// Singlet |Psi-> = (|HV> - |VH>)/sqrt(2), the only Bell state a balanced
/// coupler converts into a coincidence.
inline Vec4 singlet_ket() {
  Vec4 s = Vec4::Zero();
  const double r = 1.0 / std::sqrt(2.0);
  s(2) = cplx(r, 0.0);   // |HV>
  s(1) = cplx(-r, 0.0);  // |VH>
  return s;
}

/// (Pi+, Pi-): projectors onto the symmetric and antisymmetric subspaces.
/// Pi- = |Psi-><Psi-|, Pi+ = I - Pi-.
inline std::pair<JointOperator, JointOperator> bell_projectors() {
  const Vec4 s = singlet_ket();
  const Mat4 pi_minus = s * s.adjoint();
  const Mat4 pi_plus = Mat4::Identity() - pi_minus;
  return {JointOperator(pi_plus), JointOperator(pi_minus)};
}

/// Flip (swap) operator V = Pi+ - Pi-; V |psi>|phi> = |phi>|psi>.
inline JointOperator flip_operator() {
  const auto [pi_plus, pi_minus] = bell_projectors();
  return JointOperator(pi_plus.matrix() - pi_minus.matrix());
}

/// Overlap Tr(rhoA rhoB), evaluated both as the direct matrix-product trace
/// and as Tr(Pi+ rhoA(x)rhoB) - Tr(Pi- rhoA(x)rhoB). The two routes must
/// agree to 1e-12; a mismatch indicates internal corruption.
inline double overlap(const QubitDensity& a, const QubitDensity& b) {
  const double direct = std::real((a.matrix() * b.matrix()).trace());
  static const auto projectors = bell_projectors();
  const JointDensity joint = tensor(a, b);
  const double plus = std::real((projectors.first.matrix() * joint.matrix()).trace());
  const double minus = std::real((projectors.second.matrix() * joint.matrix()).trace());
  if (std::abs(direct - (plus - minus)) > kStructureTol)
    throw std::logic_error("overlap: projector route disagrees with direct trace");
  return direct;
}

/// Purity Tr(rho^2); 1 for pure states, 1/2 for the maximally mixed qubit.
inline double purity(const QubitDensity& rho) {
  return std::real((rho.matrix() * rho.matrix()).trace());
}

/// Fidelity <psi| rho |psi> of a state rho against a pure reference.
inline double fidelity_pure(const PureQubit& psi, const QubitDensity& rho) {
  return std::real(psi.ket().dot(rho.matrix() * psi.ket()));
}

/// Hilbert-Schmidt distance sqrt(1/2 Tr (rhoA - rhoB)^2).
inline double hs_distance(const QubitDensity& a, const QubitDensity& b) {
  const Mat2 d = a.matrix() - b.matrix();
  const double t = std::real((d * d).trace());
  return std::sqrt(std::max(0.5 * t, 0.0));
}

/// lambda_{1,2} = (1 +- sqrt(2P - 1)) / 2. Analytic inversion only: P must
/// already be in [1/2, 1]; noisy inputs are clamped upstream, never here.
inline Spectrum spectrum_from_purity(double p) {
  if (!is_finite(p) || p < 0.5 || p > 1.0)
    throw std::domain_error("spectrum_from_purity: purity outside [1/2, 1]");
  const double root = std::sqrt(std::max(2.0 * p - 1.0, 0.0));
  return Spectrum(0.5 * (1.0 + root), 0.5 * (1.0 - root));
}

/// Eigenvalues of a valid qubit density matrix, closed form.
inline Spectrum spectrum_of(const QubitDensity& rho) {
  const double det = std::real(rho.matrix().determinant());
  const double disc = std::max(0.25 - det, 0.0);
  const double root = std::sqrt(disc);
  const double l1 = std::min(0.5 + root, 1.0);
  return Spectrum(l1, 1.0 - l1);
}

/// Von Neumann entropy -sum lambda ln lambda in nats, with 0 ln 0 = 0.
inline double von_neumann_entropy(const Spectrum& s) {
  auto term = [](double l) { return l > 0.0 ? -l * std::log(l) : 0.0; };
  return term(s.lambda1) + term(s.lambda2);
}

/// Same-angle and crossed-angle overlaps of the two effectively prepared
/// states as functions of the half-wave-plate angle theta and the arm phase:
///   F_par  = 1 - sin^2(2 theta) sin^2(phi/2)
///   F_perp =     sin^2(2 theta) sin^2(phi/2)
/// Returned as (F_par, F_perp); the pair sums to 1 exactly.
inline std::pair<double, double> theory_parallel_perp(double theta, double phi) {
  if (!is_finite(theta) || !is_finite(phi))
    throw std::domain_error("theory_parallel_perp: non-finite angle");
  const double s2t = std::sin(2.0 * theta);
  const double sp2 = std::sin(0.5 * phi);
  const double f_perp = s2t * s2t * sp2 * sp2;
  return {1.0 - f_perp, f_perp};
}

}  // namespace homsim
