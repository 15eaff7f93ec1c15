#pragma once

// Elementary sectorial calculus: sectoriality diagnostics, contour
// construction and quadrature of (2 pi i)^{-1} int f(z) R(z,A) dz over the
// boundary of a sector, with the extension by constants and (1+z)^{-1}
// handled exactly.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "opcalc/funsym.hpp"
#include "opcalc/numlin.hpp"
#include "opcalc/quad.hpp"
#include "opcalc/report.hpp"

namespace opcalc::sector {

using numlin::Complex;
using numlin::ComplexMatrix;
using numlin::ComplexVector;
using numlin::ToleranceConfig;

class NotSectorial : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContourThroughSpectrum : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureStall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProbeConfig {
  int points_per_ray = 40;
  double r_min = 1e-6;
  double r_max = 1e6;
  double blowup = 1e12;   // ||z R(z,A)|| beyond this signals non-sectoriality
  double deep_r = 1e-13;  // extra probe radii toward 0 catch resolvent blowup
};

struct SectorialHandle {
  ComplexMatrix A;
  double omega_se = 0.0;  // estimated sectoriality angle
  double ray_bound = 0.0; // sup ||z R(z,A)|| over the probe rays
  ComplexVector eigenvalues;
};

inline ComplexVector schur_eigenvalues(const ComplexMatrix& A) {
  Eigen::ComplexSchur<ComplexMatrix> schur(A, false);
  if (schur.info() != Eigen::Success) throw std::runtime_error("schur_eigenvalues: decomposition failed");
  return schur.matrixT().diagonal();
}

/// Sectoriality angle from the spectrum, then verified on probe rays.
inline SectorialHandle make_handle(const ComplexMatrix& A, const ProbeConfig& probe = {},
                                   const ToleranceConfig& tol = {}) {
  numlin::require_square_finite(A, "make_handle");
  SectorialHandle h;
  h.A = A;
  h.eigenvalues = schur_eigenvalues(A);

  const double scale = std::max(numlin::op_norm(A), 1e-300);
  double omega = 0.0;
  for (Eigen::Index i = 0; i < h.eigenvalues.size(); ++i) {
    const Complex lam = h.eigenvalues(i);
    if (std::abs(lam) <= 1e-14 * scale) continue;  // Arg 0 := 0
    omega = std::max(omega, std::abs(std::arg(lam)));
  }
  h.omega_se = omega;
  if (omega >= M_PI - 1e-9) throw NotSectorial("make_handle: spectrum touches the negative real axis");

  double bound = 0.0;
  for (double frac : {0.1, 0.5, 1.0, 2.0}) {
    const double theta = omega + frac * (M_PI - omega) / 4.0;
    if (theta >= M_PI) continue;
    for (double sign : {1.0, -1.0}) {
      auto probe_at = [&](double r) {
        const Complex z = std::polar(r, sign * theta);
        ComplexMatrix R;
        try {
          R = numlin::resolvent(A, z, tol);
        } catch (const numlin::SingularShift&) {
          throw NotSectorial("make_handle: resolvent singular on a probe ray");
        }
        const double nrm = std::abs(z) * numlin::op_norm(R);
        if (nrm > probe.blowup)
          throw NotSectorial("make_handle: ||zR(z,A)|| exceeds blowup bound on a probe ray");
        return nrm;
      };
      for (int i = 0; i < probe.points_per_ray; ++i) {
        const double t = static_cast<double>(i) / (probe.points_per_ray - 1);
        bound = std::max(bound, probe_at(probe.r_min * std::pow(probe.r_max / probe.r_min, t)));
      }
      // Deep probes toward the origin: a Jordan block at 0 makes zR grow like
      // 1/r. Extrapolate the measured growth down to deep_r and compare with
      // the blowup bound.
      const double n8 = probe_at(1e-8);
      const double n10 = probe_at(1e-10);
      if (n10 > n8 && n10 > 1.0) {
        const double growth = std::log(n10 / n8) / std::log(1e-2);  // negative slope in r
        const double predicted = std::exp(std::log(n10) + growth * std::log(probe.deep_r / 1e-10));
        if (predicted > probe.blowup)
          throw NotSectorial("make_handle: extrapolated ||zR(z,A)|| exceeds blowup bound near 0");
      }
    }
  }
  h.ray_bound = bound;
  return h;
}

// Gauss-Legendre panels on both rays of the sector boundary, parametrised in
// log radius. Orientation: upper ray from R e^{i delta} toward 0, lower ray
// from 0 toward R e^{-i delta} (the spectrum sits to the left).
struct ContourSpec {
  double delta = 0.0;
  double radius = 0.0;        // outer truncation
  double radius_inner = 0.0;  // inner truncation, slope-driven per end
  int start_panels = 8;
  int nodes_per_panel = 16;
  int max_doublings = 12;
};

namespace detail {

// Outer truncation from the measured decay: amplitude a at radius rho decaying
// like r^{-s} gives tail ~ (M/pi) a (rho/R)^s / s. Solve for the target.
inline double radius_from_slope(double amplitude, double rho, double slope, double bound_M,
                                double target) {
  if (!(slope > 0.01) || !(amplitude > 0)) return 1e8;
  const double lhs = bound_M * amplitude / (M_PI * slope * std::max(target, 1e-300));
  double R = rho * std::pow(std::max(lhs, 1.0), 1.0 / slope);
  return std::clamp(R, 10.0, 1e10);
}

}  // namespace detail

/// Contour with the default bisecting angle, clipped away from spectral rays,
/// and truncation radius derived from the decay certificate of f.
inline ContourSpec default_contour(const funsym::FunctionSymbol& f, const SectorialHandle& h,
                                   const ToleranceConfig& tol = {}) {
  if (f.domain.kind != funsym::DomainKind::Sector)
    throw funsym::DomainMismatch("default_contour: symbol not on a sector");
  const double omega_f = f.domain.omega;
  if (!(omega_f > h.omega_se)) throw ContourThroughSpectrum("default_contour: symbol sector too narrow");
  double delta = 0.5 * (h.omega_se + omega_f);
  // keep a margin from every spectral ray
  for (Eigen::Index i = 0; i < h.eigenvalues.size(); ++i) {
    const Complex lam = h.eigenvalues(i);
    if (std::abs(lam) < 1e-14) continue;
    const double a = std::abs(std::arg(lam));
    if (std::abs(delta - a) < 0.05) delta = std::min(a + 0.05, 0.5 * (a + omega_f));
  }
  delta = std::min(delta, omega_f - 1e-3);

  ContourSpec spec;
  spec.delta = delta;
  auto cert = funsym::decay_certificate(f, delta);
  const double M = std::max(h.ray_bound, 1.0);
  const double target = 0.1 * tol.quad_rel_tol;
  const double a_inf = std::abs(f.eval(std::polar(1e2, delta)));
  const double a_zero = std::abs(f.eval(std::polar(1e-2, delta)));
  const double R_inf = detail::radius_from_slope(a_inf, 1e2, -cert.slope_inf, M, target);
  const double R_zero = detail::radius_from_slope(a_zero, 1e-2, cert.slope_zero, M, target);
  spec.radius = std::clamp(R_inf, 1e2, 1e18);
  spec.radius_inner = std::clamp(1.0 / R_zero, 1e-18, 1e-2);
  const double span = std::log(spec.radius) - std::log(spec.radius_inner);
  spec.start_panels = std::max(8, static_cast<int>(std::ceil(span / 2.0)));
  return spec;
}

/// Quadrature of the sector-boundary integral for a symbol in the decay class.
inline CalculusReport phi_elementary(const funsym::FunctionSymbol& f, const SectorialHandle& h,
                                     const ContourSpec& c, const ToleranceConfig& tol = {}) {
  const Eigen::Index n = h.A.rows();
  if (!(c.delta > h.omega_se)) throw ContourThroughSpectrum("phi_elementary: delta inside spectral sector");
  auto cert = funsym::decay_certificate(f, c.delta);
  if (!cert.certified)
    throw funsym::DomainMismatch("phi_elementary: decay certificate failed: " + cert.reason);

  const double lo = std::log(c.radius_inner > 0 ? c.radius_inner : 1.0 / c.radius);
  const double hi = std::log(c.radius);
  const Complex phase_up = std::polar(1.0, c.delta);
  const Complex phase_dn = std::polar(1.0, -c.delta);
  const Complex prefac = 1.0 / (2.0 * M_PI * Complex(0.0, 1.0));

  auto integrand = [&](double t) -> ComplexMatrix {
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (int side = 0; side < 2; ++side) {
      const Complex phase = side == 0 ? phase_up : phase_dn;
      const double sign = side == 0 ? -1.0 : 1.0;  // upper ray runs inward
      const Complex z = std::exp(t) * phase;
      ComplexMatrix R;
      try {
        R = numlin::resolvent(h.A, z, tol);
      } catch (const numlin::SingularShift&) {
        throw ContourThroughSpectrum("phi_elementary: contour node hits the spectrum");
      }
      out += (sign * prefac * f.eval(z) * z) * R;  // dz = z dt in log coordinates
    }
    return out;
  };

  quad::AdaptiveResult info;
  ComplexMatrix result;
  try {
    result = quad::adaptive_panels<ComplexMatrix>(integrand, lo, hi, tol.quad_rel_tol, &info,
                                                  c.start_panels, c.max_doublings, c.nodes_per_panel);
  } catch (const quad::QuadratureFailure&) {
    throw QuadratureStall("phi_elementary: no Cauchy behavior under panel doubling");
  }

  CalculusReport rep;
  rep.result = result;
  rep.method = "sector.phi_elementary";
  rep.delta = c.delta;
  rep.truncation_radius = c.radius;
  rep.panels = info.panels;
  rep.err_estimate = info.err_estimate;
  // analytic tail bound from the measured decay slopes
  const double M = std::max(h.ray_bound, 1.0);
  const double a_inf = std::abs(f.eval(std::polar(c.radius, c.delta)));
  const double a_zero = std::abs(f.eval(std::polar(std::exp(lo), c.delta)));
  double tail = 0.0;
  if (cert.slope_inf < -0.01) tail += M * a_inf / (M_PI * -cert.slope_inf);
  if (cert.slope_zero > 0.01) tail += M * a_zero / (M_PI * cert.slope_zero);
  rep.tail_bound = tail;
  rep.err_estimate += tail;
  return rep;
}

/// Full extended-algebra evaluation: quadrature on the decay part, the
/// constant and (1+z)^{-1} parts computed exactly.
inline CalculusReport phi_ee(const funsym::FunctionSymbol& f, const SectorialHandle& h,
                             const ToleranceConfig& tol = {}) {
  if (!f.ee_parts)
    throw funsym::CertificateMissing("phi_ee: symbol carries no extended-algebra decomposition");
  const Eigen::Index n = h.A.rows();
  const auto& parts = *f.ee_parts;

  CalculusReport rep;
  rep.method = "sector.phi_ee";
  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  if (parts.e_core) {
    ContourSpec c = default_contour(*parts.e_core, h, tol);
    CalculusReport inner = phi_elementary(*parts.e_core, h, c, tol);
    acc += inner.result;
    rep.err_estimate = inner.err_estimate;
    rep.tail_bound = inner.tail_bound;
    rep.delta = inner.delta;
    rep.truncation_radius = inner.truncation_radius;
    rep.panels = inner.panels;
  }
  if (parts.c != Complex(0.0)) acc += parts.c * ComplexMatrix::Identity(n, n);
  if (parts.d != Complex(0.0)) {
    ComplexMatrix shifted = h.A + ComplexMatrix::Identity(n, n);
    acc += parts.d * shifted.partialPivLu().solve(ComplexMatrix::Identity(n, n));
  }
  rep.result = acc;
  return rep;
}

/// phi_ee with the oracle residual attached when A is diagonalizable.
inline CalculusReport phi_ee_with_oracle(const funsym::FunctionSymbol& f, const SectorialHandle& h,
                                         const ToleranceConfig& tol = {}) {
  CalculusReport rep = phi_ee(f, h, tol);
  try {
    auto d = numlin::eig_oracle(h.A);
    ComplexMatrix oracle = numlin::apply_eig_oracle(d, f.eval);
    rep.oracle_residual = numlin::op_norm(rep.result - oracle);
  } catch (const numlin::NotDiagonalizable&) {
    // oracle inapplicable; property checks take over
  }
  return rep;
}

}  // namespace opcalc::sector
