#pragma once

// Function algebras over sectors: integrable-decay symbols, their extension by
// constants and (1+z)^{-1}, complex measures on the half-line, Stieltjes and
// Hirsch representations, Laplace transforms, and empirical decay certificates.
//
// Branch convention throughout: principal branch of log and powers, cut along
// the negative real axis.

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "opcalc/quad.hpp"

namespace opcalc::funsym {

using Complex = std::complex<double>;
using quad::QuadratureFailure;

class DomainMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CertificateMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DomainKind { Sector, ClosedRightHalfPlane, PointSet };

struct Domain {
  DomainKind kind = DomainKind::Sector;
  double omega = M_PI;  // sector half-angle, in (0, pi]
  std::vector<Complex> points;

  static Domain sector(double omega) {
    if (!(omega > 0.0 && omega <= M_PI)) throw std::invalid_argument("Domain::sector: omega out of (0, pi]");
    return {DomainKind::Sector, omega, {}};
  }
  static Domain right_half_plane() { return {DomainKind::ClosedRightHalfPlane, M_PI / 2, {}}; }
  static Domain point_set(std::vector<Complex> pts) { return {DomainKind::PointSet, 0.0, std::move(pts)}; }
};

enum Tag : unsigned {
  InE = 1u << 0,
  InEe = 1u << 1,
  Bounded = 1u << 2,
  HasLimitAtZero = 1u << 3,
};

// Evaluable symbol with membership tags. Symbols in the extended algebra also
// carry the exact decomposition f = e + c*1 + d/(1+z) with e in the
// integrable-decay class; e_core == nullptr encodes a vanishing e part.
struct FunctionSymbol {
  std::string name;
  std::function<Complex(Complex)> eval;
  Domain domain = Domain::sector(M_PI);
  unsigned tags = 0;

  struct EeParts {
    std::shared_ptr<const FunctionSymbol> e_core;  // InE part, may be null
    Complex c{0.0, 0.0};
    Complex d{0.0, 0.0};
  };
  std::optional<EeParts> ee_parts;

  bool has(Tag t) const { return (tags & t) != 0; }
  Complex operator()(Complex z) const { return eval(z); }
};

inline FunctionSymbol make_E(std::string name, std::function<Complex(Complex)> eval, double omega) {
  FunctionSymbol f;
  f.name = std::move(name);
  f.eval = std::move(eval);
  f.domain = Domain::sector(omega);
  f.tags = InE | InEe | Bounded | HasLimitAtZero;
  FunctionSymbol::EeParts parts;
  parts.e_core = std::make_shared<FunctionSymbol>(f);
  f.ee_parts = parts;
  return f;
}

inline FunctionSymbol make_Ee(std::string name, std::shared_ptr<const FunctionSymbol> e_core, Complex c,
                              Complex d, double omega) {
  FunctionSymbol f;
  f.name = std::move(name);
  f.domain = Domain::sector(omega);
  f.tags = InEe | Bounded | HasLimitAtZero;
  auto core = std::move(e_core);
  f.eval = [core, c, d](Complex z) {
    Complex v = c + d / (1.0 + z);
    if (core) v += core->eval(z);
    return v;
  };
  f.ee_parts = FunctionSymbol::EeParts{core, c, d};
  return f;
}

inline FunctionSymbol sym_one() {
  FunctionSymbol f;
  f.name = "one";
  f.eval = [](Complex) { return Complex(1.0); };
  f.domain = Domain::sector(M_PI);
  f.tags = InEe | Bounded | HasLimitAtZero;
  f.ee_parts = FunctionSymbol::EeParts{nullptr, Complex(1.0), Complex(0.0)};
  return f;
}

inline FunctionSymbol sym_constant(Complex c) {
  FunctionSymbol f;
  f.name = "const";
  f.eval = [c](Complex) { return c; };
  f.domain = Domain::sector(M_PI);
  f.tags = InEe | Bounded | HasLimitAtZero;
  f.ee_parts = FunctionSymbol::EeParts{nullptr, c, Complex(0.0)};
  return f;
}

inline FunctionSymbol sym_inv_one_plus_z() {
  FunctionSymbol f;
  f.name = "inv_1pz";
  f.eval = [](Complex z) { return 1.0 / (1.0 + z); };
  f.domain = Domain::sector(M_PI);
  f.tags = InEe | Bounded | HasLimitAtZero;
  f.ee_parts = FunctionSymbol::EeParts{nullptr, Complex(0.0), Complex(1.0)};
  return f;
}

// --- algebra operations with exact part bookkeeping -------------------------

namespace detail {

inline std::shared_ptr<const FunctionSymbol> core_or_null(const FunctionSymbol& f) {
  return f.ee_parts ? f.ee_parts->e_core : nullptr;
}

inline FunctionSymbol make_core(std::string name, std::function<Complex(Complex)> eval, double omega) {
  FunctionSymbol f;
  f.name = std::move(name);
  f.eval = std::move(eval);
  f.domain = Domain::sector(omega);
  f.tags = InE | InEe | Bounded | HasLimitAtZero;
  return f;  // parts intentionally unset on inner cores
}

}  // namespace detail

inline FunctionSymbol sym_sum(const FunctionSymbol& f, const FunctionSymbol& g) {
  FunctionSymbol r;
  r.name = "(" + f.name + "+" + g.name + ")";
  auto fe = f.eval, ge = g.eval;
  r.eval = [fe, ge](Complex z) { return fe(z) + ge(z); };
  r.domain = Domain::sector(std::min(f.domain.omega, g.domain.omega));
  if (f.ee_parts && g.ee_parts) {
    const auto& pf = *f.ee_parts;
    const auto& pg = *g.ee_parts;
    auto cf = pf.e_core, cg = pg.e_core;
    std::shared_ptr<const FunctionSymbol> core;
    if (cf && cg) {
      auto e1 = cf->eval, e2 = cg->eval;
      core = std::make_shared<FunctionSymbol>(detail::make_core(
          "(" + cf->name + "+" + cg->name + ")", [e1, e2](Complex z) { return e1(z) + e2(z); },
          r.domain.omega));
    } else {
      core = cf ? cf : cg;
    }
    r.ee_parts = FunctionSymbol::EeParts{core, pf.c + pg.c, pf.d + pg.d};
    r.tags = InEe | Bounded | HasLimitAtZero;
    if (f.has(InE) && g.has(InE)) r.tags |= InE;
  } else {
    r.tags = f.tags & g.tags & (Bounded | HasLimitAtZero);
  }
  return r;
}

inline FunctionSymbol sym_scale(Complex lambda, const FunctionSymbol& f) {
  FunctionSymbol r;
  r.name = "scale(" + f.name + ")";
  auto fe = f.eval;
  r.eval = [lambda, fe](Complex z) { return lambda * fe(z); };
  r.domain = f.domain;
  r.tags = f.tags;
  if (f.ee_parts) {
    const auto& p = *f.ee_parts;
    std::shared_ptr<const FunctionSymbol> core;
    if (p.e_core && lambda != Complex(0.0)) {
      auto ce = p.e_core->eval;
      core = std::make_shared<FunctionSymbol>(detail::make_core(
          "scale(" + p.e_core->name + ")", [lambda, ce](Complex z) { return lambda * ce(z); },
          f.domain.omega));
    }
    r.ee_parts = FunctionSymbol::EeParts{core, lambda * p.c, lambda * p.d};
  }
  return r;
}

// Product in the extended algebra. The cross term d1*d2/(1+z)^2 is rewritten
// through 1/(1+z)^2 = 1/(1+z) - z/(1+z)^2 so the result is again in canonical
// e + c + d/(1+z) form.
inline FunctionSymbol sym_product(const FunctionSymbol& f, const FunctionSymbol& g) {
  FunctionSymbol r;
  r.name = "(" + f.name + "*" + g.name + ")";
  auto fe = f.eval, ge = g.eval;
  r.eval = [fe, ge](Complex z) { return fe(z) * ge(z); };
  r.domain = Domain::sector(std::min(f.domain.omega, g.domain.omega));
  if (f.ee_parts && g.ee_parts) {
    const auto& pf = *f.ee_parts;
    const auto& pg = *g.ee_parts;
    const Complex c1 = pf.c, d1 = pf.d, c2 = pg.c, d2 = pg.d;
    std::function<Complex(Complex)> e1 = pf.e_core ? pf.e_core->eval : nullptr;
    std::function<Complex(Complex)> e2 = pg.e_core ? pg.e_core->eval : nullptr;
    const Complex c = c1 * c2;
    const Complex d = c1 * d2 + c2 * d1 + d1 * d2;
    auto core_eval = [e1, e2, c1, c2, d1, d2](Complex z) {
      const Complex w = 1.0 / (1.0 + z);
      Complex v = -d1 * d2 * z * w * w;
      Complex v1 = e1 ? e1(z) : Complex(0.0);
      Complex v2 = e2 ? e2(z) : Complex(0.0);
      v += v1 * v2 + c2 * v1 + c1 * v2 + (d2 * v1 + d1 * v2) * w;
      return v;
    };
    bool core_nonzero = e1 || e2 || d1 * d2 != Complex(0.0);
    std::shared_ptr<const FunctionSymbol> core;
    if (core_nonzero)
      core = std::make_shared<FunctionSymbol>(
          detail::make_core("core(" + r.name + ")", core_eval, r.domain.omega));
    r.ee_parts = FunctionSymbol::EeParts{core, c, d};
    r.tags = InEe | Bounded | HasLimitAtZero;
    if ((f.has(InE) && g.has(InEe)) || (g.has(InE) && f.has(InEe))) r.tags |= InE;
  } else {
    r.tags = 0;
  }
  return r;
}

// --- decay certificate -------------------------------------------------------

struct DecayCertificate {
  bool certified = false;
  double slope_zero = 0;  // growth exponent of |f| toward 0 (want >= eps)
  double slope_inf = 0;   // decay exponent of |f| toward infinity (want <= -eps)
  std::string reason;
};

namespace detail {

struct BandSlope {
  double slope = 0;
  int n_valid = 0;
  bool nonfinite = false;
  bool all_zero() const { return n_valid == 0 && !nonfinite; }
};

// Least-squares slope of log|f| against log r over one radius band, averaged
// over the two rays arg z = +-delta.
inline BandSlope band_slope(const std::function<Complex(Complex)>& f, double delta, double r_lo,
                            double r_hi, int samples = 24) {
  BandSlope out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < samples; ++i) {
    double t = static_cast<double>(i) / (samples - 1);
    double r = r_lo * std::pow(r_hi / r_lo, t);
    double mag = 0.5 * (std::abs(f(std::polar(r, delta))) + std::abs(f(std::polar(r, -delta))));
    if (!std::isfinite(mag)) {
      out.nonfinite = true;
      return out;
    }
    if (mag == 0.0) continue;
    double x = std::log(r), y = std::log(mag);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++out.n_valid;
  }
  if (out.n_valid >= 4) {
    double n = out.n_valid;
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return out;
}

}  // namespace detail

// Empirical membership probe for the integrable-decay class: |f| must behave
// like |z|^eps toward 0 and |z|^{-eps} toward infinity on the rays
// arg z = +-delta, with eps >= 0.05, on both an inner and an outer band
// (the double band rejects logarithmic decay profiles).
inline DecayCertificate decay_certificate(const FunctionSymbol& f, double delta, double eps = 0.05) {
  if (f.domain.kind != DomainKind::Sector) return {false, 0, 0, "DomainMismatch: symbol not on a sector"};
  if (!(delta < f.domain.omega)) return {false, 0, 0, "DomainMismatch: delta not inside symbol sector"};

  DecayCertificate cert;
  const auto s0_inner = detail::band_slope(f.eval, delta, 1e-14, 1e-6);
  const auto s0_outer = detail::band_slope(f.eval, delta, 1e-6, 1e-1);
  const auto si_outer = detail::band_slope(f.eval, delta, 1e1, 1e6);
  const auto si_far = detail::band_slope(f.eval, delta, 1e6, 1e14);

  if (s0_inner.nonfinite || s0_outer.nonfinite || si_outer.nonfinite || si_far.nonfinite) {
    cert.reason = "non-finite values on the probe rays";
    return cert;
  }
  if (s0_inner.all_zero() && s0_outer.all_zero() && si_outer.all_zero() && si_far.all_zero()) {
    cert.certified = true;  // identically zero on the probe rays
    return cert;
  }
  auto slope_or = [](const detail::BandSlope& b, double fallback) {
    return b.n_valid >= 4 ? b.slope : fallback;
  };
  cert.slope_zero = std::min(slope_or(s0_inner, 1e9), slope_or(s0_outer, 1e9));
  cert.slope_inf = std::max(slope_or(si_outer, -1e9), slope_or(si_far, -1e9));

  if (!(cert.slope_zero >= eps)) {
    cert.reason = "no power-law decay toward 0";
    return cert;
  }
  if (!(cert.slope_inf <= -eps)) {
    cert.reason = "no power-law decay toward infinity";
    return cert;
  }
  cert.certified = true;
  return cert;
}

// Numeric classification of an evaluable symbol into the extended algebra:
// detects the limits at infinity and zero along the bisecting ray, peels off
// c + d/(1+z) and certifies the remainder. Returns nullopt when the remainder
// fails the decay probe.
inline std::optional<FunctionSymbol> classify_into_Ee(const std::string& name,
                                                      std::function<Complex(Complex)> eval, double omega,
                                                      double probe_delta) {
  // Three-point extrapolation against the model f ~ L + a r^{+-s}; exact for
  // pure power corrections, which is what slowly decaying tails look like.
  auto limit_at = [&](bool at_zero) {
    const double q = 1e2;
    const double r0 = at_zero ? 1e-8 : 1e8;
    const Complex f1 = eval(Complex(r0, 0.0));
    const Complex f2 = eval(Complex(at_zero ? r0 / q : r0 * q, 0.0));
    const Complex f3 = eval(Complex(at_zero ? r0 / (q * q) : r0 * q * q, 0.0));
    const Complex d12 = f1 - f2, d23 = f2 - f3;
    if (std::abs(d23) <= 1e-13 * (1.0 + std::abs(f3))) return f3;  // already converged
    const Complex ratio = d12 / d23;  // = q^s for the power model
    if (std::abs(ratio - 1.0) < 1e-3) return f3;  // logarithmic profile; best effort
    return f3 - d23 / (ratio - 1.0);
  };
  const Complex c = limit_at(false);
  const Complex d = limit_at(true) - c;
  auto core_eval = [eval, c, d](Complex z) { return eval(z) - c - d / (1.0 + z); };
  FunctionSymbol core = detail::make_core("core(" + name + ")", core_eval, omega);
  DecayCertificate cert = decay_certificate(core, probe_delta);
  if (!cert.certified) return std::nullopt;
  FunctionSymbol f = make_Ee(name, std::make_shared<FunctionSymbol>(core), c, d, omega);
  f.eval = std::move(eval);  // keep the original evaluator, parts are equivalent
  return f;
}

// --- measures ----------------------------------------------------------------

// Complex measure on the positive half-line (or a closed subsector): finite
// atom list plus an absolutely continuous part given by a density callback on
// a window. tail_over_t_* provide exact values of the moments
// int_0^a w(t)/t dt and int_b^inf w(t)/t dt when a closed form is known.
struct MeasureRep {
  enum class Support { RealHalfLine, ClosedSector };
  Support support = Support::RealHalfLine;
  double sector_angle = 0.0;

  std::vector<std::pair<Complex, Complex>> atoms;  // (location, weight)
  std::function<Complex(double)> density;          // parametrised by t > 0
  double window_lo = 0.0, window_hi = 0.0;
  double tv_bound = 0.0;
  std::string name = "measure";

  std::function<Complex(double)> tail_over_t_below;
  std::function<Complex(double)> tail_over_t_above;

  bool has_density() const { return static_cast<bool>(density); }
};

inline void validate_measure(const MeasureRep& mu) {
  double atom_mass = 0;
  for (const auto& [loc, w] : mu.atoms) {
    atom_mass += std::abs(w);
    if (mu.support == MeasureRep::Support::RealHalfLine) {
      if (loc.imag() != 0.0 || loc.real() < 0.0)
        throw std::invalid_argument("measure: atom outside the half-line support");
    } else if (std::abs(std::arg(loc == Complex(0.0) ? Complex(1.0) : loc)) > mu.sector_angle + 1e-12) {
      throw std::invalid_argument("measure: atom outside the declared sector");
    }
  }
  if (mu.tv_bound + 1e-12 < atom_mass) throw std::invalid_argument("measure: tv_bound below atom mass");
  if (mu.has_density() && !(mu.window_hi > mu.window_lo))
    throw std::invalid_argument("measure: density without a proper window");
}

// Integrates density(t)*k(t) over the window in log coordinates.
template <class Kernel>
Complex integrate_density(const MeasureRep& mu, const Kernel& k, double rel_tol,
                          quad::AdaptiveResult* info = nullptr) {
  if (!mu.has_density()) return Complex(0.0);
  const double lo = std::max(mu.window_lo, 1e-30);
  const double a = std::log(lo), b = std::log(mu.window_hi);
  auto f = [&](double u) {
    const double t = std::exp(u);
    return mu.density(t) * k(t) * t;
  };
  return quad::adaptive_panels<Complex>(f, a, b, rel_tol, info);
}

/// L mu (z) = int e^{-zs} mu(ds), Re z >= 0.
inline Complex laplace_transform(const MeasureRep& mu, Complex z, double rel_tol = 1e-10) {
  if (mu.support != MeasureRep::Support::RealHalfLine)
    throw DomainMismatch("laplace_transform: measure not on the half-line");
  if (z.real() < -1e-12) throw DomainMismatch("laplace_transform: Re z < 0");
  Complex out(0.0);
  for (const auto& [loc, w] : mu.atoms) out += w * std::exp(-z * loc);
  out += integrate_density(mu, [&](double s) { return std::exp(-z * s); }, rel_tol);
  return out;
}

// Convolution: atom x atom exactly, atom x density by shifting the window.
// Density x density is intentionally unsupported.
inline MeasureRep convolve(const MeasureRep& mu, const MeasureRep& nu) {
  if (mu.has_density() && nu.has_density())
    throw std::invalid_argument("convolve: density*density is not supported");
  const MeasureRep& atomic = mu.has_density() ? nu : mu;
  const MeasureRep& other = mu.has_density() ? mu : nu;
  MeasureRep out;
  out.name = "(" + mu.name + "*" + nu.name + ")";
  for (const auto& [s, ws] : atomic.atoms)
    for (const auto& [t, wt] : other.atoms) out.atoms.emplace_back(s + t, ws * wt);
  if (other.has_density()) {
    if (atomic.atoms.size() != 1)
      throw std::invalid_argument("convolve: atom x density needs a single shifting atom");
    const Complex shift = atomic.atoms[0].first;
    const Complex w = atomic.atoms[0].second;
    if (shift.imag() != 0.0) throw std::invalid_argument("convolve: complex shift unsupported");
    auto dens = other.density;
    const double s0 = shift.real();
    out.density = [dens, w, s0](double t) { return t >= s0 ? w * dens(t - s0) : Complex(0.0); };
    out.window_lo = other.window_lo + s0;
    out.window_hi = other.window_hi + s0;
  }
  out.tv_bound = mu.tv_bound * nu.tv_bound;
  return out;
}

// --- Stieltjes / Hirsch -------------------------------------------------------

struct StieltjesRep {
  int m = 1;  // kernel power, m >= 0
  MeasureRep mu;
};

/// f(z) = int mu(ds) / (1+sz)^m, pointwise.
inline Complex stieltjes_eval(const StieltjesRep& f, Complex z, double rel_tol = 1e-10) {
  if (f.m < 0) throw std::invalid_argument("stieltjes_eval: negative power");
  const int m = f.m;
  auto kern = [m, z](Complex s) {
    // integer power by multiplication: no branch-cut surprises
    Complex p = 1.0 / (1.0 + s * z);
    Complex out(1.0);
    for (int i = 0; i < m; ++i) out *= p;
    return out;
  };
  Complex out(0.0);
  for (const auto& [loc, w] : f.mu.atoms) out += w * kern(loc);
  out += integrate_density(f.mu, [&](double s) { return kern(Complex(s)); }, rel_tol);
  return out;
}

struct HirschRep {
  Complex a{0.0};
  MeasureRep nu;  // on the half-line, with int |nu|(dt)/(1+t) finite
};

/// Certified weighted total variation int |nu|(dt)/(1+t).
inline double hirsch_weighted_tv(const MeasureRep& nu, double rel_tol = 1e-8) {
  double out = 0;
  for (const auto& [loc, w] : nu.atoms) out += std::abs(w) / (1.0 + loc.real());
  if (nu.has_density()) {
    Complex val = integrate_density(nu, [&](double t) { return Complex(1.0 / (1.0 + t)); }, rel_tol);
    out += std::abs(val);  // density assumed of one sign per window for the certificate
  }
  return out;
}

/// f(z) = a + int z/(1+zt) nu(dt), pointwise.
inline Complex hirsch_eval(const HirschRep& f, Complex z, double rel_tol = 1e-10) {
  Complex out = f.a;
  auto kern = [&](double t) { return z / (1.0 + z * t); };
  for (const auto& [loc, w] : f.nu.atoms) out += w * kern(loc.real());
  out += integrate_density(f.nu, kern, rel_tol);
  return out;
}

struct HirschSplit {
  Complex a{0.0};
  StieltjesRep g;  // f = a + z*g(z) + h(z)
  StieltjesRep h;
};

// Split against the [0,1] / (1,inf) decomposition: g collects nu on [0,1] as a
// kernel-power-1 Stieltjes function; the far part becomes the constant
// int nu(dt)/t minus a kernel-power-1 function with measure nu(dt)/t.
inline HirschSplit hirsch_split(const HirschRep& f, double rel_tol = 1e-10) {
  if (!std::isfinite(hirsch_weighted_tv(f.nu))) throw CertificateMissing("hirsch_split: weighted TV not finite");
  HirschSplit out;
  out.a = f.a;
  out.g.m = 1;
  out.h.m = 1;
  out.g.mu.name = "g(" + f.nu.name + ")";
  out.h.mu.name = "h(" + f.nu.name + ")";

  Complex far_constant(0.0);
  for (const auto& [loc, w] : f.nu.atoms) {
    const double t = loc.real();
    if (t <= 1.0) {
      out.g.mu.atoms.emplace_back(loc, w);
      out.g.mu.tv_bound += std::abs(w);
    } else {
      far_constant += w / t;
      out.h.mu.atoms.emplace_back(loc, -w / t);
      out.h.mu.tv_bound += std::abs(w) / t;
    }
  }
  if (f.nu.has_density()) {
    auto dens = f.nu.density;
    if (f.nu.window_lo < 1.0) {
      out.g.mu.density = [dens](double t) { return t <= 1.0 ? dens(t) : Complex(0.0); };
      out.g.mu.window_lo = f.nu.window_lo;
      out.g.mu.window_hi = std::min(1.0, f.nu.window_hi);
      out.g.mu.tv_bound += f.nu.tv_bound;
    }
    if (f.nu.window_hi > 1.0) {
      out.h.mu.density = [dens](double t) { return t > 1.0 ? -dens(t) / t : Complex(0.0); };
      out.h.mu.window_lo = std::max(1.0, f.nu.window_lo);
      out.h.mu.window_hi = f.nu.window_hi;
      out.h.mu.tv_bound += f.nu.tv_bound;
      MeasureRep far = f.nu;
      far.window_lo = std::max(1.0, f.nu.window_lo);
      far_constant += integrate_density(far, [](double t) { return Complex(1.0 / t); }, rel_tol);
    }
  }
  if (far_constant != Complex(0.0)) {
    // constant part encoded as an atom at 0 (the kernel is 1 there)
    out.h.mu.atoms.emplace_back(Complex(0.0), far_constant);
    out.h.mu.tv_bound += std::abs(far_constant);
  }
  return out;
}

}  // namespace opcalc::funsym
