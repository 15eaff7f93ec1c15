#pragma once

// Algebraic extension machinery made concrete in finite dimensions: linear
// relations as graph subspaces, anchor sets, regularizer search over the
// rational family z^j/(1+z)^{j+k}, the canonical extension as an intersection
// of stacked nullspaces, and the axiom/uniqueness/duality instance checks.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opcalc/funsym.hpp"
#include "opcalc/numlin.hpp"
#include "opcalc/sector.hpp"

namespace opcalc::extend {

using numlin::Complex;
using numlin::ComplexMatrix;
using numlin::Subspace;
using numlin::ToleranceConfig;

class EmptySet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoRegularizerFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AxiomViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Subspace of X + X; first block input, second block output.
struct LinearRelation {
  Eigen::Index ambient_dim = 0;
  Subspace graph;  // in C^{2n}

  static LinearRelation from_matrix(const ComplexMatrix& M) {
    numlin::require_square_finite(M, "LinearRelation::from_matrix");
    const Eigen::Index n = M.rows();
    ComplexMatrix cols(2 * n, n);
    cols.topRows(n) = ComplexMatrix::Identity(n, n);
    cols.bottomRows(n) = M;
    return {n, numlin::column_span(cols)};
  }

  ComplexMatrix input_block() const { return graph.basis.topRows(ambient_dim); }
  ComplexMatrix output_block() const { return graph.basis.bottomRows(ambient_dim); }

  Subspace domain(double rank_tol = 1e-9) const {
    return numlin::column_span(input_block(), rank_tol);
  }

  // mul = { y : (0, y) in graph }
  Subspace multivalued_part(const ToleranceConfig& tol = {}) const {
    if (graph.dim() == 0) return Subspace::zero(ambient_dim);
    Subspace kernelU = numlin::nullspace(input_block(), tol);
    if (kernelU.dim() == 0) return Subspace::zero(ambient_dim);
    return numlin::column_span(output_block() * kernelU.basis, tol.rank_rel_tol);
  }
};

enum class RelationKind { Operator, PartialOperator, Relation };

struct Classification {
  RelationKind kind = RelationKind::Relation;
  Subspace dom;
  Subspace mul;
  std::optional<ComplexMatrix> matrix;  // present iff kind == Operator
};

inline Classification classify(const LinearRelation& rel, const ToleranceConfig& tol = {}) {
  Classification out;
  out.dom = rel.domain(tol.rank_rel_tol);
  out.mul = rel.multivalued_part(tol);
  const Eigen::Index n = rel.ambient_dim;
  if (out.mul.dim() > 0) {
    out.kind = RelationKind::Relation;
    return out;
  }
  if (out.dom.dim() < n) {
    out.kind = RelationKind::PartialOperator;
    return out;
  }
  out.kind = RelationKind::Operator;
  // graph has dimension n with invertible input block: M = W U^{-1}
  ComplexMatrix U = rel.input_block();
  ComplexMatrix W = rel.output_block();
  ComplexMatrix Mt = U.transpose().partialPivLu().solve(W.transpose());
  out.matrix = Mt.transpose();
  return out;
}

inline double graph_distance(const LinearRelation& a, const LinearRelation& b) {
  return numlin::principal_angle_distance(a.graph, b.graph);
}

inline bool graph_contains(const LinearRelation& big, const LinearRelation& small, double tol = 1e-8) {
  return numlin::subspace_contains(big.graph, small.graph, tol);
}

// --- relation arithmetic ------------------------------------------------------

inline LinearRelation relation_scale(Complex lambda, const LinearRelation& r) {
  ComplexMatrix cols = r.graph.basis;
  cols.bottomRows(r.ambient_dim) *= lambda;
  return {r.ambient_dim, numlin::column_span(cols)};
}

// { (x, y+z) : (x,y) in F, (x,z) in G }
inline LinearRelation relation_sum(const LinearRelation& F, const LinearRelation& G,
                                   const ToleranceConfig& tol = {}) {
  const Eigen::Index n = F.ambient_dim;
  if (G.ambient_dim != n) throw std::invalid_argument("relation_sum: dims differ");
  ComplexMatrix pair(n, F.graph.dim() + G.graph.dim());
  pair.leftCols(F.graph.dim()) = F.input_block();
  pair.rightCols(G.graph.dim()) = -G.input_block();
  Subspace match = numlin::nullspace(pair, tol);
  ComplexMatrix cf = match.basis.topRows(F.graph.dim());
  ComplexMatrix cg = match.basis.bottomRows(G.graph.dim());
  ComplexMatrix cols(2 * n, match.dim());
  cols.topRows(n) = F.input_block() * cf;
  cols.bottomRows(n) = F.output_block() * cf + G.output_block() * cg;
  return {n, numlin::column_span(cols, tol.rank_rel_tol)};
}

// F o G = { (x, z) : (x,y) in G, (y,z) in F }
inline LinearRelation relation_compose(const LinearRelation& F, const LinearRelation& G,
                                       const ToleranceConfig& tol = {}) {
  const Eigen::Index n = F.ambient_dim;
  if (G.ambient_dim != n) throw std::invalid_argument("relation_compose: dims differ");
  ComplexMatrix pair(n, G.graph.dim() + F.graph.dim());
  pair.leftCols(G.graph.dim()) = G.output_block();
  pair.rightCols(F.graph.dim()) = -F.input_block();
  Subspace match = numlin::nullspace(pair, tol);
  ComplexMatrix cg = match.basis.topRows(G.graph.dim());
  ComplexMatrix cf = match.basis.bottomRows(F.graph.dim());
  ComplexMatrix cols(2 * n, match.dim());
  cols.topRows(n) = G.input_block() * cg;
  cols.bottomRows(n) = F.output_block() * cf;
  return {n, numlin::column_span(cols, tol.rank_rel_tol)};
}

// --- anchor sets ---------------------------------------------------------------

/// true iff the stacked kernels intersect trivially; witness is the common kernel.
inline std::pair<bool, Subspace> is_anchor_set(const std::vector<ComplexMatrix>& mats,
                                               const ToleranceConfig& tol = {}) {
  if (mats.empty()) throw EmptySet("is_anchor_set: empty list");
  const Eigen::Index n = mats.front().cols();
  ComplexMatrix stacked(static_cast<Eigen::Index>(mats.size()) * n, n);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].rows() != n || mats[i].cols() != n)
      throw std::invalid_argument("is_anchor_set: dimension mismatch");
    stacked.middleRows(static_cast<Eigen::Index>(i) * n, n) = mats[i];
  }
  Subspace witness = numlin::nullspace(stacked, tol);
  return {witness.dim() == 0, witness};
}

// --- regularizers ---------------------------------------------------------------

struct Regularizer {
  funsym::FunctionSymbol e;
  ComplexMatrix phi_e;
  ComplexMatrix phi_ef;
  int j = 0, k = 0;
};

using RegularizerSet = std::vector<Regularizer>;

/// The rational family e_{j,k}(z) = z^j / (1+z)^{j+k} as exact extended-algebra
/// symbols (built by repeated products of z/(1+z) and 1/(1+z)).
inline funsym::FunctionSymbol rational_weight(int j, int k, double omega = 0.95 * M_PI) {
  funsym::FunctionSymbol zf;  // z/(1+z) = 1 - 1/(1+z)
  zf.name = "z_over_1pz";
  zf.eval = [](Complex z) { return z / (1.0 + z); };
  zf.domain = funsym::Domain::sector(omega);
  zf.tags = funsym::InEe | funsym::Bounded | funsym::HasLimitAtZero;
  zf.ee_parts = funsym::FunctionSymbol::EeParts{nullptr, Complex(1.0), Complex(-1.0)};

  funsym::FunctionSymbol acc = funsym::sym_one();
  acc.domain = funsym::Domain::sector(omega);
  for (int i = 0; i < j; ++i) acc = funsym::sym_product(acc, zf);
  auto inv = funsym::sym_inv_one_plus_z();
  inv.domain = funsym::Domain::sector(omega);
  for (int i = 0; i < k; ++i) acc = funsym::sym_product(acc, inv);
  acc.name = "e_" + std::to_string(j) + "_" + std::to_string(k);
  if (j >= 1 && k >= 1) acc.tags |= funsym::InE;
  return acc;
}

/// Scans e_{j,k} for 0 <= j,k <= depth (excluding e = 1), keeping weights whose
/// product with f lands in the extended algebra; the operator values come from
/// the sectorial engine.
inline RegularizerSet candidate_regularizers(const funsym::FunctionSymbol& f,
                                             const sector::SectorialHandle& h, int depth,
                                             const ToleranceConfig& tol = {}) {
  RegularizerSet out;
  const double omega = f.domain.kind == funsym::DomainKind::Sector ? f.domain.omega : 0.95 * M_PI;
  const double probe_delta = 0.5 * (h.omega_se + omega);
  for (int j = 0; j <= depth; ++j) {
    for (int k = 0; k <= depth; ++k) {
      if (j == 0 && k == 0) continue;
      funsym::FunctionSymbol e = rational_weight(j, k, omega);
      funsym::FunctionSymbol ef;
      if (f.ee_parts) {
        ef = funsym::sym_product(e, f);
      } else {
        auto fe = f.eval;
        auto ee = e.eval;
        auto classified = funsym::classify_into_Ee(
            "(" + e.name + "*" + f.name + ")", [fe, ee](Complex z) { return ee(z) * fe(z); }, omega,
            probe_delta);
        if (!classified) continue;
        ef = *classified;
      }
      Regularizer reg;
      reg.j = j;
      reg.k = k;
      reg.phi_e = sector::phi_ee(e, h, tol).result;
      reg.phi_ef = sector::phi_ee(ef, h, tol).result;
      reg.e = std::move(e);
      out.push_back(std::move(reg));
    }
  }
  if (out.empty())
    throw NoRegularizerFound("candidate_regularizers: no admissible weight up to requested depth");
  return out;
}

// --- the canonical extension -----------------------------------------------------

struct ExtensionResult {
  LinearRelation relation;
  Classification classification;
  bool regs_are_anchor = false;
};

/// Graph of the extended operator: common nullspace of the stacked blocks
/// [phi(ef) | -phi(e)] over all regularizers.
inline ExtensionResult extend_phi(const RegularizerSet& regs, const ToleranceConfig& tol = {}) {
  if (regs.empty()) throw EmptySet("extend_phi: empty regularizer set");
  const Eigen::Index n = regs.front().phi_e.rows();
  ComplexMatrix stacked(static_cast<Eigen::Index>(regs.size()) * n, 2 * n);
  std::vector<ComplexMatrix> anchors;
  anchors.reserve(regs.size());
  for (std::size_t i = 0; i < regs.size(); ++i) {
    stacked.block(static_cast<Eigen::Index>(i) * n, 0, n, n) = regs[i].phi_ef;
    stacked.block(static_cast<Eigen::Index>(i) * n, n, n, n) = -regs[i].phi_e;
    anchors.push_back(regs[i].phi_e);
  }
  ExtensionResult out;
  out.relation = LinearRelation{n, numlin::nullspace(stacked, tol)};
  out.classification = classify(out.relation, tol);
  out.regs_are_anchor = is_anchor_set(anchors, tol).first;
  if (out.regs_are_anchor && out.classification.mul.dim() > 0)
    throw AxiomViolation("extend_phi: anchor regularizers produced a multivalued part");
  return out;
}

/// Anchored-membership test in the commutative simplification: the candidate
/// weights for f must have point-separating operator values.
inline bool anchored_membership(const funsym::FunctionSymbol& f, const sector::SectorialHandle& h,
                                int depth, const ToleranceConfig& tol = {}) {
  RegularizerSet regs;
  try {
    regs = candidate_regularizers(f, h, depth, tol);
  } catch (const NoRegularizerFound&) {
    return false;
  }
  std::vector<ComplexMatrix> mats;
  mats.reserve(regs.size());
  for (const auto& r : regs) mats.push_back(r.phi_e);
  return is_anchor_set(mats, tol).first;
}

// --- axiom suite -------------------------------------------------------------------

using Evaluator = std::function<LinearRelation(const funsym::FunctionSymbol&)>;

struct AxiomReport {
  bool pass = true;
  double worst_residual = 0.0;
  std::string worst_case;

  void update(double resid, const std::string& what, double tol) {
    if (resid > worst_residual) {
      worst_residual = resid;
      worst_case = what;
    }
    if (resid > tol) pass = false;
  }
};

/// FC1 plus the graph inclusions of FC2/FC3 and the bounded-case equalities,
/// driven by an arbitrary evaluator over symbol samples.
inline AxiomReport check_fc_axioms(const Evaluator& eval, const std::vector<funsym::FunctionSymbol>& samples,
                                   double tol, const ToleranceConfig& cfg = {}) {
  AxiomReport report;
  if (samples.empty()) throw EmptySet("check_fc_axioms: no samples");

  auto inclusion_residual = [&](const LinearRelation& small, const LinearRelation& big) {
    if (small.graph.dim() == 0) return 0.0;
    ComplexMatrix resid =
        small.graph.basis - big.graph.basis * (big.graph.basis.adjoint() * small.graph.basis);
    return numlin::op_norm(resid);
  };

  // FC1
  LinearRelation one_rel = eval(funsym::sym_one());
  auto cls = classify(one_rel, cfg);
  const Eigen::Index n = one_rel.ambient_dim;
  double fc1 = cls.matrix ? numlin::op_norm(*cls.matrix - ComplexMatrix::Identity(n, n)) : 1.0;
  report.update(fc1, "FC1: phi(one) != I", tol);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& f = samples[i];
    LinearRelation rf = eval(f);
    // FC2 scaling
    for (Complex lambda : {Complex(2.0, 0.0), Complex(0.0, 1.0)}) {
      LinearRelation lhs = relation_scale(lambda, rf);
      LinearRelation rhs = eval(funsym::sym_scale(lambda, f));
      report.update(inclusion_residual(lhs, rhs), "FC2 scaling at " + f.name, tol);
    }
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const auto& g = samples[j];
      LinearRelation rg = eval(g);
      // FC2 additivity: phi(f) + phi(g) included in phi(f+g)
      LinearRelation sum = relation_sum(rf, rg, cfg);
      LinearRelation rfg = eval(funsym::sym_sum(f, g));
      report.update(inclusion_residual(sum, rfg), "FC2 sum at " + f.name + "," + g.name, tol);
      // FC3: phi(f) phi(g) included in phi(fg)
      LinearRelation prod = relation_compose(rf, rg, cfg);
      LinearRelation rprod = eval(funsym::sym_product(f, g));
      report.update(inclusion_residual(prod, rprod), "FC3 at " + f.name + "," + g.name, tol);
      // bounded case: equalities
      auto cg = classify(rg, cfg);
      if (cg.matrix) {
        report.update(graph_distance(sum, rfg),
                      "equality phi(f)+phi(g) = phi(f+g) at " + f.name + "," + g.name, tol);
        auto cf = classify(rf, cfg);
        if (cf.matrix) {
          auto cfg2 = classify(rprod, cfg);
          double resid = cfg2.matrix ? numlin::op_norm(*cf.matrix * *cg.matrix - *cfg2.matrix) : 1.0;
          report.update(resid / (1.0 + numlin::op_norm(*cf.matrix) * numlin::op_norm(*cg.matrix)),
                        "equality phi(f)phi(g) = phi(fg) at " + f.name + "," + g.name, tol);
        }
      }
    }
  }
  return report;
}

struct UniquenessReport {
  enum class Status { Equal, Different, Inconclusive };
  Status status = Status::Inconclusive;
  double graph_distance = 0.0;
};

/// Extends from two independently supplied regularizer-value sets and compares
/// the graphs (principal angles).
inline UniquenessReport uniqueness_instance(const RegularizerSet& regs1, const RegularizerSet& regs2,
                                            double tol, const ToleranceConfig& cfg = {}) {
  UniquenessReport out;
  std::vector<ComplexMatrix> m1, m2;
  for (const auto& r : regs1) m1.push_back(r.phi_e);
  for (const auto& r : regs2) m2.push_back(r.phi_e);
  if (!is_anchor_set(m1, cfg).first || !is_anchor_set(m2, cfg).first) {
    out.status = UniquenessReport::Status::Inconclusive;
    return out;
  }
  auto e1 = extend_phi(regs1, cfg);
  auto e2 = extend_phi(regs2, cfg);
  out.graph_distance = graph_distance(e1.relation, e2.relation);
  out.status = out.graph_distance <= tol ? UniquenessReport::Status::Equal
                                         : UniquenessReport::Status::Different;
  return out;
}

struct TransposeReport {
  double residual = 0.0;
  bool pass = false;
};

/// Opposite-algebra instance: phi(fg)^T must equal phi(g)^T phi(f)^T for
/// bounded pairs (plain transpose, the finite-dimensional stand-in for the
/// Banach-space adjoint).
inline TransposeReport dual_transpose_check(const ComplexMatrix& phi_f, const ComplexMatrix& phi_g,
                                            const ComplexMatrix& phi_fg, double tol) {
  TransposeReport out;
  ComplexMatrix lhs = phi_fg.transpose();
  ComplexMatrix rhs = phi_g.transpose() * phi_f.transpose();
  out.residual = numlin::op_norm(lhs - rhs) / (1.0 + numlin::op_norm(rhs));
  out.pass = out.residual <= tol;
  return out;
}

}  // namespace opcalc::extend
