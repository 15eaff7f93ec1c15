#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "opcalc/extend.hpp"

using namespace opcalc;
using namespace opcalc::extend;
using funsym::FunctionSymbol;
using numlin::Complex;
using numlin::ComplexMatrix;
using Catch::Approx;

namespace {

ComplexMatrix cdiag(std::initializer_list<Complex> d) {
  ComplexMatrix m =
      ComplexMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (Complex v : d) m(i, i) = v, ++i;
  return m;
}

FunctionSymbol sym_inv_z(double omega = 0.9 * M_PI) {
  FunctionSymbol f;
  f.name = "inv_z";
  f.eval = [](Complex z) { return 1.0 / z; };
  f.domain = funsym::Domain::sector(omega);
  return f;
}

FunctionSymbol sym_sqrt_z(double omega = 0.9 * M_PI) {
  FunctionSymbol f;
  f.name = "sqrt_z";
  f.eval = [](Complex z) { return std::sqrt(z); };
  f.domain = funsym::Domain::sector(omega);
  return f;
}

FunctionSymbol sym_nollau(Complex lambda, double omega = 0.9 * M_PI) {
  FunctionSymbol f;
  f.name = "nollau";
  f.eval = [lambda](Complex z) { return 1.0 / (lambda - std::log(z)); };
  f.domain = funsym::Domain::sector(omega);
  return f;
}

}  // namespace

TEST_CASE("anchor set decisions", "[extend]") {
  auto [ok1, w1] = is_anchor_set({ComplexMatrix::Identity(2, 2)});
  CHECK(ok1);
  CHECK(w1.dim() == 0);

  auto [ok2, w2] = is_anchor_set({cdiag({0.0, 1.0})});
  CHECK_FALSE(ok2);
  REQUIRE(w2.dim() == 1);
  CHECK(std::abs(std::abs(w2.basis(0, 0)) - 1.0) < 1e-12);

  auto [ok3, w3] = is_anchor_set({cdiag({0.0, 1.0}), cdiag({1.0, 0.0})});
  CHECK(ok3);

  CHECK_THROWS_AS(is_anchor_set({}), EmptySet);
}

TEST_CASE("linear relation classification", "[extend]") {
  ComplexMatrix M(2, 2);
  M << 1, 2, 3, 4;
  auto rel = LinearRelation::from_matrix(M);
  auto cls = classify(rel);
  REQUIRE(cls.kind == RelationKind::Operator);
  CHECK(numlin::op_norm(*cls.matrix - M) < 1e-12);
  CHECK(cls.dom.dim() == 2);
  CHECK(cls.mul.dim() == 0);
}

TEST_CASE("relation arithmetic on matrix graphs", "[extend]") {
  ComplexMatrix A(2, 2), B(2, 2);
  A << 1, 1, 0, 2;
  B << 0, 1, 1, 0;
  auto ra = LinearRelation::from_matrix(A);
  auto rb = LinearRelation::from_matrix(B);

  auto sum = classify(relation_sum(ra, rb));
  REQUIRE(sum.matrix);
  CHECK(numlin::op_norm(*sum.matrix - (A + B)) < 1e-12);

  auto prod = classify(relation_compose(ra, rb));
  REQUIRE(prod.matrix);
  CHECK(numlin::op_norm(*prod.matrix - A * B) < 1e-12);

  auto sc = classify(relation_scale(Complex(0, 2), ra));
  REQUIRE(sc.matrix);
  CHECK(numlin::op_norm(*sc.matrix - Complex(0, 2) * A) < 1e-12);
}

TEST_CASE("rational weight family has exact parts", "[extend]") {
  for (int j : {0, 1, 2}) {
    for (int k : {0, 1, 2}) {
      if (j == 0 && k == 0) continue;
      auto e = rational_weight(j, k);
      Complex z(0.7, 0.4);
      Complex expect = std::pow(z, j) / std::pow(1.0 + z, j + k);
      CHECK(std::abs(e.eval(z) - expect) < 1e-12);
      REQUIRE(e.ee_parts.has_value());
      Complex via = e.ee_parts->c + e.ee_parts->d / (1.0 + z);
      if (e.ee_parts->e_core) via += e.ee_parts->e_core->eval(z);
      CHECK(std::abs(via - expect) < 1e-12);
      if (j >= 1 && k >= 1) {
        // genuinely in the decay class: c = d = 0
        CHECK(std::abs(e.ee_parts->c) < 1e-12);
        CHECK(std::abs(e.ee_parts->d) < 1e-12);
      }
    }
  }
}

TEST_CASE("candidate regularizers for reference symbols", "[extend]") {
  auto h = sector::make_handle(cdiag({1.0, 2.0}));

  SECTION("1/z picks up z/(1+z)^2") {
    auto regs = candidate_regularizers(sym_inv_z(), h, 2);
    bool found = false;
    for (const auto& r : regs)
      if (r.j == 1 && r.k == 1) found = true;
    CHECK(found);
    // phi(e*f) for e = z/(1+z)^2, f = 1/z is (I+A)^{-2}
    for (const auto& r : regs) {
      if (r.j == 1 && r.k == 1) {
        ComplexMatrix expect = cdiag({0.25, 1.0 / 9.0});
        CHECK(numlin::op_norm(r.phi_ef - expect) < 1e-7);
      }
    }
  }
  SECTION("extended-algebra symbols regularize through 1/(1+z)") {
    auto f = funsym::sym_inv_one_plus_z();
    auto regs = candidate_regularizers(f, h, 1);
    bool found = false;
    for (const auto& r : regs)
      if (r.j == 0 && r.k == 1) found = true;
    CHECK(found);
  }
  SECTION("exponential growth defeats the family") {
    FunctionSymbol expf;
    expf.name = "exp_z";
    expf.eval = [](Complex z) { return std::exp(z); };
    expf.domain = funsym::Domain::sector(M_PI / 4);
    CHECK_THROWS_AS(candidate_regularizers(expf, h, 2), NoRegularizerFound);
  }
}

TEST_CASE("extension produces operators, partial operators, relations", "[extend]") {
  SECTION("1/z on an invertible matrix") {
    auto h = sector::make_handle(cdiag({1.0, 2.0}));
    auto regs = candidate_regularizers(sym_inv_z(), h, 2);
    auto ext = extend_phi(regs);
    REQUIRE(ext.classification.kind == RelationKind::Operator);
    CHECK(numlin::op_norm(*ext.classification.matrix - cdiag({1.0, 0.5})) < 1e-7);
    CHECK(ext.regs_are_anchor);
  }
  SECTION("identity from any anchor set") {
    auto h = sector::make_handle(cdiag({1.0, 2.0}));
    auto regs = candidate_regularizers(funsym::sym_one(), h, 1);
    auto ext = extend_phi(regs);
    REQUIRE(ext.classification.kind == RelationKind::Operator);
    CHECK(numlin::op_norm(*ext.classification.matrix - ComplexMatrix::Identity(2, 2)) < 1e-8);
  }
  SECTION("1/z on a singular matrix with a non-anchor weight gives a relation") {
    auto h = sector::make_handle(cdiag({0.0, 1.0}));
    // single weight z^2/(1+z)^2: phi(e) = phi(ef * z) both vanish on ker A
    auto e = rational_weight(2, 0);
    auto f = sym_inv_z();
    Regularizer reg;
    reg.j = 2;
    reg.k = 0;
    reg.e = e;
    reg.phi_e = sector::phi_ee(e, h).result;
    auto ef = funsym::classify_into_Ee("z_over_1pz2", [](Complex z) { return z / std::pow(1.0 + z, 2); },
                                       0.9 * M_PI, M_PI / 3);
    REQUIRE(ef.has_value());
    reg.phi_ef = sector::phi_ee(*ef, h).result;

    // frozen direct computation: phi(e) = A^2 (I+A)^{-2} = diag(0, 1/4),
    // phi(ef) = A (I+A)^{-2} = diag(0, 1/4)
    CHECK(numlin::op_norm(reg.phi_e - cdiag({0.0, 0.25})) < 1e-7);
    CHECK(numlin::op_norm(reg.phi_ef - cdiag({0.0, 0.25})) < 1e-7);

    auto ext = extend_phi({reg});
    CHECK(ext.classification.kind == RelationKind::Relation);
    REQUIRE(ext.classification.mul.dim() == 1);
    CHECK(std::abs(std::abs(ext.classification.mul.basis(0, 0)) - 1.0) < 1e-7);
    CHECK_FALSE(ext.regs_are_anchor);
  }
}

TEST_CASE("anchored membership", "[extend]") {
  auto h_inj = sector::make_handle(cdiag({1.0, 2.0}));
  auto h_sing = sector::make_handle(cdiag({0.0, 1.0}));

  CHECK(anchored_membership(funsym::sym_inv_one_plus_z(), h_inj, 2));
  CHECK(anchored_membership(sym_inv_z(), h_inj, 2));

  auto e_lib = funsym::make_E("z_over_1pz2", [](Complex z) { return z / std::pow(1.0 + z, 2); }, 0.9 * M_PI);
  CHECK(anchored_membership(e_lib, h_inj, 2));

  // the logarithmic-resolvent symbol is rejected on a non-injective matrix
  CHECK_FALSE(anchored_membership(sym_nollau(Complex(1.0, 4.0)), h_sing, 3));
  // but accepted on an injective one
  CHECK(anchored_membership(sym_nollau(Complex(1.0, 4.0)), h_inj, 3));
}

TEST_CASE("two disjoint anchor sets give the same graph", "[extend]") {
  auto h = sector::make_handle(cdiag({1.0, 2.0, 0.5}));
  numlin::ToleranceConfig cfg;
  for (const auto& f : {sym_inv_z(), sym_sqrt_z(), sym_nollau(Complex(1.0, 4.0))}) {
    auto regs = candidate_regularizers(f, h, 3, cfg);
    RegularizerSet set1, set2;
    for (const auto& r : regs) {
      if (r.j == 1 && r.k == 1) set1.push_back(r);
      if (r.j == 2 && r.k == 2) set2.push_back(r);
    }
    REQUIRE_FALSE(set1.empty());
    REQUIRE_FALSE(set2.empty());
    auto rep = uniqueness_instance(set1, set2, 1e-7, cfg);
    CHECK(rep.status == UniquenessReport::Status::Equal);
    CHECK(rep.graph_distance <= 1e-7);
  }
}

TEST_CASE("superset monotonicity of anchor regularizer sets", "[extend]") {
  auto h = sector::make_handle(cdiag({1.0, 3.0}));
  auto regs = candidate_regularizers(sym_inv_z(), h, 2);
  RegularizerSet small(regs.begin(), regs.begin() + 1);
  REQUIRE(is_anchor_set({small[0].phi_e}).first);
  auto ext_small = extend_phi(small);
  auto ext_full = extend_phi(regs);
  CHECK(graph_distance(ext_small.relation, ext_full.relation) <= 1e-7);
}

TEST_CASE("uniqueness is inconclusive without an anchor", "[extend]") {
  auto h = sector::make_handle(cdiag({0.0, 1.0}));
  auto e = rational_weight(2, 0);
  Regularizer reg;
  reg.e = e;
  reg.phi_e = sector::phi_ee(e, h).result;
  reg.phi_ef = reg.phi_e;
  auto rep = uniqueness_instance({reg}, {reg}, 1e-7);
  CHECK(rep.status == UniquenessReport::Status::Inconclusive);
}

TEST_CASE("fc axiom suite over the sectorial evaluator", "[extend]") {
  auto h = sector::make_handle(cdiag({1.0, 2.0}));
  numlin::ToleranceConfig cfg;

  Evaluator eval = [&](const funsym::FunctionSymbol& f) {
    if (f.ee_parts) return LinearRelation::from_matrix(sector::phi_ee(f, h, cfg).result);
    auto regs = candidate_regularizers(f, h, 2, cfg);
    return extend_phi(regs, cfg).relation;
  };

  std::vector<funsym::FunctionSymbol> samples = {
      funsym::sym_one(),
      funsym::sym_inv_one_plus_z(),
      funsym::make_E("z_over_1pz2", [](Complex z) { return z / std::pow(1.0 + z, 2); }, 0.95 * M_PI),
      rational_weight(1, 2),
  };
  auto report = check_fc_axioms(eval, samples, 1e-7, cfg);
  CHECK(report.pass);
  CHECK(report.worst_residual < 1e-8);

  // eigen-oracle evaluator on a normal matrix: exact homomorphism
  auto d = numlin::eig_oracle(h.A);
  Evaluator oracle_eval = [&](const funsym::FunctionSymbol& f) {
    return LinearRelation::from_matrix(numlin::apply_eig_oracle(d, f.eval));
  };
  CHECK(check_fc_axioms(oracle_eval, samples, 1e-9, cfg).pass);

  // corrupted evaluator: perturb products
  Evaluator corrupted = [&](const funsym::FunctionSymbol& f) {
    ComplexMatrix m = sector::phi_ee(f, h, cfg).result;
    if (f.name.find('*') != std::string::npos) m(0, 0) += 1e-3;
    return LinearRelation::from_matrix(m);
  };
  auto bad = check_fc_axioms(corrupted, samples, 1e-7, cfg);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_case.find("FC3") != std::string::npos);
}

TEST_CASE("inverse pair identity", "[extend]") {
  // f g = 1 with commuting symbols: phi(g)^{-1} = phi(f)
  auto h = sector::make_handle(cdiag({1.0, 2.0}));
  numlin::ToleranceConfig cfg;
  FunctionSymbol shifted;  // 1 + z
  shifted.name = "one_plus_z";
  shifted.eval = [](Complex z) { return 1.0 + z; };
  shifted.domain = funsym::Domain::sector(0.9 * M_PI);

  auto regs = candidate_regularizers(shifted, h, 2, cfg);
  auto ext = extend_phi(regs, cfg);
  REQUIRE(ext.classification.kind == RelationKind::Operator);
  ComplexMatrix expect = h.A + ComplexMatrix::Identity(2, 2);
  CHECK(numlin::op_norm(*ext.classification.matrix - expect) < 1e-7);

  ComplexMatrix inv = sector::phi_ee(funsym::sym_inv_one_plus_z(), h, cfg).result;
  CHECK(numlin::op_norm(*ext.classification.matrix * inv - ComplexMatrix::Identity(2, 2)) < 1e-7);
}

TEST_CASE("transpose homomorphism instance", "[extend]") {
  auto h = sector::make_handle(cdiag({1.0, Complex(2.0, 0.5)}));
  auto f = funsym::make_E("ef", [](Complex z) { return z / std::pow(1.0 + z, 2); }, 0.95 * M_PI);
  auto g = funsym::make_E("eg", [](Complex z) { return z / ((0.5 + z) * (2.0 + z)); }, 0.95 * M_PI);
  ComplexMatrix mf = sector::phi_ee(f, h).result;
  ComplexMatrix mg = sector::phi_ee(g, h).result;
  ComplexMatrix mfg = sector::phi_ee(funsym::sym_product(f, g), h).result;
  auto rep = dual_transpose_check(mf, mg, mfg, 1e-7);
  CHECK(rep.pass);

  auto triv = dual_transpose_check(ComplexMatrix::Identity(2, 2), mg, mg, 1e-10);
  CHECK(triv.pass);

  // a genuinely non-multiplicative triple fails
  ComplexMatrix off(2, 2);
  off << 0, 1, 0, 0;
  auto bad = dual_transpose_check(mf, mg, mfg + 0.1 * off, 1e-7);
  CHECK_FALSE(bad.pass);
}
