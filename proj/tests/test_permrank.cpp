#include <doctest.h>

#include <cmath>

#include "doebench/errors.hpp"
#include "doebench/permrank.hpp"
#include "doebench/rng.hpp"
#include "perm_oracle.hpp"

using namespace doebench;

namespace {

Eigen::VectorXd vec(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

std::vector<double> normals(Rng& rng, int n, double mu = 0.0, double sd = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = mu + sd * standard_normal(rng);
  return v;
}

PValueMatrix from(const Eigen::MatrixXd& e) {
  PValueMatrix p;
  p.entries = e;
  for (Eigen::Index i = 0; i < e.rows(); ++i) p.labels.push_back("G" + std::to_string(i + 1));
  p.n_variables = 1;
  return p;
}

RmseRecord rec(DesignId d, ModelId m, int rep, std::optional<double> v) {
  RmseRecord r;
  r.design = d;
  r.function = FunctionId::Piston;
  r.noise = NoiseSpec::none();
  r.model = m;
  r.rep = rep;
  r.test_rmse = v;
  r.status = v ? "ok" : "rank_deficient";
  return r;
}

}  // namespace

TEST_CASE("perm_test edge cases") {
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(5, 2.0);
  CHECK(perm_test(c, c, false, 500, 1) == 1.0);
  CHECK(perm_test(c, c, true, 500, 1) == 1.0);
  Rng rng(2);
  const auto b = normals(rng, 10);
  std::vector<double> a = b;
  for (double& v : a) v += 10.0 * 1.0;
  CHECK(perm_test(vec(a), vec(b), false, 2000, 3) == doctest::Approx(1.0 / 2001).epsilon(1e-12));
  // only the identity sign pattern (probability 2^-10 per draw) ties the observed statistic
  CHECK(perm_test(vec(a), vec(b), true, 2000, 3) <= 10.0 / 2001);
  CHECK_THROWS_AS(perm_test(vec(a), vec(b).head(9), true, 100, 1), LengthMismatch);
  CHECK_THROWS_AS(perm_test(vec(a).head(1), vec(b), false, 100, 1), InsufficientData);
  const double p = perm_test(vec(b), vec(a), false, 2000, 3);
  CHECK(p >= 1.0 / 2001);
  CHECK(p <= 1.0);
}

TEST_CASE("CMC p-values agree with exact enumeration") {
  Rng rng(4);
  for (int rep = 0; rep < 6; ++rep) {
    const auto a = normals(rng, 4, 0.4 * rep);
    const auto b = normals(rng, 4);
    const double ei = oracle::exact_independent(a, b);
    const double ci = perm_test(vec(a), vec(b), false, 2000, 10 + rep);
    CHECK(std::abs(ci - ei) <= 3 * std::sqrt(ei * (1 - ei) / 2000) + 1.0 / 2001);
    const double ep = oracle::exact_paired(a, b);
    const double cp = perm_test(vec(a), vec(b), true, 2000, 20 + rep);
    CHECK(std::abs(cp - ep) <= 3 * std::sqrt(ep * (1 - ep) / 2000) + 1.0 / 2001);
  }
}

TEST_CASE("p-values are invariant to a common positive affine map") {
  Rng rng(5);
  const auto a = normals(rng, 8, 0.5), b = normals(rng, 8);
  const Eigen::VectorXd va = vec(a), vb = vec(b);
  for (bool paired : {false, true}) {
    const double p = perm_test(va, vb, paired, 1000, 6);
    CHECK(perm_test((3.0 * va.array() + 7.0).matrix(), (3.0 * vb.array() + 7.0).matrix(), paired, 1000, 6) == p);
  }
}

TEST_CASE("serial and parallel statistics kernels agree bitwise") {
  Rng rng(6);
  Eigen::MatrixXd a(6, 3), b(6, 3);
  for (double& v : a.reshaped()) v = standard_normal(rng);
  for (double& v : b.reshaped()) v = standard_normal(rng);
  for (auto s : {PermScheme::Independent, PermScheme::PairedJoint, PermScheme::PairedPerCell})
    CHECK(kernels::permutation_statistics(a, b, s, 300, 9) == serial::permutation_statistics(a, b, s, 300, 9));
}

TEST_CASE("single-variable NPC is decision-equivalent to perm_test") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = normals(rng, 6, 0.3 * (rep % 5)), b = normals(rng, 6);
    for (bool paired : {false, true}) {
      const double p1 = perm_test(vec(a), vec(b), paired, 1000, 100 + rep);
      const double pn = npc_compare(vec(a), vec(b), paired, 1000, 100 + rep);
      CHECK(std::abs(p1 - pn) <= 1e-12);
    }
  }
}

TEST_CASE("NPC power with one separated column among nulls") {
  Rng rng(8);
  int hits = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::MatrixXd a(10, 4), b(10, 4);
    for (double& v : a.reshaped()) v = standard_normal(rng);
    for (double& v : b.reshaped()) v = standard_normal(rng);
    a.col(2).array() += 5.0;
    if (npc_compare(a, b, false, 2000, 1000 + rep) <= 0.025) ++hits;
  }
  // Fisher combination dilutes a single signal by three null columns: expected power ~0.89
  CHECK(hits >= 160);
}

TEST_CASE("rank_groups") {
  const double nan = std::nan("");
  SUBCASE("no separation") {
    Eigen::Matrix3d e;
    e << nan, 0.3, 0.9, 0.5, nan, 0.04, 0.2, 0.7, nan;
    const auto r = rank_groups(from(e), 0.05);
    CHECK(r.ranks == std::vector<int>{1, 1, 1});
  }
  SUBCASE("strict order G1 < G2 < G3") {
    Eigen::Matrix3d e;
    // (i, j): group i has larger RMSE than j
    e << nan, 0.99, 0.99, 0.001, nan, 0.99, 0.001, 0.001, nan;
    const auto r = rank_groups(from(e), 0.05);
    CHECK(r.ranks == std::vector<int>{1, 2, 3});
    CHECK(r.downward == std::vector<int>{1, 2, 3});
    CHECK(r.upward == std::vector<int>{1, 2, 3});
    // threshold is alpha / 2
    e(1, 0) = 0.03;
    CHECK(rank_groups(from(e), 0.05).ranks == std::vector<int>{1, 1, 3});
    CHECK(rank_groups(from(e), 0.06).ranks == std::vector<int>{1, 2, 3});
  }
  SUBCASE("label permutation equivariance") {
    Eigen::Matrix4d e;
    e << nan, 0.9, 0.9, 0.9, 0.01, nan, 0.5, 0.9, 0.01, 0.4, nan, 0.9, 0.001, 0.01, 0.02, nan;
    const auto r = rank_groups(from(e), 0.05);
    const std::vector<int> perm{2, 0, 3, 1};
    Eigen::Matrix4d q;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) q(i, j) = e(perm[i], perm[j]);
    const auto rq = rank_groups(from(q), 0.05);
    for (int i = 0; i < 4; ++i) CHECK(rq.ranks[i] == r.ranks[perm[i]]);
    CHECK(*std::min_element(r.ranks.begin(), r.ranks.end()) == 1);
  }
}

TEST_CASE("build_pmatrix") {
  Rng rng(9);
  std::vector<Eigen::MatrixXd> g(2, Eigen::MatrixXd(5, 2));
  for (auto& m : g)
    for (double& v : m.reshaped()) v = standard_normal(rng);
  const auto p = build_pmatrix(g, {"a", "b"}, false, 200, 1);
  CHECK(std::isnan(p.entries(0, 0)));
  CHECK(p.entries(0, 1) >= 0.0);
  CHECK(p.entries(1, 0) <= 1.0);
  CHECK(build_pmatrix(g, {"a", "b"}, false, 200, 1).entries(0, 1) == p.entries(0, 1));
  CHECK_THROWS_AS(build_pmatrix({g[0]}, {"a"}, false, 200, 1), InsufficientData);
  // NaN columns are dropped per comparison; nothing usable gives p = 1
  g[1].col(0).setConstant(std::nan(""));
  g[1].col(1)(2) = std::nan("");
  const auto q = build_pmatrix(g, {"a", "b"}, false, 200, 1);
  CHECK(q.entries(0, 1) == 1.0);
  CHECK(q.entries(1, 0) == 1.0);
}

TEST_CASE("stage-1 design and model rankings") {
  const std::vector<ModelId> models{ModelId::LM, ModelId::GP};
  Rng rng(10);
  SUBCASE("separated designs, LM missing for one design") {
    std::vector<RmseRecord> r;
    for (int rep = 0; rep < 10; ++rep) {
      r.push_back(rec(DesignId::I_opt, ModelId::LM, rep, 1.0 + 0.1 * standard_normal(rng)));
      r.push_back(rec(DesignId::I_opt, ModelId::GP, rep, 1.0 + 0.1 * standard_normal(rng)));
      r.push_back(rec(DesignId::BBD, ModelId::LM, rep, 2.0 + 0.1 * standard_normal(rng)));
      r.push_back(rec(DesignId::BBD, ModelId::GP, rep, 2.0 + 0.1 * standard_normal(rng)));
      r.push_back(rec(DesignId::I_opt_50repl, ModelId::LM, rep, std::nullopt));
      r.push_back(rec(DesignId::I_opt_50repl, ModelId::GP, rep, 1.5 + 0.1 * standard_normal(rng)));
    }
    RankingOptions o;
    o.n_perm = 1000;
    const auto s = rank_designs_stage1(r, FunctionId::Piston, NoiseSpec::none(),
                                       {DesignId::BBD, DesignId::I_opt, DesignId::I_opt_50repl}, models, o);
    CHECK(s.ranks.ranks == std::vector<int>{3, 1, 2});
    CHECK(s.p.labels == std::vector<std::string>{"BBD", "I_opt", "I_opt_50repl"});
  }
  SUBCASE("cloned design is not separated") {
    std::vector<RmseRecord> r;
    for (int rep = 0; rep < 10; ++rep)
      for (auto m : models) {
        const double v = 1.0 + 0.1 * standard_normal(rng);
        r.push_back(rec(DesignId::D_opt, m, rep, v));
        r.push_back(rec(DesignId::FFD, m, rep, v));
      }
    const auto s = rank_designs_stage1(r, FunctionId::Piston, NoiseSpec::none(), {DesignId::D_opt, DesignId::FFD},
                                       models, RankingOptions{});
    CHECK(s.ranks.ranks == std::vector<int>{1, 1});
  }
  SUBCASE("paired model ranking: accurate model beats a constant predictor") {
    std::vector<RmseRecord> r;
    const std::vector<DesignId> designs{DesignId::BBD, DesignId::FFD, DesignId::D_opt};
    for (int rep = 0; rep < 5; ++rep)
      for (auto d : designs) {
        const double shared = 0.05 * standard_normal(rng);
        r.push_back(rec(d, ModelId::GP, rep, 0.05 + std::abs(shared)));
        r.push_back(rec(d, ModelId::LM, rep, 1.0 + shared));
        r.push_back(rec(d, ModelId::RF, rep, 1.0 + shared));
      }
    RankingOptions o;
    const auto s = rank_models_stage1(r, FunctionId::Piston, NoiseSpec::none(), designs,
                                      {ModelId::LM, ModelId::GP, ModelId::RF}, o);
    CHECK(s.ranks.ranks[1] == 1);
    CHECK(s.ranks.ranks[0] > 1);
    CHECK(s.ranks.ranks[0] == s.ranks.ranks[2]);
    CHECK(o.alpha / 2 == 0.025);
  }
  SUBCASE("insufficient data") {
    std::vector<RmseRecord> r{rec(DesignId::BBD, ModelId::GP, 0, 1.0), rec(DesignId::FFD, ModelId::GP, 0, 1.0)};
    CHECK_THROWS_AS(rank_designs_stage1(r, FunctionId::Piston, NoiseSpec::none(), {DesignId::BBD, DesignId::FFD},
                                        {ModelId::GP}, RankingOptions{}),
                    InsufficientData);
  }
}

TEST_CASE("stage 2") {
  Eigen::MatrixXd ranks(7, 3);
  ranks.col(0).setConstant(1);
  ranks.col(1).setConstant(2);
  ranks.col(2).setConstant(12);
  const auto r = rank_stage2(ranks, {"a", "b", "c"}, RankingOptions{});
  CHECK(r.ranks[0] == 1);
  CHECK(r.ranks[2] == 3);
  Eigen::MatrixXd same = Eigen::MatrixXd::Constant(7, 4, 2.0);
  CHECK(rank_stage2(same, {"a", "b", "c", "d"}, RankingOptions{}).ranks == std::vector<int>{1, 1, 1, 1});
  CHECK_THROWS_AS(rank_stage2(Eigen::MatrixXd::Ones(1, 3), {"a", "b", "c"}, RankingOptions{}), InsufficientData);
}
