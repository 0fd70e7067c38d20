#include <doctest.h>

#include <cmath>

#include "doebench/designgen.hpp"
#include "doebench/errors.hpp"
#include "doebench/funcs.hpp"
#include "doebench/gp.hpp"
#include "doebench/rng.hpp"
#include "doebench/surrogates.hpp"

using namespace doebench;

namespace {

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd xt;
  Eigen::VectorXd yt;
};

const Data& borehole_data() {
  static const Data d = [] {
    const auto c = estimate_standardization(FunctionId::Borehole, 4, 5000, 1);
    Data out;
    out.x = generate(DesignId::I_opt, 3).points;
    out.y = evaluate_rows(FunctionId::Borehole, out.x);
    for (double& v : out.y) v = standardize(v, c);
    const TestSet t = make_test_set(FunctionId::Borehole, 500, 9, c);
    out.xt = t.inputs;
    out.yt = t.responses;
    return out;
  }();
  return d;
}

FitOptions quick() {
  FitOptions o;
  o.rf_trees = 300;
  o.rf_cv_trees = 100;
  o.ann_max_epochs = 200;
  return o;
}

}  // namespace

TEST_CASE("model registry") {
  CHECK(kAllModels.size() == 6);
  for (auto m : kAllModels) CHECK(parse_model(to_string(m)) == m);
  CHECK_FALSE(parse_model("aml").has_value());
}

TEST_CASE("rmse") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 2, 3;
  b << 1, 2, 3;
  CHECK(rmse(a, b) == 0.0);
  CHECK(rmse(a.array() + 1.0, b) == doctest::Approx(1.0));
  Rng rng(1);
  Eigen::VectorXd p(100), t(100);
  for (int i = 0; i < 100; ++i) {
    p(i) = standard_normal(rng);
    t(i) = standard_normal(rng);
  }
  double ss = 0;
  for (int i = 0; i < 100; ++i) ss += (p(i) - t(i)) * (p(i) - t(i));
  CHECK(std::abs(rmse(p, t) - std::sqrt(ss / 100)) <= 1e-12);
  CHECK_THROWS_AS(rmse(a, b.head(2)), LengthMismatch);
  CHECK_THROWS_AS(rmse(Eigen::VectorXd(), Eigen::VectorXd()), LengthMismatch);
}

TEST_CASE("every family fits, predicts finitely and is deterministic") {
  const Data& d = borehole_data();
  for (auto id : kAllModels) {
    INFO(to_string(id));
    const FittedModel m = fit(id, d.x, d.y, 17, quick());
    CHECK(m.model_id == id);
    CHECK(m.cv_rmse >= 0.0);
    CHECK(m.train_seed == 17);
    const Eigen::VectorXd p = m.predict(d.xt);
    CHECK(p.allFinite());
    CHECK(rmse(p, d.yt) < 1.0);
    CHECK(fit(id, d.x, d.y, 17, quick()).predict(d.xt) == p);
    CHECK_FALSE(format_hyperparameters(m.hyperparameters).empty());
  }
}

TEST_CASE("GP at default budget interpolates and uses the nugget rule") {
  const Data& d = borehole_data();
  const FittedModel m = fit(ModelId::GP, d.x, d.y, 3);
  CHECK((m.predict(d.x) - d.y).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(rmse(m.predict(d.xt), d.yt) < 0.1);
  bool found = false;
  for (const auto& [k, v] : m.hyperparameters)
    if (k == "nugget") {
      found = true;
      CHECK(std::stod(v) == doctest::Approx(default_nugget(d.y)).epsilon(1e-5));
    }
  CHECK(found);
}

TEST_CASE("LM refuses replicated designs with too few distinct rows") {
  const Data& d = borehole_data();
  const auto repl = generate(DesignId::I_opt_50repl, 3);
  CHECK_THROWS_AS(fit(ModelId::LM, repl.points, d.y, 1), RankDeficient);
}

TEST_CASE("RF uses 2000 trees by default") { CHECK(FitOptions{}.rf_trees == 2000); }

TEST_CASE("input validation") {
  const Data& d = borehole_data();
  CHECK_THROWS_AS(fit(ModelId::GP, d.x, d.y.head(10), 1), LengthMismatch);
  CHECK_THROWS_AS(fit(ModelId::SVM, d.x.topRows(1), d.y.head(1), 1), InsufficientData);
}
