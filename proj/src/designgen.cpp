#include "doebench/designgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doebench/errors.hpp"
#include "doebench/funcs.hpp"
#include "doebench/rng.hpp"
#include "doebench/sampling.hpp"

namespace doebench {

std::string_view to_string(DesignId id) {
  switch (id) {
    case DesignId::CCD: return "CCD";
    case DesignId::BBD: return "BBD";
    case DesignId::FFD: return "FFD";
    case DesignId::D_opt: return "D_opt";
    case DesignId::I_opt: return "I_opt";
    case DesignId::LHD_rand: return "LHD_rand";
    case DesignId::MAXPRO: return "MAXPRO";
    case DesignId::MAXPRO_dis: return "MAXPRO_dis";
    case DesignId::D_opt_50repl: return "D_opt_50repl";
    case DesignId::I_opt_50repl: return "I_opt_50repl";
    case DesignId::MAXPRO_dis_50repl: return "MAXPRO_dis_50repl";
    case DesignId::MAXPRO_dis_25repl: return "MAXPRO_dis_25repl";
  }
  return "?";
}

std::optional<DesignId> parse_design(std::string_view name) {
  for (auto id : kAllDesigns)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

std::vector<double> six_levels() { return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}; }

// ---------------------------------------------------------------------------
// Model matrix and criteria

Eigen::RowVectorXd quadratic_expansion_row(const Eigen::Ref<const Eigen::RowVectorXd>& c) {
  const auto d = static_cast<int>(c.size());
  Eigen::RowVectorXd f(quadratic_terms(d));
  int col = 0;
  f(col++) = 1.0;
  for (int i = 0; i < d; ++i) f(col++) = c(i);
  for (int i = 0; i < d; ++i) f(col++) = c(i) * c(i);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) f(col++) = c(i) * c(j);
  return f;
}

Eigen::MatrixXd quadratic_expansion(const Eigen::MatrixXd& coded) {
  const auto d = static_cast<int>(coded.cols());
  Eigen::MatrixXd m(coded.rows(), quadratic_terms(d));
  for (Eigen::Index r = 0; r < coded.rows(); ++r) m.row(r) = quadratic_expansion_row(coded.row(r));
  return m;
}

Eigen::MatrixXd model_matrix(const Eigen::MatrixXd& points01) {
  return quadratic_expansion((2.0 * points01.array() - 1.0).matrix());
}

Eigen::MatrixXd model_matrix(const DesignMatrix& design) { return model_matrix(design.points); }

std::vector<std::string> quadratic_term_names(int d) {
  std::vector<std::string> names{"1"};
  for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i + 1) + "^2");
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      names.push_back("x" + std::to_string(i + 1) + "*x" + std::to_string(j + 1));
  return names;
}

Eigen::MatrixXd quadratic_moment_matrix(int d) {
  // Exponent vector of each basis term.
  std::vector<std::vector<int>> expo;
  auto unit = [d](int i, int p) {
    std::vector<int> e(static_cast<std::size_t>(d), 0);
    e[static_cast<std::size_t>(i)] = p;
    return e;
  };
  expo.emplace_back(static_cast<std::size_t>(d), 0);
  for (int i = 0; i < d; ++i) expo.push_back(unit(i, 1));
  for (int i = 0; i < d; ++i) expo.push_back(unit(i, 2));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      auto e = unit(i, 1);
      e[static_cast<std::size_t>(j)] = 1;
      expo.push_back(e);
    }
  const auto p = static_cast<Eigen::Index>(expo.size());
  Eigen::MatrixXd mom(p, p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) {
      double v = 1.0;
      for (int k = 0; k < d; ++k) {
        const int e = expo[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] +
                      expo[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];
        v *= (e % 2 == 1) ? 0.0 : 1.0 / (e + 1);  // mean of x^e on [-1,1]
      }
      mom(a, b) = v;
    }
  return mom;
}

namespace {

Eigen::MatrixXd information(const Eigen::MatrixXd& model, double ridge) {
  Eigen::MatrixXd info = model.transpose() * model;
  info.diagonal().array() += ridge;
  return info;
}

// Relative pivot threshold for declaring the information matrix singular.
constexpr double kSingularTol = 1e-10;

bool is_singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt, const Eigen::MatrixXd& info) {
  if (ldlt.info() != Eigen::Success) return true;
  const double scale = info.diagonal().cwiseAbs().maxCoeff();
  return ldlt.vectorD().minCoeff() <= kSingularTol * std::max(scale, 1e-300);
}

double log_det_info(const Eigen::MatrixXd& model, double ridge) {
  const Eigen::MatrixXd info = information(model, ridge);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (is_singular(ldlt, info)) return -std::numeric_limits<double>::infinity();
  return ldlt.vectorD().array().log().sum();
}

}  // namespace

double d_criterion(const Eigen::MatrixXd& model, double ridge) {
  if (model.rows() + (ridge > 0 ? model.cols() : 0) < model.cols()) return 0.0;
  return std::exp(log_det_info(model, ridge));
}

double i_criterion(const Eigen::MatrixXd& model, const Eigen::MatrixXd& moments, double ridge) {
  const Eigen::MatrixXd info = information(model, ridge);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (is_singular(ldlt, info)) throw SingularInformation("i_criterion: information matrix is singular");
  return ldlt.solve(moments).trace();
}

namespace {

double pair_term(const double* a, const double* b, Eigen::Index stride_a, Eigen::Index stride_b,
                 int d, double delta) {
  double prod = 1.0;
  for (int k = 0; k < d; ++k) {
    const double diff = a[k * stride_a] - b[k * stride_b];
    prod *= diff * diff + delta;
  }
  return 1.0 / prod;
}

// Sum over unordered pairs of 1/prod_k((x_ik - x_jk)^2 + delta).
double maxpro_sum(const Eigen::MatrixXd& x, double delta) {
  const Eigen::Index n = x.rows();
  const int d = static_cast<int>(x.cols());
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      s += pair_term(&x(i, 0), &x(j, 0), n, n, d, delta);
  return s;
}

double maxpro_from_sum(double s, Eigen::Index n, Eigen::Index d) {
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return std::pow(s / pairs, 1.0 / static_cast<double>(d));
}

// Contribution of row i (with coordinates taken from `row`) against all other rows except skip.
double maxpro_row_sum(const Eigen::MatrixXd& x, Eigen::Index i, const double* row, Eigen::Index skip,
                      double delta) {
  const Eigen::Index n = x.rows();
  const int d = static_cast<int>(x.cols());
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i || j == skip) continue;
    s += pair_term(row, &x(j, 0), 1, n, d, delta);
  }
  return s;
}

}  // namespace

double maxpro_criterion(const Eigen::MatrixXd& points, double delta) {
  if (points.rows() < 2) throw Error("maxpro_criterion: need at least 2 runs");
  return maxpro_from_sum(maxpro_sum(points, delta), points.rows(), points.cols());
}

// ---------------------------------------------------------------------------
// Coordinate exchange

namespace {

constexpr double kImproveTol = 1e-9;
constexpr int kMaxSweeps = 200;

// Maintains A = (F^T F + ridge I)^{-1} for the quadratic model of a coded design.
class InfoState {
 public:
  InfoState(const Eigen::MatrixXd& coded, double ridge, const Eigen::MatrixXd* moments)
      : ridge_(ridge), moments_(moments), F_(quadratic_expansion(coded)) {}

  bool refresh() {
    const Eigen::MatrixXd info = information(F_, ridge_);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (is_singular(ldlt, info)) return false;
    A_ = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    log_det_ = ldlt.vectorD().array().log().sum();
    if (moments_) i_value_ = (A_ * *moments_).trace();
    return true;
  }

  void set_row(Eigen::Index i, const Eigen::RowVectorXd& f) { F_.row(i) = f; }
  const Eigen::MatrixXd& F() const { return F_; }
  const Eigen::MatrixXd& A() const { return A_; }
  double log_det() const { return log_det_; }
  double i_value() const { return i_value_; }

  // Determinant ratio det(M')/det(M) for swapping row f_old -> f_new.
  double d_ratio(const Eigen::VectorXd& a_old, double d_old, const Eigen::VectorXd& f_new) const {
    const double d_new = f_new.dot(A_ * f_new);
    const double d_no = a_old.dot(f_new);
    return (1.0 + d_new) * (1.0 - d_old) + d_no * d_no;
  }

  // trace(M'^{-1} Mom) after swapping f_old -> f_new; +inf if singular.
  double i_after(const Eigen::VectorXd& f_old, const Eigen::VectorXd& a_old, double d_old,
                 const Eigen::VectorXd& f_new) const {
    const Eigen::VectorXd a_new = A_ * f_new;
    const double d_new = f_new.dot(a_new);
    const double d_no = a_old.dot(f_new);
    const double denom_add = 1.0 + d_new;
    // B = A - a_new a_new^T / (1 + d_new)
    const double trace_b = i_value_ - a_new.dot(*moments_ * a_new) / denom_add;
    const Eigen::VectorXd g = a_old - a_new * (d_no / denom_add);  // B f_old
    const double q = d_old - d_no * d_no / denom_add;              // f_old^T B f_old
    const double denom_rm = 1.0 - q;
    if (denom_rm <= 1e-12) return std::numeric_limits<double>::infinity();
    (void)f_old;
    return trace_b + g.dot(*moments_ * g) / denom_rm;
  }

 private:
  double ridge_;
  const Eigen::MatrixXd* moments_;
  Eigen::MatrixXd F_;
  Eigen::MatrixXd A_;
  double log_det_ = 0.0;
  double i_value_ = 0.0;
};

Eigen::MatrixXd random_level_design(const std::vector<std::vector<double>>& levels, int n, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(levels.size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& lv = levels[static_cast<std::size_t>(k)];
      x(i, k) = lv[uniform_index(rng, lv.size())];
    }
  return x;
}

double exact_criterion(const Eigen::MatrixXd& x01, Criterion c, double ridge, double delta,
                       const Eigen::MatrixXd& moments) {
  switch (c) {
    case Criterion::D: return d_criterion(model_matrix(x01), ridge);
    case Criterion::I: return i_criterion(model_matrix(x01), moments, ridge);
    case Criterion::MaxPro: return maxpro_criterion(x01, delta);
  }
  return 0.0;
}

struct StartResult {
  Eigen::MatrixXd points;
  double score;  // larger is better: log det for D, -value for I and MaxPro
  std::vector<double> trajectory;
};

StartResult exchange_information(const ExchangeOptions& o, Rng& rng, const Eigen::MatrixXd& moments) {
  const bool is_d = o.criterion == Criterion::D;
  Eigen::MatrixXd x;
  std::optional<InfoState> state;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) throw SingularInformation("coordinate_exchange: no nonsingular random start");
    x = random_level_design(o.levels, o.n_runs, rng);
    state.emplace((2.0 * x.array() - 1.0).matrix(), o.ridge, is_d ? nullptr : &moments);
    if (state->refresh()) break;
  }
  StartResult res;
  res.trajectory.push_back(exact_criterion(x, o.criterion, o.ridge, 0.0, moments));
  const auto d = static_cast<Eigen::Index>(o.levels.size());
  Eigen::RowVectorXd coded(d);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const Eigen::VectorXd f_old = state->F().row(i).transpose();
        const Eigen::VectorXd a_old = state->A() * f_old;
        const double d_old = f_old.dot(a_old);
        const double current = x(i, k);
        double best_gain = 0.0;
        double best_level = current;
        Eigen::RowVectorXd best_f;
        for (double level : o.levels[static_cast<std::size_t>(k)]) {
          if (level == current) continue;
          coded = (2.0 * x.row(i).array() - 1.0).matrix();
          coded(k) = 2.0 * level - 1.0;
          const Eigen::RowVectorXd f_new = quadratic_expansion_row(coded);
          double gain;
          if (is_d) {
            const double ratio = state->d_ratio(a_old, d_old, f_new.transpose());
            gain = ratio > 0.0 ? std::log(ratio) : -std::numeric_limits<double>::infinity();
          } else {
            const double after = state->i_after(f_old, a_old, d_old, f_new.transpose());
            gain = (state->i_value() - after) / state->i_value();
          }
          if (gain > best_gain + kImproveTol) {
            best_gain = gain;
            best_level = level;
            best_f = f_new;
          }
        }
        if (best_level != current) {
          const Eigen::RowVectorXd keep = state->F().row(i);
          state->set_row(i, best_f);
          if (state->refresh()) {
            x(i, k) = best_level;
            changed = true;
          } else {
            state->set_row(i, keep);
            state->refresh();
          }
        }
      }
    }
    if (!changed) break;
    res.trajectory.push_back(exact_criterion(x, o.criterion, o.ridge, 0.0, moments));
  }
  res.points = x;
  res.score = is_d ? state->log_det() : -state->i_value();
  return res;
}

StartResult exchange_maxpro(const ExchangeOptions& o, Rng& rng) {
  Eigen::MatrixXd x = random_level_design(o.levels, o.n_runs, rng);
  const double delta = o.maxpro_delta;
  double total = maxpro_sum(x, delta);
  StartResult res;
  res.trajectory.push_back(maxpro_from_sum(total, x.rows(), x.cols()));
  const auto d = x.cols();
  Eigen::RowVectorXd row(d);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        row = x.row(i);
        const double old_contrib = maxpro_row_sum(x, i, row.data(), -1, delta);
        const double current = x(i, k);
        double best_contrib = old_contrib;
        double best_level = current;
        for (double level : o.levels[static_cast<std::size_t>(k)]) {
          if (level == current) continue;
          row(k) = level;
          const double c = maxpro_row_sum(x, i, row.data(), -1, delta);
          if (c < best_contrib * (1.0 - kImproveTol)) {
            best_contrib = c;
            best_level = level;
          }
        }
        if (best_level != current) {
          x(i, k) = best_level;
          total = maxpro_sum(x, delta);
          changed = true;
        }
      }
    }
    if (!changed) break;
    res.trajectory.push_back(maxpro_from_sum(total, x.rows(), x.cols()));
  }
  res.points = x;
  res.score = -total;
  return res;
}

}  // namespace

ExchangeResult coordinate_exchange(const ExchangeOptions& opts) {
  if (opts.n_starts < 1) throw Error("coordinate_exchange: n_starts must be >= 1");
  if (opts.levels.empty()) throw Error("coordinate_exchange: no factors");
  for (const auto& lv : opts.levels)
    if (lv.empty()) throw Error("coordinate_exchange: empty level list");
  const auto d = static_cast<int>(opts.levels.size());
  const Eigen::MatrixXd moments =
      opts.criterion == Criterion::I ? quadratic_moment_matrix(d) : Eigen::MatrixXd();
  ExchangeResult out;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < opts.n_starts; ++s) {
    Rng rng(derive_seed({opts.seed, static_cast<std::uint64_t>(s), hash_string("cx")}));
    StartResult r = opts.criterion == Criterion::MaxPro ? exchange_maxpro(opts, rng)
                                                        : exchange_information(opts, rng, moments);
    out.trajectories.push_back(r.trajectory);
    if (s == 0 || r.score > best_score) {
      best_score = r.score;
      out.points = r.points;
      out.best_start = s;
    }
  }
  out.criterion = exact_criterion(out.points, opts.criterion, opts.ridge, opts.maxpro_delta, moments);
  return out;
}

// ---------------------------------------------------------------------------
// Fedorov row exchange over an explicit candidate set

namespace kernels {

Eigen::VectorXd prediction_variance(const Eigen::MatrixXd& F, const Eigen::MatrixXd& A) {
  const Eigen::Index n = F.rows();
  const Eigen::Index p = F.cols();
  Eigen::VectorXd out(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    double v = 0.0;
    for (Eigen::Index a = 0; a < p; ++a) {
      double t = 0.0;
      for (Eigen::Index b = 0; b < p; ++b) t += A(a, b) * F(j, b);
      v += F(j, a) * t;
    }
    out(j) = v;
  }
  return out;
}

BestSwap best_swap(const Eigen::MatrixXd& F, const Eigen::VectorXd& var_cand,
                   const Eigen::VectorXd& a_old, double var_old) {
  const Eigen::Index n = F.rows();
  const Eigen::Index p = F.cols();
  BestSwap global;
  global.ratio = -std::numeric_limits<double>::infinity();
#pragma omp parallel
  {
    BestSwap local;
    local.ratio = -std::numeric_limits<double>::infinity();
#pragma omp for schedule(static) nowait
    for (Eigen::Index j = 0; j < n; ++j) {
      double cross = 0.0;
      for (Eigen::Index b = 0; b < p; ++b) cross += a_old(b) * F(j, b);
      const double ratio = (1.0 + var_cand(j)) * (1.0 - var_old) + cross * cross;
      if (ratio > local.ratio || (ratio == local.ratio && j < local.candidate)) {
        local.ratio = ratio;
        local.candidate = j;
      }
    }
#pragma omp critical(doebench_best_swap)
    {
      if (local.candidate >= 0 &&
          (local.ratio > global.ratio ||
           (local.ratio == global.ratio && local.candidate < global.candidate))) {
        global = local;
      }
    }
  }
  return global;
}

}  // namespace kernels

namespace serial {

Eigen::VectorXd prediction_variance(const Eigen::MatrixXd& F, const Eigen::MatrixXd& A) {
  Eigen::VectorXd out(F.rows());
  for (Eigen::Index j = 0; j < F.rows(); ++j) {
    double v = 0.0;
    for (Eigen::Index a = 0; a < F.cols(); ++a) {
      double t = 0.0;
      for (Eigen::Index b = 0; b < F.cols(); ++b) t += A(a, b) * F(j, b);
      v += F(j, a) * t;
    }
    out(j) = v;
  }
  return out;
}

kernels::BestSwap best_swap(const Eigen::MatrixXd& F, const Eigen::VectorXd& var_cand,
                            const Eigen::VectorXd& a_old, double var_old) {
  kernels::BestSwap best;
  best.ratio = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < F.rows(); ++j) {
    double cross = 0.0;
    for (Eigen::Index b = 0; b < F.cols(); ++b) cross += a_old(b) * F(j, b);
    const double ratio = (1.0 + var_cand(j)) * (1.0 - var_old) + cross * cross;
    if (ratio > best.ratio) {
      best.ratio = ratio;
      best.candidate = j;
    }
  }
  return best;
}

}  // namespace serial

FedorovResult fedorov_exchange(const Eigen::MatrixXd& candidates01, int n_runs, int n_starts,
                               std::uint64_t seed) {
  const Eigen::MatrixXd F = model_matrix(candidates01);
  const Eigen::Index p = F.cols();
  FedorovResult best;
  best.log_det = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_starts; ++s) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(s), hash_string("fedorov")}));
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n_runs));
    Eigen::MatrixXd A;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) throw SingularInformation("fedorov_exchange: no nonsingular start");
      for (auto& r : rows) r = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(F.rows())));
      Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
      for (auto r : rows) info.noalias() += F.row(r).transpose() * F.row(r);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
      if (is_singular(ldlt, info)) continue;
      A = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
      break;
    }
    int pass = 0;
    for (; pass < 100; ++pass) {
      Eigen::VectorXd var = kernels::prediction_variance(F, A);
      bool changed = false;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Eigen::VectorXd f_old = F.row(rows[i]).transpose();
        const Eigen::VectorXd a_old = A * f_old;
        const double var_old = f_old.dot(a_old);
        const auto swap = kernels::best_swap(F, var, a_old, var_old);
        if (swap.candidate < 0 || swap.ratio <= 1.0 + 1e-8) continue;
        // Rank-one downdate (remove f_old) then update (add f_new) of A and of var.
        const Eigen::VectorXd f_new = F.row(swap.candidate).transpose();
        const double rm = 1.0 - var_old;
        Eigen::MatrixXd B = A + a_old * a_old.transpose() / rm;
        const Eigen::VectorXd b_new = B * f_new;
        const double add = 1.0 + f_new.dot(b_new);
        A = B - b_new * b_new.transpose() / add;
        const Eigen::VectorXd proj_old = F * a_old;
        const Eigen::VectorXd proj_new = F * b_new;
        var = var.array() + proj_old.array().square() / rm - proj_new.array().square() / add;
        rows[i] = swap.candidate;
        changed = true;
      }
      // Re-factorize to remove drift from the rank-one updates.
      Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
      for (auto r : rows) info.noalias() += F.row(r).transpose() * F.row(r);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
      A = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
      if (!changed) break;
    }
    Eigen::MatrixXd model(n_runs, p);
    for (int i = 0; i < n_runs; ++i) model.row(i) = F.row(rows[static_cast<std::size_t>(i)]);
    const double ld = log_det_info(model, 0.0);
    if (ld > best.log_det) {
      best.log_det = ld;
      best.rows = rows;
      best.passes = pass + 1;
    }
  }
  return best;
}

Eigen::MatrixXd six_level_full_factorial() {
  const auto lv = six_levels();
  const int n = 46656;
  Eigen::MatrixXd x(n, kDim);
  for (int r = 0; r < n; ++r) {
    int code = r;
    for (int k = kDim - 1; k >= 0; --k) {
      x(r, k) = lv[static_cast<std::size_t>(code % kLevels)];
      code /= kLevels;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// MaxPro with continuous levels

Eigen::MatrixXd maxpro_continuous(int n_runs, int d, std::uint64_t seed) {
  Rng rng(derive_seed({seed, hash_string("maxpro")}));
  Eigen::MatrixXd x = midpoint_lhd(n_runs, d, rng);
  const Eigen::Index n = x.rows();
  double total = maxpro_sum(x, 0.0);

  // Within-column swaps keep the Latin property; accept improving swaps only.
  Eigen::RowVectorXd ri(d), rj(d);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool changed = false;
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
          ri = x.row(i);
          rj = x.row(j);
          const double before = maxpro_row_sum(x, i, ri.data(), j, 0.0) +
                                maxpro_row_sum(x, j, rj.data(), i, 0.0) +
                                pair_term(ri.data(), rj.data(), 1, 1, static_cast<int>(d), 0.0);
          std::swap(ri(k), rj(k));
          const double after = maxpro_row_sum(x, i, ri.data(), j, 0.0) +
                               maxpro_row_sum(x, j, rj.data(), i, 0.0) +
                               pair_term(ri.data(), rj.data(), 1, 1, static_cast<int>(d), 0.0);
          if (after < before * (1.0 - kImproveTol)) {
            std::swap(x(i, k), x(j, k));
            total += after - before;
            changed = true;
          }
        }
    if (!changed) break;
  }
  total = maxpro_sum(x, 0.0);

  // Annealed refinement: move one coordinate inside its stratum.
  Eigen::MatrixXd best = x;
  double best_total = total;
  double temperature = 0.01;
  Eigen::RowVectorXd row(d);
  for (int outer = 0; outer < 200; ++outer) {
    for (Eigen::Index step = 0; step < n * d; ++step) {
      const auto i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n)));
      const auto k = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(d)));
      row = x.row(i);
      const double stratum = std::floor(x(i, k) * static_cast<double>(n));
      const double old_c = maxpro_row_sum(x, i, row.data(), -1, 0.0);
      row(k) = (stratum + uniform01(rng)) / static_cast<double>(n);
      const double new_c = maxpro_row_sum(x, i, row.data(), -1, 0.0);
      const double new_total = total - old_c + new_c;
      const double dlog = std::log(new_total) - std::log(total);
      if (dlog <= 0.0 || uniform01(rng) < std::exp(-dlog / temperature)) {
        x(i, k) = row(k);
        total = new_total;
        if (total < best_total) {
          best_total = maxpro_sum(x, 0.0);
          total = best_total;
          best = x;
        }
      }
    }
    temperature *= 0.95;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Classical designs

Eigen::MatrixXd central_composite(int n_center) {
  // 2^(6-1) fraction with generator x6 = x1 x2 x3 x4 x5 (resolution VI).
  const int nf = 32;
  const double alpha = std::pow(static_cast<double>(nf), 0.25);
  const int n = nf + 2 * kDim + n_center;
  Eigen::MatrixXd coded = Eigen::MatrixXd::Zero(n, kDim);
  for (int r = 0; r < nf; ++r) {
    double prod = 1.0;
    for (int k = 0; k < 5; ++k) {
      const double v = ((r >> k) & 1) ? 1.0 : -1.0;
      coded(r, k) = v;
      prod *= v;
    }
    coded(r, 5) = prod;
  }
  for (int k = 0; k < kDim; ++k) {
    coded(nf + 2 * k, k) = -alpha;
    coded(nf + 2 * k + 1, k) = alpha;
  }
  // Axial extremes span [0,1].
  return ((coded.array() / alpha + 1.0) * 0.5).matrix();
}

Eigen::MatrixXd box_behnken(int n_center) {
  // Balanced incomplete block arrangement of Box & Behnken's six-factor design.
  static constexpr int kBlocks[6][3] = {{0, 1, 3}, {1, 2, 4}, {2, 3, 5}, {0, 3, 4}, {1, 4, 5}, {0, 2, 5}};
  const int n = 6 * 8 + n_center;
  Eigen::MatrixXd coded = Eigen::MatrixXd::Zero(n, kDim);
  int r = 0;
  for (const auto& block : kBlocks)
    for (int s = 0; s < 8; ++s, ++r)
      for (int t = 0; t < 3; ++t) coded(r, block[t]) = ((s >> t) & 1) ? 1.0 : -1.0;
  return ((coded.array() + 1.0) * 0.5).matrix();
}

std::vector<int> distinct_levels(const Eigen::MatrixXd& points, double tol) {
  std::vector<int> out;
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    std::vector<double> col(points.col(k).data(), points.col(k).data() + points.rows());
    std::sort(col.begin(), col.end());
    int count = col.empty() ? 0 : 1;
    for (std::size_t i = 1; i < col.size(); ++i)
      if (col[i] - col[i - 1] > tol) ++count;
    out.push_back(count);
  }
  return out;
}

int distinct_rows(const Eigen::MatrixXd& points, double tol) {
  std::vector<Eigen::Index> uniq;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    bool seen = false;
    for (auto j : uniq)
      if ((points.row(i) - points.row(j)).cwiseAbs().maxCoeff() <= tol) {
        seen = true;
        break;
      }
    if (!seen) uniq.push_back(i);
  }
  return static_cast<int>(uniq.size());
}

// ---------------------------------------------------------------------------
// Replication and the study designs

DesignMatrix replicate(const DesignMatrix& base, double fraction, std::uint64_t seed) {
  const Eigen::Index nb = base.points.rows();
  Eigen::Index n_dup;
  if (std::abs(fraction - 0.5) < 1e-12) {
    n_dup = nb;
  } else if (std::abs(fraction - 0.25) < 1e-12) {
    if (nb % 3 != 0) throw BadFraction("replicate: 25% replication needs a base size divisible by 3");
    n_dup = nb / 3;
  } else {
    throw BadFraction("replicate: fraction must be 0.25 or 0.5");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(nb));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (n_dup < nb) {
    Rng rng(derive_seed({seed, hash_string("replicate")}));
    shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(n_dup));
    std::sort(idx.begin(), idx.end());
  }
  DesignMatrix out = base;
  out.points.resize(nb + n_dup, base.points.cols());
  out.points.topRows(nb) = base.points;
  for (Eigen::Index r = 0; r < n_dup; ++r) out.points.row(nb + r) = base.points.row(idx[static_cast<std::size_t>(r)]);
  out.n_runs = static_cast<int>(out.points.rows());
  out.replication_fraction = fraction;
  return out;
}

namespace {

ExchangeOptions six_level_options(int n_runs, Criterion c, int n_starts, std::uint64_t seed,
                                  double ridge) {
  ExchangeOptions o;
  o.levels.assign(kDim, six_levels());
  o.n_runs = n_runs;
  o.criterion = c;
  o.n_starts = n_starts;
  o.seed = seed;
  o.ridge = ridge;
  return o;
}

constexpr int kOptimalStarts = 10;

DesignMatrix finish(DesignId id, Eigen::MatrixXd points, std::uint64_t seed, double repl = 0.0) {
  DesignMatrix d;
  d.points = std::move(points);
  d.design_id = id;
  d.n_runs = static_cast<int>(d.points.rows());
  const auto lv = distinct_levels(d.points);
  d.levels_per_factor = *std::max_element(lv.begin(), lv.end());
  d.replication_fraction = repl;
  d.seed = seed;
  return d;
}

}  // namespace

DesignMatrix generate(DesignId id, std::uint64_t seed) {
  const std::uint64_t s = derive_seed({seed, hash_string(to_string(id))});
  switch (id) {
    case DesignId::CCD: return finish(id, central_composite(8), seed);
    case DesignId::BBD: return finish(id, box_behnken(4), seed);
    case DesignId::FFD: {
      const Eigen::MatrixXd cand = six_level_full_factorial();
      const auto res = fedorov_exchange(cand, kRuns, 2, s);
      Eigen::MatrixXd pts(kRuns, kDim);
      for (int i = 0; i < kRuns; ++i) pts.row(i) = cand.row(res.rows[static_cast<std::size_t>(i)]);
      return finish(id, pts, seed);
    }
    case DesignId::D_opt:
      return finish(id, coordinate_exchange(six_level_options(kRuns, Criterion::D, kOptimalStarts, s, 0.0)).points, seed);
    case DesignId::I_opt:
      return finish(id, coordinate_exchange(six_level_options(kRuns, Criterion::I, kOptimalStarts, s, 0.0)).points, seed);
    case DesignId::LHD_rand: {
      Rng rng(s);
      return finish(id, random_lhd(kRuns, kDim, rng), seed);
    }
    case DesignId::MAXPRO: return finish(id, maxpro_continuous(kRuns, kDim, s), seed);
    case DesignId::MAXPRO_dis:
      return finish(id, coordinate_exchange(six_level_options(kRuns, Criterion::MaxPro, kOptimalStarts, s, 0.0)).points, seed);
    case DesignId::D_opt_50repl:
    case DesignId::I_opt_50repl: {
      const auto c = id == DesignId::D_opt_50repl ? Criterion::D : Criterion::I;
      auto base = finish(id, coordinate_exchange(six_level_options(kRuns / 2, c, kOptimalStarts, s, kSupersaturatedRidge)).points, seed);
      return replicate(base, 0.5, s);
    }
    case DesignId::MAXPRO_dis_50repl: {
      auto base = finish(id, coordinate_exchange(six_level_options(kRuns / 2, Criterion::MaxPro, kOptimalStarts, s, 0.0)).points, seed);
      return replicate(base, 0.5, s);
    }
    case DesignId::MAXPRO_dis_25repl: {
      auto base = finish(id, coordinate_exchange(six_level_options(39, Criterion::MaxPro, kOptimalStarts, s, 0.0)).points, seed);
      return replicate(base, 0.25, s);
    }
  }
  throw Error("generate: unknown design id");
}

// ---------------------------------------------------------------------------
// IO

namespace {
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_design_csv(const std::filesystem::path& path, const DesignMatrix& design) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (Eigen::Index k = 0; k < design.points.cols(); ++k) out << (k ? "," : "") << "x" << (k + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < design.points.rows(); ++i) {
    for (Eigen::Index k = 0; k < design.points.cols(); ++k) out << (k ? "," : "") << fmt_double(design.points(i, k));
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_design_metadata(const std::filesystem::path& path, const DesignMatrix& design) {
  nlohmann::json j;
  j["design_id"] = std::string(to_string(design.design_id));
  j["n_runs"] = design.n_runs;
  j["levels_per_factor"] = design.levels_per_factor;
  j["replication_fraction"] = design.replication_fraction;
  j["seed"] = design.seed;
  j["distinct_rows"] = distinct_rows(design.points);
  j["levels_by_factor"] = distinct_levels(design.points);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DesignMatrix read_design(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  std::ifstream meta_in(json_path);
  if (!meta_in) throw Error("cannot read " + json_path.string());
  const auto j = nlohmann::json::parse(meta_in);
  DesignMatrix d;
  const auto id = parse_design(j.at("design_id").get<std::string>());
  if (!id) throw Error("unknown design id in " + json_path.string());
  d.design_id = *id;
  d.n_runs = j.at("n_runs").get<int>();
  d.levels_per_factor = j.at("levels_per_factor").get<int>();
  d.replication_fraction = j.at("replication_fraction").get<double>();
  d.seed = j.at("seed").get<std::uint64_t>();

  std::ifstream in(csv_path);
  if (!in) throw Error("cannot read " + csv_path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  d.points.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) d.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return d;
}

}  // namespace doebench
