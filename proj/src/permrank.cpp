#include "doebench/permrank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "doebench/errors.hpp"
#include "doebench/rng.hpp"

namespace doebench {

namespace {

constexpr double kRelTieTolerance = 1e-9;

void check_inputs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, PermScheme scheme) {
  if (a.cols() != b.cols()) throw LengthMismatch("permutation test: groups have different variable counts");
  if (a.rows() < 2 || b.rows() < 2) throw InsufficientData("permutation test: need at least 2 observations per group");
  if (scheme != PermScheme::Independent && a.rows() != b.rows())
    throw LengthMismatch("paired permutation test: groups differ in length");
}

std::uint64_t perm_seed(std::uint64_t seed, int k) {
  return derive_seed({seed, hash_string("perm"), static_cast<std::uint64_t>(k)});
}

// Statistics of permutation k (k = 0 is the identity) into row `out`.
void one_permutation(const Eigen::MatrixXd& pooled_or_diff, Eigen::Index na, PermScheme scheme, int k,
                     std::uint64_t seed, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out,
                     std::vector<Eigen::Index>& idx) {
  const Eigen::Index n = pooled_or_diff.rows();
  const Eigen::Index p = pooled_or_diff.cols();
  if (scheme == PermScheme::Independent) {
    const Eigen::Index nb = n - na;
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    if (k > 0) {
      Rng rng(perm_seed(seed, k));
      shuffle(idx.begin(), idx.end(), rng);
    }
    for (Eigen::Index v = 0; v < p; ++v) {
      double first = 0.0, rest = 0.0;
      for (Eigen::Index r = 0; r < na; ++r) first += pooled_or_diff(idx[static_cast<std::size_t>(r)], v);
      for (Eigen::Index r = na; r < n; ++r) rest += pooled_or_diff(idx[static_cast<std::size_t>(r)], v);
      out(v) = first / static_cast<double>(na) - rest / static_cast<double>(nb);
    }
    return;
  }
  if (k == 0) {
    out = pooled_or_diff.colwise().mean();
    return;
  }
  Rng rng(perm_seed(seed, k));
  out.setZero();
  if (scheme == PermScheme::PairedJoint) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double s = (rng() >> 63) ? -1.0 : 1.0;
      out += s * pooled_or_diff.row(r);
    }
  } else {
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index v = 0; v < p; ++v) out(v) += ((rng() >> 63) ? -1.0 : 1.0) * pooled_or_diff(r, v);
  }
  out /= static_cast<double>(n);
}

Eigen::MatrixXd prepare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, PermScheme scheme) {
  if (scheme == PermScheme::Independent) {
    Eigen::MatrixXd z(a.rows() + b.rows(), a.cols());
    z << a, b;
    return z;
  }
  return a - b;
}

Eigen::VectorXd tolerances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, PermScheme scheme) {
  const Eigen::MatrixXd z = prepare(a, b, scheme);
  Eigen::VectorXd tol(z.cols());
  for (Eigen::Index v = 0; v < z.cols(); ++v) tol(v) = kRelTieTolerance * z.col(v).cwiseAbs().maxCoeff();
  return tol;
}

}  // namespace

namespace kernels {
Eigen::MatrixXd permutation_statistics(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, PermScheme scheme,
                                       int n_perm, std::uint64_t seed) {
  check_inputs(a, b, scheme);
  const Eigen::MatrixXd z = prepare(a, b, scheme);
  Eigen::MatrixXd stats(n_perm + 1, a.cols());
#pragma omp parallel
  {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(z.rows()));
#pragma omp for schedule(static)
    for (int k = 0; k <= n_perm; ++k) one_permutation(z, a.rows(), scheme, k, seed, stats.row(k), idx);
  }
  return stats;
}
}  // namespace kernels

namespace serial {
Eigen::MatrixXd permutation_statistics(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, PermScheme scheme,
                                       int n_perm, std::uint64_t seed) {
  check_inputs(a, b, scheme);
  const Eigen::MatrixXd z = prepare(a, b, scheme);
  Eigen::MatrixXd stats(n_perm + 1, a.cols());
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(z.rows()));
  for (int k = 0; k <= n_perm; ++k) one_permutation(z, a.rows(), scheme, k, seed, stats.row(k), idx);
  return stats;
}
}  // namespace serial

double perm_test(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool paired, int n_perm, std::uint64_t seed) {
  if (n_perm < 1) throw Error("perm_test: need at least one permutation");
  const PermScheme scheme = paired ? PermScheme::PairedJoint : PermScheme::Independent;
  const Eigen::MatrixXd stats = kernels::permutation_statistics(a, b, scheme, n_perm, seed);
  const double tol = tolerances(a, b, scheme)(0);
  const double t0 = stats(0, 0);
  const auto count = (stats.col(0).array() >= t0 - tol).count();
  return static_cast<double>(count) / static_cast<double>(n_perm + 1);
}

double npc_from_statistics(const Eigen::MatrixXd& stats, const Eigen::VectorXd& tolerance) {
  const Eigen::Index rows = stats.rows();
  Eigen::VectorXd fisher = Eigen::VectorXd::Zero(rows);
  std::vector<double> sorted(static_cast<std::size_t>(rows));
  for (Eigen::Index v = 0; v < stats.cols(); ++v) {
    for (Eigen::Index k = 0; k < rows; ++k) sorted[static_cast<std::size_t>(k)] = stats(k, v);
    std::sort(sorted.begin(), sorted.end());
    for (Eigen::Index k = 0; k < rows; ++k) {
      const auto first = std::lower_bound(sorted.begin(), sorted.end(), stats(k, v) - tolerance(v));
      const double partial = static_cast<double>(sorted.end() - first) / static_cast<double>(rows);
      fisher(k) += -2.0 * std::log(partial);
    }
  }
  const double t0 = fisher(0);
  const double tol = kRelTieTolerance * std::max(1.0, std::abs(t0));
  const auto count = (fisher.array() >= t0 - tol).count();
  return static_cast<double>(count) / static_cast<double>(rows);
}

double npc_compare(const Eigen::MatrixXd& gi, const Eigen::MatrixXd& gj, bool paired, int n_perm,
                   std::uint64_t seed, PermScheme paired_scheme) {
  if (n_perm < 1) throw Error("npc_compare: need at least one permutation");
  const PermScheme scheme = paired ? paired_scheme : PermScheme::Independent;
  if (gi.cols() == 0) return 1.0;
  const Eigen::MatrixXd stats = kernels::permutation_statistics(gi, gj, scheme, n_perm, seed);
  return npc_from_statistics(stats, tolerances(gi, gj, scheme));
}

PValueMatrix build_pmatrix(const std::vector<Eigen::MatrixXd>& groups, const std::vector<std::string>& labels,
                           bool paired, int n_perm, std::uint64_t seed, PermScheme paired_scheme) {
  const auto c = groups.size();
  if (c < 2) throw InsufficientData("build_pmatrix: need at least 2 groups");
  if (labels.size() != c) throw LengthMismatch("build_pmatrix: one label per group required");
  PValueMatrix out;
  out.labels = labels;
  out.n_variables = static_cast<int>(groups.front().cols());
  out.entries = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c),
                                          std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (i == j) continue;
      const auto& a = groups[i];
      const auto& b = groups[j];
      if (a.cols() != b.cols()) throw LengthMismatch("build_pmatrix: groups have different variable counts");
      std::vector<Eigen::Index> keep;
      for (Eigen::Index v = 0; v < a.cols(); ++v)
        if (a.col(v).allFinite() && b.col(v).allFinite()) keep.push_back(v);
      double p = 1.0;
      if (!keep.empty()) {
        Eigen::MatrixXd ak(a.rows(), static_cast<Eigen::Index>(keep.size()));
        Eigen::MatrixXd bk(b.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
          ak.col(static_cast<Eigen::Index>(k)) = a.col(keep[k]);
          bk.col(static_cast<Eigen::Index>(k)) = b.col(keep[k]);
        }
        p = npc_compare(ak, bk, paired, n_perm, derive_seed({seed, i, j}), paired_scheme);
      }
      out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p;
    }
  }
  return out;
}

RankResult rank_groups(const PValueMatrix& p, double alpha) {
  const Eigen::Index c = p.entries.rows();
  // loses(i, j): i is significantly worse than j. The rank steps are applied
  // to its transpose so that rank 1 is the lowest RMSE.
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(c, c);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (i != j && p.entries(i, j) <= alpha / 2.0) s(j, i) = 1;

  RankResult r;
  r.alpha = alpha;
  const Eigen::VectorXi wins = s.rowwise().sum();
  const Eigen::RowVectorXi colsum = s.colwise().sum();
  std::vector<double> avg(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < c; ++i) {
    r.downward.push_back(1 + colsum(i));
    int up = 1;
    for (Eigen::Index k = 0; k < c; ++k)
      if (k != i && wins(k) > wins(i)) ++up;
    r.upward.push_back(up);
    avg[static_cast<std::size_t>(i)] = 0.5 * (r.downward.back() + r.upward.back());
  }
  for (Eigen::Index i = 0; i < c; ++i) {
    int rank = 1;
    for (Eigen::Index j = 0; j < c; ++j)
      if (j != i && avg[static_cast<std::size_t>(j)] < avg[static_cast<std::size_t>(i)]) ++rank;
    r.ranks.push_back(rank);
  }
  return r;
}

namespace {

const RmseRecord* find_record(const std::map<std::tuple<DesignId, ModelId, int>, const RmseRecord*>& index,
                              DesignId d, ModelId m, int rep) {
  const auto it = index.find({d, m, rep});
  return it == index.end() ? nullptr : it->second;
}

struct Slice {
  std::map<std::tuple<DesignId, ModelId, int>, const RmseRecord*> index;
  int n_reps = 0;
};

Slice slice(const std::vector<RmseRecord>& records, FunctionId fn, const NoiseSpec& noise) {
  Slice s;
  for (const auto& r : records) {
    if (r.function != fn || !(r.noise == noise)) continue;
    s.index[{r.design, r.model, r.rep}] = &r;
    s.n_reps = std::max(s.n_reps, r.rep + 1);
  }
  return s;
}

double value_or_nan(const RmseRecord* r) {
  return r && r->test_rmse ? *r->test_rmse : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Stage1 rank_designs_stage1(const std::vector<RmseRecord>& records, FunctionId fn, const NoiseSpec& noise,
                           const std::vector<DesignId>& designs, const std::vector<ModelId>& models,
                           const RankingOptions& opts) {
  const Slice s = slice(records, fn, noise);
  if (designs.size() < 2 || s.n_reps < 2)
    throw InsufficientData("rank_designs_stage1: need at least 2 designs with 2 repetitions");
  std::vector<Eigen::MatrixXd> groups;
  std::vector<std::string> labels;
  for (DesignId d : designs) {
    Eigen::MatrixXd g(s.n_reps, static_cast<Eigen::Index>(models.size()));
    for (int rep = 0; rep < s.n_reps; ++rep)
      for (std::size_t m = 0; m < models.size(); ++m)
        g(rep, static_cast<Eigen::Index>(m)) = value_or_nan(find_record(s.index, d, models[m], rep));
    groups.push_back(std::move(g));
    labels.emplace_back(to_string(d));
  }
  Stage1 out{fn, noise, {}, {}};
  out.p = build_pmatrix(groups, labels, false, opts.n_perm,
                        derive_seed({opts.seed, hash_string("designs"), hash_string(to_string(fn)),
                                     hash_string(noise_id(noise))}));
  out.ranks = rank_groups(out.p, opts.alpha);
  return out;
}

Stage1 rank_models_stage1(const std::vector<RmseRecord>& records, FunctionId fn, const NoiseSpec& noise,
                          const std::vector<DesignId>& designs, const std::vector<ModelId>& models,
                          const RankingOptions& opts) {
  const Slice s = slice(records, fn, noise);
  if (models.size() < 2 || s.n_reps < 2)
    throw InsufficientData("rank_models_stage1: need at least 2 models with 2 repetitions");
  std::vector<Eigen::MatrixXd> groups;
  std::vector<std::string> labels;
  for (ModelId m : models) {
    Eigen::MatrixXd g(s.n_reps, static_cast<Eigen::Index>(designs.size()));
    for (int rep = 0; rep < s.n_reps; ++rep)
      for (std::size_t d = 0; d < designs.size(); ++d)
        g(rep, static_cast<Eigen::Index>(d)) = value_or_nan(find_record(s.index, designs[d], m, rep));
    groups.push_back(std::move(g));
    labels.emplace_back(to_string(m));
  }
  Stage1 out{fn, noise, {}, {}};
  out.p = build_pmatrix(groups, labels, true, opts.n_perm,
                        derive_seed({opts.seed, hash_string("models"), hash_string(to_string(fn)),
                                     hash_string(noise_id(noise))}),
                        opts.model_scheme);
  out.ranks = rank_groups(out.p, opts.alpha);
  return out;
}

RankResult rank_stage2(const Eigen::MatrixXd& stage1_ranks, const std::vector<std::string>& labels,
                       const RankingOptions& opts) {
  if (stage1_ranks.rows() < 2 || stage1_ranks.cols() < 2)
    throw InsufficientData("rank_stage2: need at least 2 functions and 2 groups");
  std::vector<Eigen::MatrixXd> groups;
  for (Eigen::Index g = 0; g < stage1_ranks.cols(); ++g) groups.emplace_back(stage1_ranks.col(g));
  const PValueMatrix p = build_pmatrix(groups, labels, true, opts.n_perm,
                                       derive_seed({opts.seed, hash_string("stage2")}), PermScheme::PairedJoint);
  return rank_groups(p, opts.alpha);
}

StudyRanking rank_study(const std::vector<RmseRecord>& records, const StudyConfig& cfg, RankTarget target,
                        const RankingOptions& opts) {
  StudyRanking out;
  out.target = target;
  out.noises = cfg.noises;
  out.functions = cfg.functions;
  if (target == RankTarget::Designs)
    for (auto d : cfg.designs) out.groups.emplace_back(to_string(d));
  else
    for (auto m : cfg.models) out.groups.emplace_back(to_string(m));
  const auto n_groups = static_cast<Eigen::Index>(out.groups.size());
  for (const auto& noise : cfg.noises) {
    Eigen::MatrixXd ranks(static_cast<Eigen::Index>(cfg.functions.size()), n_groups);
    for (std::size_t f = 0; f < cfg.functions.size(); ++f) {
      Stage1 s = target == RankTarget::Designs
                     ? rank_designs_stage1(records, cfg.functions[f], noise, cfg.designs, cfg.models, opts)
                     : rank_models_stage1(records, cfg.functions[f], noise, cfg.designs, cfg.models, opts);
      for (Eigen::Index g = 0; g < n_groups; ++g)
        ranks(static_cast<Eigen::Index>(f), g) = s.ranks.ranks[static_cast<std::size_t>(g)];
      out.stage1.push_back(std::move(s));
    }
    const std::string id = noise_id(noise);
    const Eigen::RowVectorXd mean = ranks.colwise().mean();
    out.mean_stage1[id] = std::vector<double>(mean.data(), mean.data() + mean.size());
    if (ranks.rows() >= 2) {
      RankingOptions o = opts;
      o.seed = derive_seed({opts.seed, hash_string(id)});
      out.stage2[id] = rank_stage2(ranks, out.groups, o);
    } else {
      RankResult r;
      r.alpha = opts.alpha;
      for (Eigen::Index g = 0; g < n_groups; ++g) {
        r.ranks.push_back(static_cast<int>(ranks(0, g)));
        r.downward.push_back(0);
        r.upward.push_back(0);
      }
      out.stage2[id] = r;
    }
  }
  return out;
}

nlohmann::json to_json(const PValueMatrix& p) {
  nlohmann::json j;
  j["labels"] = p.labels;
  j["n_variables"] = p.n_variables;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.entries.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p.entries.cols(); ++k) {
      if (std::isnan(p.entries(i, k))) row.push_back(nullptr);
      else row.push_back(p.entries(i, k));
    }
    rows.push_back(row);
  }
  j["entries"] = rows;
  return j;
}

namespace {
nlohmann::json to_json(const RankResult& r) {
  return {{"ranks", r.ranks}, {"downward", r.downward}, {"upward", r.upward}, {"alpha", r.alpha}};
}
const char* target_name(RankTarget t) { return t == RankTarget::Designs ? "designs" : "models"; }
}  // namespace

nlohmann::json to_json(const StudyRanking& r) {
  nlohmann::json j;
  j["target"] = target_name(r.target);
  j["groups"] = r.groups;
  for (const auto& n : r.noises) j["noises"].push_back(noise_id(n));
  for (auto f : r.functions) j["functions"].push_back(std::string(to_string(f)));
  for (const auto& s : r.stage1) {
    j["stage1"].push_back({{"function", std::string(to_string(s.function))},
                           {"noise", noise_id(s.noise)},
                           {"pmatrix", to_json(s.p)},
                           {"ranks", to_json(s.ranks)}});
  }
  for (const auto& [id, res] : r.stage2) j["stage2"][id] = to_json(res);
  for (const auto& [id, m] : r.mean_stage1) j["mean_stage1"][id] = m;
  return j;
}

void write_ranking(const std::filesystem::path& dir, const StudyRanking& r) {
  std::filesystem::create_directories(dir);
  const std::string prefix = target_name(r.target);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / (prefix + name), std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / (prefix + name)).string());
    return out;
  };
  {
    auto out = open("_stage1.csv");
    out << "function,noise,group,rank,downward,upward\n";
    for (const auto& s : r.stage1)
      for (std::size_t g = 0; g < r.groups.size(); ++g)
        out << to_string(s.function) << ',' << noise_id(s.noise) << ',' << r.groups[g] << ',' << s.ranks.ranks[g]
            << ',' << s.ranks.downward[g] << ',' << s.ranks.upward[g] << '\n';
  }
  auto table = [&](const std::string& name, auto cell) {
    auto out = open(name);
    out << "group";
    for (const auto& n : r.noises) out << ',' << noise_id(n);
    out << '\n';
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      out << r.groups[g];
      for (const auto& n : r.noises) out << ',' << cell(noise_id(n), g);
      out << '\n';
    }
  };
  table("_final.csv", [&](const std::string& id, std::size_t g) { return std::to_string(r.stage2.at(id).ranks[g]); });
  table("_mean_stage1.csv", [&](const std::string& id, std::size_t g) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", r.mean_stage1.at(id)[g]);
    return std::string(buf);
  });
  auto out = open("_ranking.json");
  out << to_json(r).dump(2) << '\n';
}

}  // namespace doebench
