// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--workdir DIR] [--only 1,4,9] [--jobs N]
//
// Criteria 7 and 8 run the desk-scale study six times (five master seeds plus
// a repeat of the first), which takes about two hours on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <omp.h>

#include "doebench/designgen.hpp"
#include "doebench/evalharness.hpp"
#include "doebench/gp.hpp"
#include "doebench/noise.hpp"
#include "doebench/permrank.hpp"
#include "doebench/rng.hpp"
#include "doebench/sampling.hpp"
#include "gp_oracle.hpp"
#include "mlp_check.hpp"
#include "perm_oracle.hpp"

using namespace doebench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Eigen::VectorXd vec(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

// 1. CMC p-values within 3 standard errors of exact enumeration.
Outcome permutation_exactness() {
  constexpr int kB = kPermutations;
  double worst_ratio = 0.0;
  int failures = 0, checked = 0;
  for (int k = 0; k < 20; ++k) {
    Rng rng(derive_seed({hash_string("exactness"), static_cast<std::uint64_t>(k)}));
    const int n = 2 + k % 3;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = 0.3 * (k % 7) + standard_normal(rng);
      b[i] = standard_normal(rng);
    }
    for (bool paired : {false, true}) {
      const double exact = paired ? oracle::exact_paired(a, b) : oracle::exact_independent(a, b);
      const double cmc = perm_test(vec(a), vec(b), paired, kB, derive_seed({7, static_cast<std::uint64_t>(k)}));
      const double band = 3.0 * std::sqrt(exact * (1.0 - exact) / kB);
      const double err = std::abs(cmc - exact);
      ++checked;
      if (err > band) ++failures;
      if (band > 0) worst_ratio = std::max(worst_ratio, err / band);
      else if (err > 0) worst_ratio = INFINITY;
    }
  }
  return {failures == 0, std::to_string(checked) + " comparisons (20 cases x independent/paired), " +
                             std::to_string(failures) + " outside band, worst |err|/band = " + fmt("%.3f", worst_ratio)};
}

// 2. Null calibration at alpha/2 over 500 synthetic datasets per test shape.
Outcome null_calibration() {
  constexpr int kDatasets = 500;
  constexpr double kLo = 0.013, kHi = 0.040;
  struct Shape {
    const char* name;
    int rows, cols;
    bool paired;
    PermScheme scheme;
  };
  const Shape shapes[] = {{"independent 10v10", 10, 1, false, PermScheme::Independent},
                          {"paired n=10", 10, 1, true, PermScheme::PairedJoint},
                          // desk-scale design and model comparison shapes: reps x models, reps x designs
                          {"NPC independent 5x4", 5, 4, false, PermScheme::Independent},
                          {"NPC paired per-cell 5x12", 5, 12, true, PermScheme::PairedPerCell}};
  bool ok = true;
  std::string detail;
  for (const auto& s : shapes) {
    int rejections = 0;
    for (int d = 0; d < kDatasets; ++d) {
      Rng rng(derive_seed({hash_string("null"), hash_string(s.name), static_cast<std::uint64_t>(d)}));
      Eigen::MatrixXd a(s.rows, s.cols), b(s.rows, s.cols);
      for (double& v : a.reshaped()) v = standard_normal(rng);
      for (double& v : b.reshaped()) v = standard_normal(rng);
      const double p = npc_compare(a, b, s.paired, kPermutations, rng(), s.scheme);
      if (p <= kAlpha / 2) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / kDatasets;
    ok = ok && rate >= kLo && rate <= kHi;
    detail += std::string(detail.empty() ? "" : "; ") + s.name + " " + fmt("%.3f", rate);
  }
  return {ok, "rejection rates in [0.013, 0.040]: " + detail};
}

// 3. Ranking recovery for separated and for identical groups.
Outcome ranking_recovery() {
  constexpr int kSeeds = 100, kGroups = 4, kObs = 10, kVars = 3;
  int recovered = 0, null_ok = 0;
  std::vector<std::string> labels;
  for (int g = 0; g < kGroups; ++g) labels.push_back("G" + std::to_string(g + 1));
  for (int s = 0; s < kSeeds; ++s) {
    Rng rng(derive_seed({hash_string("recovery"), static_cast<std::uint64_t>(s)}));
    // true order G3 < G1 < G4 < G2, 5 within-group sds apart
    const int order[kGroups] = {1, 3, 0, 2};
    std::vector<Eigen::MatrixXd> groups;
    for (int g = 0; g < kGroups; ++g) {
      Eigen::MatrixXd m(kObs, kVars);
      for (double& v : m.reshaped()) v = 10.0 + 5.0 * order[g] + standard_normal(rng);
      groups.push_back(m);
    }
    const auto r = rank_groups(build_pmatrix(groups, labels, false, kPermutations, rng()), kAlpha);
    if (r.ranks == std::vector<int>{2, 4, 1, 3}) ++recovered;

    Eigen::MatrixXd base(kObs, kVars);
    for (double& v : base.reshaped()) v = 1.0 + 0.2 * standard_normal(rng);
    const std::vector<Eigen::MatrixXd> same(kGroups, base);
    const auto n = rank_groups(build_pmatrix(same, labels, false, kPermutations, rng()), kAlpha);
    if (n.ranks == std::vector<int>(kGroups, 1)) ++null_ok;
  }
  return {recovered >= 95 && null_ok >= 95, "true order recovered in " + std::to_string(recovered) +
                                                "/100 seeds; identical groups all rank 1 in " +
                                                std::to_string(null_ok) + "/100 seeds"};
}

// 4. Kriging against a dense closed-form oracle.
Outcome gp_correctness() {
  double worst_pred = 0.0, worst_interp = 0.0;
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
  for (const auto& c : oracle::fixed_1d_cases()) {
    const auto o = oracle::dense_oracle(c.f, c.theta, c.t, c.x, c.y, xs);
    const KernelSpec k{c.f, Eigen::VectorXd::Constant(1, c.theta), c.t};
    const Eigen::MatrixXd x = c.x;
    const GpModel m(k, TrendBasis::constant(), x, c.y, default_nugget(c.y));
    const Eigen::MatrixXd xm = xs;
    worst_pred = std::max(worst_pred, (m.predict(xm) - o.pred).cwiseAbs().maxCoeff());
    worst_interp = std::max(worst_interp, (m.predict(x) - c.y).cwiseAbs().maxCoeff());
  }
  return {worst_pred <= 1e-8 && worst_interp < 1e-3,
          "max |pred - oracle| = " + fmt("%.2e", worst_pred) + " (<= 1e-8), max training residual = " +
              fmt("%.2e", worst_interp) + " (< 1e-3)"};
}

// 5. Optimized designs dominate random comparators.
Outcome optimizer_dominance() {
  const std::uint64_t master = 1;
  const auto d_opt = generate(DesignId::D_opt, design_seed(master, DesignId::D_opt));
  const auto maxpro = generate(DesignId::MAXPRO, design_seed(master, DesignId::MAXPRO));
  const double d_star = d_criterion(model_matrix(d_opt));
  const double psi_star = maxpro_criterion(maxpro.points);
  Rng rng(derive_seed({hash_string("dominance"), master}));
  int d_wins = 0, psi_wins = 0;
  double best_random_d = 0.0, best_random_psi = INFINITY;
  for (int i = 0; i < 100; ++i) {
    Eigen::MatrixXd p(kRuns, kDim);
    for (double& v : p.reshaped()) v = static_cast<double>(uniform_index(rng, kLevels)) / (kLevels - 1);
    const double d = d_criterion(model_matrix(p));
    best_random_d = std::max(best_random_d, d);
    if (d_star > d) ++d_wins;
    const double psi = maxpro_criterion(random_lhd(kRuns, kDim, rng));
    best_random_psi = std::min(best_random_psi, psi);
    if (psi_star < psi) ++psi_wins;
  }
  return {d_wins == 100 && psi_wins == 100,
          "D_opt beats " + std::to_string(d_wins) + "/100 random 6-level designs (log det " + fmt("%.2f", std::log(d_star)) +
              " vs best random " + fmt("%.2f", std::log(best_random_d)) + "); MAXPRO beats " +
              std::to_string(psi_wins) + "/100 random LHDs (psi " + fmt("%.4g", psi_star) + " vs best random " +
              fmt("%.4g", best_random_psi) + ")"};
}

// 6. Heteroscedastic noise sd at the response extremes.
Outcome noise_fidelity() {
  const auto c = estimate_standardization(FunctionId::Piston, kDeskStdDesigns, kDeskStdPoints, 20240501);
  constexpr int kDraws = 100000;
  bool ok = true;
  std::string detail;
  for (double m : {0.5, 1.0, 5.0}) {
    const auto spec = NoiseSpec::heteroscedastic(m);
    for (const auto& [f, target] : {std::pair{c.y_min, kHetFloor * c.sigma_y}, std::pair{c.y_max, m * c.sigma_y}}) {
      const Eigen::VectorXd fv = Eigen::VectorXd::Constant(kDraws, f);
      const Eigen::VectorXd e =
          apply_noise(fv, fv, spec, c, derive_seed({hash_string("fidelity"), hash_string(noise_id(spec)),
                                                    static_cast<std::uint64_t>(f == c.y_max)})) -
          fv;
      const double sd = std::sqrt((e.array() - e.mean()).square().sum() / (kDraws - 1));
      const double rel = std::abs(sd / target - 1.0);
      ok = ok && rel <= 0.02;
      detail += std::string(detail.empty() ? "" : "; ") + "m=" + fmt("%g", m) + (f == c.y_max ? " max " : " min ") +
                fmt("%.4f", rel);
    }
  }
  return {ok, "relative sd error (<= 0.02): " + detail};
}

// 9. MLP analytic gradients against central differences.
Outcome mlp_gradients() {
  Rng rng(derive_seed({hash_string("gradient-check")}));
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto c = oracle::random_gradient_case(rng, t);
    Eigen::VectorXd g;
    c.net.loss_and_gradient(c.x, c.y, c.pen, g);
    worst = std::max(worst, oracle::rel_error(g, oracle::numeric_gradient(c.net, c.x, c.y, c.pen, nullptr)));
  }
  return {worst <= 1e-4, "10 random networks, worst relative error " + fmt("%.2e", worst) + " (<= 1e-4)"};
}

// --- desk-scale study criteria --------------------------------------------

struct StudyRun {
  std::vector<RmseRecord> records;
  StudyRanking designs, models;
  fs::path dir;
};

StudyRun run_desk(std::uint64_t seed, const fs::path& dir, const fs::path& cache, int jobs) {
  StudyConfig cfg = preset("desk-scale");
  cfg.master_seed = seed;
  fs::remove_all(dir);
  RunOptions ro;
  ro.out_dir = dir;
  ro.cache_dir = cache;
  ro.jobs = jobs;
  const auto start = std::chrono::steady_clock::now();
  StudyRun r;
  r.dir = dir;
  r.records = run_study(cfg, ro);
  RankingOptions opts;
  opts.seed = ranking_seed(seed);
  r.designs = rank_study(r.records, cfg, RankTarget::Designs, opts);
  r.models = rank_study(r.records, cfg, RankTarget::Models, opts);
  write_ranking(dir / "ranks", r.designs);
  write_ranking(dir / "ranks", r.models);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "desk-scale study, master seed %llu: %zu cells in %.0f s\n",
               static_cast<unsigned long long>(seed), r.records.size(), s);
  return r;
}

double mean_rank(const StudyRanking& r, const std::string& noise, const std::string& group) {
  const auto it = std::find(r.groups.begin(), r.groups.end(), group);
  return r.mean_stage1.at(noise)[static_cast<std::size_t>(it - r.groups.begin())];
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome qualitative_patterns(const std::vector<StudyRun>& runs) {
  int a = 0, b = 0, c = 0, d = 0;
  std::string trace;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto& r = runs[s];
    bool pa = true;
    for (const char* noise : {"none", "hom12.5"}) {
      const double gp = mean_rank(r.models, noise, "GP");
      for (const char* other : {"LM", "SVM", "RF"}) pa = pa && gp < mean_rank(r.models, noise, other);
    }
    double iopt = 0.0, dopt = 0.0;
    for (const auto& n : r.designs.noises) {
      iopt += mean_rank(r.designs, noise_id(n), "I_opt");
      dopt += mean_rank(r.designs, noise_id(n), "D_opt");
    }
    const bool pb = iopt < dopt;
    const bool pc = mean_rank(r.designs, "none", "I_opt") < mean_rank(r.designs, "none", "I_opt_50repl");
    int lm_cells = 0, lm_missing = 0;
    for (const auto& rec : r.records)
      if (rec.model == ModelId::LM && rec.design == DesignId::I_opt_50repl) {
        ++lm_cells;
        if (rec.missing() && rec.status == "rank_deficient") ++lm_missing;
      }
    const bool pd = lm_cells > 0 && lm_missing == lm_cells;
    a += pa;
    b += pb;
    c += pc;
    d += pd;
    trace += " seed" + std::to_string(s + 1) + ":" + (pa ? "a" : "-") + (pb ? "b" : "-") + (pc ? "c" : "-") +
             (pd ? "d" : "-");
  }
  const bool ok = a >= 4 && b >= 4 && c >= 4 && d >= 4;
  return {ok, "(a) " + std::to_string(a) + "/5, (b) " + std::to_string(b) + "/5, (c) " + std::to_string(c) +
                  "/5, (d) " + std::to_string(d) + "/5 [need >= 4 each];" + trace};
}

Outcome determinism(const StudyRun& first, const StudyRun& repeat) {
  std::vector<std::string> files{"results.csv"};
  for (const auto& e : fs::directory_iterator(first.dir / "ranks")) files.push_back("ranks/" + e.path().filename().string());
  std::sort(files.begin(), files.end());
  int same = 0;
  std::string differing;
  for (const auto& f : files) {
    if (slurp(first.dir / f) == slurp(repeat.dir / f) && fs::exists(repeat.dir / f)) ++same;
    else differing += " " + f;
  }
  return {same == static_cast<int>(files.size()),
          std::to_string(same) + "/" + std::to_string(files.size()) + " files byte-identical" +
              (differing.empty() ? "" : "; differing:" + differing)};
}

void dump_tables(const StudyRun& r, std::uint64_t seed) {
  std::fprintf(stderr, "seed %llu mean stage-1 ranks\n", static_cast<unsigned long long>(seed));
  for (const auto* rk : {&r.models, &r.designs}) {
    for (std::size_t g = 0; g < rk->groups.size(); ++g) {
      std::fprintf(stderr, "  %-14s", rk->groups[g].c_str());
      for (const auto& n : rk->noises) std::fprintf(stderr, " %s=%.2f", noise_id(n).c_str(), rk->mean_stage1.at(noise_id(n))[g]);
      std::fprintf(stderr, "\n");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir = fs::current_path() / "acceptance_runs";
  std::set<int> only;
  int jobs = omp_get_num_procs();
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) workdir = argv[++i];
    else if (a == "--jobs" && i + 1 < argc) jobs = std::stoi(argv[++i]);
    else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance [--workdir DIR] [--only 1,2,...] [--jobs N]\n");
      return 2;
    }
  }
  auto wanted = [&](int k) { return only.empty() || only.count(k); };
  int failed = 0;
  auto report = [&](int k, const char* name, const Outcome& o) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };
  auto timed = [&](int k, const char* name, const std::function<Outcome()>& f) {
    if (!wanted(k)) return;
    try {
      report(k, name, f());
    } catch (const std::exception& e) {
      report(k, name, {false, std::string("exception: ") + e.what()});
    }
  };

  timed(1, "permutation-test exactness", permutation_exactness);
  timed(2, "null calibration", null_calibration);
  timed(3, "ranking recovery", ranking_recovery);
  timed(4, "GP correctness", gp_correctness);
  timed(5, "optimizer dominance", optimizer_dominance);
  timed(6, "noise fidelity", noise_fidelity);

  if (wanted(7) || wanted(8)) {
    try {
      fs::create_directories(workdir);
      std::vector<StudyRun> runs;
      const int n_seeds = wanted(7) ? 5 : 1;
      for (int s = 1; s <= n_seeds; ++s) {
        runs.push_back(run_desk(static_cast<std::uint64_t>(s), workdir / ("seed_" + std::to_string(s)),
                                workdir / "cache", jobs));
        dump_tables(runs.back(), static_cast<std::uint64_t>(s));
      }
      if (wanted(7)) report(7, "qualitative pattern reproduction", qualitative_patterns(runs));
      if (wanted(8)) {
        // Fresh cache so the repeat also re-derives the standardization constants.
        const StudyRun repeat = run_desk(1, workdir / "seed_1_repeat", workdir / "cache_repeat", jobs);
        report(8, "determinism", determinism(runs.front(), repeat));
      }
    } catch (const std::exception& e) {
      if (wanted(7)) report(7, "qualitative pattern reproduction", {false, std::string("exception: ") + e.what()});
      if (wanted(8)) report(8, "determinism", {false, std::string("exception: ") + e.what()});
    }
  }
  timed(9, "MLP gradient check", mlp_gradients);
  return failed == 0 ? 0 : 1;
}
