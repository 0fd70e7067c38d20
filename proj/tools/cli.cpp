// doebench command-line front end.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include "doebench/designgen.hpp"
#include "doebench/errors.hpp"
#include "doebench/evalharness.hpp"
#include "doebench/permrank.hpp"
#include "doebench/rng.hpp"

namespace fs = std::filesystem;
using namespace doebench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr const char* kVersion = "1.0.0";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed: " + p.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Checksums every regular file under dir except the manifest itself. Paths are
// sorted so the listing is stable.
nlohmann::json checksum_tree(const fs::path& dir) {
  std::map<std::string, std::string> sums;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json" || rel.ends_with(".tmp")) continue;
    sums[rel] = hex64(hash_string(read_file(e.path())));
  }
  nlohmann::json files = nlohmann::json::object();
  std::string all;
  for (const auto& [k, v] : sums) {
    files[k] = v;
    all += k + ' ' + v + '\n';
  }
  return {{"files", files}, {"checksum", hex64(hash_string(all))}};
}

// Refreshes manifest.json, keeping the original creation time.
void write_manifest(const fs::path& dir, const std::string& config_source, const StudyConfig& cfg,
                    const std::string& event) {
  const fs::path path = dir / "manifest.json";
  nlohmann::json m;
  if (fs::exists(path)) {
    try {
      m = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception&) {
      m = nlohmann::json::object();
    }
  }
  if (!m.contains("created")) m["created"] = utc_now();
  m["updated"][event] = utc_now();
  if (!config_source.empty()) m["config_source"] = config_source;
  m["output_directory"] = fs::absolute(dir).string();
  m["master_seed"] = cfg.master_seed;
  m["versions"] = {{"doebench", kVersion}, {"results_csv", 1}, {"ranking", 1}};
  const auto sums = checksum_tree(dir);
  m["files"] = sums["files"];
  m["checksum"] = sums["checksum"];
  write_text(path, m.dump(2) + "\n");
}

StudyConfig study_config(const fs::path& dir) {
  const fs::path p = dir / "config.json";
  if (!fs::exists(p)) throw ConfigError("not a study directory (missing config.json): " + dir.string());
  return load_config(p);
}

int cmd_generate_design(const std::string& id_name, std::uint64_t seed, const fs::path& out) {
  const auto id = parse_design(id_name);
  if (!id) {
    std::cerr << "generate-design: unknown design id '" << id_name << "'\n";
    return kExitConfig;
  }
  fs::create_directories(out);
  const DesignMatrix d = generate(*id, seed);
  const std::string stem = std::string(to_string(*id));
  write_design_csv(out / (stem + ".csv"), d);
  write_design_metadata(out / (stem + ".json"), d);
  std::cout << (out / (stem + ".csv")).string() << '\n';
  return kExitOk;
}

struct RunArgs {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  fs::path out;
  fs::path cache;
  int jobs = 0;
  bool resume = false;
  bool quiet = false;
};

int cmd_run_study(const RunArgs& a) {
  if (!a.config.empty() && !a.preset.empty()) throw ConfigError("pass either --config or --preset, not both");
  StudyConfig cfg = !a.config.empty() ? load_config(a.config) : preset(a.preset.empty() ? "desk-scale" : a.preset);
  if (a.seed) cfg.master_seed = *a.seed;
  const std::string source = !a.config.empty() ? fs::absolute(a.config).string() : "preset:" + cfg.name;

  const fs::path cfg_path = a.out / "config.json";
  const std::string cfg_text = to_json(cfg).dump(2) + "\n";
  if (fs::exists(cfg_path)) {
    if (!a.resume) throw ConfigError("study directory exists; pass --resume to complete it: " + a.out.string());
    if (read_file(cfg_path) != cfg_text)
      throw ConfigError("config differs from the one stored in " + cfg_path.string());
  } else if (fs::exists(a.out) && !fs::is_empty(a.out)) {
    throw ConfigError("output directory is not empty and holds no study: " + a.out.string());
  }
  fs::create_directories(a.out / "designs");
  write_text(cfg_path, cfg_text);

  const fs::path cache = a.cache.empty() ? a.out / "cache" : a.cache;
  const StudyContext ctx = prepare_study(cfg, cache);
  for (const auto& [id, d] : ctx.designs) {
    const std::string stem = std::string(to_string(id));
    write_design_csv(a.out / "designs" / (stem + ".csv"), d);
    write_design_metadata(a.out / "designs" / (stem + ".json"), d);
  }

  RunOptions ro;
  ro.out_dir = a.out;
  ro.cache_dir = cache;
  ro.jobs = a.jobs > 0 ? a.jobs : omp_get_num_procs();
  ro.resume = a.resume;
  const auto start = std::chrono::steady_clock::now();
  if (!a.quiet) {
    ro.on_record = [start](const RmseRecord& r, std::size_t done, std::size_t total) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::fprintf(stderr, "[%zu/%zu %.0fs] %s %s %s %s rep %d: %s\n", done, total, s,
                   std::string(to_string(r.design)).c_str(), std::string(to_string(r.function)).c_str(),
                   noise_id(r.noise).c_str(), std::string(to_string(r.model)).c_str(), r.rep, r.status.c_str());
    };
  }
  const auto records = run_study(ctx, ro);
  write_manifest(a.out, source, cfg, "run-study");

  std::size_t failed = 0, structural = 0;
  for (const auto& r : records) {
    if (r.status.starts_with("error:")) ++failed;
    else if (r.missing()) ++structural;
  }
  std::cout << records.size() << " cells, " << structural << " rank-deficient, " << failed << " failed\n";
  return failed > 0 ? kExitPartial : kExitOk;
}

int cmd_rank(const fs::path& dir, const std::string& target_name, std::optional<std::uint64_t> seed) {
  RankTarget target;
  if (target_name == "designs") target = RankTarget::Designs;
  else if (target_name == "models") target = RankTarget::Models;
  else throw ConfigError("--target must be 'designs' or 'models'");
  const StudyConfig cfg = study_config(dir);
  const fs::path results = dir / "results.csv";
  if (!fs::exists(results)) throw Error("missing results: " + results.string() + " (run run-study first)");
  const auto records = read_results_csv(results);
  if (records.size() != cell_count(cfg))
    throw Error("results.csv holds " + std::to_string(records.size()) + " of " + std::to_string(cell_count(cfg)) +
                " cells; complete the study with run-study --resume");
  RankingOptions opts;
  opts.seed = seed ? *seed : ranking_seed(cfg.master_seed);
  const StudyRanking r = rank_study(records, cfg, target, opts);
  write_ranking(dir / "ranks", r);
  write_manifest(dir, "", cfg, "rank-" + target_name);
  std::cout << (dir / "ranks" / (target_name + "_final.csv")).string() << '\n';
  return kExitOk;
}

// Plot-ready per-cell summaries: mean and sd of test RMSE over repetitions.
int cmd_report(const fs::path& dir) {
  const StudyConfig cfg = study_config(dir);
  const fs::path results = dir / "results.csv";
  if (!fs::exists(results)) throw Error("missing results: " + results.string());
  const auto records = read_results_csv(results);
  struct Acc {
    std::vector<double> v;
    int missing = 0;
  };
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, Acc> acc;
  auto idx = [](const auto& v, const auto& x) {
    return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
  };
  for (const auto& r : records) {
    auto& a = acc[{idx(cfg.designs, r.design), idx(cfg.functions, r.function), idx(cfg.noises, r.noise),
                   idx(cfg.models, r.model)}];
    if (r.test_rmse) a.v.push_back(*r.test_rmse);
    else ++a.missing;
  }
  std::ostringstream out;
  out << "design,function,noise,model,n_ok,n_missing,mean_rmse,sd_rmse,min_rmse,max_rmse\n";
  for (const auto& [k, a] : acc) {
    const auto [d, f, n, m] = k;
    if (d >= cfg.designs.size() || f >= cfg.functions.size() || n >= cfg.noises.size() || m >= cfg.models.size())
      continue;
    out << to_string(cfg.designs[d]) << ',' << to_string(cfg.functions[f]) << ',' << noise_id(cfg.noises[n]) << ','
        << to_string(cfg.models[m]) << ',' << a.v.size() << ',' << a.missing;
    if (a.v.empty()) {
      out << ",NA,NA,NA,NA\n";
      continue;
    }
    double mean = 0.0;
    for (double v : a.v) mean += v;
    mean /= static_cast<double>(a.v.size());
    double ss = 0.0;
    for (double v : a.v) ss += (v - mean) * (v - mean);
    const double sd = a.v.size() > 1 ? std::sqrt(ss / static_cast<double>(a.v.size() - 1)) : 0.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g\n", mean, sd, *std::min_element(a.v.begin(), a.v.end()),
                  *std::max_element(a.v.begin(), a.v.end()));
    out << buf;
  }
  fs::create_directories(dir / "report");
  write_text(dir / "report" / "rmse_summary.csv", out.str());
  write_manifest(dir, "", cfg, "report");
  std::cout << (dir / "report" / "rmse_summary.csv").string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-of-experiments surrogate benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string design_id;
  std::uint64_t design_seed_value = 1;
  fs::path design_out = ".";
  auto* gen = app.add_subcommand("generate-design", "Write one 52-run design as CSV plus metadata JSON");
  gen->add_option("--id", design_id, "Design id (CCD, BBD, FFD, D_opt, I_opt, ...)")->required();
  gen->add_option("--seed", design_seed_value, "Construction seed");
  gen->add_option("--out", design_out, "Output directory");

  RunArgs run;
  std::uint64_t run_seed = 0;
  auto* rs = app.add_subcommand("run-study", "Run (or resume) a simulation study");
  rs->add_option("--config", run.config, "Study config JSON")->check(CLI::ExistingFile);
  rs->add_option("--preset", run.preset, "Named preset: desk-scale or paper-shape");
  auto* seed_opt = rs->add_option("--seed", run_seed, "Override the master seed");
  rs->add_option("--out", run.out, "Study directory")->required();
  rs->add_option("--cache", run.cache, "Standardization cache directory (default <out>/cache)");
  rs->add_option("--jobs", run.jobs, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  rs->add_flag("--resume", run.resume, "Complete an interrupted study");
  rs->add_flag("--quiet", run.quiet, "No per-cell progress");

  fs::path rank_dir;
  std::string rank_target = "designs";
  std::uint64_t rank_seed = 0;
  auto* rk = app.add_subcommand("rank", "Two-stage permutation ranking of designs or models");
  rk->add_option("--study", rank_dir, "Study directory")->required()->check(CLI::ExistingDirectory);
  rk->add_option("--target", rank_target, "designs or models");
  auto* rank_seed_opt = rk->add_option("--seed", rank_seed, "Permutation seed (default derived from master seed)");

  fs::path report_dir;
  auto* rp = app.add_subcommand("report", "Write plot-ready RMSE summaries");
  rp->add_option("--study", report_dir, "Study directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate_design(design_id, design_seed_value, design_out);
    if (rs->parsed()) {
      if (seed_opt->count() > 0) run.seed = run_seed;
      return cmd_run_study(run);
    }
    if (rk->parsed())
      return cmd_rank(rank_dir, rank_target,
                      rank_seed_opt->count() > 0 ? std::optional<std::uint64_t>(rank_seed) : std::nullopt);
    if (rp->parsed()) return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
