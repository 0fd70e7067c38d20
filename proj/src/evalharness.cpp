#include "doebench/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include <omp.h>

#include "doebench/errors.hpp"
#include "doebench/rng.hpp"

namespace doebench {

namespace {

template <class Id, class Parse>
std::vector<Id> parse_list(const nlohmann::json& j, std::string_view key, Parse parse) {
  if (!j.is_array() || j.empty()) throw ConfigError("config: '" + std::string(key) + "' must be a non-empty array");
  std::vector<Id> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError("config: '" + std::string(key) + "' entries must be strings");
    auto id = parse(v.get<std::string>());
    if (!id) throw ConfigError("config: unknown " + std::string(key) + " entry '" + v.get<std::string>() + "'");
    if (std::find(out.begin(), out.end(), *id) != out.end())
      throw ConfigError("config: duplicate " + std::string(key) + " entry '" + v.get<std::string>() + "'");
    out.push_back(*id);
  }
  return out;
}

int positive_int(const nlohmann::json& j, std::string_view key) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw ConfigError("config: '" + std::string(key) + "' must be a positive integer");
  return j.get<int>();
}

// Literals in code produce signed JSON integers; parsed text produces unsigned ones.
std::uint64_t seed_value(const nlohmann::json& j, std::string_view key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw ConfigError("config: '" + std::string(key) + "' must be a non-negative integer");
}

std::string fmt_double(double v, const char* f = "%.17g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Position of each cell in canonical order.
struct CellKey {
  std::size_t d, f, n, m;
  int rep;
  auto operator<=>(const CellKey&) const = default;
};

template <class T>
std::size_t index_of(const std::vector<T>& v, const T& x) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
}

CellKey key_of(const StudyConfig& cfg, const RmseRecord& r) {
  return {index_of(cfg.designs, r.design), index_of(cfg.functions, r.function), index_of(cfg.noises, r.noise),
          index_of(cfg.models, r.model), r.rep};
}

bool in_config(const StudyConfig& cfg, const RmseRecord& r) {
  const CellKey k = key_of(cfg, r);
  return k.d < cfg.designs.size() && k.f < cfg.functions.size() && k.n < cfg.noises.size() &&
         k.m < cfg.models.size() && r.rep >= 0 && r.rep < cfg.n_reps &&
         r.cell_seed == cell_seed(cfg.master_seed, r.design, r.function, r.noise, r.model, r.rep);
}

}  // namespace

StudyConfig preset(std::string_view name) {
  StudyConfig cfg;
  cfg.name = std::string(name);
  if (name == "paper-shape") {
    cfg.designs.assign(kAllDesigns.begin(), kAllDesigns.end());
    cfg.functions.assign(kAllFunctions.begin(), kAllFunctions.end());
    cfg.noises = all_noise_settings();
    cfg.models.assign(kAllModels.begin(), kAllModels.end());
    cfg.n_reps = 10;
  } else if (name == "desk-scale") {
    cfg.designs = {DesignId::BBD, DesignId::FFD, DesignId::D_opt, DesignId::I_opt, DesignId::MAXPRO_dis,
                   DesignId::I_opt_50repl};
    cfg.functions = {FunctionId::Piston, FunctionId::Borehole, FunctionId::Rosenbrock};
    cfg.noises = {NoiseSpec::none(), NoiseSpec::homoscedastic(0.125), NoiseSpec::homoscedastic(0.5),
                  NoiseSpec::heteroscedastic(1.0)};
    cfg.models = {ModelId::LM, ModelId::GP, ModelId::SVM, ModelId::RF};
    cfg.n_reps = 5;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return cfg;
}

StudyConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  StudyConfig cfg = preset(j.contains("preset") ? j.at("preset").get<std::string>() : "desk-scale");
  static const std::set<std::string> known = {"preset", "name", "designs", "functions", "noises", "models",
                                              "n_reps", "master_seed", "test_set_size", "standardization",
                                              "fit_options"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");
  try {
    if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    if (j.contains("designs")) cfg.designs = parse_list<DesignId>(j.at("designs"), "designs", parse_design);
    if (j.contains("functions"))
      cfg.functions = parse_list<FunctionId>(j.at("functions"), "functions", parse_function);
    if (j.contains("noises")) cfg.noises = parse_list<NoiseSpec>(j.at("noises"), "noises", parse_noise);
    if (j.contains("models")) cfg.models = parse_list<ModelId>(j.at("models"), "models", parse_model);
    if (j.contains("n_reps")) cfg.n_reps = positive_int(j.at("n_reps"), "n_reps");
    if (j.contains("test_set_size")) cfg.test_set_size = positive_int(j.at("test_set_size"), "test_set_size");
    if (j.contains("master_seed")) cfg.master_seed = seed_value(j.at("master_seed"), "master_seed");
    if (j.contains("standardization")) {
      const auto& s = j.at("standardization");
      if (s.contains("n_designs")) cfg.standardization.n_designs = positive_int(s.at("n_designs"), "n_designs");
      if (s.contains("n_points")) cfg.standardization.n_points_per_design = positive_int(s.at("n_points"), "n_points");
      if (s.contains("seed")) cfg.standardization.master_seed = seed_value(s.at("seed"), "standardization.seed");
    }
    if (j.contains("fit_options")) {
      const auto& f = j.at("fit_options");
      auto& o = cfg.fit_options;
      if (f.contains("cv_folds")) o.cv_folds = positive_int(f.at("cv_folds"), "cv_folds");
      if (f.contains("gp_restarts")) o.gp_restarts = positive_int(f.at("gp_restarts"), "gp_restarts");
      if (f.contains("gp_max_iterations")) o.gp_max_iterations = positive_int(f.at("gp_max_iterations"), "gp_max_iterations");
      if (f.contains("gp_theta_lo")) o.gp_theta_lo = f.at("gp_theta_lo").get<double>();
      if (f.contains("gp_theta_hi")) o.gp_theta_hi = f.at("gp_theta_hi").get<double>();
      if (f.contains("rf_trees")) o.rf_trees = positive_int(f.at("rf_trees"), "rf_trees");
      if (f.contains("rf_cv_trees")) o.rf_cv_trees = positive_int(f.at("rf_cv_trees"), "rf_cv_trees");
      if (f.contains("ann_max_epochs")) o.ann_max_epochs = positive_int(f.at("ann_max_epochs"), "ann_max_epochs");
      if (o.cv_folds < 2) throw ConfigError("config: 'cv_folds' must be at least 2");
      if (!(o.gp_theta_lo > 0.0 && o.gp_theta_lo < o.gp_theta_hi && std::isfinite(o.gp_theta_hi)))
        throw ConfigError("config: need 0 < gp_theta_lo < gp_theta_hi");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json to_json(const StudyConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  for (auto d : cfg.designs) j["designs"].push_back(std::string(to_string(d)));
  for (auto f : cfg.functions) j["functions"].push_back(std::string(to_string(f)));
  for (const auto& n : cfg.noises) j["noises"].push_back(noise_id(n));
  for (auto m : cfg.models) j["models"].push_back(std::string(to_string(m)));
  j["n_reps"] = cfg.n_reps;
  j["master_seed"] = cfg.master_seed;
  j["test_set_size"] = cfg.test_set_size;
  j["standardization"] = {{"n_designs", cfg.standardization.n_designs},
                          {"n_points", cfg.standardization.n_points_per_design},
                          {"seed", cfg.standardization.master_seed}};
  const auto& o = cfg.fit_options;
  j["fit_options"] = {{"cv_folds", o.cv_folds},       {"gp_restarts", o.gp_restarts},
                      {"gp_max_iterations", o.gp_max_iterations}, {"gp_theta_lo", o.gp_theta_lo},
                      {"gp_theta_hi", o.gp_theta_hi},             {"rf_trees", o.rf_trees},
                      {"rf_cv_trees", o.rf_cv_trees}, {"ann_max_epochs", o.ann_max_epochs}};
  return j;
}

std::uint64_t design_seed(std::uint64_t master_seed, DesignId id) {
  return derive_seed({master_seed, hash_string("design"), hash_string(to_string(id))});
}

std::uint64_t cell_seed(std::uint64_t master_seed, DesignId d, FunctionId f, const NoiseSpec& n, ModelId m,
                        int rep) {
  return derive_seed({master_seed, hash_string(to_string(d)), hash_string(to_string(f)), hash_string(noise_id(n)),
                      hash_string(to_string(m)), static_cast<std::uint64_t>(rep)});
}

std::uint64_t noise_seed(std::uint64_t master_seed, DesignId d, FunctionId f, const NoiseSpec& n, int rep) {
  return derive_seed({master_seed, hash_string("noise"), hash_string(to_string(d)), hash_string(to_string(f)),
                      hash_string(noise_id(n)), static_cast<std::uint64_t>(rep)});
}

std::size_t cell_count(const StudyConfig& cfg) {
  return cfg.designs.size() * cfg.functions.size() * cfg.noises.size() * cfg.models.size() *
         static_cast<std::size_t>(cfg.n_reps);
}

StudyContext prepare_study(const StudyConfig& cfg, const std::filesystem::path& cache_dir) {
  if (cfg.n_reps < 1) throw ConfigError("n_reps must be >= 1");
  StudyContext ctx;
  ctx.cfg = cfg;
  for (DesignId d : cfg.designs) ctx.designs.emplace(d, generate(d, design_seed(cfg.master_seed, d)));
  for (FunctionId f : cfg.functions) {
    const auto& p = cfg.standardization;
    const StandardizationConstants c =
        cache_dir.empty() ? estimate_standardization(f, p.n_designs, p.n_points_per_design, p.master_seed)
                          : cached_standardization(cache_dir, f, p);
    ctx.constants.emplace(f, c);
    ctx.test_sets.emplace(
        f, make_test_set(f, cfg.test_set_size, derive_seed({cfg.master_seed, hash_string("test-set")}), c));
  }
  return ctx;
}

RmseRecord run_cell(const DesignMatrix& design, FunctionId fn, const NoiseSpec& noise, ModelId model, int rep,
                    const StudyConfig& cfg, const StandardizationConstants& c, const TestSet& test) {
  RmseRecord r;
  r.design = design.design_id;
  r.function = fn;
  r.noise = noise;
  r.model = model;
  r.rep = rep;
  r.cell_seed = cell_seed(cfg.master_seed, design.design_id, fn, noise, model, rep);
  try {
    const Eigen::VectorXd f = evaluate_rows(fn, design.points);
    Eigen::VectorXd y = apply_noise(f, f, noise, c, noise_seed(cfg.master_seed, design.design_id, fn, noise, rep));
    for (auto& v : y) v = standardize(v, c);
    const FittedModel m = fit(model, design.points, y, derive_seed({r.cell_seed, hash_string("fit")}), cfg.fit_options);
    const double e = rmse(m.predict(test.inputs), test.responses);
    if (!std::isfinite(e)) throw Error("non-finite test RMSE");
    r.test_rmse = e;
  } catch (const RankDeficient&) {
    r.status = "rank_deficient";
  } catch (const std::exception& e) {
    std::string cause = e.what();
    std::replace(cause.begin(), cause.end(), ',', ';');
    std::replace(cause.begin(), cause.end(), '\n', ' ');
    r.status = "error:" + cause;
  }
  return r;
}

RmseRecord run_cell(const DesignMatrix& design, FunctionId fn, const NoiseSpec& noise, ModelId model, int rep,
                    const StudyConfig& cfg) {
  const auto& p = cfg.standardization;
  const auto c = estimate_standardization(fn, p.n_designs, p.n_points_per_design, p.master_seed);
  const auto test = make_test_set(fn, cfg.test_set_size, derive_seed({cfg.master_seed, hash_string("test-set")}), c);
  return run_cell(design, fn, noise, model, rep, cfg, c, test);
}

std::string csv_header() { return "design,function,noise_kind,noise_param,model,rep,test_rmse,status,cell_seed"; }

std::string to_csv_row(const RmseRecord& r) {
  std::string s;
  s += to_string(r.design);
  s += ',';
  s += to_string(r.function);
  s += ',';
  s += kind_name(r.noise.kind);
  s += ',';
  s += fmt_double(noise_param(r.noise), "%g");
  s += ',';
  s += to_string(r.model);
  s += ',';
  s += std::to_string(r.rep);
  s += ',';
  s += r.test_rmse ? fmt_double(*r.test_rmse) : "NA";
  s += ',';
  s += r.status;
  s += ',';
  s += std::to_string(r.cell_seed);
  return s;
}

std::optional<RmseRecord> parse_csv_row(const std::string& line) {
  const auto f = split(line, ',');
  if (f.size() != 9) return std::nullopt;
  RmseRecord r;
  try {
    auto d = parse_design(f[0]);
    auto fn = parse_function(f[1]);
    auto m = parse_model(f[4]);
    if (!d || !fn || !m) return std::nullopt;
    r.design = *d;
    r.function = *fn;
    r.model = *m;
    const double param = std::stod(f[3]);
    if (f[2] == "none") r.noise = NoiseSpec::none();
    else if (f[2] == "homoscedastic") r.noise = NoiseSpec::homoscedastic(param);
    else if (f[2] == "heteroscedastic") r.noise = NoiseSpec::heteroscedastic(param);
    else return std::nullopt;
    std::size_t used = 0;
    r.rep = std::stoi(f[5], &used);
    if (used != f[5].size()) return std::nullopt;
    if (f[6] != "NA") r.test_rmse = std::stod(f[6]);
    r.status = f[7];
    if (r.status.empty() || (r.status == "ok") != r.test_rmse.has_value()) return std::nullopt;
    r.cell_seed = std::stoull(f[8], &used);
    if (used != f[8].size()) return std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return r;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<RmseRecord>& records) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << csv_header() << '\n';
    for (const auto& r : records) out << to_csv_row(r) << '\n';
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<RmseRecord> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<RmseRecord> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      if (line == csv_header()) continue;
    }
    if (auto r = parse_csv_row(line)) out.push_back(*r);
  }
  return out;
}

std::vector<RmseRecord> run_study(const StudyConfig& cfg, const RunOptions& opts) {
  return run_study(prepare_study(cfg, opts.cache_dir), opts);
}

std::vector<RmseRecord> run_study(const StudyContext& ctx, const RunOptions& opts) {
  const StudyConfig& cfg = ctx.cfg;

  struct Cell {
    DesignId d;
    FunctionId f;
    NoiseSpec n;
    ModelId m;
    int rep;
  };
  std::vector<Cell> cells;
  cells.reserve(cell_count(cfg));
  for (auto d : cfg.designs)
    for (auto f : cfg.functions)
      for (const auto& n : cfg.noises)
        for (auto m : cfg.models)
          for (int rep = 0; rep < cfg.n_reps; ++rep) cells.push_back({d, f, n, m, rep});

  std::map<CellKey, RmseRecord> done;
  std::ofstream journal;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const auto jpath = opts.out_dir / "journal.csv";
    if (opts.resume && std::filesystem::exists(jpath)) {
      for (const auto& r : read_results_csv(jpath))
        if (in_config(cfg, r)) done.insert_or_assign(key_of(cfg, r), r);
      // Rewrite the journal without torn or foreign lines before appending.
      std::vector<RmseRecord> kept;
      for (const auto& [k, r] : done) kept.push_back(r);
      write_results_csv(jpath, kept);
      journal.open(jpath, std::ios::app);
    } else {
      journal.open(jpath, std::ios::trunc);
      journal << csv_header() << '\n';
    }
    if (!journal) throw Error("cannot open journal in " + opts.out_dir.string());
    journal.flush();
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    const CellKey k{index_of(cfg.designs, c.d), index_of(cfg.functions, c.f), index_of(cfg.noises, c.n),
                    index_of(cfg.models, c.m), c.rep};
    if (!done.count(k)) todo.push_back(i);
  }

  std::mutex sink;
  std::size_t completed = done.size();
  const int threads = opts.jobs > 0 ? opts.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t t = 0; t < todo.size(); ++t) {
    const Cell& c = cells[todo[t]];
    RmseRecord r = run_cell(ctx.designs.at(c.d), c.f, c.n, c.m, c.rep, cfg, ctx.constants.at(c.f),
                            ctx.test_sets.at(c.f));
    std::lock_guard<std::mutex> lock(sink);
    if (journal.is_open()) {
      journal << to_csv_row(r) << '\n';
      journal.flush();
    }
    ++completed;
    if (opts.on_record) opts.on_record(r, completed, cells.size());
    done.insert_or_assign(key_of(cfg, r), std::move(r));
  }

  std::vector<RmseRecord> records;
  records.reserve(done.size());
  for (auto& [k, r] : done) records.push_back(std::move(r));
  if (!opts.out_dir.empty()) write_results_csv(opts.out_dir / "results.csv", records);
  return records;
}

}  // namespace doebench
