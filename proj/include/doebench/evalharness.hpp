#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "doebench/cv.hpp"
#include "doebench/designgen.hpp"
#include "doebench/funcs.hpp"
#include "doebench/noise.hpp"
#include "doebench/surrogates.hpp"

namespace doebench {

struct StudyConfig {
  std::string name = "custom";
  std::vector<DesignId> designs;
  std::vector<FunctionId> functions;
  std::vector<NoiseSpec> noises;
  std::vector<ModelId> models;
  int n_reps = 10;
  std::uint64_t master_seed = 1;
  int test_set_size = 1000;
  // Standardization constants do not depend on the study seed so that the
  // cache is shared across studies.
  StandardizationProvenance standardization{kDeskStdDesigns, kDeskStdPoints, 20240501};
  FitOptions fit_options;
};

/// "paper-shape" (12 designs x 7 functions x 8 noises x 6 models x 10 reps)
/// or "desk-scale" (the pinned acceptance preset). Throws ConfigError otherwise.
StudyConfig preset(std::string_view name);

/// Parses a declarative config: {"preset": ..., overrides...}. Unknown keys,
/// unknown identifiers and out-of-range values throw ConfigError.
StudyConfig config_from_json(const nlohmann::json& j);
StudyConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const StudyConfig& cfg);

/// Seed of the design used throughout a study.
std::uint64_t design_seed(std::uint64_t master_seed, DesignId id);

/// Hash of (master_seed, design, function, noise, model, rep).
std::uint64_t cell_seed(std::uint64_t master_seed, DesignId d, FunctionId f, const NoiseSpec& n, ModelId m,
                        int rep);

/// Seed of the noise realization; shared by all models of a (design, function,
/// noise, rep) so that model comparisons are paired.
std::uint64_t noise_seed(std::uint64_t master_seed, DesignId d, FunctionId f, const NoiseSpec& n, int rep);

struct RmseRecord {
  DesignId design = DesignId::CCD;
  FunctionId function = FunctionId::Borehole;
  NoiseSpec noise;
  ModelId model = ModelId::LM;
  int rep = 0;
  std::optional<double> test_rmse;  // missing when the fit failed
  std::string status = "ok";        // ok | rank_deficient | error:<cause>
  std::uint64_t cell_seed = 0;

  bool missing() const { return !test_rmse.has_value(); }
};

/// Shared, immutable per-study inputs.
struct StudyContext {
  StudyConfig cfg;
  std::map<DesignId, DesignMatrix> designs;
  std::map<FunctionId, StandardizationConstants> constants;
  std::map<FunctionId, TestSet> test_sets;
};

/// Builds designs, standardization constants (cached under cache_dir when
/// non-empty) and test sets.
StudyContext prepare_study(const StudyConfig& cfg, const std::filesystem::path& cache_dir = {});

/// Evaluates one cell with precomputed shared inputs. Fit failures become
/// missing records; they are never thrown.
RmseRecord run_cell(const DesignMatrix& design, FunctionId fn, const NoiseSpec& noise, ModelId model, int rep,
                    const StudyConfig& cfg, const StandardizationConstants& c, const TestSet& test);

/// Convenience overload that builds the function's constants and test set.
RmseRecord run_cell(const DesignMatrix& design, FunctionId fn, const NoiseSpec& noise, ModelId model, int rep,
                    const StudyConfig& cfg);

struct RunOptions {
  std::filesystem::path out_dir;    // journal.csv and results.csv; empty keeps records in memory only
  std::filesystem::path cache_dir;  // standardization cache
  int jobs = 0;                     // 0: OpenMP default
  bool resume = false;              // skip cells already in the journal
  std::function<void(const RmseRecord&, std::size_t done, std::size_t total)> on_record;
};

/// Runs every cell of the study. Records are appended to out_dir/journal.csv
/// as they complete; results.csv is rewritten in canonical cell order at the
/// end. The returned records are in canonical order.
std::vector<RmseRecord> run_study(const StudyConfig& cfg, const RunOptions& opts = {});
std::vector<RmseRecord> run_study(const StudyContext& ctx, const RunOptions& opts = {});

/// Canonical order follows the config's lists: design, function, noise, model, rep.
std::size_t cell_count(const StudyConfig& cfg);

// CSV with columns design,function,noise_kind,noise_param,model,rep,test_rmse,status,cell_seed.
std::string csv_header();
std::string to_csv_row(const RmseRecord& r);
std::optional<RmseRecord> parse_csv_row(const std::string& line);
void write_results_csv(const std::filesystem::path& path, const std::vector<RmseRecord>& records);
std::vector<RmseRecord> read_results_csv(const std::filesystem::path& path);

}  // namespace doebench
