#include "doebench/funcs.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

namespace doebench {

namespace {

using std::numbers::pi;

// Native formulas take the full-dimensional input vector in the published
// variable order.

double borehole(const double* v) {
  const double rw = v[0], r = v[1], tu = v[2], hu = v[3], tl = v[4], hl = v[5], l = v[6], kw = v[7];
  const double lg = std::log(r / rw);
  return 2.0 * pi * tu * (hu - hl) / (lg * (1.0 + 2.0 * l * tu / (lg * rw * rw * kw) + tu / tl));
}

double otl_circuit(const double* v) {
  const double rb1 = v[0], rb2 = v[1], rf = v[2], rc1 = v[3], rc2 = v[4], beta = v[5];
  const double vb1 = 12.0 * rb2 / (rb1 + rb2);
  const double g = beta * (rc2 + 9.0);
  const double den = g + rf;
  return (vb1 + 0.74) * g / den + 11.35 * rf / den + 0.74 * rf * g / (den * rc1);
}

double piston(const double* v) {
  const double m = v[0], s = v[1], v0 = v[2], k = v[3], p0 = v[4], ta = v[5], t0 = v[6];
  const double a = p0 * s + 19.62 * m - k * v0 / s;
  const double vol = s / (2.0 * k) * (std::sqrt(a * a + 4.0 * k * p0 * v0 / t0 * ta) - a);
  return 2.0 * pi * std::sqrt(m / (k + s * s * p0 * v0 / t0 * ta / (vol * vol)));
}

double robot_arm(const double* v) {
  double u = 0.0, w = 0.0, angle = 0.0;
  for (int i = 0; i < 4; ++i) {
    angle += v[i];
    u += v[4 + i] * std::cos(angle);
    w += v[4 + i] * std::sin(angle);
  }
  return std::sqrt(u * u + w * w);
}

double rosenbrock(const double* v) {
  double f = 0.0;
  for (int i = 0; i + 1 < kDim; ++i) {
    const double a = v[i + 1] - v[i] * v[i];
    const double b = v[i] - 1.0;
    f += 100.0 * a * a + b * b;
  }
  return f;
}

double wing_weight(const double* v) {
  const double sw = v[0], wfw = v[1], ar = v[2], lam = v[3] * pi / 180.0, q = v[4], taper = v[5],
               tc = v[6], nz = v[7], wdg = v[8], wp = v[9];
  const double c = std::cos(lam);
  return 0.036 * std::pow(sw, 0.758) * std::pow(wfw, 0.0035) * std::pow(ar / (c * c), 0.6) *
             std::pow(q, 0.006) * std::pow(taper, 0.04) * std::pow(100.0 * tc / c, -0.3) *
             std::pow(nz * wdg, 0.49) +
         sw * wp;
}

struct Definition {
  double (*formula)(const double*);
  std::vector<Bounds> full_bounds;
  std::array<int, kDim> active;  // native indices driven by the normalized input
  bool square_warp = false;
};

// Active sets are the six largest total Sobol' indices (tools/sobol_restriction.py).
const Definition& definition(FunctionId fn) {
  static const Definition kBorehole{borehole,
                                    {{0.05, 0.15},
                                     {100, 50000},
                                     {63070, 115600},
                                     {990, 1110},
                                     {63.1, 116},
                                     {700, 820},
                                     {1120, 1680},
                                     {9855, 12045}},
                                    {0, 3, 4, 5, 6, 7}};
  static const Definition kOtl{otl_circuit,
                               {{50, 150}, {25, 70}, {0.5, 3}, {1.2, 2.5}, {0.25, 1.2}, {50, 300}},
                               {0, 1, 2, 3, 4, 5}};
  static const Definition kPiston{piston,
                                  {{30, 60},
                                   {0.005, 0.020},
                                   {0.002, 0.010},
                                   {1000, 5000},
                                   {90000, 110000},
                                   {290, 296},
                                   {340, 360}},
                                  {0, 1, 2, 3, 4, 6}};
  static const Definition kPistonMod{kPiston.formula, kPiston.full_bounds, kPiston.active, true};
  static const Definition kRobot{robot_arm,
                                 {{0, 2 * pi}, {0, 2 * pi}, {0, 2 * pi}, {0, 2 * pi},
                                  {0, 1}, {0, 1}, {0, 1}, {0, 1}},
                                 {1, 2, 3, 4, 6, 7}};
  static const Definition kRosen{rosenbrock,
                                 {{-5, 10}, {-5, 10}, {-5, 10}, {-5, 10}, {-5, 10}, {-5, 10}},
                                 {0, 1, 2, 3, 4, 5}};
  static const Definition kWing{wing_weight,
                                {{150, 200},
                                 {220, 300},
                                 {6, 10},
                                 {-10, 10},
                                 {16, 45},
                                 {0.5, 1},
                                 {0.08, 0.18},
                                 {2.5, 6},
                                 {1700, 2500},
                                 {0.025, 0.08}},
                                {0, 2, 6, 7, 8, 9}};
  switch (fn) {
    case FunctionId::Borehole: return kBorehole;
    case FunctionId::OtlCircuit: return kOtl;
    case FunctionId::Piston: return kPiston;
    case FunctionId::PistonMod: return kPistonMod;
    case FunctionId::RobotArm: return kRobot;
    case FunctionId::Rosenbrock: return kRosen;
    case FunctionId::WingWeight: return kWing;
  }
  throw Error("unknown function id");
}

constexpr double kCoordTol = 1e-12;

}  // namespace

std::string_view to_string(FunctionId fn) {
  switch (fn) {
    case FunctionId::Borehole: return "Borehole";
    case FunctionId::OtlCircuit: return "OtlCircuit";
    case FunctionId::Piston: return "Piston";
    case FunctionId::PistonMod: return "PistonMod";
    case FunctionId::RobotArm: return "RobotArm";
    case FunctionId::Rosenbrock: return "Rosenbrock";
    case FunctionId::WingWeight: return "WingWeight";
  }
  return "?";
}

std::optional<FunctionId> parse_function(std::string_view name) {
  for (auto fn : kAllFunctions)
    if (to_string(fn) == name) return fn;
  return std::nullopt;
}

std::vector<Bounds> native_bounds(FunctionId fn) {
  const auto& def = definition(fn);
  std::vector<Bounds> out;
  out.reserve(kDim);
  for (int idx : def.active) out.push_back(def.full_bounds[static_cast<std::size_t>(idx)]);
  return out;
}

double evaluate(FunctionId fn, std::span<const double> x_norm) {
  if (x_norm.size() != kDim) throw LengthMismatch("evaluate: expected 6 coordinates");
  const auto& def = definition(fn);
  std::array<double, 10> native{};
  for (std::size_t i = 0; i < def.full_bounds.size(); ++i)
    native[i] = 0.5 * (def.full_bounds[i].lo + def.full_bounds[i].hi);
  for (std::size_t k = 0; k < kDim; ++k) {
    double u = x_norm[k];
    if (!(u >= -kCoordTol && u <= 1.0 + kCoordTol))
      throw CoordinateOutOfRange("evaluate: coordinate " + std::to_string(k) + " = " +
                                 std::to_string(u) + " outside [0,1]");
    u = std::clamp(u, 0.0, 1.0);
    if (def.square_warp) u *= u;
    const auto& b = def.full_bounds[static_cast<std::size_t>(def.active[k])];
    native[static_cast<std::size_t>(def.active[k])] = b.lo + u * (b.hi - b.lo);
  }
  return def.formula(native.data());
}

Eigen::VectorXd evaluate_rows(FunctionId fn, const Eigen::MatrixXd& x_norm) {
  Eigen::VectorXd y(x_norm.rows());
  std::array<double, kDim> row{};
  for (Eigen::Index i = 0; i < x_norm.rows(); ++i) {
    for (int k = 0; k < kDim; ++k) row[static_cast<std::size_t>(k)] = x_norm(i, k);
    y(i) = evaluate(fn, row);
  }
  return y;
}

StandardizationConstants estimate_standardization(FunctionId fn, int n_designs, int n_points,
                                                  std::uint64_t seed) {
  if (n_designs < 1 || n_points < 2)
    throw Error("estimate_standardization: need n_designs >= 1 and n_points >= 2");
  const std::uint64_t tag = hash_string(to_string(fn));
  std::vector<detail::DesignMoments> per(static_cast<std::size_t>(n_designs));
  auto f = [fn](std::span<const double> x) { return evaluate(fn, x); };
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n_designs; ++i)
    per[static_cast<std::size_t>(i)] =
        detail::lhd_moments(f, n_points, detail::std_design_seed(seed, tag, i));
  return detail::reduce_moments(per, {n_designs, n_points, seed});
}

namespace serial {

StandardizationConstants estimate_standardization(FunctionId fn, int n_designs, int n_points,
                                                  std::uint64_t seed) {
  if (n_designs < 1 || n_points < 2)
    throw Error("estimate_standardization: need n_designs >= 1 and n_points >= 2");
  const std::uint64_t tag = hash_string(to_string(fn));
  std::vector<detail::DesignMoments> per;
  auto f = [fn](std::span<const double> x) { return evaluate(fn, x); };
  for (int i = 0; i < n_designs; ++i)
    per.push_back(detail::lhd_moments(f, n_points, detail::std_design_seed(seed, tag, i)));
  return detail::reduce_moments(per, {n_designs, n_points, seed});
}

}  // namespace serial

TestSet make_test_set(FunctionId fn, int n, std::uint64_t seed, const StandardizationConstants& c) {
  if (n < 2) throw Error("make_test_set: n must be >= 2");
  Rng rng(derive_seed({seed, hash_string("test-set"), hash_string(to_string(fn))}));
  TestSet ts;
  ts.inputs = random_lhd(n, kDim, rng);
  ts.responses = evaluate_rows(fn, ts.inputs);
  for (Eigen::Index i = 0; i < ts.responses.size(); ++i) ts.responses(i) = standardize(ts.responses(i), c);
  return ts;
}

void save_constants(const std::filesystem::path& path, FunctionId fn,
                    const StandardizationConstants& c) {
  nlohmann::json j;
  j["function"] = std::string(to_string(fn));
  j["y_bar"] = c.y_bar;
  j["sigma_y"] = c.sigma_y;
  j["y_min"] = c.y_min;
  j["y_max"] = c.y_max;
  j["provenance"] = {{"n_designs", c.provenance.n_designs},
                     {"n_points_per_design", c.provenance.n_points_per_design},
                     {"master_seed", c.provenance.master_seed}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::optional<StandardizationConstants> load_constants(const std::filesystem::path& path,
                                                       FunctionId fn,
                                                       const StandardizationProvenance& expected) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("function").get<std::string>() != to_string(fn)) return std::nullopt;
    StandardizationConstants c;
    c.y_bar = j.at("y_bar").get<double>();
    c.sigma_y = j.at("sigma_y").get<double>();
    c.y_min = j.at("y_min").get<double>();
    c.y_max = j.at("y_max").get<double>();
    const auto& p = j.at("provenance");
    c.provenance.n_designs = p.at("n_designs").get<int>();
    c.provenance.n_points_per_design = p.at("n_points_per_design").get<int>();
    c.provenance.master_seed = p.at("master_seed").get<std::uint64_t>();
    if (!(c.provenance == expected)) return std::nullopt;
    return c;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

StandardizationConstants cached_standardization(const std::filesystem::path& dir, FunctionId fn,
                                                const StandardizationProvenance& prov) {
  const auto path = dir / (std::string(to_string(fn)) + ".json");
  if (auto c = load_constants(path, fn, prov)) return *c;
  auto c = estimate_standardization(fn, prov.n_designs, prov.n_points_per_design, prov.master_seed);
  save_constants(path, fn, c);
  return c;
}

}  // namespace doebench
