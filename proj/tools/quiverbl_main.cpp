// Command-line front door for the quiver BL solver library: datum I/O,
// command dispatch, deterministic machine-readable reports.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "quiverbl/quiverbl.hpp"

namespace {

using quiverbl::Json;

constexpr int kExitOk = 0;
constexpr int kExitInconclusive = 2;
constexpr int kExitInputError = 3;
constexpr int kExitNumericError = 4;

struct RunConfig {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  double singularity_floor = 1e-12;
  std::uint64_t seed = 0;
  bool json = false;

  void validate() const {
    if (!(tolerance > 0.0))
      throw quiverbl::Error(quiverbl::ErrorCode::InvalidInput, "tolerance must be positive");
    if (max_iterations < 1)
      throw quiverbl::Error(quiverbl::ErrorCode::InvalidInput, "max iterations must be >= 1");
  }

  quiverbl::ScalingConfig scaling() const {
    quiverbl::ScalingConfig cfg;
    cfg.tolerance = tolerance;
    cfg.max_iterations = max_iterations;
    cfg.singularity_floor = singularity_floor;
    return cfg;
  }

  quiverbl::NumericConfig numeric() const {
    quiverbl::NumericConfig cfg;
    cfg.singularity_floor = singularity_floor;
    return cfg;
  }

  Json to_json() const {
    return Json{{"tolerance", tolerance},
                {"max_iterations", max_iterations},
                {"singularity_floor", singularity_floor},
                {"seed", seed},
                {"output_mode", json ? "json" : "human"}};
  }
};

// QUIVERBL_CONFIG may point at a JSON file supplying defaults; command-line
// flags override it.
RunConfig defaults_from_environment() {
  RunConfig cfg;
  const char* path = std::getenv("QUIVERBL_CONFIG");
  if (path == nullptr || *path == '\0') return cfg;
  const Json j = quiverbl::io::load_json(path);
  if (j.contains("tolerance")) cfg.tolerance = j.at("tolerance").get<double>();
  if (j.contains("max_iterations")) cfg.max_iterations = j.at("max_iterations").get<int>();
  if (j.contains("singularity_floor"))
    cfg.singularity_floor = j.at("singularity_floor").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

void print_human(const Json& j, const std::string& prefix = "") {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object())
      print_human(value, name);
    else
      std::cout << name << ": " << value.dump() << "\n";
  }
}

void emit(const RunConfig& cfg, const std::string& command, const std::string& input,
          Json result) {
  Json report;
  report["command"] = command;
  if (!input.empty()) report["input"] = input;
  report["config"] = cfg.to_json();
  report["result"] = std::move(result);
  if (cfg.json)
    std::cout << report.dump(2) << "\n";
  else
    print_human(report);
}

Json json_number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
  return Json(v);
}

quiverbl::QuiverDatum load_valid_datum(const std::string& path) {
  quiverbl::QuiverDatum datum = quiverbl::io::load_datum(path);
  const quiverbl::ValidationReport report = quiverbl::validate_datum(datum);
  if (!report.ok())
    throw quiverbl::Error(quiverbl::ErrorCode::InvalidInput,
                          path + ": " + report.violations.front());
  return datum;
}

Json certificate_to_json(const quiverbl::SubrepCertificate& cert) {
  Json j;
  j["source_subsets"] = Json::array();
  for (const auto& s : cert.source_subsets) j["source_subsets"].push_back(s);
  j["sink_subsets"] = Json::array();
  for (const auto& t : cert.sink_subsets) j["sink_subsets"].push_back(t);
  j["lhs"] = cert.lhs;
  j["rhs"] = cert.rhs;
  j["slack"] = cert.slack;
  return j;
}

int cmd_validate(const RunConfig& cfg, const std::string& path) {
  const quiverbl::QuiverDatum datum = quiverbl::io::load_datum(path);
  const quiverbl::ValidationReport report = quiverbl::validate_datum(datum);
  emit(cfg, "validate", path,
       Json{{"valid", report.ok()}, {"violations", report.violations}});
  return report.ok() ? kExitOk : kExitInputError;
}

int cmd_objective(const RunConfig& cfg, const std::string& path, const std::string& y_path) {
  const quiverbl::QuiverDatum datum = load_valid_datum(path);
  const quiverbl::PdTuple y = quiverbl::io::pd_tuple_from_json(quiverbl::io::load_json(y_path));
  const quiverbl::LogValue value = quiverbl::objective_value(datum, y, cfg.numeric());
  emit(cfg, "objective", path,
       Json{{"value", value.value}, {"log_value", json_number_or_inf(value.log)}});
  return kExitOk;
}

int cmd_geometric(const RunConfig& cfg, const std::string& path, bool tol_given) {
  const quiverbl::QuiverDatum datum = load_valid_datum(path);
  const quiverbl::GeometricResidual res = quiverbl::geometric_residual(datum);
  const double tol = tol_given ? cfg.tolerance : quiverbl::NumericConfig{}.geometric_tol;
  emit(cfg, "geometric", path,
       Json{{"source_residual", res.source},
            {"sink_residual", res.sink},
            {"max_residual", res.max},
            {"tolerance", tol},
            {"is_geometric", res.is_geometric(tol)}});
  return kExitOk;
}

Json scaling_result_json(const quiverbl::ScalingResult& run) {
  Json j;
  j["status"] = quiverbl::to_string(run.status);
  j["stalled"] = run.stalled;
  j["iterations"] = run.iterations;
  j["final_residual"] = run.residual_history.back();
  j["log_cap"] = run.log_cap;
  j["capacity_estimate"] = run.capacity_estimate();
  if (run.status == quiverbl::ScalingStatus::Collapsed) {
    j["collapse_vertex"] = run.collapse_vertex;
    j["collapse_eigenvalue"] = run.collapse_eigenvalue;
  }
  return j;
}

int cmd_scale(const RunConfig& cfg, const std::string& path, const std::string& out_path) {
  const quiverbl::QuiverDatum datum = load_valid_datum(path);
  const quiverbl::ScalingResult run = quiverbl::scale(datum, cfg.scaling(), cfg.numeric());
  emit(cfg, "scale", path, scaling_result_json(run));
  if (!out_path.empty()) quiverbl::io::save_json(out_path, quiverbl::io::datum_to_json(run.final_datum));
  return run.status == quiverbl::ScalingStatus::MaxIterations ? kExitInconclusive : kExitOk;
}

int cmd_capacity(const RunConfig& cfg, const std::string& path) {
  const quiverbl::QuiverDatum datum = load_valid_datum(path);
  const quiverbl::CapacityResult result = quiverbl::capacity(datum, cfg.scaling(), cfg.numeric());
  Json j;
  j["cap"] = result.cap.value;
  j["log_cap"] = json_number_or_inf(result.cap.log);
  j["bl"] = json_number_or_inf(quiverbl::bl_constant(result.cap.value));
  j["status"] = quiverbl::to_string(result.status);
  j["conclusive"] = result.conclusive;
  j["iterations"] = result.run.iterations;
  emit(cfg, "capacity", path, std::move(j));
  return result.conclusive ? kExitOk : kExitInconclusive;
}

int cmd_oracle(const RunConfig& cfg, const std::string& path, bool tol_given, bool iters_given) {
  const quiverbl::QuiverDatum datum = load_valid_datum(path);
  quiverbl::OracleConfig oracle_cfg;
  oracle_cfg.seed = cfg.seed;
  if (tol_given) oracle_cfg.gradient_tol = cfg.tolerance;
  if (iters_given) oracle_cfg.max_steps = cfg.max_iterations;
  const quiverbl::OracleResult result = quiverbl::oracle_minimize(datum, oracle_cfg, cfg.numeric());
  emit(cfg, "oracle", path,
       Json{{"best_value", result.best_value.value},
            {"log_best_value", json_number_or_inf(result.best_value.log)},
            {"restarts_used", result.restarts_used},
            {"gradient_norm", json_number_or_inf(result.converged_gradient_norm)},
            {"collapsed", result.collapsed}});
  return kExitOk;
}

int cmd_feasible(const RunConfig& cfg, const std::string& path) {
  const quiverbl::QuiverDatum datum = quiverbl::io::load_datum(path);
  quiverbl::ClassifyConfig classify_cfg;
  classify_cfg.scaling = cfg.scaling();
  const quiverbl::FeasibilityReport report =
      quiverbl::classify_feasibility(datum, classify_cfg, cfg.numeric());
  Json j;
  j["classification"] = quiverbl::to_string(report.verdict);
  j["reason"] = report.reason;
  j["capacity_estimate"] = report.capacity_estimate;
  if (report.certificate) j["certificate"] = certificate_to_json(*report.certificate);
  if (report.scaling) j["scaling"] = scaling_result_json(*report.scaling);
  emit(cfg, "feasible", path, std::move(j));
  return report.verdict == quiverbl::Feasibility::Inconclusive ? kExitInconclusive : kExitOk;
}

int cmd_subreps(const RunConfig& cfg, const std::string& path) {
  const quiverbl::QuiverDatum datum = load_valid_datum(path);
  const std::vector<quiverbl::SubrepCertificate> certs =
      quiverbl::coordinate_subrep_scan(datum, {}, cfg.numeric());
  Json list = Json::array();
  for (const auto& cert : certs) list.push_back(certificate_to_json(cert));
  emit(cfg, "subreps", path,
       Json{{"violations", std::move(list)}, {"violation_count", certs.size()}});
  return kExitOk;
}

int cmd_degenerate(const RunConfig& cfg, const std::string& path,
                   const std::string& filtration_path) {
  const quiverbl::QuiverDatum datum = load_valid_datum(path);
  const quiverbl::Filtration filtration =
      quiverbl::io::filtration_from_json(quiverbl::io::load_json(filtration_path), filtration_path);
  quiverbl::DegenerationConfig degen_cfg;
  degen_cfg.scaling = cfg.scaling();
  const quiverbl::DegenerationReport report =
      quiverbl::degeneration_check(datum, filtration, degen_cfg, cfg.numeric());
  Json samples = Json::array();
  for (std::size_t i = 0; i < report.t_samples.size(); ++i)
    samples.push_back(Json{{"t", report.t_samples[i]},
                           {"cap", report.capacities[i].value},
                           {"status", quiverbl::to_string(report.statuses[i])}});
  Json j;
  j["samples"] = std::move(samples);
  j["diag_cap"] = report.diag_capacity.value;
  j["diag_status"] = quiverbl::to_string(report.diag_status);
  j["det_balance_residual"] = report.det_balance_residual;
  j["max_relative_deviation"] = report.max_relative_deviation;
  j["conclusive"] = report.conclusive;
  emit(cfg, "degenerate", path, std::move(j));
  return report.conclusive ? kExitOk : kExitInconclusive;
}

int cmd_random(const RunConfig& cfg, const std::string& shape_spec, bool geometric,
               const std::string& out_path) {
  const quiverbl::io::ShapeSpec shape = quiverbl::io::parse_shape_spec(shape_spec);
  const quiverbl::QuiverDatum datum = quiverbl::random_datum(
      shape.quiver, shape.dims, shape.weights, cfg.seed,
      geometric ? quiverbl::RandomMode::GeometricAttempt : quiverbl::RandomMode::Generic,
      cfg.scaling(), cfg.numeric());
  const Json j = quiverbl::io::datum_to_json(datum);
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    quiverbl::io::save_json(out_path, j);
  return kExitOk;
}

int exit_code_for(const quiverbl::Error& e) {
  switch (e.code()) {
    case quiverbl::ErrorCode::NumericError:
    case quiverbl::ErrorCode::SingularMatrix:
      return kExitNumericError;
    case quiverbl::ErrorCode::BudgetExceeded:
    case quiverbl::ErrorCode::GenerationFailed:
    case quiverbl::ErrorCode::NotConverged:
      return kExitInconclusive;
    default:
      return kExitInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacities, BL constants and stability certificates for weighted "
               "bipartite-quiver data"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  try {
    cfg = defaults_from_environment();
  } catch (const quiverbl::Error& e) {
    std::cerr << "error reading QUIVERBL_CONFIG: " << e.what() << "\n";
    return kExitInputError;
  }

  auto* tol_opt = app.add_option("--tol", cfg.tolerance, "Convergence / decision tolerance");
  auto* iters_opt = app.add_option("--max-iters", cfg.max_iterations, "Iteration budget");
  app.add_option("--floor", cfg.singularity_floor, "Relative singularity floor");
  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_flag("--json", cfg.json, "Emit the report as a single JSON document");

  std::string input, y_path, filtration_path, out_path, shape_spec;
  bool geometric_mode = false;

  auto* validate = app.add_subcommand("validate", "Structural checks on a datum file");
  validate->add_option("file", input)->required();

  auto* objective = app.add_subcommand("objective", "Evaluate the capacity objective at Y");
  objective->add_option("file", input)->required();
  objective->add_option("--y", y_path, "PD tuple file")->required();

  auto* geometric = app.add_subcommand("geometric", "Geometric-position residuals");
  geometric->add_option("file", input)->required();

  auto* scale = app.add_subcommand("scale", "Run the alternating scaling solver");
  scale->add_option("file", input)->required();
  scale->add_option("--out", out_path, "Write the scaled datum here");

  auto* capacity = app.add_subcommand("capacity", "Capacity and BL constant via scaling");
  capacity->add_option("file", input)->required();

  auto* oracle = app.add_subcommand("oracle", "Independent first-order minimization");
  oracle->add_option("file", input)->required();

  auto* feasible = app.add_subcommand("feasible", "Feasibility classification with evidence");
  feasible->add_option("file", input)->required();

  auto* subreps = app.add_subcommand("subreps", "Coordinate subrepresentation scan");
  subreps->add_option("file", input)->required();

  auto* degenerate = app.add_subcommand("degenerate", "Degeneration check along lambda(t)");
  degenerate->add_option("file", input)->required();
  degenerate->add_option("--filtration", filtration_path, "Filtration file")->required();

  auto* random = app.add_subcommand("random", "Generate a datum");
  random->add_option("--shape", shape_spec, "Shape spec, e.g. d:2;n:1,1;p:1,1")->required();
  random->add_flag("--geometric", geometric_mode, "Scale the draw into geometric position");
  random->add_option("--out", out_path, "Write the datum here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.validate();
    if (validate->parsed()) return cmd_validate(cfg, input);
    if (objective->parsed()) return cmd_objective(cfg, input, y_path);
    if (geometric->parsed()) return cmd_geometric(cfg, input, tol_opt->count() > 0);
    if (scale->parsed()) return cmd_scale(cfg, input, out_path);
    if (capacity->parsed()) return cmd_capacity(cfg, input);
    if (oracle->parsed())
      return cmd_oracle(cfg, input, tol_opt->count() > 0, iters_opt->count() > 0);
    if (feasible->parsed()) return cmd_feasible(cfg, input);
    if (subreps->parsed()) return cmd_subreps(cfg, input);
    if (degenerate->parsed()) return cmd_degenerate(cfg, input, filtration_path);
    if (random->parsed()) return cmd_random(cfg, shape_spec, geometric_mode, out_path);
  } catch (const quiverbl::Error& e) {
    const int code = exit_code_for(e);
    if (cfg.json)
      std::cout << Json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}},
                        {"config", cfg.to_json()}}
                       .dump(2)
                << "\n";
    else
      std::cerr << "error: " << e.what() << "\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericError;
  }
  return kExitOk;
}
