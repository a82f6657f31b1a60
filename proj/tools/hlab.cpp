#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hlab/hlab.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

int run_command(const std::string& path, const std::string& output_override) {
  hlab::StudyConfig cfg = hlab::load_config(path);
  if (!output_override.empty()) cfg.output = output_override;
  const hlab::StudyReport rep = hlab::run_study(cfg);
  std::cout << "study " << rep.kind << " config " << rep.config_hash << "\n";
  std::cout << hlab::to_csv(rep);
  for (std::size_t i = 0; i < rep.row_errors.size(); ++i) {
    if (!rep.row_errors[i].empty()) std::cout << "row " << i << " failed: " << rep.row_errors[i] << "\n";
  }
  for (const auto& v : rep.verdicts) std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << " (" << v.detail << ")\n";
  for (const auto& [k, v] : rep.constants) std::cout << "constant " << k << " = " << hlab::format_number(v) << "\n";
  if (!cfg.output.empty()) std::cout << "report written to " << cfg.output << "\n";
  return rep.passed() ? kExitPass : kExitAssertion;
}

int capacity_command(int n, double r, const std::string& method) {
  if (method != "analytic" && method != "numeric" && method != "both") {
    throw hlab::Error(hlab::ErrorKind::Config, "method must be analytic, numeric or both");
  }
  const double exact = hlab::harmonic_capacity(r, n);
  if (method != "numeric") std::cout << "analytic " << hlab::format_number(exact) << "\n";
  if (method != "analytic") {
    const double num = hlab::harmonic_capacity(r, n, hlab::CapacityMethod::Numeric);
    std::cout << "numeric " << hlab::format_number(num) << " rel_err " << hlab::format_number(std::abs(num - exact) / exact)
              << "\n";
  }
  return kExitPass;
}

int cell_command(int n, double alpha, double eps, const std::string& k_text, double c0, double h, double tol,
                 const std::string& export_stem) {
  const hlab::RegimeSpec spec = hlab::classify_regime(n, alpha, c0);
  const double a = spec.hole_radius(eps);
  const double k = k_text == "auto" ? hlab::harmonic_capacity(c0, n) : hlab::parse_number(k_text, "k");
  if (h <= 0.0) h = hlab::HRule{}(eps, a);
  const auto sol = hlab::solve_cell_corrector({n, eps, a, k, h}, tol);
  std::cout << "regime " << hlab::to_string(spec.regime) << "\n"
            << "hole_radius " << hlab::format_number(a) << "\n"
            << "h " << hlab::format_number(h) << "\n"
            << "k " << hlab::format_number(k) << "\n"
            << "min_w " << hlab::format_number(sol.min_w) << "\n"
            << "hole_flux " << hlab::format_number(sol.hole_flux) << "\n"
            << "residual " << hlab::format_number(sol.residual) << "\n"
            << "iterations " << sol.iterations << "\n";
  if (!export_stem.empty()) {
    hlab::export_grid(*sol.w.grid, export_stem);
    std::cout << "grid written to " << export_stem << ".json/.mask\n";
  }
  return kExitPass;
}

int report_command(const std::string& dir, const std::string& format) {
  const auto path = std::filesystem::path(dir) / "report.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(hlab::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw hlab::Error(hlab::ErrorKind::IO, "cannot parse " + path.string());
  }
  const hlab::StudyReport rep = hlab::report_from_json(j);
  const hlab::ReportFormat f = format == "csv"    ? hlab::ReportFormat::Csv
                               : format == "json" ? hlab::ReportFormat::Json
                                                  : hlab::ReportFormat::PlotData;
  hlab::emit_report(rep, f, dir);
  std::cout << hlab::render(rep, f);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogenization lab: perforated-domain studies"};
  app.set_version_flag("--version", std::string(HLAB_VERSION));
  app.require_subcommand(1);

  std::string config_path, output;
  auto* run = app.add_subcommand("run", "Run a study from a key=value config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--output", output, "Override the output directory");

  int cap_n = 3;
  double cap_r = 1.0;
  std::string cap_method = "both";
  auto* cap = app.add_subcommand("capacity", "Harmonic capacity of a ball");
  cap->add_option("--n", cap_n, "Dimension")->capture_default_str();
  cap->add_option("--r", cap_r, "Radius")->capture_default_str();
  cap->add_option("--method", cap_method, "analytic, numeric or both")->capture_default_str();

  int cell_n = 3;
  double cell_alpha = 3.0, cell_eps = 0.25, cell_c0 = 1.0, cell_h = 0.0, cell_tol = 1e-8;
  std::string cell_k = "auto", cell_export;
  auto* cell = app.add_subcommand("cell", "Solve the periodic cell corrector");
  cell->set_help_flag("--help", "Print this help message and exit");
  cell->add_option("--n", cell_n, "Dimension")->capture_default_str();
  cell->add_option("--alpha", cell_alpha, "Hole exponent: a = c0 eps^alpha")->capture_default_str();
  cell->add_option("--eps", cell_eps, "Cell period")->capture_default_str();
  cell->add_option("--k", cell_k, "Corrector constant or 'auto' (capacity of B_c0)")->capture_default_str();
  cell->add_option("--c0", cell_c0, "Hole prefactor")->capture_default_str();
  cell->add_option("--h", cell_h, "Grid spacing (default: 4 cells per radius)");
  cell->add_option("--tol", cell_tol, "Solver tolerance")->capture_default_str();
  cell->add_option("--export", cell_export, "Write <stem>.json and <stem>.mask for the cell grid");

  std::string report_dir, report_format = "csv";
  auto* report = app.add_subcommand("report", "Render a written report");
  report->add_option("dir", report_dir, "Study output directory")->required();
  report->add_option("--format", report_format, "csv, json or plot")
      ->check(CLI::IsMember({"csv", "json", "plot"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*run) return run_command(config_path, output);
    if (*cap) return capacity_command(cap_n, cap_r, cap_method);
    if (*cell) return cell_command(cell_n, cell_alpha, cell_eps, cell_k, cell_c0, cell_h, cell_tol, cell_export);
    if (*report) return report_command(report_dir, report_format);
  } catch (const hlab::Error& e) {
    std::cerr << "hlab: " << e.what() << "\n";
    return e.is_config_error() ? kExitConfig : kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "hlab: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
