#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hlab/hlab.hpp"

using namespace hlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("hlab_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TimeField constant_in_space(const GridPtr& g, const std::vector<double>& values, double dt) {
  TimeField u;
  u.dt = dt;
  for (double v : values) u.snapshots.emplace_back(g, v);
  return u;
}

StudyReport sample_report() {
  StudyReport r;
  r.kind = "corrector";
  r.columns = {"eps", "min_w", "wall_ms"};
  r.add_row({0.5, 0.25, 0.0});
  r.add_row({0.25, -std::numeric_limits<double>::infinity(), 0.0}, "iteration-limit: stalled");
  r.add_row({0.125, std::numeric_limits<double>::quiet_NaN(), 1.5});
  r.verdicts.push_back({"trend", false, "min_w: ..."});
  r.add_constant("C", 1.25);
  r.config_hash = "0123456789abcdef";
  r.version = "test";
  r.seed = 7;
  return r;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndFractions) {
  const auto c = parse_config(
      "# study\n"
      "kind = heat_obstacle   # trailing comment\n"
      "n = 3\n"
      "alpha = 4\n"
      "c0 = 3.5\n"
      "eps = 1/2, 1/3 ,1/4\n"
      "T = 0.05\n"
      "\n"
      "formats = csv, plot\n");
  EXPECT_EQ(c.kind, StudyKind::HeatObstacle);
  EXPECT_EQ(c.alpha, 4.0);
  EXPECT_EQ(c.c0, 3.5);
  ASSERT_EQ(c.eps_list.size(), 3u);
  EXPECT_DOUBLE_EQ(c.eps_list[1], 1.0 / 3.0);
  EXPECT_EQ(c.h, 1.0 / 96);  // kind default
  EXPECT_EQ(c.formats, (std::vector<std::string>{"csv", "plot"}));
  EXPECT_FALSE(c.record_wall_time);
}

TEST(Config, Errors) {
  auto kind_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IO;
  };
  EXPECT_EQ(kind_of("kind = corrector\n"), ErrorKind::Config);  // empty eps list
  EXPECT_EQ(kind_of("kind = corrector\neps = 1/4, 1/2\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("kind = corrector\neps = 1/2\nbogus = 1\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("kind = corrector\neps = 1/2\neps = 1/3\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("kind = corrector\neps = 1/0\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("kind = corrector\neps = 1/2\nn = 2.5\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("kind = nope\neps = 1/2\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("eps = 1/2\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("kind = corrector\neps 1/2\n"), ErrorKind::Config);
  EXPECT_EQ(kind_of("kind = corrector\neps = 1/2\nn = 7\n"), ErrorKind::InvalidDimension);

  StudyConfig c;
  EXPECT_THROW(run_study(c), Error);
}

TEST(Config, HashTracksResultsOnly) {
  const auto a = parse_config("kind = corrector\neps = 1/2, 1/4\n");
  auto b = parse_config("kind = corrector\neps = 0.5, 0.25\noutput = /tmp/x\nthreads = 4\n");
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.alpha = 2.0;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Report, EmptyReportIsHeaderOnlyCsv) {
  StudyReport r;
  r.columns = {"eps", "alpha", "k", "min_w", "hole_flux", "residual", "wall_ms"};
  EXPECT_EQ(to_csv(r), "eps,alpha,k,min_w,hole_flux,residual,wall_ms\n");
}

TEST(Report, JsonRoundTrip) {
  const auto r = sample_report();
  const auto j = to_json(r);
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  const auto back = report_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.kind, r.kind);
  EXPECT_EQ(back.columns, r.columns);
  EXPECT_EQ(back.row_errors, r.row_errors);
  EXPECT_EQ(back.verdicts, r.verdicts);
  EXPECT_EQ(back.constants, r.constants);
  EXPECT_EQ(back.config_hash, r.config_hash);
  EXPECT_EQ(back.seed, r.seed);
  ASSERT_EQ(back.rows.size(), r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      const double x = r.rows[i][c], y = back.rows[i][c];
      EXPECT_TRUE(x == y || (std::isnan(x) && std::isnan(y)));
    }
  }
  EXPECT_EQ(to_csv(back), to_csv(r));
}

TEST(Report, PlotDataColumns) {
  const auto r = sample_report();
  const std::string text = to_plotdata(r);
  EXPECT_NE(text.find("# curves 2\n"), std::string::npos);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string tok;
    std::size_t count = 0;
    while (row >> tok) ++count;
    EXPECT_EQ(count, 3u);
  }
}

TEST(Report, AtomicWrites) {
  const auto dir = scratch_dir("atomic");
  const auto path = emit_report(sample_report(), ReportFormat::Csv, dir);
  EXPECT_TRUE(fs::exists(path));
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  EXPECT_EQ(read_file(path), to_csv(sample_report()));

  // The target is a directory: the rename fails and no temp file is left.
  fs::create_directories(dir / "blocked.csv");
  try {
    emit_report(sample_report(), ReportFormat::Csv, dir, "blocked");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IO);
    EXPECT_NE(std::string(e.what()).find("blocked.csv"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(dir / "blocked.csv.tmp"));
  fs::remove_all(dir);
}

TEST(Diagnostics, DifferenceQuotients) {
  auto g = build_box_grid(2, Box::unit(2), 1.0 / 16, 0.25);
  EXPECT_EQ(difference_quotient_norm(Field(g, 3.0), 0.25, true), 0.0);
  const Field x = sample_field([](const Point& p) { return p[0]; }, g);
  EXPECT_NEAR(difference_quotient_norm(x, 0.25, true), 1.0, 1e-12);
  // Zero extension: the largest jump is x = 1 against 0 outside.
  EXPECT_NEAR(difference_quotient_norm(x, 0.25), 4.0, 1e-12);
  EXPECT_THROW(difference_quotient_norm(x, 0.1), Error);
}

TEST(Diagnostics, LayerOscillationOfRadialSpike) {
  const double h = 1.0 / 32, r_in = 0.125, r_out = 0.25;
  auto g = build_perforated_grid(3, Box::unit(3), 0.5, 0.0625, h);
  Field f(g);
  g->lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) {
    f[i] = 1.0 / std::max(g->distance_to_lattice(mi), r_in);
  });
  EXPECT_NEAR(layer_oscillation(f, r_in, r_out), 1.0 / r_in - 1.0 / r_out, 1e-12);
  EXPECT_EQ(layer_oscillation(Field(g, 2.0), r_in, r_out), 0.0);
  EXPECT_THROW(layer_oscillation(f, 0.3, 0.301), Error);
}

TEST(Diagnostics, TimeDerivative) {
  auto g = build_box_grid(1, Box::unit(1), 0.25);
  EXPECT_EQ(time_derivative_norm(constant_in_space(g, {1.0, 1.0, 1.0}, 0.1)), 0.0);
  EXPECT_NEAR(time_derivative_norm(constant_in_space(g, {0.0, 0.3, 0.6, 0.9}, 0.1)), 3.0, 1e-12);
  EXPECT_THROW(time_derivative_norm(constant_in_space(g, {1.0}, 0.1)), Error);
}

TEST(Diagnostics, ErrorOutsideLayer) {
  auto g = build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 1.0 / 32);
  const Field f = sample_field([](const Point& p) { return p[0] * p[1]; }, g);
  TimeField u;
  u.dt = 0.1;
  u.snapshots = {f, f};
  EXPECT_EQ(error_outside_layer(u, u, 0.06).error, 0.0);
  try {
    error_outside_layer(u, u, 0.125);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptySet);
  }
  // Limit on a finer unperforated grid: interpolation of a bilinear field is exact.
  auto fine = build_box_grid(2, Box::unit(2), 1.0 / 64);
  TimeField lim;
  lim.dt = 0.1;
  const Field fl = sample_field([](const Point& p) { return p[0] * p[1]; }, fine);
  lim.snapshots = {fl, fl};
  EXPECT_NEAR(error_outside_layer(u, lim, 0.06).error, 0.0, 1e-14);
}

TEST(GridIo, DescriptorAndMask) {
  auto g = build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 1.0 / 32);
  const auto j = grid_descriptor(*g);
  EXPECT_EQ(j["dimension"], 2);
  EXPECT_EQ(j["flags"]["perforated"], true);
  const auto back = grid_from_descriptor(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back->mask(), g->mask());

  const auto dir = scratch_dir("grid");
  export_grid(*g, dir / "g");
  const auto mask = read_mask(dir / "g.mask", g->size());
  EXPECT_EQ(mask, g->mask());
  // Row-major, last axis fastest: node (0, 1) is byte 1.
  EXPECT_EQ(g->lattice().flatten({0, 1}), 1u);
  EXPECT_THROW(read_mask(dir / "g.mask", g->size() + 1), Error);
  fs::remove_all(dir);

  auto cell = build_periodic_cell(3, 0.5, 0.125, 1.0 / 16);
  EXPECT_EQ(grid_from_descriptor(grid_descriptor(*cell))->mask(), cell->mask());
}

TEST(Study, CorrectorCriticalRowsAndDeterminism) {
  auto c = parse_config("kind = corrector\nalpha = 3\neps = 1/2, 1/3, 1/4\nk = auto\n");
  const auto dir = scratch_dir("study");
  c.output = dir.string();
  c.formats = {"csv", "json", "plot"};
  const auto a = run_study(c);
  EXPECT_TRUE(a.passed());
  EXPECT_EQ(a.columns, (std::vector<std::string>{"eps", "alpha", "k", "min_w", "hole_flux", "residual", "wall_ms"}));
  EXPECT_EQ(a.config_hash, config_hash(c));
  const std::string csv1 = read_file(dir / "report.csv");
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "report.dat"));
  run_study(c);
  EXPECT_EQ(read_file(dir / "report.csv"), csv1);
  const auto back = report_from_json(nlohmann::json::parse(read_file(dir / "report.json")));
  EXPECT_EQ(to_csv(back), csv1);
  fs::remove_all(dir);
}

TEST(Study, RowFailuresAreRecorded) {
  // The hole fills the eps = 1/2 cell; later rows still run.
  auto c = parse_config("kind = corrector\nalpha = 3\nc0 = 2.5\neps = 1/2, 1/4\n");
  const auto r = run_study(c);
  EXPECT_FALSE(r.row_errors[0].empty());
  EXPECT_TRUE(r.row_errors[1].empty());
  EXPECT_FALSE(r.passed());

  auto all_bad = parse_config("kind = corrector\nalpha = 3\nc0 = 2.5\neps = 1/2\n");
  EXPECT_THROW(run_study(all_bad), Error);
}

TEST(Study, PmeColumnsAndVerdicts) {
  const auto r = run_study(parse_config("kind = pme\neps = 1/2, 1/3\nT = 0.02\n"));
  const auto cols = pme_columns();
  EXPECT_EQ(r.columns, cols);
  EXPECT_TRUE(r.rows_ok());
  for (const auto& v : r.verdicts) EXPECT_TRUE(v.pass) << v.name << " " << v.detail;
  for (double s : r.column("clamp_max")) EXPECT_EQ(s, 0.0);
}
