#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "odcal/metrics.hpp"
#include "odcal/report.hpp"
#include "test_util.hpp"

using Catch::Approx;
using namespace odcal;

namespace {

struct temp_dir {
  std::filesystem::path path;
  temp_dir() {
    path = std::filesystem::temp_directory_path() /
           ("odcal_metrics_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~temp_dir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0, pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

calibration_history fake_history(const std::string& method, int iterations, double start_nrmse) {
  calibration_history h;
  h.method = method;
  for (int k = 0; k < iterations; ++k) {
    calibration_record rec;
    rec.iteration = k;
    rec.sim_calls = k + 1;
    rec.objective = 100.0 / (k + 1);
    rec.nrmse = start_nrmse / (k + 1);
    h.records.push_back(rec);
  }
  h.best_objective = h.records.back().objective;
  h.best_iteration = iterations - 1;
  h.best_point = {1.0};
  return h;
}

}  // namespace

TEST_CASE("nrmse examples") {
  CHECK(nrmse({10.0, 20.0}, {10.0, 20.0}) == Approx(0.0).margin(1e-15));
  CHECK(nrmse({100.0, 200.0}, {110.0, 190.0}) == Approx(100.0 * 10.0 / 150.0).margin(1e-9));
  CHECK(nrmse({100.0, 200.0}, {200.0, 400.0}) == Approx(105.409).margin(1e-3));

  CHECK_THROWS_AS(nrmse({0.0, 0.0}, {1.0, 1.0}), metric_error);
  CHECK_THROWS_AS(nrmse({}, {}), invalid_input_error);
  CHECK_THROWS_AS(nrmse({1.0}, {1.0, 2.0}), invalid_input_error);
}

TEST_CASE("nrmse is invariant under joint scaling") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(1.0, 100.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> y(12), counts(12);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = unit(rng);
      counts[i] = unit(rng);
    }
    double base = nrmse(y, counts);
    for (double c : {0.01, 2.0, 1000.0}) {
      std::vector<double> cy = y, cc = counts;
      for (std::size_t i = 0; i < y.size(); ++i) {
        cy[i] *= c;
        cc[i] *= c;
      }
      CHECK(nrmse(cy, cc) == Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("make_fit_report") {
  network net = testutil::identity_net(2);
  auto report = make_fit_report(net, {100.0, 200.0}, {110.0, 190.0}, {5.0, 8.0}, {4.0, 6.0});
  CHECK(report.edge_ids == net.measured_edges());
  CHECK(report.nrmse_percent == Approx(100.0 * 10.0 / 150.0));
  CHECK(report.demand_rmse_to_prior == Approx(std::sqrt((1.0 + 4.0) / 2.0)));
  CHECK_THROWS_AS(make_fit_report(net, {100.0}, {110.0, 190.0}, {5.0, 8.0}, {4.0, 6.0}),
                  invalid_input_error);
}

TEST_CASE("export_convergence writes the long CSV and one series per method") {
  temp_dir tmp;
  std::vector<calibration_history> histories{fake_history("linear-metamodel", 5, 120.0),
                                             fake_history("spsa", 5, 119.0), fake_history("lam", 5, 118.0)};
  export_convergence(histories, tmp.file("conv.csv"), tmp.file("conv.svg"));

  std::string csv = slurp(tmp.file("conv.csv"));
  CHECK(count_lines(csv) == 1 + 3 * 5);
  CHECK(csv.rfind("method,iteration,sim_calls,objective,nrmse\n", 0) == 0);

  std::string svg = slurp(tmp.file("conv.svg"));
  CHECK(count_occurrences(svg, "class=\"legend\"") == 3);
  CHECK(count_occurrences(svg, "<polyline") == 3);
  CHECK(svg.find("linear-metamodel") != std::string::npos);
  CHECK(svg.find("spsa") != std::string::npos);
  CHECK(svg.find("lam") != std::string::npos);

  CHECK_THROWS_AS(export_convergence({}, tmp.file("x.csv"), tmp.file("x.svg")), invalid_input_error);
}

TEST_CASE("single-history convergence export has one row per record") {
  temp_dir tmp;
  export_convergence({fake_history("spsa", 7, 50.0)}, tmp.file("c.csv"), tmp.file("c.svg"));
  CHECK(count_lines(slurp(tmp.file("c.csv"))) == 8);
}

TEST_CASE("export_scatter draws every pair and the diagonal") {
  temp_dir tmp;
  fit_report report;
  for (int i = 0; i < 429; ++i) {
    report.edge_ids.push_back(i);
    report.field_counts.push_back(100.0 + i);
    report.simulated_counts.push_back(100.0 + i);  // perfect fit
  }
  report.nrmse_percent = 0.0;
  export_scatter(report, tmp.file("scatter.csv"), tmp.file("scatter.svg"));

  std::string csv = slurp(tmp.file("scatter.csv"));
  CHECK(count_lines(csv) == 430);
  CHECK(csv.rfind("edge_id,field_count,simulated_count\n", 0) == 0);

  std::string svg = slurp(tmp.file("scatter.svg"));
  CHECK(count_occurrences(svg, "<circle") == 429);
  CHECK(count_occurrences(svg, "stroke-dasharray") == 1);

  // perfect fit puts every dot on the diagonal: cx equals cy up to the shared
  // linear axis mapping
  std::size_t pos = 0;
  while ((pos = svg.find("<circle cx=\"", pos)) != std::string::npos) {
    pos += 12;
    std::size_t cx_end = svg.find('"', pos);
    double cx = std::stod(svg.substr(pos, cx_end - pos));
    std::size_t cy_start = svg.find("cy=\"", cx_end) + 4;
    std::size_t cy_end = svg.find('"', cy_start);
    double cy = svg.substr(cy_start, cy_end - cy_start) == "" ? -1.0
                : std::stod(svg.substr(cy_start, cy_end - cy_start));
    double x_frac = (cx - detail::svg_canvas::left) / (detail::svg_canvas::right - detail::svg_canvas::left);
    double y_frac = (detail::svg_canvas::bottom - cy) / (detail::svg_canvas::bottom - detail::svg_canvas::top);
    CHECK(x_frac == Approx(y_frac).margin(1e-4));
  }

  CHECK_THROWS_AS(export_scatter(fit_report{}, tmp.file("y.csv"), tmp.file("y.svg")),
                  invalid_input_error);
}

TEST_CASE("re-exports are byte-identical") {
  temp_dir tmp;
  std::vector<calibration_history> histories{fake_history("lam", 6, 80.0)};
  export_convergence(histories, tmp.file("a.csv"), tmp.file("a.svg"));
  export_convergence(histories, tmp.file("b.csv"), tmp.file("b.svg"));
  CHECK(slurp(tmp.file("a.csv")) == slurp(tmp.file("b.csv")));
  CHECK(slurp(tmp.file("a.svg")) == slurp(tmp.file("b.svg")));

  fit_report report;
  report.edge_ids = {1, 2, 3};
  report.field_counts = {1.5, 2.25, 3.125};
  report.simulated_counts = {1.0, 2.0, 3.0};
  export_scatter(report, tmp.file("s1.csv"), tmp.file("s1.svg"));
  export_scatter(report, tmp.file("s2.csv"), tmp.file("s2.svg"));
  CHECK(slurp(tmp.file("s1.csv")) == slurp(tmp.file("s2.csv")));
  CHECK(slurp(tmp.file("s1.svg")) == slurp(tmp.file("s2.svg")));
}
