#include <CLI11.hpp>

#include "odcal/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"OD demand calibration toolkit"};
  app.require_subcommand(1);

  odcal::generate_options gen;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic scenario");
  generate->add_option("--spec", gen.spec_path, "Scenario spec JSON")->required();
  generate->add_option("--seed", gen.seed, "RNG seed");
  generate->add_option("--out", gen.out_dir, "Output directory");

  odcal::calibrate_options cal;
  auto* calibrate = app.add_subcommand("calibrate", "Run calibration method(s)");
  calibrate->add_option("--config", cal.config_path, "Experiment config JSON")->required();
  calibrate->add_option("--method", cal.method, "linear-metamodel|spsa|lam|all");
  calibrate->add_option("--iterations", cal.iterations, "Calibration iterations");
  calibrate->add_option("--seed", cal.seed, "RNG seed");
  calibrate->add_option("--out", cal.out_dir, "Output directory");
  calibrate->add_option("--replications", cal.replications, "Simulator replications per call");

  odcal::evaluate_options ev;
  auto* evaluate = app.add_subcommand("evaluate", "Simulate an OD vector against counts");
  evaluate->add_option("--network", ev.network_path, "Network JSON")->required();
  evaluate->add_option("--od", ev.od_path, "OD CSV (od_id,demand)")->required();
  evaluate->add_option("--counts", ev.counts_path, "Counts CSV (edge_id,count)")->required();
  evaluate->add_option("--replications", ev.replications, "Simulator replications");
  evaluate->add_option("--fixed-point-iters", ev.inner_fixed_point_iters, "Inner fixed-point iterations");
  evaluate->add_option("--seed", ev.seed, "RNG seed");
  evaluate->add_option("--out", ev.out_dir, "Output directory");
  evaluate->add_option("--theta-per-minute", ev.theta_per_minute, "Logit time sensitivity (1/min)");
  evaluate->add_option("--dump-replications", ev.replication_dump_path,
                       "Write per-replication counts CSV to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (generate->parsed()) return odcal::cmd_generate(gen);
  if (calibrate->parsed()) return odcal::cmd_calibrate(cal);
  return odcal::cmd_evaluate(ev);
}
