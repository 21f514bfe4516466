// Command-line front end: benchmark orchestration (`run`), single solver
// runs (`solve`), the numerical property battery (`verify`), and dataset
// statistics (`stats`).

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfwkit/bench.hpp"
#include "sfwkit/verify.hpp"

namespace {

using namespace sfwkit;

struct data_options {
  std::string data;
  std::string format = "synth";
  std::string loss = "logistic";
  std::string constraint = "l1:1";
};

void add_data_options(CLI::App* cmd, data_options& opt) {
  cmd->add_option("--data", opt.data,
                  "dataset path, or a synth spec like n=100,d=10,density=0.5,seed=1")
      ->required();
  cmd->add_option("--format", opt.format, "dataset format")
      ->check(CLI::IsMember({"libsvm", "csv", "synth"}))
      ->capture_default_str();
  cmd->add_option("--loss", opt.loss, "per-sample loss family")
      ->check(CLI::IsMember({"logistic", "squared", "geman"}))
      ->capture_default_str();
  cmd->add_option("--constraint", opt.constraint, "constraint spec: l1:R | simplex:R | linf:R")
      ->capture_default_str();
}

problem load_problem(const data_options& opt, std::string* name = nullptr) {
  dataset ds = load_dataset(opt.data, opt.format);
  if (name) *name = ds.name;
  return problem(std::move(ds.X), loss_model(parse_loss_kind(opt.loss), std::move(ds.y)));
}

void write_output(const std::string& path, const std::string& body) {
  if (path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << body;
}

int cmd_stats(const data_options& dopt) {
  std::string name;
  const problem p = load_problem(dopt, &name);
  const constraint_set set = parse_constraint(dopt.constraint);
  nlohmann::json j;
  j["dataset"] = {{"name", name}, {"n", p.n()}, {"d", p.d()}, {"nnz", p.X().nnz()}};
  j["L"] = p.loss().smoothness();
  const double k = kappa(p.X());
  j["kappa"] = k;
  j["kappa_over_n"] = k / static_cast<double>(p.n());
  const double inf = std::numeric_limits<double>::infinity();
  j["D1"] = diameter(set, p.X(), 1.0);
  j["D2"] = diameter(set, p.X(), 2.0);
  j["Dinf"] = diameter(set, p.X(), inf);
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sfwkit: stochastic Frank-Wolfe solvers and diagnostics for constrained finite sums"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "run a benchmark over solvers and seeds");
  data_options run_data;
  add_data_options(run, run_data);
  std::vector<std::string> solver_names{"sfw"};
  std::vector<std::uint64_t> seeds{0};
  bench_config cfg;
  double gap_stop = 0.0;
  run->add_option("--solver", solver_names, "solvers to compare: sfw,fw,mokhtari,lufreund")
      ->delimiter(',')
      ->capture_default_str();
  run->add_option("--batch-size", cfg.batch_size, "batch size b (0 = floor(n/100), min 1)");
  run->add_option("--grad-budget", cfg.grad_budget, "total gradient evaluations per run")->required();
  run->add_option("--seeds", seeds, "rng seeds, one run per seed")->delimiter(',')->capture_default_str();
  run->add_option("--trace-every", cfg.trace_every, "checkpoint cadence in iterations")
      ->capture_default_str();
  auto* run_gap = run->add_option("--gap-stop", gap_stop, "stop when the stochastic gap drops below");
  run->add_flag("--exact-diagnostics", cfg.exact_diagnostics,
                "record the exact gap and H at checkpoints (costs a gradient pass)");
  run->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  run->add_option("--out-format", cfg.out_format, "trace file format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  run->add_option("--refine-budget", cfg.fmin_refine_budget,
                  "extra deterministic-FW gradient budget refining the reference optimum");

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "run one solver and emit its trace");
  data_options solve_data;
  add_data_options(solve, solve_data);
  std::string solver_name = "sfw";
  run_options sopt;
  sopt.batch_size = 0;  // default: floor(n/100), min 1
  std::string solve_out = "-";
  std::string solve_format = "csv";
  double solve_gap_stop = 0.0;
  solve->add_option("--solver", solver_name, "sfw | fw | mokhtari | lufreund")->capture_default_str();
  solve->add_option("--batch-size", sopt.batch_size, "batch size b");
  solve->add_option("--grad-budget", sopt.grad_budget, "total gradient evaluations")->required();
  solve->add_option("--seed", sopt.seed, "rng seed")->capture_default_str();
  solve->add_option("--trace-every", sopt.trace_every, "checkpoint cadence in iterations")
      ->capture_default_str();
  auto* solve_gap = solve->add_option("--gap-stop", solve_gap_stop, "stop threshold on the stochastic gap");
  solve->add_flag("--exact-diagnostics", sopt.exact_diagnostics,
                  "record the exact gap and H at checkpoints");
  solve->add_option("--out", solve_out, "trace file path, or - for stdout")->capture_default_str();
  solve->add_option("--out-format", solve_format, "trace format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "run the numerical property battery");
  std::string verify_out = "-";
  std::uint64_t verify_seed = 20200213;
  verify->add_option("--out", verify_out, "report path, or - for stdout")->capture_default_str();
  verify->add_option("--seed", verify_seed, "battery seed")->capture_default_str();

  // ---- stats ----
  auto* stats = app.add_subcommand("stats", "print kappa, diameters, and L for a dataset");
  data_options stats_data;
  add_data_options(stats, stats_data);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      cfg.data = run_data.data;
      cfg.format = run_data.format;
      cfg.loss = parse_loss_kind(run_data.loss);
      cfg.constraint = run_data.constraint;
      for (const auto& s : solver_names) cfg.solvers.push_back(parse_solver_kind(s));
      cfg.seeds = seeds;
      if (run_gap->count() > 0) cfg.gap_stop = gap_stop;
      const auto summary = run_benchmark(cfg);
      std::cout << summary.dump(2) << '\n';
      for (const auto& rec : summary["runs"])
        if (rec["status"] != "ok") return 1;
      return 0;
    }
    if (solve->parsed()) {
      const problem p = load_problem(solve_data);
      const constraint_set set = parse_constraint(solve_data.constraint);
      sopt.kind = parse_solver_kind(solver_name);
      if (sopt.batch_size == 0) sopt.batch_size = std::max<std::size_t>(1, p.n() / 100);
      if (solve_gap->count() > 0) sopt.gap_stop = solve_gap_stop;
      const auto trace = run_solver(p, set, sopt);
      std::ostringstream body;
      if (solve_format == "json")
        body << trace_to_json(trace).dump(2) << '\n';
      else
        write_trace_csv(trace, body);
      write_output(solve_out, body.str());
      return 0;
    }
    if (verify->parsed()) {
      const auto results = run_verification(verify_seed);
      const auto report = verification_report(results);
      write_output(verify_out, report.dump(2) + "\n");
      return report["all_pass"].get<bool>() ? 0 : 1;
    }
    if (stats->parsed()) return cmd_stats(stats_data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
