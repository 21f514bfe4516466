#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sfwkit/diagnostics.hpp"
#include "sfwkit/solvers.hpp"

namespace sfwkit {

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class task_kind { classification, regression };

inline const char* to_string(task_kind t) {
  return t == task_kind::classification ? "classification" : "regression";
}

struct dataset {
  design_matrix X;
  dvec y;
  std::string name;
  task_kind task = task_kind::regression;
};

namespace detail {

inline std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline double parse_double_token(const std::string& tok, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw parse_error("bad numeric token '" + tok + "' at " + where);
  }
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses the "label idx:val idx:val ..." format with 1-based strictly
/// ascending indices. d defaults to the largest index seen. Labels in {0,1}
/// or {-1,+1} mark a classification task and are mapped to {-1,+1}.
inline dataset parse_libsvm(std::istream& in, std::optional<std::size_t> d_override = std::nullopt) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  dvec vals;
  dvec labels;
  std::size_t d_seen = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::chomp(line);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line
    const std::string where = "line " + std::to_string(lineno);
    labels.push_back(detail::parse_double_token(tok, where));
    std::size_t prev_idx = 0;  // 1-based; 0 means none yet
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw parse_error("missing ':' in feature token at " + where);
      const std::string idx_s = tok.substr(0, colon);
      std::size_t idx = 0;
      const auto [p, ec] = std::from_chars(idx_s.data(), idx_s.data() + idx_s.size(), idx);
      if (ec != std::errc{} || p != idx_s.data() + idx_s.size() || idx == 0)
        throw parse_error("bad feature index '" + idx_s + "' at " + where);
      if (idx <= prev_idx)
        throw parse_error("feature indices not strictly ascending at " + where);
      prev_idx = idx;
      const double v = detail::parse_double_token(tok.substr(colon + 1), where);
      if (v == 0.0) continue;  // explicit zeros are not stored
      cols.push_back(idx - 1);
      vals.push_back(v);
      d_seen = std::max(d_seen, idx);
    }
    offsets.push_back(vals.size());
  }
  std::size_t d = d_override.value_or(d_seen);
  if (d < d_seen) throw parse_error("dimension override smaller than largest index seen");

  bool zero_one = true, pm_one = true;
  for (double y : labels) {
    zero_one = zero_one && (y == 0.0 || y == 1.0);
    pm_one = pm_one && (y == -1.0 || y == 1.0);
  }
  task_kind task = task_kind::regression;
  if (zero_one || pm_one) {
    task = task_kind::classification;
    for (double& y : labels) y = (y == 0.0) ? -1.0 : y;
  }
  return {design_matrix::csr(labels.size(), d, std::move(offsets), std::move(cols), std::move(vals)),
          std::move(labels), "libsvm", task};
}

inline void serialize_libsvm(const dataset& ds, std::ostream& out) {
  for (std::size_t i = 0; i < ds.X.rows(); ++i) {
    out << detail::format_double(ds.y[i]);
    ds.X.for_each_in_row(i, [&](std::size_t j, double v) {
      if (v != 0.0) out << ' ' << (j + 1) << ':' << detail::format_double(v);
    });
    out << '\n';
  }
}

/// Numeric CSV with a header row; the target column (default: last) becomes y
/// and the remaining columns the dense X. Always a regression task.
inline dataset parse_csv(std::istream& in, std::optional<std::size_t> target_col = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error("empty file");
  line = detail::chomp(line);
  std::size_t ncols = 1;
  for (char c : line)
    if (c == ',') ++ncols;
  if (ncols < 2) throw parse_error("need at least two columns");
  const std::size_t tcol = target_col.value_or(ncols - 1);
  if (tcol >= ncols) throw parse_error("target column out of range");

  dvec values;
  dvec labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::chomp(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= ncols) throw parse_error("too many cells at row " + std::to_string(lineno));
      const double v = detail::parse_double_token(
          cell, "row " + std::to_string(lineno) + ", column " + std::to_string(col + 1));
      if (col == tcol)
        labels.push_back(v);
      else
        values.push_back(v);
      ++col;
    }
    if (col != ncols) throw parse_error("too few cells at row " + std::to_string(lineno));
  }
  return {design_matrix::dense(labels.size(), ncols - 1, std::move(values)), std::move(labels), "csv",
          task_kind::regression};
}

/// Reproducible sparse Gaussian features with a planted sparse weight vector;
/// labels are sign(x^T w*) for classification, x^T w* + 0.1 N(0,1) otherwise.
inline dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t d, double density,
                             task_kind task) {
  if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("synth_dataset: density in (0,1]");
  if (n == 0 || d == 0) throw std::invalid_argument("synth_dataset: need n, d >= 1");
  rng_t rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // planted weights on a random tenth of the coordinates
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t support = std::max<std::size_t>(1, d / 10);
  dvec w_star(d, 0.0);
  for (std::size_t k = 0; k < support; ++k) w_star[perm[k]] = gauss(rng);

  auto draw_nonzero = [&]() {
    double v = gauss(rng);
    while (v == 0.0) v = gauss(rng);
    return v;
  };

  const bool dense = density == 1.0;
  dvec dense_values;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  dvec vals;
  dvec labels;
  if (dense) dense_values.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (unif(rng) < density) {
        const double v = draw_nonzero();
        z += v * w_star[j];
        if (dense) {
          dense_values.push_back(v);
        } else {
          cols.push_back(j);
          vals.push_back(v);
        }
      } else if (dense) {
        dense_values.push_back(0.0);  // unreachable when density == 1
      }
    }
    if (!dense) offsets.push_back(vals.size());
    if (task == task_kind::classification)
      labels.push_back(z >= 0.0 ? 1.0 : -1.0);
    else
      labels.push_back(z + 0.1 * gauss(rng));
  }
  design_matrix X = dense ? design_matrix::dense(n, d, std::move(dense_values))
                          : design_matrix::csr(n, d, std::move(offsets), std::move(cols), std::move(vals));
  std::string name = "synth_seed" + std::to_string(seed) + "_n" + std::to_string(n) + "_d" + std::to_string(d);
  return {std::move(X), std::move(labels), std::move(name), task};
}

/// "n=..,d=..[,density=..][,task=classification|regression][,seed=..]"
inline dataset parse_synth_spec(const std::string& spec) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("synth spec expects key=value pairs: " + spec);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto need = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("synth spec is missing '" + key + "'");
    return it->second;
  };
  const std::size_t n = std::stoull(need("n"));
  const std::size_t d = std::stoull(need("d"));
  const double density = kv.count("density") ? std::stod(kv.at("density")) : 1.0;
  const std::uint64_t seed = kv.count("seed") ? std::stoull(kv.at("seed")) : 0;
  task_kind task = task_kind::classification;
  if (kv.count("task")) {
    const std::string& t = kv.at("task");
    if (t == "classification")
      task = task_kind::classification;
    else if (t == "regression")
      task = task_kind::regression;
    else
      throw std::invalid_argument("synth spec task must be classification or regression");
  }
  return synth_dataset(seed, n, d, density, task);
}

/// Loads a dataset: "synth" specs are generated, file paths are resolved
/// against SFWKIT_DATA_DIR when not found directly.
inline dataset load_dataset(const std::string& source, const std::string& format,
                            std::optional<std::size_t> d_override = std::nullopt) {
  if (format == "synth") return parse_synth_spec(source);
  namespace fs = std::filesystem;
  fs::path path(source);
  if (!fs::exists(path) && path.is_relative()) {
    if (const char* root = std::getenv("SFWKIT_DATA_DIR")) {
      const fs::path alt = fs::path(root) / path;
      if (fs::exists(alt)) path = alt;
    }
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  dataset ds;
  if (format == "libsvm")
    ds = parse_libsvm(in, d_override);
  else if (format == "csv")
    ds = parse_csv(in);
  else
    throw std::invalid_argument("unknown dataset format: " + format);
  ds.name = path.filename().string();
  return ds;
}

/// Maps every objective into [0,1] via the global extremes across all
/// compared traces: (f - f_min) / (f_max - f_min).
inline std::vector<dvec> relative_suboptimality(const std::vector<std::vector<trace_row>>& traces) {
  if (traces.empty()) throw std::invalid_argument("relative_suboptimality: no traces");
  double f_min = std::numeric_limits<double>::infinity();
  double f_max = -std::numeric_limits<double>::infinity();
  for (const auto& tr : traces)
    for (const auto& row : tr) {
      f_min = std::min(f_min, row.objective);
      f_max = std::max(f_max, row.objective);
    }
  if (!(f_max > f_min)) throw std::domain_error("relative_suboptimality: degenerate run, f_max == f_min");
  std::vector<dvec> out;
  out.reserve(traces.size());
  for (const auto& tr : traces) {
    dvec vals;
    vals.reserve(tr.size());
    for (const auto& row : tr) vals.push_back((row.objective - f_min) / (f_max - f_min));
    out.push_back(std::move(vals));
  }
  return out;
}

struct bench_config {
  std::string data;
  std::string format = "synth";
  loss_kind loss = loss_kind::logistic;
  std::string constraint = "l1:1";
  std::vector<solver_kind> solvers;
  std::size_t batch_size = 0;  // 0 => floor(n/100), clamped to >= 1
  std::size_t grad_budget = 0;
  std::vector<std::uint64_t> seeds;
  std::size_t trace_every = 1;
  std::optional<double> gap_stop;
  bool exact_diagnostics = false;
  std::string out_dir = ".";
  std::string out_format = "csv";      // trace file format: csv | json
  std::size_t fmin_refine_budget = 0;  // extra FW budget refining the reference optimum
};

inline void write_trace_csv(const std::vector<trace_row>& trace, std::ostream& out) {
  out << "t,grad_calls,objective,stochastic_gap,exact_gap,h_error,wall_nanos\n";
  for (const auto& row : trace) {
    out << row.t << ',' << row.grad_calls << ',' << detail::format_double(row.objective) << ','
        << detail::format_double(row.stochastic_gap) << ',';
    if (row.exact_gap) out << detail::format_double(*row.exact_gap);
    out << ',';
    if (row.h_error) out << detail::format_double(*row.h_error);
    out << ',' << row.wall_nanos << '\n';
  }
}

inline nlohmann::json trace_to_json(const std::vector<trace_row>& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : trace) {
    nlohmann::json j{{"t", row.t},
                     {"grad_calls", row.grad_calls},
                     {"objective", row.objective},
                     {"stochastic_gap", row.stochastic_gap},
                     {"wall_nanos", row.wall_nanos}};
    j["exact_gap"] = row.exact_gap ? nlohmann::json(*row.exact_gap) : nlohmann::json();
    j["h_error"] = row.h_error ? nlohmann::json(*row.h_error) : nlohmann::json();
    rows.push_back(std::move(j));
  }
  return rows;
}

/// Runs every (solver, seed) pair under a shared gradient budget, writes one
/// trace file per run plus summary.json, and returns the summary. Failures
/// are recorded per run without aborting the siblings.
inline nlohmann::json run_benchmark(const bench_config& cfg) {
  namespace fs = std::filesystem;
  if (cfg.solvers.empty() || cfg.seeds.empty())
    throw std::invalid_argument("run_benchmark: need at least one solver and one seed");

  dataset ds = load_dataset(cfg.data, cfg.format);
  const constraint_set set = parse_constraint(cfg.constraint);
  problem prob(std::move(ds.X), loss_model(cfg.loss, std::move(ds.y)));
  const std::size_t batch =
      cfg.batch_size > 0 ? cfg.batch_size : std::max<std::size_t>(1, prob.n() / 100);

  fs::create_directories(cfg.out_dir);

  nlohmann::json summary;
  summary["schema_version"] = 1;
  summary["dataset"] = {{"name", ds.name},
                        {"n", prob.n()},
                        {"d", prob.d()},
                        {"nnz", prob.X().nnz()},
                        {"sparse", prob.X().is_sparse()},
                        {"task", to_string(ds.task)}};
  summary["loss"] = {{"kind", to_string(cfg.loss)}, {"L", smoothness_constant(cfg.loss)}};
  summary["constraint"] = {{"kind", to_string(set.kind)}, {"radius", set.radius}};
  summary["batch_size"] = batch;
  summary["grad_budget"] = cfg.grad_budget;
  summary["trace_every"] = cfg.trace_every;

  nlohmann::json stats;
  try {
    stats["kappa"] = kappa(prob.X());
  } catch (const std::exception& e) {
    stats["kappa"] = nullptr;
    stats["kappa_error"] = e.what();
  }
  const double inf = std::numeric_limits<double>::infinity();
  const std::pair<const char*, double> norms[] = {{"D1", 1.0}, {"D2", 2.0}, {"Dinf", inf}};
  for (const auto& [key, p] : norms) {
    try {
      stats[key] = diameter(set, prob.X(), p);
    } catch (const std::exception& e) {
      stats[key] = nullptr;
      stats[std::string(key) + "_error"] = e.what();
    }
  }
  summary["stats"] = std::move(stats);

  std::vector<std::vector<trace_row>> ok_traces;
  nlohmann::json runs = nlohmann::json::array();
  for (solver_kind kind : cfg.solvers) {
    for (std::uint64_t seed : cfg.seeds) {
      nlohmann::json rec{{"solver", to_string(kind)}, {"seed", seed}};
      run_options opt;
      opt.kind = kind;
      opt.batch_size = batch;
      opt.grad_budget = cfg.grad_budget;
      opt.seed = seed;
      opt.trace_every = cfg.trace_every;
      opt.gap_stop = cfg.gap_stop;
      opt.exact_diagnostics = cfg.exact_diagnostics;
      try {
        std::vector<trace_row> trace = run_solver(prob, set, opt);
        const std::string ext = cfg.out_format == "json" ? ".json" : ".csv";
        const fs::path file =
            fs::path(cfg.out_dir) / (std::string(to_string(kind)) + "_seed" + std::to_string(seed) + ext);
        std::ofstream out(file);
        if (!out) throw std::runtime_error("cannot write trace: " + file.string());
        if (cfg.out_format == "json")
          out << trace_to_json(trace).dump(2) << '\n';
        else
          write_trace_csv(trace, out);
        rec["status"] = "ok";
        rec["trace_file"] = file.string();
        rec["grad_calls"] = trace.back().grad_calls;
        rec["final_objective"] = trace.back().objective;
        rec["final_stochastic_gap"] = trace.back().stochastic_gap;
        ok_traces.push_back(std::move(trace));
      } catch (const std::exception& e) {
        rec["status"] = "error";
        rec["error"] = e.what();
      }
      runs.push_back(std::move(rec));
    }
  }

  double f_min = std::numeric_limits<double>::infinity();
  double f_max = -std::numeric_limits<double>::infinity();
  for (const auto& tr : ok_traces)
    for (const auto& row : tr) {
      f_min = std::min(f_min, row.objective);
      f_max = std::max(f_max, row.objective);
    }
  double reference = f_min;
  if (cfg.fmin_refine_budget > 0 && cfg.fmin_refine_budget >= prob.n()) {
    run_options ref;
    ref.kind = solver_kind::fw;
    ref.grad_budget = cfg.fmin_refine_budget;
    ref.trace_every = std::max<std::size_t>(1, cfg.fmin_refine_budget / prob.n());
    const auto tr = run_solver(prob, set, ref);
    for (const auto& row : tr) reference = std::min(reference, row.objective);
  }
  if (!ok_traces.empty()) {
    summary["f_min"] = f_min;
    summary["f_max"] = f_max;
    summary["reference_optimum"] = reference;
    summary["reference_is_approximate"] = true;
    std::size_t idx = 0;
    if (f_max > f_min) {
      for (auto& rec : runs) {
        if (rec["status"] == "ok") {
          const double f = ok_traces[idx].back().objective;
          rec["final_relative_suboptimality"] = (f - f_min) / (f_max - f_min);
          ++idx;
        }
      }
    }
  }
  summary["runs"] = std::move(runs);

  const fs::path summary_path = fs::path(cfg.out_dir) / "summary.json";
  std::ofstream out(summary_path);
  if (!out) throw std::runtime_error("cannot write summary: " + summary_path.string());
  out << summary.dump(2) << '\n';
  summary["summary_file"] = summary_path.string();
  return summary;
}

}  // namespace sfwkit
