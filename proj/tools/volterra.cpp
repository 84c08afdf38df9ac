// volterra: command-line front end.
//
//   volterra kernel-info --config run.ini
//   volterra dump-rule   --config run.ini [--out DIR]
//   volterra sample      --config run.ini [--seed S] [--threads N] [--dump-paths K] [--out DIR]
//   volterra weak-error  --config run.ini [--analytic] [--force] [--out DIR]
//   volterra rate-study  --config run.ini [--analytic] [--force] [--out DIR]
//
// Flags override the corresponding config values. Exit codes: 0 success,
// 1 numeric failure, 2 configuration error.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "volterra/config.hpp"
#include "volterra/errors.hpp"
#include "volterra/markovian.hpp"
#include "volterra/parallel.hpp"
#include "volterra/stats.hpp"
#include "volterra/text.hpp"
#include "volterra/weakerror.hpp"

using namespace volterra;
using json = nlohmann::ordered_json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = std::max(1u, std::thread::hardware_concurrency());
  bool analytic = false;
  std::optional<int> dump_paths;
  bool force = false;
  std::optional<std::string> out;
};

struct Run {
  RunConfig cfg;
  Flags flags;
  std::filesystem::path out_dir;
};

Run load(const Flags& flags) {
  Run run{load_config(flags.config), flags, {}};
  if (flags.seed) run.cfg.mc.seed = *flags.seed;
  if (flags.dump_paths) run.cfg.output.dump_paths = *flags.dump_paths;
  if (flags.out) run.cfg.output.dir = *flags.out;
  run.out_dir = run.cfg.output.dir;
  return run;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

json kernel_json(const Kernel& k) {
  json j;
  for (const auto& [key, value] : to_config(k)) j[key] = value;
  return j;
}

json profile_json(const KernelDistanceProfile& p) {
  json j;
  j["l1_diff"] = p.l1_diff_T;
  j["l1_sqdiff"] = p.l1_sqdiff_T;
  j["diff_component"] = p.diff_component;
  j["sqdiff_component"] = p.sqdiff_component;
  j["bound_quantity"] = p.bound_quantity;
  j["domination_constant"] = p.domination_constant;
  return j;
}

// Hypothesis checks; returns false when the run must stop.
bool check_hypotheses(const Run& run, const ModelSpec& model, const Kernel& K, const Kernel& Kbar) {
  const auto report = validate_hypotheses(model, K, Kbar, run.cfg.grid.T);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  if (report.pass) return true;
  for (const auto& f : report.failures) std::cerr << "hypothesis violated: " << f << "\n";
  if (run.flags.force) {
    std::cerr << "continuing because of --force\n";
    return true;
  }
  std::cerr << "refusing to run; pass --force to override\n";
  return false;
}

int cmd_kernel_info(const Flags& flags) {
  const Run run = load(flags);
  const Kernel& K = run.cfg.require_kernel();
  const double T = run.cfg.grid.T;
  std::ostringstream os;
  os << "family = " << to_string(K.family()) << "\n";
  for (const auto& [key, value] : to_config(K)) {
    if (key != "family") os << key << " = " << value << "\n";
  }
  os << "T = " << format_double(T) << "\n";
  os << "l2_norm_sq = " << format_double(l2_norm_sq(K, T)) << "\n";
  os << "\nt,K\n";
  for (double f : {1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.5, 1.0}) {
    os << format_double(f * T) << "," << format_double(eval(K, f * T)) << "\n";
  }
  if (const auto Kbar = run.cfg.approximating_kernel()) {
    const auto p = bound_quantity(K, *Kbar, T);
    os << "\n[kernel_bar]\n";
    for (const auto& [key, value] : to_config(*Kbar)) os << key << " = " << value << "\n";
    os << "l2_norm_sq = " << format_double(l2_norm_sq(*Kbar, T)) << "\n";
    os << "l1_diff = " << format_double(p.l1_diff_T) << "\n";
    os << "l1_sqdiff = " << format_double(p.l1_sqdiff_T) << "\n";
    os << "l2_distance = " << format_double(l2_distance(K, *Kbar, T)) << "\n";
    os << "diff_component = " << format_double(p.diff_component) << "\n";
    os << "sqdiff_component = " << format_double(p.sqdiff_component) << "\n";
    os << "bound_quantity = " << format_double(p.bound_quantity) << "\n";
    os << "domination_constant = " << format_double(p.domination_constant) << "\n";
    const ModelSpec model =
        run.cfg.model ? run.cfg.build_model() : ModelSpec::custom("0", "0", 0.0);
    const auto v = validate_hypotheses(model, K, *Kbar, T);
    os << "hypotheses = " << (v.pass ? "pass" : "fail") << "\n";
    for (const auto& f : v.failures) os << "failure = " << f << "\n";
    for (const auto& w : v.warnings) os << "warning = " << w << "\n";
    if (run.cfg.model) os << "coefficients = " << v.coefficients << "\n";
  }
  std::cout << os.str();
  return 0;
}

int cmd_dump_rule(const Flags& flags) {
  const Run run = load(flags);
  const double H = run.cfg.rule && run.cfg.rule->H ? *run.cfg.rule->H : run.cfg.require_kernel().H();
  const auto design = run.cfg.rule_design();
  const auto rule = build_rule(H, design);
  const double scale = run.cfg.kernel ? run.cfg.kernel->scale() : 1.0;
  const Kernel Kbar = to_kernel(rule, scale);

  ConfigDocument doc;
  for (const auto& [key, value] : to_config(Kbar)) doc.section("kernel_bar").set(key, value);
  write_file(run.out_dir / "rule.csv", rule_to_csv(rule));
  write_file(run.out_dir / "rule_kernel.ini", serialize_config(doc));

  std::cout << "H = " << format_double(H) << "\n"
            << "cut_low = " << format_double(design.cut_low) << "\n"
            << "cut_high = " << format_double(design.cut_high) << "\n"
            << "cells = " << design.cells << "\n"
            << "points_per_cell = " << design.points_per_cell << "\n"
            << "nodes = " << rule.nodes.size() << "\n";
  if (run.cfg.kernel) {
    const auto& K = *run.cfg.kernel;
    const double T = run.cfg.grid.T;
    std::cout << "l2_distance = " << format_double(l2_distance(K, Kbar, T)) << "\n"
              << "domination_constant = " << format_double(domination_constant(K, Kbar, T)) << "\n";
  }
  std::cout << "\n" << rule_to_csv(rule);
  return 0;
}

json stats_json(const RunningStats& s) {
  json j;
  j["mean"] = s.mean;
  j["variance"] = s.variance();
  j["se_mean"] = s.count > 0 ? std::sqrt(s.variance() / s.count) : 0.0;
  return j;
}

int cmd_sample(const Flags& flags) {
  const Run run = load(flags);
  const Kernel& K = run.cfg.require_kernel();
  const TimeGrid grid = run.cfg.time_grid();
  const auto N = run.cfg.mc.N;
  const auto seed = run.cfg.mc.seed;
  const bool markovian = K.family() == KernelFamily::SumOfExponentials;
  const std::optional<ModelSpec> model =
      run.cfg.model ? std::optional<ModelSpec>(run.cfg.build_model()) : std::nullopt;
  const double rho = model ? model->rho : 0.0;

  std::optional<JointFactorization> fact;
  std::optional<MarkovianSampler> ms;
  if (markovian) {
    ms.emplace(K, grid);
  } else {
    fact.emplace(factorize_joint(K, grid));
  }
  auto draw = [&](std::uint64_t r) {
    return markovian ? ms->sample(rho, {seed, r}) : sample_exact(*fact, rho, {seed, r});
  };

  const int batches = static_cast<int>(std::min<std::int64_t>(run.cfg.mc.batches, N));
  std::vector<RunningStats> v_parts(batches), x_parts(batches);
  for_each_batch(batches, flags.threads, [&](int b) {
    long long lo, hi;
    batch_range(N, batches, b, lo, hi);
    for (long long r = lo; r < hi; ++r) {
      const auto path = draw(static_cast<std::uint64_t>(r));
      v_parts[b].add(path.V.back());
      if (model) {
        const auto x = euler_evolve(*model, path);
        if (x.finite) {
          x_parts[b].add(x.X_T);
        } else {
          ++x_parts[b].rejected;
        }
      }
    }
  });
  const auto v = reduce_pairwise(v_parts);

  const int k = static_cast<int>(std::min<std::int64_t>(run.cfg.output.dump_paths, N));
  if (k > 0) {
    std::vector<PathBundle> paths;
    for (int r = 0; r < k; ++r) paths.push_back(draw(static_cast<std::uint64_t>(r)));
    write_file(run.out_dir / "paths.csv", paths_to_csv(paths));
  }

  json j;
  j["N"] = N;
  j["seed"] = seed;
  j["sampler"] = markovian ? "markovian" : "exact";
  j["kernel"] = kernel_json(K);
  j["T"] = grid.T();
  j["steps"] = grid.steps();
  if (fact) j["jitter"] = fact->jitter();
  j["V_T"] = stats_json(v);
  const double l2 = l2_norm_sq(K, grid.T());
  j["l2_norm_sq"] = l2;
  j["variance_rel_error"] = l2 > 0 ? v.variance() / l2 - 1.0 : 0.0;
  if (model) {
    const auto x = reduce_pairwise(x_parts);
    j["X_T"] = stats_json(x);
    j["rejections"] = x.rejected;
  }
  const std::string text = j.dump(2) + "\n";
  write_file(run.out_dir / "summary.json", text);
  std::cout << text;
  return 0;
}

CoupledOptions coupled_options(const Run& run) {
  CoupledOptions o;
  o.replications = run.cfg.mc.N;
  o.seed = run.cfg.mc.seed;
  o.threads = run.flags.threads;
  o.batches = run.cfg.mc.batches;
  o.independent = run.cfg.mc.independent;
  return o;
}

Kernel require_bar(const RunConfig& cfg) {
  auto Kbar = cfg.approximating_kernel();
  if (!Kbar) throw ConfigError("missing [kernel_bar] or [rule] section");
  return *Kbar;
}

json analytic_json(const Kernel& K, const Kernel& Kbar, double T, const TestFunction& phi) {
  const auto p = bound_quantity(K, Kbar, T);
  json j = profile_json(p);
  j["l2_distance"] = l2_distance(K, Kbar, T);
  j["w1"] = gaussian_w1(std::sqrt(l2_norm_sq(K, T)), std::sqrt(l2_norm_sq(Kbar, T)));
  if (phi.has_second_derivative()) {
    const auto e = volterra_weak_error_exact(phi, K, Kbar, T);
    j["volterra_error_expansion"] = e.expansion;
    j["volterra_error_direct"] = e.direct;
    j["volterra_error_discrepancy"] = e.discrepancy;
  } else {
    j["volterra_error_direct"] = gaussian_expectation(phi, l2_norm_sq(Kbar, T)) -
                                 gaussian_expectation(phi, l2_norm_sq(K, T));
  }
  return j;
}

int cmd_weak_error(const Flags& flags) {
  const Run run = load(flags);
  const Kernel& K = run.cfg.require_kernel();
  const Kernel Kbar = require_bar(run.cfg);
  const auto phi = TestFunction::from_string(run.cfg.mc.phi);
  const double T = run.cfg.grid.T;

  std::string text;
  if (flags.analytic) {
    const ModelSpec model = run.cfg.model ? run.cfg.build_model() : ModelSpec::custom("0", "0", 0.0);
    if (!check_hypotheses(run, model, K, Kbar)) return 2;
    json j;
    j["mode"] = "analytic";
    j["phi"] = phi.name();
    j["T"] = T;
    j["analytic"] = analytic_json(K, Kbar, T, phi);
    json echo = json::object();
    for (const auto& [section, block] : run.cfg.echo()) {
      for (const auto& [key, value] : block) echo[section][key] = value;
    }
    j["config_echo"] = echo;
    text = j.dump(2) + "\n";
  } else {
    const ModelSpec model = run.cfg.build_model();
    if (!check_hypotheses(run, model, K, Kbar)) return 2;
    const auto report =
        coupled_weak_error(model, K, Kbar, run.cfg.time_grid(), phi, coupled_options(run));
    text = report_to_json(report, run.cfg.echo());
  }
  write_file(run.out_dir / "report.json", text);
  std::cout << text;
  return 0;
}

json fit_json(const std::vector<RatePoint>& points) {
  json j;
  try {
    const auto fit = rate_study(points);
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["used"] = fit.used.size();
    j["excluded"] = fit.excluded;
    j["status"] = "ok";
  } catch (const DomainError& e) {
    j["slope"] = nullptr;
    j["status"] = std::string("undefined: ") + e.what();
  }
  return j;
}

int cmd_rate_study(const Flags& flags) {
  const Run run = load(flags);
  if (!run.cfg.sweep) throw ConfigError("rate-study needs a [sweep] section");
  const Kernel& K = run.cfg.require_kernel();
  const auto phi = TestFunction::from_string(run.cfg.mc.phi);
  const double T = run.cfg.grid.T;
  const auto& values = run.cfg.sweep->values;

  std::optional<ModelSpec> model;
  std::optional<JointFactorization> fact;
  if (!flags.analytic) {
    model = run.cfg.build_model();
    fact.emplace(factorize_joint(K, run.cfg.time_grid()));
  }
  const ModelSpec check_model = model ? *model : ModelSpec::custom("0", "0", 0.0);
  if (!check_hypotheses(run, check_model, K, run.cfg.approximating_kernel_at(values.front()))) {
    return 2;
  }

  struct Row {
    double param;
    double estimate = NAN, ci = NAN;
    KernelDistanceProfile profile;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  int failures = 0;
  for (double value : values) {
    Row row;
    row.param = value;
    try {
      const Kernel Kbar = run.cfg.approximating_kernel_at(value);
      row.profile = bound_quantity(K, Kbar, T);
      if (flags.analytic) {
        row.estimate = volterra_weak_error_exact(phi, K, Kbar, T).direct;
        row.ci = 0.0;
      } else {
        auto opts = coupled_options(run);
        opts.compute_bound = false;
        const auto fact_bar = factorize_joint(Kbar, run.cfg.time_grid());
        const auto r = coupled_weak_error(*model, *fact, fact_bar, phi, opts);
        row.estimate = r.estimate;
        row.ci = r.ci_half_width;
        if (r.rejections > 0) row.status = "rejections=" + std::to_string(r.rejections);
      }
    } catch (const NumericError& e) {
      row.status = std::string("numeric_error: ") + e.what();
      ++failures;
    } catch (const DomainError& e) {
      row.status = std::string("domain_error: ") + e.what();
      ++failures;
    }
    rows.push_back(row);
  }

  auto csv_field = [](std::string s) {
    for (char& c : s) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    return s;
  };
  std::string csv =
      "param,estimate,ci,bound_quantity,l1_diff,l1_sqdiff,diff_component,sqdiff_component,status\n";
  for (const auto& r : rows) {
    csv += format_double(r.param) + "," + format_double(r.estimate) + "," + format_double(r.ci) +
           "," + format_double(r.profile.bound_quantity) + "," + format_double(r.profile.l1_diff_T) +
           "," + format_double(r.profile.l1_sqdiff_T) + "," + format_double(r.profile.diff_component) +
           "," + format_double(r.profile.sqdiff_component) + "," + csv_field(r.status) + "\n";
  }
  write_file(run.out_dir / "sweep.csv", csv);

  auto points = [&](auto get) {
    std::vector<RatePoint> pts;
    for (const auto& r : rows) {
      if (r.status.rfind("numeric_error", 0) == 0 || r.status.rfind("domain_error", 0) == 0) continue;
      pts.push_back(get(r));
    }
    return pts;
  };
  json j;
  j["mode"] = flags.analytic ? "analytic" : "monte_carlo";
  j["parameter"] = run.cfg.sweep->parameter;
  j["phi"] = phi.name();
  j["estimate"] = fit_json(points([](const Row& r) { return RatePoint{r.param, r.estimate, r.ci}; }));
  j["l1_diff"] = fit_json(points([](const Row& r) { return RatePoint{r.param, r.profile.l1_diff_T, 0}; }));
  j["l1_sqdiff"] = fit_json(points([](const Row& r) { return RatePoint{r.param, r.profile.l1_sqdiff_T, 0}; }));
  j["diff_component"] =
      fit_json(points([](const Row& r) { return RatePoint{r.param, r.profile.diff_component, 0}; }));
  j["sqdiff_component"] =
      fit_json(points([](const Row& r) { return RatePoint{r.param, r.profile.sqdiff_component, 0}; }));
  j["bound_quantity"] =
      fit_json(points([](const Row& r) { return RatePoint{r.param, r.profile.bound_quantity, 0}; }));
  if (!flags.analytic) {
    std::vector<double> errors, bounds;
    for (const auto& r : rows) {
      if (r.status != "ok" || !(r.profile.bound_quantity > 0)) continue;
      errors.push_back(r.estimate);
      bounds.push_back(r.profile.bound_quantity);
    }
    if (!errors.empty()) {
      const auto env = fit_envelope(errors, bounds);
      j["envelope"] = {{"C", env.C},
                       {"min_ratio", env.min_ratio},
                       {"max_ratio", env.max_ratio},
                       {"stable", env.stable}};
    }
  }
  j["failed_points"] = failures;
  const std::string text = j.dump(2) + "\n";
  write_file(run.out_dir / "rate_fit.json", text);
  std::cout << csv << "\n" << text;
  return failures > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated Volterra processes: kernels, sampling and weak errors"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Config file")->required();
    sub->add_option("--seed", flags.seed, "Override mc.seed");
    sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--analytic", flags.analytic, "Closed forms and quadrature only, no Monte Carlo");
    sub->add_option("--dump-paths", flags.dump_paths, "Write the first K sampled paths")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--force", flags.force, "Run despite failed hypothesis checks");
    sub->add_option("--out", flags.out, "Output directory");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Command commands[] = {
      {"kernel-info", "Evaluate a kernel and its distances to kernel_bar", cmd_kernel_info},
      {"dump-rule", "Build a sum-of-exponentials rule and write x,w", cmd_dump_rule},
      {"sample", "Sample Volterra paths and summarise V_T", cmd_sample},
      {"weak-error", "Coupled Monte Carlo weak error for one kernel pair", cmd_weak_error},
      {"rate-study", "Weak errors and bound components over a sweep", cmd_rate_study},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Flags&)>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, c.run);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const auto& [sub, fn] : subs) {
      if (sub->parsed()) return fn(flags);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
