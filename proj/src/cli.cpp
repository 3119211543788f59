#include "unionrec/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "unionrec/bounds.hpp"
#include "unionrec/config.hpp"
#include "unionrec/errors.hpp"
#include "unionrec/model.hpp"
#include "unionrec/montecarlo.hpp"

namespace unionrec::cli {

namespace {

using config::json;
using montecarlo::Axis;
using montecarlo::ExperimentConfig;

// Flags shared by every subcommand that needs a model.
struct CommonOptions {
  std::string preset;
  bool desk = false;
  std::string config_path;
  std::optional<int> L, d, k0, M;
  std::optional<double> bsnr_db, bsnr_ratio, eta0, r0;
  std::optional<long long> trials, trials_per_matrix;
  std::optional<std::uint64_t> seed;
  std::string decoders;
  std::string out_dir = ".";
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--preset", o.preset, "fig1a | fig1b | fig2");
  app->add_flag("--desk", o.desk, "reduced-size variant of the preset");
  app->add_option("--config", o.config_path, "JSON experiment config");
  app->add_option("--L", o.L, "number of blocks");
  app->add_option("--d", o.d, "block size");
  app->add_option("--k0", o.k0, "number of nonzero blocks");
  app->add_option("--M", o.M, "number of measurements");
  app->add_option("--bsnr-db", o.bsnr_db, "minimum block SNR in dB");
  app->add_option("--bsnr-ratio", o.bsnr_ratio, "max/min block SNR ratio");
  app->add_option("--eta0", o.eta0, "bound constant in (0, 1/2)");
  app->add_option("--r0", o.r0, "complexity constant > 0");
  app->add_option("--trials", o.trials, "trials per point");
  app->add_option("--trials-per-matrix", o.trials_per_matrix, "trials sharing one sampling matrix");
  app->add_option("--seed", o.seed, "master seed (UNIONREC_SEED overrides)");
  app->add_option("--decoders", o.decoders, "comma list of ml, bomp");
  app->add_option("--out", o.out_dir, "output directory");
  app->add_option("--threads", o.threads, "worker threads");
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("UNIONREC_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("UNIONREC_SEED", "not an unsigned integer");
  }
}

ExperimentConfig build_config(const CommonOptions& o) {
  ExperimentConfig c;
  if (!o.preset.empty()) {
    c = config::preset(o.preset, o.desk);
  } else if (!o.config_path.empty()) {
    c = config::experiment_from_json(config::load_json_file(o.config_path));
  } else {
    if (!o.L) throw ConfigError("L", "missing (give --L, --preset or --config)");
    if (!o.d) throw ConfigError("d", "missing (give --d, --preset or --config)");
    if (!o.k0) throw ConfigError("k0", "missing (give --k0, --preset or --config)");
    c.axis = Axis::M;
    if (!o.M) throw ConfigError("M", "missing (give --M, --preset or --config)");
    c.axis_values = {static_cast<double>(*o.M)};
  }
  if (o.L) c.L = *o.L;
  if (o.d) c.d = *o.d;
  if (o.k0) c.k0 = *o.k0;
  if (o.bsnr_ratio) c.bsnr_ratio = *o.bsnr_ratio;
  if (o.eta0) c.bound.eta0 = *o.eta0;
  if (o.r0) c.bound.r0 = *o.r0;
  if (o.trials) c.trials = *o.trials;
  if (o.trials_per_matrix) c.trials_per_matrix = *o.trials_per_matrix;
  if (o.seed) c.seed = *o.seed;
  if (auto s = env_seed()) c.seed = *s;
  if (!o.decoders.empty()) {
    c.use_ml = c.use_bomp = false;
    std::stringstream ss(o.decoders);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name == "ml") {
        c.use_ml = true;
      } else if (name == "bomp") {
        c.use_bomp = true;
      } else {
        throw ConfigError("decoders", "unknown decoder \"" + name + "\"");
      }
    }
  }
  // A fixed M or SNR on the command line collapses the matching axis.
  if (o.M) {
    if (c.axis == Axis::M) {
      c.axis_values = {static_cast<double>(*o.M)};
    } else {
      c.M = *o.M;
    }
  }
  if (o.bsnr_db) {
    if (c.axis == Axis::bsnr_db) {
      c.axis_values = {*o.bsnr_db};
    } else {
      c.bsnr_db = *o.bsnr_db;
    }
  }
  c.validate();
  return c;
}

json bound_value_json(const bounds::BoundValue& v) {
  return {{"raw", v.raw}, {"clamped", v.clamped}, {"log_raw", v.log_raw}};
}

json bound_records(const ExperimentConfig& c) {
  if (c.general()) throw ConfigError("union_bases", "bound needs a block model");
  json rows = json::array();
  for (std::size_t p = 0; p < c.axis_values.size(); ++p) {
    const int M = c.M_at(p);
    const double db = c.bsnr_db_at(p);
    const double snr = model::db_to_linear(db);
    json r = {{"L", c.L}, {"d", c.d}, {"k0", c.k0}, {"M", M}, {"bsnr_db", db}, {"eta0", c.bound.eta0}};
    r["block_bound"] = bound_value_json(bounds::block_bound_random(c.L, c.k0, c.d, M, snr, c.bound));
    std::vector<double> alpha, t0;
    for (int l = 1; l <= c.k0; ++l) {
      alpha.push_back(l * snr);
      t0.push_back(static_cast<double>(model::count_t_of_l(c.L, c.k0, l)));
    }
    const auto ch = bounds::chernoff_grouped_bound(alpha, t0, M, c.k(), c.bound);
    r["chernoff"] = bound_value_json(ch.bound);
    r["chernoff"]["valid"] = ch.valid;
    if (c.d == 1) {
      r["standard_bound"] = bound_value_json(bounds::standard_bound_random(c.L, c.k0, M, snr, c.bound));
      r["wainwright_bound"] = bound_value_json(bounds::wainwright_bound(c.L, c.k0, M, snr));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError(path.string(), "cannot write output file");
  f << text;
}

int cmd_bound(const CommonOptions& o, std::ostream& out) {
  const ExperimentConfig c = build_config(o);
  json j = {{"command", "bound"}, {"config", config::experiment_to_json(c)}, {"points", bound_records(c)}};
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_complexity(const CommonOptions& o, double delta, double t, std::optional<double> eta1, std::ostream& out) {
  ExperimentConfig c = build_config(o);
  if (c.general()) throw ConfigError("union_bases", "complexity needs a block model");
  const double db = c.bsnr_db_at(0);
  const double snr = model::db_to_linear(db);
  const auto r = bounds::block_complexity(c.L, c.k0, c.d, snr, c.bound);
  json j = {{"command", "complexity"},
            {"L", c.L}, {"d", c.d}, {"k0", c.k0}, {"bsnr_db", db},
            {"eta0", c.bound.eta0}, {"r0", c.bound.r0},
            {"block", {{"m1", r.m1}, {"m2", r.m2}, {"m_required", r.m_required}}},
            {"rip_block", {{"delta", delta}, {"t", t},
                           {"m_required", bounds::rip_block_sample_count(c.L, c.k0, c.d, delta, t)}}}};
  if (c.d == 1 && eta1) {
    const auto w = bounds::wainwright_complexity(c.L, c.k0, snr, *eta1);
    j["wainwright"] = {{"eta1", *eta1}, {"value", w.value}, {"log_binomial", w.term_binomial},
                       {"log_over_snr", w.term_snr}, {"binomial_dominates", w.binomial_dominates}};
  }
  out << j.dump(2) << '\n';
  return kOk;
}

void write_sweep_outputs(const montecarlo::SweepResult& res, const std::string& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv, js;
  montecarlo::write_sweep_csv(res, csv);
  montecarlo::write_sweep_json(res, js);
  write_text(std::filesystem::path(dir) / (stem + ".csv"), csv.str());
  write_text(std::filesystem::path(dir) / (stem + ".json"), js.str());
}

int cmd_simulate(const CommonOptions& o, std::size_t point, std::ostream& out) {
  ExperimentConfig c = build_config(o);
  if (point >= c.axis_values.size()) throw ConfigError("point", "index beyond the sweep");
  c.axis_values = {c.axis_values[point]};
  montecarlo::SweepResult res;
  res.config = c;
  res.points.push_back(montecarlo::run_point(c, 0, o.threads));
  write_sweep_json(res, out);
  return kOk;
}

int cmd_sweep(const CommonOptions& o, const std::string& checkpoint, std::ostream& out) {
  const ExperimentConfig c = build_config(o);
  montecarlo::SweepOptions opts;
  opts.threads = o.threads;
  opts.checkpoint_path = checkpoint;
  const auto res = montecarlo::run_sweep(c, opts);
  write_sweep_outputs(res, o.out_dir, c.name);
  montecarlo::write_sweep_csv(res, out);
  return kOk;
}

std::vector<int> parse_indices(const std::string& text, const std::string& field) {
  std::vector<int> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError(field, "expected a comma list of block indices");
    }
  }
  return v;
}

int cmd_pairwise(const CommonOptions& o, const std::string& truth, const std::string& rival, double lambda,
                 long long draws, std::ostream& out) {
  const int L = o.L.value_or(10), d = o.d.value_or(2), k0 = o.k0.value_or(3), M = o.M.value_or(16);
  bounds::BoundConfig bc;
  if (o.eta0) bc.eta0 = *o.eta0;
  try {
    bc.validate();
  } catch (const DomainError& e) {
    throw ConfigError("eta0", e.what());
  }
  std::uint64_t seed = o.seed.value_or(1);
  if (auto s = env_seed()) seed = *s;
  const auto m = model::BlockModel::with_identity(L, d, k0);
  const model::SupportSet uj(parse_indices(truth, "j"), L), ui(parse_indices(rival, "i"), L);
  if (static_cast<int>(uj.size()) != k0 || static_cast<int>(ui.size()) != k0) {
    throw ConfigError("j/i", "supports must have k0 blocks");
  }
  const auto pc = montecarlo::make_block_pair(m, M, uj, ui, o.bsnr_db.value_or(13.0), lambda, seed, draws, bc);
  const auto r = montecarlo::pairwise_validation(pc);
  auto ev = [](const montecarlo::EventEstimate& e) {
    return json{{"count", e.count}, {"rate", e.rate}, {"ci_z3", {e.ci.lo, e.ci.hi}}};
  };
  json j = {{"command", "validate-pairwise"},
            {"L", L}, {"d", d}, {"k0", k0}, {"M", M}, {"j", uj.to_string()}, {"i", ui.to_string()},
            {"seed", seed}, {"eta0", bc.eta0},
            {"lambda", r.lambda}, {"delta_star", r.delta_star}, {"l_columns", r.l}, {"draws", r.draws},
            {"error", ev(r.error)}, {"h1", ev(r.h1)}, {"h2", ev(r.h2)},
            {"error_outside_union", r.error_outside_union},
            {"q_term", r.q_term}, {"tail_bound_x2", r.tail_bound_x2},
            {"tail_bound_rederived_x2", r.tail_bound_rederived_x2}, {"lemma_bound", r.lemma_bound}};
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_selftest(std::ostream& out) {
  const auto checks = selftest();
  int failed = 0;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.module << ": " << c.name;
    if (!c.detail.empty()) out << " (" << c.detail << ")";
    out << '\n';
    failed += !c.passed;
  }
  out << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed ? kSelftestFailed : kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Subspace recovery bounds and Monte Carlo harness", "unionrec"};
  app.require_subcommand(1, 1);

  CommonOptions bound_o, cx_o, sim_o, sweep_o, pw_o;
  auto* bound = app.add_subcommand("bound", "evaluate the error bounds");
  add_common(bound, bound_o);

  auto* cx = app.add_subcommand("complexity", "sample-complexity formulas");
  add_common(cx, cx_o);
  double delta = 0.5, t = 1.0;
  std::optional<double> eta1;
  cx->add_option("--delta", delta, "RIP constant in (0, 1)");
  cx->add_option("--t", t, "RIP confidence parameter");
  cx->add_option("--eta1", eta1, "constant of the Wainwright condition (d = 1 only)");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo at one sweep point");
  add_common(sim, sim_o);
  std::size_t point = 0;
  sim->add_option("--point", point, "sweep index");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo over the whole sweep");
  add_common(sweep, sweep_o);
  std::string checkpoint;
  sweep->add_option("--checkpoint", checkpoint, "resume file");

  auto* pw = app.add_subcommand("validate-pairwise", "pairwise error events on one fixed instance");
  add_common(pw, pw_o);
  std::string truth = "0,1,2", rival = "0,1,3";
  double lambda = 40.0;
  long long draws = 100000;
  pw->add_option("--j", truth, "true support");
  pw->add_option("--i", rival, "competing support");
  pw->add_option("--lambda", lambda, "target lambda_{j\\i}");
  pw->add_option("--draws", draws, "noise draws");

  auto* st = app.add_subcommand("selftest", "run the invariant suite");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (bound->parsed()) return cmd_bound(bound_o, out);
    if (cx->parsed()) return cmd_complexity(cx_o, delta, t, eta1, out);
    if (sim->parsed()) return cmd_simulate(sim_o, point, out);
    if (sweep->parsed()) return cmd_sweep(sweep_o, checkpoint, out);
    if (pw->parsed()) return cmd_pairwise(pw_o, truth, rival, lambda, draws, out);
    if (st->parsed()) return cmd_selftest(out);
  } catch (const ConfigError& e) {
    err << json{{"error", "config"}, {"field", e.field()}, {"message", e.what()}}.dump() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << json{{"error", "numerical"}, {"message", e.what()}}.dump() << '\n';
    return kNumericalError;
  } catch (const SizeError& e) {
    err << json{{"error", "size"}, {"message", e.what()}}.dump() << '\n';
    return kNumericalError;
  }
  return kConfigError;
}

}  // namespace unionrec::cli
