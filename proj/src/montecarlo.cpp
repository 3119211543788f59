#include "unionrec/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "unionrec/config.hpp"
#include "unionrec/decode.hpp"
#include "unionrec/errors.hpp"
#include "unionrec/rng.hpp"
#include "unionrec/specfun.hpp"

namespace unionrec::montecarlo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

int ExperimentConfig::N() const {
  return general() ? static_cast<int>(union_bases.front().rows()) : L * d;
}

int ExperimentConfig::k() const {
  return general() ? static_cast<int>(union_bases.front().cols()) : k0 * d;
}

int ExperimentConfig::M_at(std::size_t point) const {
  return axis == Axis::M ? static_cast<int>(std::lround(axis_values.at(point))) : M;
}

double ExperimentConfig::bsnr_db_at(std::size_t point) const {
  return axis == Axis::bsnr_db ? axis_values.at(point) : bsnr_db;
}

void ExperimentConfig::validate() const {
  if (general()) {
    try {
      model::GeneralUnion::make(union_bases);
    } catch (const std::exception& e) {
      throw ConfigError("union_bases", e.what());
    }
    if (use_bomp) throw ConfigError("decoders", "B-OMP needs a block model");
  } else {
    if (L < 1) throw ConfigError("model.L", "must be >= 1");
    if (d < 1) throw ConfigError("model.d", "must be >= 1");
    if (k0 < 1 || 2 * k0 > L) throw ConfigError("model.k0", "must satisfy 1 <= k0 <= L/2");
    if (use_ml && std::exp(specfun::ln_binomial(L, k0)) > static_cast<double>(model::kDefaultEnumerationCap)) {
      throw ConfigError("model.k0", "C(L, k0) exceeds the ML enumeration cap");
    }
  }
  if (!use_ml && !use_bomp) throw ConfigError("decoders", "no decoder selected");
  if (axis_values.empty()) throw ConfigError("sweep.values", "sweep is empty");
  for (std::size_t p = 0; p < axis_values.size(); ++p) {
    if (!std::isfinite(axis_values[p])) throw ConfigError("sweep.values", "non-finite value");
    if (axis == Axis::M && axis_values[p] != std::round(axis_values[p])) {
      throw ConfigError("sweep.values", "M values must be integers");
    }
    if (M_at(p) <= k()) {
      throw ConfigError(axis == Axis::M ? "sweep.values" : "sweep.M",
                        "every M must exceed k = " + std::to_string(k()));
    }
  }
  if (!(bsnr_ratio >= 1.0)) throw ConfigError("sweep.bsnr_ratio", "must be >= 1");
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  if (trials_per_matrix < 1) throw ConfigError("trials_per_matrix", "must be >= 1");
  try {
    bound.validate();
  } catch (const DomainError& e) {
    throw ConfigError(bound.eta0 > 0.0 && bound.eta0 < 0.5 ? "r0" : "eta0", e.what());
  }
  try {
    noise.validate();
  } catch (const DomainError& e) {
    throw ConfigError("sigma_w2", e.what());
  }
}

Tally& Tally::operator+=(const Tally& o) {
  trials += o.trials;
  ml_errors += o.ml_errors;
  bomp_errors += o.bomp_errors;
  failures += o.failures;
  return *this;
}

Interval wilson_interval(long long errors, long long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = errors / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  return {errors == 0 ? 0.0 : std::max(0.0, centre - half), errors == n ? 1.0 : std::min(1.0, centre + half)};
}

namespace {

// Shared, read-only state for one sweep point.
struct PointContext {
  const ExperimentConfig* cfg = nullptr;
  std::size_t point = 0;
  int M = 0;
  double db = 0.0;
  model::BlockModel block_model;
  std::vector<model::SupportSet> supports;
};

// One sampling operator plus the decoders built on it.
struct MatrixSlot {
  bool ok = false;
  linalg::Mat A;
  std::unique_ptr<decode::MlDecoder> ml;
  std::vector<linalg::Mat> blocks;
};

MatrixSlot build_slot(const PointContext& ctx, long long block, int attempt) {
  const ExperimentConfig& cfg = *ctx.cfg;
  MatrixSlot s;
  s.A = model::sample_gaussian_operator(
            ctx.M, cfg.N(),
            derive_seed(cfg.seed, ctx.point, static_cast<std::uint64_t>(block), Purpose::matrix, attempt))
            .A;
  try {
    if (cfg.general()) {
      std::vector<linalg::Mat> cands;
      for (const auto& b : cfg.union_bases) cands.push_back(s.A * b);
      s.ml = std::make_unique<decode::MlDecoder>(cands);
    } else {
      if (cfg.use_ml) s.ml = std::make_unique<decode::MlDecoder>(s.A, ctx.block_model, ctx.supports);
      if (cfg.use_bomp) s.blocks = decode::sampled_blocks(s.A, ctx.block_model);
    }
    s.ok = true;
  } catch (const NumericalError&) {
    s.ok = false;
  }
  return s;
}

Tally run_matrix_block(const PointContext& ctx, long long block, long long first, long long last) {
  const ExperimentConfig& cfg = *ctx.cfg;
  Tally t;
  std::vector<std::unique_ptr<MatrixSlot>> slots(kMaxRedraws + 1);
  auto slot = [&](int attempt) -> const MatrixSlot& {
    if (!slots[attempt]) slots[attempt] = std::make_unique<MatrixSlot>(build_slot(ctx, block, attempt));
    return *slots[attempt];
  };

  for (long long trial = first; trial < last; ++trial) {
    const auto tu = static_cast<std::uint64_t>(trial);
    Rng support_rng(derive_seed(cfg.seed, ctx.point, tu, Purpose::support));
    Rng noise_rng(derive_seed(cfg.seed, ctx.point, tu, Purpose::noise));

    linalg::Vec x;
    model::SupportSet truth;
    std::size_t truth_index = 0;
    if (cfg.general()) {
      std::uniform_int_distribution<std::size_t> pick(0, cfg.union_bases.size() - 1);
      truth_index = pick(support_rng);
      Rng sig_rng(derive_seed(cfg.seed, ctx.point, tu, Purpose::signal));
      std::normal_distribution<double> normal(0.0, 1.0);
      linalg::Vec coeffs(cfg.k());
      for (Eigen::Index m = 0; m < coeffs.size(); ++m) coeffs(m) = normal(sig_rng);
      // Per-coefficient SNR equals the configured level on average.
      coeffs *= std::sqrt(cfg.k() * cfg.noise.sigma_w2 * model::db_to_linear(ctx.db)) / coeffs.norm();
      x = cfg.union_bases[truth_index] * coeffs;
    } else {
      truth = model::random_support(cfg.L, cfg.k0, support_rng);
      const auto sig = model::generate_block_signal(ctx.block_model, truth, ctx.db, cfg.bsnr_ratio, cfg.noise,
                                                    derive_seed(cfg.seed, ctx.point, tu, Purpose::signal));
      x = ctx.block_model.V * sig.c;
    }
    const linalg::Vec w = model::draw_noise(ctx.M, cfg.noise, noise_rng);

    bool done = false;
    bool failed = false;
    for (int attempt = 0; attempt <= kMaxRedraws && !done; ++attempt) {
      const MatrixSlot& s = slot(attempt);
      if (!s.ok) {
        failed = true;
        continue;
      }
      try {
        const linalg::Vec y = s.A * x + w;
        bool ml_err = false, bomp_err = false;
        if (cfg.use_ml) {
          const auto r = s.ml->decode(y);
          ml_err = cfg.general() ? !decode::evaluate_trial(truth_index, r).correct
                                 : !decode::evaluate_trial(truth, r).correct;
        }
        if (cfg.use_bomp) bomp_err = !decode::evaluate_trial(truth, decode::bomp(y, s.blocks, cfg.k0)).correct;
        t.ml_errors += ml_err;
        t.bomp_errors += bomp_err;
        done = true;
      } catch (const NumericalError&) {
        failed = true;
      }
    }
    if (!done) {
      t.ml_errors += cfg.use_ml;
      t.bomp_errors += cfg.use_bomp;
    }
    t.failures += failed;
    ++t.trials;
  }
  return t;
}

PointContext make_context(const ExperimentConfig& cfg, std::size_t point) {
  PointContext ctx;
  ctx.cfg = &cfg;
  ctx.point = point;
  ctx.M = cfg.M_at(point);
  ctx.db = cfg.bsnr_db_at(point);
  if (!cfg.general()) {
    ctx.block_model = cfg.basis == Basis::identity
                          ? model::BlockModel::with_identity(cfg.L, cfg.d, cfg.k0)
                          : model::BlockModel::make(cfg.L, cfg.d, cfg.k0,
                                                    model::random_orthonormal(cfg.L * cfg.d,
                                                                              derive_seed(cfg.seed, 0, 0, Purpose::basis)));
    if (cfg.use_ml) ctx.supports = model::enumerate_supports(cfg.L, cfg.k0);
  }
  return ctx;
}

}  // namespace

Tally run_point_range(const ExperimentConfig& cfg, std::size_t point, long long first, long long last,
                      int threads) {
  if (point >= cfg.axis_values.size()) throw DomainError("run_point_range: point index out of range");
  first = std::max(0LL, first);
  last = std::min(cfg.trials, last);
  if (first >= last) return {};
  const PointContext ctx = make_context(cfg, point);

  // Work units are the pieces of matrix blocks that fall inside [first, last).
  struct Unit {
    long long block, lo, hi;
  };
  std::vector<Unit> units;
  const long long per = cfg.trials_per_matrix;
  for (long long b = first / per; b * per < last; ++b) {
    units.push_back({b, std::max(first, b * per), std::min(last, (b + 1) * per)});
  }

  std::vector<Tally> partial(units.size());
  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(units.size())));
  if (nthreads == 1) {
    for (std::size_t u = 0; u < units.size(); ++u) partial[u] = run_matrix_block(ctx, units[u].block, units[u].lo, units[u].hi);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t u = next++; u < units.size(); u = next++) {
          try {
            partial[u] = run_matrix_block(ctx, units[u].block, units[u].lo, units[u].hi);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  Tally total;
  for (const auto& p : partial) total += p;
  return total;
}

PointRecord make_record(const ExperimentConfig& cfg, std::size_t point, const Tally& tally) {
  PointRecord r;
  r.index = point;
  r.axis_value = cfg.axis_values.at(point);
  r.M = cfg.M_at(point);
  r.bsnr_db = cfg.bsnr_db_at(point);
  r.tally = tally;
  r.point_seed = derive_seed(cfg.seed, point, 0, Purpose::support);
  const double n = static_cast<double>(std::max(1LL, tally.trials));
  r.ml_rate = cfg.use_ml ? tally.ml_errors / n : kNaN;
  r.bomp_rate = cfg.use_bomp ? tally.bomp_errors / n : kNaN;
  r.ml_ci = cfg.use_ml ? wilson_interval(tally.ml_errors, tally.trials) : Interval{kNaN, kNaN};
  r.bomp_ci = cfg.use_bomp ? wilson_interval(tally.bomp_errors, tally.trials) : Interval{kNaN, kNaN};

  r.block_bound = {kNaN, kNaN, kNaN};
  r.chernoff = {{kNaN, kNaN, kNaN}, false};
  r.wainwright_raw = kNaN;
  if (!cfg.general()) {
    const double bsnr = model::db_to_linear(r.bsnr_db);
    r.block_bound = bounds::block_bound_random(cfg.L, cfg.k0, cfg.d, r.M, bsnr, cfg.bound);
    std::vector<double> alpha(cfg.k0), t0(cfg.k0);
    for (int l = 1; l <= cfg.k0; ++l) {
      alpha[l - 1] = l * bsnr;
      t0[l - 1] = static_cast<double>(model::count_t_of_l(cfg.L, cfg.k0, l));
    }
    r.chernoff = bounds::chernoff_grouped_bound(alpha, t0, r.M, cfg.k(), cfg.bound);
    if (cfg.d == 1) r.wainwright_raw = bounds::wainwright_bound(cfg.L, cfg.k0, r.M, bsnr).raw;
  }
  return r;
}

PointRecord run_point(const ExperimentConfig& cfg, std::size_t point, int threads) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Tally tally = run_point_range(cfg, point, 0, cfg.trials, threads);
  PointRecord r = make_record(cfg, point, tally);
  r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

using config::json;

void save_checkpoint(const std::string& path, const ExperimentConfig& cfg, const std::map<std::size_t, Tally>& done) {
  json j;
  j["config"] = config::experiment_to_json(cfg);
  j["points"] = json::array();
  for (const auto& [idx, t] : done) {
    j["points"].push_back({{"index", idx}, {"tally", {t.trials, t.ml_errors, t.bomp_errors, t.failures}}});
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError(path, "cannot write checkpoint");
    out << j.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::map<std::size_t, Tally> load_checkpoint(const std::string& path, const ExperimentConfig& cfg) {
  std::map<std::size_t, Tally> done;
  if (!std::filesystem::exists(path)) return done;
  const json j = config::load_json_file(path);
  if (!j.contains("config") || j.at("config") != config::experiment_to_json(cfg)) {
    throw ConfigError(path, "checkpoint belongs to a different configuration");
  }
  for (const auto& p : j.at("points")) {
    const auto v = p.at("tally").get<std::vector<long long>>();
    done[p.at("index").get<std::size_t>()] = Tally{v.at(0), v.at(1), v.at(2), v.at(3)};
  }
  return done;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opts) {
  cfg.validate();
  SweepResult res;
  res.config = cfg;
  std::map<std::size_t, Tally> done;
  if (!opts.checkpoint_path.empty()) done = load_checkpoint(opts.checkpoint_path, cfg);

  for (std::size_t p = 0; p < cfg.axis_values.size(); ++p) {
    if (auto it = done.find(p); it != done.end()) {
      res.points.push_back(make_record(cfg, p, it->second));
      continue;
    }
    if (opts.cancel && opts.cancel->load()) {
      res.complete = false;
      break;
    }
    PointRecord r = run_point(cfg, p, opts.threads);
    done[p] = r.tally;
    if (!opts.checkpoint_path.empty()) save_checkpoint(opts.checkpoint_path, cfg, done);
    res.points.push_back(r);
  }
  if (!res.complete) res.resume_token = opts.checkpoint_path;
  std::stable_sort(res.points.begin(), res.points.end(),
                   [](const PointRecord& a, const PointRecord& b) { return a.axis_value < b.axis_value; });
  return res;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "# schema: " << kCsvSchema << '\n';
  out << "# config: " << config::experiment_to_json(result.config).dump() << '\n';
  out << "point,axis_value,M,bsnr_db,trials,ml_errors,ml_rate,ml_lo,ml_hi,bomp_errors,bomp_rate,bomp_lo,bomp_hi,"
         "failures,block_bound_raw,block_bound_clamped,chernoff_raw,chernoff_valid,wainwright_raw,point_seed\n";
  for (const auto& p : result.points) {
    out << p.index << ',' << num(p.axis_value) << ',' << p.M << ',' << num(p.bsnr_db) << ',' << p.tally.trials << ','
        << p.tally.ml_errors << ',' << num(p.ml_rate) << ',' << num(p.ml_ci.lo) << ',' << num(p.ml_ci.hi) << ','
        << p.tally.bomp_errors << ',' << num(p.bomp_rate) << ',' << num(p.bomp_ci.lo) << ',' << num(p.bomp_ci.hi)
        << ',' << p.tally.failures << ',' << num(p.block_bound.raw) << ',' << num(p.block_bound.clamped) << ','
        << num(p.chernoff.bound.raw) << ',' << (p.chernoff.valid ? 1 : 0) << ',' << num(p.wainwright_raw) << ','
        << p.point_seed << '\n';
  }
}

void write_sweep_json(const SweepResult& result, std::ostream& out) {
  json j;
  j["schema"] = kCsvSchema;
  j["config"] = config::experiment_to_json(result.config);
  j["complete"] = result.complete;
  j["resume_token"] = result.resume_token;
  j["points"] = json::array();
  auto or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& p : result.points) {
    j["points"].push_back({{"point", p.index},
                           {"axis_value", p.axis_value},
                           {"M", p.M},
                           {"bsnr_db", p.bsnr_db},
                           {"trials", p.tally.trials},
                           {"ml_errors", p.tally.ml_errors},
                           {"bomp_errors", p.tally.bomp_errors},
                           {"failures", p.tally.failures},
                           {"ml_rate", or_null(p.ml_rate)},
                           {"ml_ci", {or_null(p.ml_ci.lo), or_null(p.ml_ci.hi)}},
                           {"bomp_rate", or_null(p.bomp_rate)},
                           {"bomp_ci", {or_null(p.bomp_ci.lo), or_null(p.bomp_ci.hi)}},
                           {"block_bound_raw", or_null(p.block_bound.raw)},
                           {"block_bound_clamped", or_null(p.block_bound.clamped)},
                           {"chernoff_raw", or_null(p.chernoff.bound.raw)},
                           {"chernoff_valid", p.chernoff.valid},
                           {"wainwright_raw", or_null(p.wainwright_raw)},
                           {"elapsed_s", p.elapsed_s},
                           {"seed", {{"master", result.config.seed}, {"point_seed", p.point_seed}}}});
  }
  out << j.dump(2) << '\n';
}

PairwiseRecord pairwise_validation(const PairwiseConfig& cfg) {
  cfg.bound.validate();
  cfg.noise.validate();
  if (cfg.Vi.rows() != cfg.A.cols() || cfg.Vj.rows() != cfg.A.cols() || cfg.x.size() != cfg.A.cols()) {
    throw DimensionMismatch("pairwise_validation: dimensions disagree");
  }
  if (cfg.draws < 1) throw DomainError("pairwise_validation: need draws >= 1");
  const linalg::Projector pi(cfg.A * cfg.Vi);
  const linalg::Projector pj(cfg.A * cfg.Vj);
  const linalg::Vec ax = cfg.A * cfg.x;
  const double s2 = cfg.noise.sigma_w2;

  PairwiseRecord r;
  r.lambda = pi.residual_energy(ax) / s2;
  if (!(r.lambda > 0.0)) throw DomainError("pairwise_validation: lambda is zero");
  r.delta_star = cfg.bound.eta0 * r.lambda;
  model::GeneralUnion pair{static_cast<int>(cfg.Vj.rows()), static_cast<int>(cfg.Vj.cols()), {cfg.Vj, cfg.Vi}};
  r.l = static_cast<int>(pair.missing_columns(0, 1).size());
  if (r.l < 1) throw DomainError("pairwise_validation: span(Vj) lies inside span(Vi)");
  r.draws = cfg.draws;

  Rng rng(derive_seed(cfg.seed, 0, 0, Purpose::pairwise));
  const model::NoiseSpec noise{s2, false};
  for (long long t = 0; t < cfg.draws; ++t) {
    const linalg::Vec w = model::draw_noise(static_cast<int>(cfg.A.rows()), noise, rng);
    const linalg::Vec y = ax + w;
    const double ei_y = pi.residual_energy(y);
    const double ej_y = pj.residual_energy(y);
    const double ei_w = pi.residual_energy(w);
    const bool err = ei_y - ej_y < 0.0;
    const bool h1 = std::abs(ej_y - ei_w) / s2 >= r.delta_star;
    const bool h2 = (ei_y - ei_w) / s2 <= 2.0 * r.delta_star;
    r.error.count += err;
    r.h1.count += h1;
    r.h2.count += h2;
    r.error_outside_union += err && !h1 && !h2;
  }
  for (EventEstimate* e : {&r.error, &r.h1, &r.h2}) {
    e->rate = static_cast<double>(e->count) / cfg.draws;
    e->ci = wilson_interval(e->count, cfg.draws, 3.0);
  }
  r.q_term = specfun::gaussian_q(0.5 * (1.0 - 2.0 * cfg.bound.eta0) * std::sqrt(r.lambda));
  r.tail_bound_x2 = 2.0 * specfun::chi2_diff_tail_bound(r.l, r.delta_star);
  r.tail_bound_rederived_x2 = 2.0 * specfun::chi2_diff_tail_bound_rederived(r.l, r.delta_star);
  r.lemma_bound = bounds::pairwise_error_bound(r.l, r.lambda, cfg.bound).raw;
  return r;
}

PairwiseConfig make_block_pair(const model::BlockModel& m, int M, const model::SupportSet& truth,
                               const model::SupportSet& rival, double bsnr_db, double lambda,
                               std::uint64_t seed, long long draws, const bounds::BoundConfig& bound) {
  if (!(lambda > 0.0)) throw DomainError("make_block_pair: need lambda > 0");
  PairwiseConfig pc;
  pc.A = model::sample_gaussian_operator(M, m.N(), derive_seed(seed, 0, 0, Purpose::matrix)).A;
  pc.Vj = model::build_block_basis(m, truth);
  pc.Vi = model::build_block_basis(m, rival);
  pc.noise = model::NoiseSpec{};
  pc.bound = bound;
  pc.draws = draws;
  pc.seed = seed;
  const auto sig = model::generate_block_signal(m, truth, bsnr_db, 1.0, pc.noise,
                                                derive_seed(seed, 0, 0, Purpose::signal));
  linalg::Vec x = m.V * sig.c;
  const double current = model::lambda_j_given_i(pc.A, pc.Vi, x, pc.noise);
  if (!(current > 0.0)) throw DomainError("make_block_pair: lambda vanishes for this pair");
  pc.x = x * std::sqrt(lambda / current);
  return pc;
}

}  // namespace unionrec::montecarlo
