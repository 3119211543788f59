#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "unionrec/bounds.hpp"
#include "unionrec/cli.hpp"
#include "unionrec/decode.hpp"
#include "unionrec/errors.hpp"
#include "unionrec/linalg.hpp"
#include "unionrec/model.hpp"
#include "unionrec/montecarlo.hpp"
#include "unionrec/rng.hpp"
#include "unionrec/specfun.hpp"

namespace unionrec::cli {

namespace {

using linalg::Mat;
using linalg::Vec;

Mat gaussian(int r, int c, std::uint64_t seed) { return model::sample_gaussian_operator(r, c, seed).A; }

Vec gaussian_vec(int n, std::uint64_t seed) { return gaussian(n, 1, seed).col(0); }

struct Runner {
  std::vector<SelftestCheck> checks;

  void run(const std::string& module, const std::string& name, const std::function<std::string()>& body) {
    SelftestCheck c{module, name, false, ""};
    try {
      c.detail = body();
      c.passed = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    checks.push_back(std::move(c));
  }
};

std::string expect(bool ok, const std::string& what) { return ok ? "" : what; }

double env_double(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  return std::stod(v);
}

}  // namespace

std::vector<SelftestCheck> selftest() {
  Runner r;
  std::uint64_t seed = 20240601;
  if (const char* s = std::getenv("UNIONREC_SEED"); s && *s) seed = std::stoull(s);
  bounds::BoundConfig bc;
  bc.eta0 = env_double("UNIONREC_ETA0", bc.eta0);

  r.run("linalg", "projector idempotence, complementarity, annihilation", [&] {
    const Mat b = gaussian(9, 3, seed);
    const linalg::Projector p(b);
    const Mat P = p.q() * p.q().transpose();
    const Vec y = gaussian_vec(9, seed + 1);
    const double comp = std::abs(p.project(y).squaredNorm() + p.residual(y).squaredNorm() - y.squaredNorm());
    Mat annih(9, 3);
    for (int c = 0; c < 3; ++c) annih.col(c) = p.residual(b.col(c));
    return expect((P * P - P).norm() <= 1e-9 && comp <= 1e-9 * y.squaredNorm() && annih.norm() <= 1e-9 * b.norm(),
                  "projector identities violated");
  });
  r.run("linalg", "null-space basis agrees with residual projection", [&] {
    const Mat b = gaussian(8, 3, seed + 2);
    const Vec y = gaussian_vec(8, seed + 3);
    const Mat q = linalg::nullspace_basis(b);
    const double a = (q.transpose() * y).norm(), c = linalg::residual_project(b, y).norm();
    return expect(std::abs(a - c) <= 1e-9 * c, "norms differ");
  });

  r.run("specfun", "Q Chernoff inequality on (0, 10]", [&] {
    for (double x = 0.05; x <= 10.0; x += 0.05) {
      if (specfun::gaussian_q(x) > 0.5 * std::exp(-x * x / 2)) return std::string("fails at x = ") + std::to_string(x);
    }
    return std::string();
  });
  r.run("specfun", "K_nu decreasing in x, half-integer closed form", [&] {
    for (int tn = 0; tn <= 20; ++tn) {
      double prev = INFINITY;
      for (double x = 0.05; x < 40; x *= 1.3) {
        const double v = specfun::bessel_k(specfun::HalfOrder::from_twice(tn), x);
        if (!(v < prev)) return std::string("not decreasing");
        prev = v;
      }
    }
    const double k12 = specfun::bessel_k(specfun::HalfOrder::from_twice(1), 1.0);
    return expect(std::abs(k12 - std::sqrt(M_PI / 2) * std::exp(-1.0)) < 1e-14, "K_1/2(1) closed form");
  });
  r.run("specfun", "Psi equals twice the tail expression at delta = eta0 lambda", [&] {
    const double eta = bc.eta0 > 0 && bc.eta0 < 0.5 ? bc.eta0 : 0.25;
    for (int l = 1; l <= 6; ++l) {
      const double a = specfun::psi_term(l, 30.0, eta), b = 2 * specfun::chi2_diff_tail_bound(l, eta * 30.0);
      if (std::abs(a - b) > 1e-12 * a) return std::string("mismatch at l = ") + std::to_string(l);
    }
    return std::string();
  });

  r.run("model", "sum over l of T(l) equals T - 1", [&] {
    for (int L = 2; L <= 8; ++L)
      for (int k0 = 1; 2 * k0 <= L; ++k0) {
        std::uint64_t s = 0;
        for (int l = 1; l <= k0; ++l) s += model::count_t_of_l(L, k0, l);
        if (s != model::binomial(L, k0) - 1) return std::string("count mismatch");
      }
    return std::string();
  });
  r.run("model", "generated BSNR round trip and bsnr >= d csnr", [&] {
    const auto m = model::BlockModel::with_identity(10, 2, 3);
    Rng rng(seed);
    for (int t = 0; t < 20; ++t) {
      const auto u = model::random_support(10, 3, rng);
      const auto s = model::generate_block_signal(m, u, 13.0, 1.825, {}, seed + t);
      const double b = model::bsnr_min(s, {});
      if (std::abs(b - std::pow(10.0, 1.3)) > 1e-9 * b) return std::string("bsnr round trip");
      if (b < 2 * model::csnr_min(s, {}) - 1e-12) return std::string("bsnr < d csnr");
    }
    return std::string();
  });

  r.run("decode", "decision statistic antisymmetry", [&] {
    const Mat bi = gaussian(10, 3, seed + 5), bj = gaussian(10, 3, seed + 6);
    const Vec y = gaussian_vec(10, seed + 7);
    return expect(std::abs(decode::decision_statistic(y, bi, bj) + decode::decision_statistic(y, bj, bi)) < 1e-9,
                  "Delta_ij + Delta_ji != 0");
  });
  r.run("decode", "B-OMP: no repeats, residual orthogonal to selection", [&] {
    const auto m = model::BlockModel::with_identity(8, 2, 3);
    const Mat A = gaussian(12, 16, seed + 8);
    const auto blocks = decode::sampled_blocks(A, m);
    const Vec y = gaussian_vec(12, seed + 9);
    const auto tr = decode::bomp_trace(y, blocks, 3);
    Mat sel(12, 6);
    for (int t = 0; t < 3; ++t) sel.middleCols(2 * t, 2) = blocks[tr.order[t]];
    const Vec res = linalg::residual_project(sel, y);
    bool mono = true;
    for (std::size_t t = 1; t < tr.residual_norms.size(); ++t) mono &= tr.residual_norms[t] <= tr.residual_norms[t - 1] + 1e-12;
    return expect(tr.support.size() == 3 && (sel.transpose() * res).norm() < 1e-9 && mono, "B-OMP invariants");
  });
  r.run("decode", "noiseless ML recovery at M = k + 1", [&] {
    const auto m = model::BlockModel::with_identity(12, 1, 3);
    const auto sup = model::enumerate_supports(12, 3);
    Rng rng(seed + 10);
    for (int t = 0; t < 10; ++t) {
      const Mat A = gaussian(4, 12, seed + 100 + t);
      const decode::MlDecoder dec(A, m, sup);
      const auto u = model::random_support(12, 3, rng);
      const auto s = model::generate_block_signal(m, u, 10.0, 2.0, {}, seed + 200 + t);
      if (!(*dec.decode(A * s.c).support == u)) return std::string("wrong support");
    }
    return std::string();
  });

  r.run("bounds", "BoundConfig invariant", [&] {
    bc.validate();
    return std::string();
  });
  r.run("bounds", "monotone in M and SNR, clamped to [0, 1]", [&] {
    double prev = INFINITY;
    for (int M = 7; M <= 30; ++M) {
      const auto v = bounds::block_bound_random(10, 3, 2, M, 20.0, bc);
      if (!(v.raw <= prev) || v.clamped < 0 || v.clamped > 1) return std::string("M monotonicity / clamp");
      prev = v.raw;
    }
    prev = INFINITY;
    for (double s = 1; s < 1000; s *= 1.5) {
      const double v = bounds::block_bound_random(10, 3, 2, 14, s, bc).raw;
      if (!(v <= prev)) return std::string("SNR monotonicity");
      prev = v;
    }
    return std::string();
  });
  r.run("bounds", "specialization chain block(d=1) = standard = grouped", [&] {
    const int N = 20, k = 3, M = 12;
    const double c = 8.0;
    const double a = bounds::block_bound_random(N, k, 1, M, c, bc).raw;
    const double b = bounds::standard_bound_random(N, k, M, c, bc).raw;
    std::vector<double> al, t0;
    for (int l = 1; l <= k; ++l) {
      al.push_back(l * c);
      t0.push_back(static_cast<double>(model::count_t_of_l(N, k, l)));
    }
    const double g = bounds::grouped_bound(al, t0, M, k, bc).raw;
    return expect(std::abs(a - b) <= 1e-12 * a && std::abs(a - g) <= 1e-12 * a, "specializations differ");
  });

  r.run("montecarlo", "determinism and shard merge", [&] {
    montecarlo::ExperimentConfig cfg;
    cfg.L = 6, cfg.d = 2, cfg.k0 = 2;
    cfg.axis_values = {7};
    cfg.bsnr_db = 5;
    cfg.trials = 200;
    cfg.trials_per_matrix = 50;
    cfg.use_bomp = true;
    cfg.seed = seed;
    const auto a = montecarlo::run_point_range(cfg, 0, 0, 200);
    const auto b = montecarlo::run_point_range(cfg, 0, 0, 200, 2);
    montecarlo::Tally merged;
    for (int s = 0; s < 10; ++s) merged += montecarlo::run_point_range(cfg, 0, 20 * s, 20 * s + 20);
    return expect(a == b && a == merged, "tallies differ");
  });
  r.run("montecarlo", "Wilson interval contains the rate", [&] {
    for (long long n : {1LL, 10LL, 1000LL})
      for (long long e = 0; e <= n; e += std::max(1LL, n / 7)) {
        const auto ci = montecarlo::wilson_interval(e, n);
        const double p = static_cast<double>(e) / n;
        if (!(ci.lo <= p && p <= ci.hi)) return std::string("interval misses rate");
      }
    return std::string();
  });

  r.run("cli", "CSV schema header is stable", [&] {
    montecarlo::SweepResult res;
    res.config.axis_values = {8};
    std::ostringstream os;
    montecarlo::write_sweep_csv(res, os);
    return expect(os.str().rfind(std::string("# schema: ") + montecarlo::kCsvSchema + "\n", 0) == 0,
                  "schema line missing");
  });
  return r.checks;
}

}  // namespace unionrec::cli
