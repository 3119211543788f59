// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "quadrature.hpp"
#include "unionrec/bounds.hpp"
#include "unionrec/montecarlo.hpp"
#include "unionrec/specfun.hpp"

using namespace unionrec;
using namespace unionrec::montecarlo;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::ostringstream note;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.note << " exception: " << e.what();
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s |%s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.note.str().c_str());
  std::fflush(stdout);
}

ExperimentConfig criterion1_config() {
  ExperimentConfig c;
  c.name = "dominance";
  c.L = 10;
  c.d = 2;
  c.k0 = 3;
  c.axis = Axis::M;
  c.axis_values = {8, 10, 12, 16, 20};
  c.bsnr_db = 13.0;
  c.trials = 2000;
  c.trials_per_matrix = 100;
  c.seed = 1;
  return c;
}

std::string csv_of(const SweepResult& r) {
  std::ostringstream os;
  write_sweep_csv(r, os);
  return os.str();
}

double half_width(long long e, long long n, double z) {
  const auto w = wilson_interval(e, n, z);
  return 0.5 * (w.hi - w.lo);
}

}  // namespace

int main() {
  const auto c1 = criterion1_config();
  SweepResult r1;

  report(1, "ML error below the block bound, L=10 d=2 k0=3, 13 dB", [&](Outcome& o) {
    const auto t0 = Clock::now();
    r1 = run_sweep(c1, {1});
    const double secs = seconds_since(t0);
    double prev_bound = INFINITY;
    for (std::size_t p = 0; p < r1.points.size(); ++p) {
      const auto& pt = r1.points[p];
      const auto ci3 = wilson_interval(pt.tally.ml_errors, pt.tally.trials, 3.0);
      const bool dominated = ci3.lo <= pt.block_bound.clamped;
      const bool bound_mono = pt.block_bound.clamped <= prev_bound;
      bool rate_mono = true;
      if (p > 0) rate_mono = pt.ml_ci.lo <= r1.points[p - 1].ml_ci.hi;
      o.pass = o.pass && dominated && bound_mono && rate_mono;
      prev_bound = pt.block_bound.clamped;
      o.note << " M=" << pt.M << " err=" << fmt("%.4g", pt.ml_rate) << " bound=" << fmt("%.4g", pt.block_bound.clamped)
             << (dominated ? "" : "(violated)") << (rate_mono ? "" : "(rate increase)");
    }
    o.note << " | " << fmt("%.1f", secs) << " s single-threaded";
    o.pass = o.pass && secs < 300;
  });

  report(2, "B-OMP error above ML error, M=14, BSNR sweep, ratio 1.825", [&](Outcome& o) {
    ExperimentConfig c = c1;
    c.name = "ordering";
    c.axis = Axis::bsnr_db;
    c.axis_values = {7, 10, 13, 16, 19};
    c.M = 14;
    c.bsnr_ratio = 1.825;
    c.use_bomp = true;
    const auto r = run_sweep(c, {4});
    int strictly = 0;
    for (const auto& pt : r.points) {
      const long long n = pt.tally.trials;
      const double se = std::hypot(half_width(pt.tally.ml_errors, n, 1.0), half_width(pt.tally.bomp_errors, n, 1.0));
      const bool ok = pt.bomp_rate >= pt.ml_rate - 3 * se;
      strictly += pt.bomp_rate - pt.ml_rate > 3 * se;
      o.pass = o.pass && ok;
      o.note << " " << pt.bsnr_db << "dB ml=" << fmt("%.4g", pt.ml_rate) << " bomp=" << fmt("%.4g", pt.bomp_rate);
    }
    o.note << " | significantly greater at " << strictly << "/5";
    o.pass = o.pass && strictly >= 3;
  });

  report(3, "noiseless ML recovery, d=1 N=20 k=3 M=4", [&](Outcome& o) {
    ExperimentConfig c;
    c.L = 20;
    c.d = 1;
    c.k0 = 3;
    c.axis_values = {4};
    c.trials = 100;
    c.trials_per_matrix = 10;
    c.noise.noiseless = true;
    const auto pt = run_point(c, 0);
    o.pass = pt.tally.ml_errors == 0 && pt.tally.trials == 100;
    o.note << " recovered " << pt.tally.trials - pt.tally.ml_errors << "/" << pt.tally.trials
           << ", redraws needed " << pt.tally.failures;
  });

  report(4, "ML error below 1e-2 at 40 dB with M = k + 2", [&](Outcome& o) {
    ExperimentConfig c = c1;
    c.axis_values = {8};
    c.bsnr_db = 40.0;
    const auto pt = run_point(c, 0, 4);
    o.pass = pt.ml_rate < 1e-2;
    o.note << " M=8 err=" << fmt("%.4g", pt.ml_rate) << " (" << pt.tally.ml_errors << "/" << pt.tally.trials
           << ", 95% CI [" << fmt("%.4g", pt.ml_ci.lo) << ", " << fmt("%.4g", pt.ml_ci.hi) << "])";
  });

  report(5, "pairwise events on a fixed instance, lambda = 40", [&](Outcome& o) {
    const auto m = model::BlockModel::with_identity(10, 2, 3);
    const auto cfg = make_block_pair(m, 16, model::SupportSet({0, 1, 2}, 10), model::SupportSet({0, 1, 3}, 10),
                                     13.0, 40.0, 1, 100000, {});
    const auto r = pairwise_validation(cfg);
    const double se = std::sqrt(r.q_term * (1 - r.q_term) / r.draws);
    const bool h2 = std::abs(r.h2.rate - r.q_term) <= 3 * se;
    const bool h1 = r.h1.rate <= r.tail_bound_x2;
    const bool err = r.error.rate <= r.lemma_bound;
    o.pass = h2 && h1 && err && r.lambda >= 20 && r.lambda <= 60;
    o.note << " Pr(h2)=" << fmt("%.5g", r.h2.rate) << " Q=" << fmt("%.5g", r.q_term) << " (3se " << fmt("%.2g", 3 * se)
           << ") Pr(h1)=" << fmt("%.5g", r.h1.rate) << " 2*tail=" << fmt("%.5g", r.tail_bound_x2)
           << " Pr(err)=" << fmt("%.3g", r.error.rate) << " bound=" << fmt("%.4g", r.lemma_bound);
  });

  report(6, "special functions against quadrature", [&](Outcome& o) {
    const auto t0 = Clock::now();
    double worst_q = 0, worst_g = 0, worst_k = 0, worst_norm = 0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    for (double x = -5.0; x <= 8.0; x += 0.25) worst_q = std::max(worst_q, rel(specfun::gaussian_q(x), oracle::q_function(x)));
    for (double x = 0.5; x <= 30.0; x += 0.5)
      worst_g = std::max(worst_g, rel(std::exp(specfun::ln_gamma(x)), oracle::gamma_function(x)));
    const double xs[] = {0.01, 0.03, 0.1, 0.3, 0.7, 1.0, 1.5, 1.99, 2.0, 2.01, 3.0, 5.0, 8.0, 13.0, 20.0, 35.0, 50.0};
    for (int tn = 0; tn <= 20; ++tn)
      for (double x : xs)
        worst_k = std::max(worst_k, rel(specfun::bessel_k_scaled(specfun::HalfOrder::from_twice(tn), x),
                                        oracle::bessel_k_scaled(0.5 * tn, x)));
    boost::math::quadrature::tanh_sinh<double> finite;
    boost::math::quadrature::exp_sinh<double> tail;
    for (int l : {1, 2, 3, 4, 8}) {
      const auto f = [l](double w) { return specfun::chi2_diff_pdf(l, w); };
      const double half = finite.integrate(f, 0.0, 1.0) + tail.integrate([&](double t) { return f(1.0 + t); });
      worst_norm = std::max(worst_norm, std::abs(2 * half - 1));
    }
    const double secs = seconds_since(t0);
    o.pass = worst_q < 1e-8 && worst_g < 1e-8 && worst_k < 1e-8 && worst_norm < 1e-6 && secs < 30;
    o.note << " max rel err Q " << fmt("%.2g", worst_q) << ", Gamma " << fmt("%.2g", worst_g) << ", K "
           << fmt("%.2g", worst_k) << "; pdf mass error " << fmt("%.2g", worst_norm) << "; " << fmt("%.2f", secs)
           << " s";
  });

  report(7, "d = 1 block bound, standard bound and grouped bound agree", [&](Outcome& o) {
    double worst = 0;
    int points = 0;
    const int Ns[] = {20, 30, 50, 60};
    const int ks[] = {2, 3, 4, 5, 6};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 5; ++b) {
        const int N = Ns[a], k = ks[b];
        const int M = k + 4 + 3 * (a + b);
        const double csnr = std::pow(10.0, 0.2 * (a + b));
        const double s = bounds::standard_bound_random(N, k, M, csnr, {}).raw;
        const double blk = bounds::block_bound_random(N, k, 1, M, csnr, {}).raw;
        std::vector<double> alpha, t0;
        for (int l = 1; l <= k; ++l) {
          alpha.push_back(l * csnr);
          t0.push_back(std::exp(specfun::ln_binomial(k, l) + specfun::ln_binomial(N - k, l)));
        }
        const double g = bounds::grouped_bound(alpha, t0, M, k, {}).raw;
        worst = std::max({worst, std::abs(blk - s) / s, std::abs(g - s) / s});
        ++points;
      }
    o.pass = worst <= 1e-12 && points == 20;
    o.note << " " << points << " points, max relative difference " << fmt("%.2g", worst);
  });

  report(8, "Wainwright floor and pointwise ordering", [&](Outcome& o) {
    const double fl = bounds::wainwright_floor(20, 3, 15);
    const double v = bounds::wainwright_bound(20, 3, 15, 1e6).raw;
    const double gap = std::abs(v - fl) / fl;
    int grid = 0, ordered = 0;
    for (int k : {2, 3, 4, 5})
      for (int M = 10; M <= 50; M += 5) {
        ++grid;
        ordered += bounds::standard_bound_random(50, k, M, 10.0, {}).raw < bounds::wainwright_bound(50, k, M, 10.0).raw;
      }
    o.pass = gap < 0.01 && ordered == grid;
    o.note << " floor " << fmt("%.6g", fl) << ", bound at CSNR 1e6 " << fmt("%.6g", v) << " (rel gap "
           << fmt("%.2g", gap) << "); ours below at " << ordered << "/" << grid << " grid points";
  });

  report(9, "byte-identical rerun and 10-shard merge", [&](Outcome& o) {
    if (r1.points.empty()) r1 = run_sweep(c1, {1});
    const auto again = run_sweep(c1, {4});
    const bool same = csv_of(r1) == csv_of(again);
    bool merged_ok = true;
    for (std::size_t p = 0; p < r1.points.size(); ++p) {
      Tally merged;
      const long long shard = c1.trials / 10;
      for (int s = 0; s < 10; ++s) merged += run_point_range(c1, r1.points[p].index, s * shard, (s + 1) * shard);
      merged_ok = merged_ok && merged == r1.points[p].tally;
    }
    o.pass = same && merged_ok;
    o.note << " CSV " << (same ? "identical" : "differs") << " across 1 and 4 threads; shard merge "
           << (merged_ok ? "exact" : "differs") << " at all " << r1.points.size() << " points";
  });

  return failures == 0 ? 0 : 1;
}
