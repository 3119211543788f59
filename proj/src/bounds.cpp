#include "unionrec/bounds.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "unionrec/errors.hpp"
#include "unionrec/specfun.hpp"

namespace unionrec::bounds {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_measurements(int M, int k) {
  if (M <= k) throw DomainError("need M > k (M = " + std::to_string(M) + ", k = " + std::to_string(k) + ")");
}

double ln_count(int n, int l) {
  if (l < 0 || l > n) return kNegInf;
  return specfun::ln_binomial(n, l);
}

void check_grouped(const std::vector<double>& alpha_sq, std::size_t groups) {
  if (alpha_sq.size() != groups) throw DimensionMismatch("alpha_sq and T0 lengths differ");
}

}  // namespace

void BoundConfig::validate() const {
  if (!(eta0 > 0.0 && eta0 < 0.5)) throw DomainError("eta0 must lie in (0, 1/2), got " + std::to_string(eta0));
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw DomainError("r0 must be positive, got " + std::to_string(r0));
}

BoundValue BoundValue::from_log(double log_raw) {
  BoundValue v;
  v.log_raw = log_raw;
  v.raw = std::exp(log_raw);
  v.clamped = std::min(1.0, v.raw);
  return v;
}

double ln_pairwise_error_bound(int l, double lambda, const BoundConfig& cfg) {
  cfg.validate();
  if (l < 1) throw DomainError("pairwise bound: need l >= 1");
  if (!(lambda > 0.0)) throw DomainError("pairwise bound: need lambda > 0");
  const double lq = specfun::ln_gaussian_q(0.5 * (1.0 - 2.0 * cfg.eta0) * std::sqrt(lambda));
  return specfun::log_add_exp(lq, specfun::ln_psi_term(l, lambda, cfg.eta0));
}

BoundValue pairwise_error_bound(int l, double lambda, const BoundConfig& cfg) {
  return BoundValue::from_log(ln_pairwise_error_bound(l, lambda, cfg));
}

BoundValue union_avg_bound(const std::vector<PairStat>& pairs, std::size_t T, const BoundConfig& cfg) {
  if (T < 2) throw DomainError("union bound: need T >= 2");
  double acc = kNegInf;
  for (const auto& p : pairs) acc = specfun::log_add_exp(acc, ln_pairwise_error_bound(p.l, p.lambda, cfg));
  return BoundValue::from_log(acc - std::log(static_cast<double>(T)));
}

std::vector<PairStat> pair_statistics(const linalg::Mat& A, const model::GeneralUnion& u,
                                      const std::vector<linalg::Vec>& coeffs,
                                      const model::NoiseSpec& noise) {
  if (coeffs.size() != u.T()) throw DimensionMismatch("pair_statistics: one coefficient vector per subspace");
  std::vector<PairStat> out;
  for (std::size_t j = 0; j < u.T(); ++j) {
    const linalg::Vec x = u.bases[j] * coeffs[j];
    for (std::size_t i = 0; i < u.T(); ++i) {
      if (i == j) continue;
      const int l = static_cast<int>(u.missing_columns(j, i).size());
      out.push_back({j, i, l, model::lambda_j_given_i(A, u.bases[i], x, noise)});
    }
  }
  return out;
}

std::vector<PairStat> pair_statistics(const linalg::Mat& A, const model::BlockModel& m,
                                      const std::vector<model::BlockSignal>& signals,
                                      const model::NoiseSpec& noise) {
  const auto supports = model::enumerate_supports(m.L, m.k0);
  if (signals.size() != supports.size()) throw DimensionMismatch("pair_statistics: one signal per support");
  std::vector<linalg::Mat> bases;
  bases.reserve(supports.size());
  for (const auto& s : supports) bases.push_back(model::build_block_basis(m, s));
  std::vector<PairStat> out;
  for (std::size_t j = 0; j < supports.size(); ++j) {
    if (!(signals[j].support == supports[j])) throw DomainError("pair_statistics: signal/support order mismatch");
    const linalg::Vec x = m.V * signals[j].c;
    for (std::size_t i = 0; i < supports.size(); ++i) {
      if (i == j) continue;
      out.push_back({j, i, model::overlap_l(supports[j], supports[i]),
                     model::lambda_j_given_i(A, bases[i], x, noise)});
    }
  }
  return out;
}

GroupedInputs grouped_inputs(const linalg::Mat& A, const model::GeneralUnion& u,
                             const std::vector<linalg::Vec>& coeffs, const model::NoiseSpec& noise) {
  if (coeffs.size() != u.T()) throw DimensionMismatch("grouped_inputs: one coefficient vector per subspace");
  GroupedInputs g;
  g.alpha_sq.assign(u.k, std::numeric_limits<double>::infinity());
  g.t0.assign(u.k, 0.0);
  g.t_per_j.assign(u.T(), std::vector<double>(u.k, 0.0));
  for (std::size_t j = 0; j < u.T(); ++j) {
    const linalg::Vec ax = A * (u.bases[j] * coeffs[j]);
    for (std::size_t i = 0; i < u.T(); ++i) {
      if (i == j) continue;
      const int l = static_cast<int>(u.missing_columns(j, i).size());
      g.t_per_j[j][l - 1] += 1.0;
      const linalg::Mat q = linalg::nullspace_basis(A * u.bases[i]);
      const double a = (q.transpose() * ax).array().square().minCoeff() / noise.sigma_w2;
      g.alpha_sq[l - 1] = std::min(g.alpha_sq[l - 1], a);
    }
    for (int l = 0; l < u.k; ++l) g.t0[l] = std::max(g.t0[l], g.t_per_j[j][l]);
  }
  return g;
}

namespace {

double ln_grouped_sum(const std::vector<double>& alpha_sq, const std::vector<double>& t, int M, int k,
                      const BoundConfig& cfg) {
  double acc = kNegInf;
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    if (t[idx] <= 0.0) continue;
    if (!(alpha_sq[idx] > 0.0)) {
      throw DomainError("grouped bound: alpha_min^2 must be positive at l = " + std::to_string(idx + 1));
    }
    const double lambda = (M - k) * alpha_sq[idx];
    acc = specfun::log_add_exp(acc, std::log(t[idx]) + ln_pairwise_error_bound(static_cast<int>(idx) + 1, lambda, cfg));
  }
  return acc;
}

}  // namespace

BoundValue grouped_bound(const std::vector<double>& alpha_sq, const std::vector<double>& t0, int M,
                         int k, const BoundConfig& cfg) {
  require_measurements(M, k);
  check_grouped(alpha_sq, t0.size());
  return BoundValue::from_log(ln_grouped_sum(alpha_sq, t0, M, k, cfg));
}

BoundValue grouped_bound_averaged(const std::vector<double>& alpha_sq,
                                  const std::vector<std::vector<double>>& t_per_j, int M, int k,
                                  const BoundConfig& cfg) {
  require_measurements(M, k);
  if (t_per_j.empty()) throw DomainError("grouped bound: no subspaces");
  double acc = kNegInf;
  for (const auto& t : t_per_j) {
    check_grouped(alpha_sq, t.size());
    acc = specfun::log_add_exp(acc, ln_grouped_sum(alpha_sq, t, M, k, cfg));
  }
  return BoundValue::from_log(acc - std::log(static_cast<double>(t_per_j.size())));
}

namespace {

long long ceil_required(int k, double m1, double m2) {
  return static_cast<long long>(std::ceil(k + std::max({m1, m2, 0.0})));
}

}  // namespace

ComplexityReport general_complexity(const std::vector<double>& alpha_sq, const std::vector<double>& t0,
                                    int k, const BoundConfig& cfg) {
  cfg.validate();
  check_grouped(alpha_sq, t0.size());
  ComplexityReport r;
  r.m1 = -std::numeric_limits<double>::infinity();
  r.m2 = r.m1;
  const double c1 = 8.0 / ((1.0 - 2.0 * cfg.eta0) * (1.0 - 2.0 * cfg.eta0));
  const double c2 = 2.0 * (0.5 * k + cfg.r0 - 1.0) / (cfg.r0 * cfg.eta0);
  const double log2b0 = std::log(2.0 * BoundConfig::b0 / std::sqrt(M_PI));
  for (std::size_t idx = 0; idx < t0.size(); ++idx) {
    if (t0[idx] <= 0.0) continue;
    if (!(alpha_sq[idx] > 0.0)) throw DomainError("complexity: alpha_min^2 must be positive");
    const double lt = std::log(t0[idx]);
    const double v1 = c1 / alpha_sq[idx] * (lt + std::log(0.5));
    const double v2 = c2 / alpha_sq[idx] * (lt + log2b0);
    if (v1 > r.m1) {
      r.m1 = v1;
      r.l1 = static_cast<int>(idx) + 1;
    }
    if (v2 > r.m2) {
      r.m2 = v2;
      r.l2 = static_cast<int>(idx) + 1;
    }
  }
  if (r.l1 == 0) throw DomainError("complexity: every T0(l) is zero");
  r.dominating_l = r.m1 >= r.m2 ? r.l1 : r.l2;
  r.m_required = ceil_required(k, r.m1, r.m2);
  return r;
}

BoundValue block_bound_random(int L, int k0, int d, int M, double bsnr_min, const BoundConfig& cfg) {
  if (L < 2 || k0 < 1 || k0 >= L || d < 1) throw DomainError("block bound: need 1 <= k0 < L and d >= 1");
  if (!(bsnr_min > 0.0)) throw DomainError("block bound: need bsnr_min > 0");
  const int k = k0 * d;
  require_measurements(M, k);
  double acc = kNegInf;
  for (int l = 1; l <= k0; ++l) {
    const double lt = ln_count(k0, l) + ln_count(L - k0, l);
    if (!std::isfinite(lt)) continue;
    const double lambda = static_cast<double>(M - k) * l * bsnr_min;
    acc = specfun::log_add_exp(acc, lt + ln_pairwise_error_bound(l, lambda, cfg));
  }
  return BoundValue::from_log(acc);
}

ComplexityReport block_complexity(int L, int k0, int d, double bsnr_min, const BoundConfig& cfg) {
  cfg.validate();
  if (k0 < 1 || d < 1 || 2 * k0 > L) throw DomainError("block complexity: need 1 <= k0 <= L/2");
  if (!(bsnr_min > 0.0)) throw DomainError("block complexity: need bsnr_min > 0");
  const double one_m = 1.0 - 2.0 * cfg.eta0;
  const double ll = std::log(static_cast<double>(L - k0));
  ComplexityReport r;
  r.m1 = 16.0 / (bsnr_min * one_m * one_m) * (ll + std::log(std::exp(1.0) / std::sqrt(2.0)));
  r.m2 = 4.0 * (0.5 * k0 + cfg.r0 - 1.0) / (cfg.eta0 * cfg.r0 * bsnr_min) *
         (ll + 0.5 * std::log(2.0 * BoundConfig::b0 * std::exp(2.0) / std::sqrt(M_PI)));
  r.m_required = ceil_required(k0 * d, r.m1, r.m2);
  return r;
}

BoundValue standard_bound_random(int N, int k, int M, double csnr_min, const BoundConfig& cfg) {
  return block_bound_random(N, k, 1, M, csnr_min, cfg);
}

double simplified_complexity(int k, double eta, double snr, double t0_bar) {
  if (!(snr > 0.0) || !(t0_bar > 0.0)) throw DomainError("simplified complexity: need snr > 0 and T0 > 0");
  return k + eta / snr * std::log(t0_bar);
}

BoundValue wainwright_bound(int N, int k, int M, double csnr_min) {
  if (k < 1 || k >= N) throw DomainError("wainwright bound: need 1 <= k < N");
  require_measurements(M, k);
  if (!(csnr_min > 0.0)) throw DomainError("wainwright bound: need csnr_min > 0");
  double acc = kNegInf;
  for (int l = 1; l <= k; ++l) {
    const double lt = ln_count(k, l) + ln_count(N - k, l);
    if (!std::isfinite(lt)) continue;
    const double expo = -static_cast<double>(M - k) * l * csnr_min / (64.0 * (l * csnr_min + 8.0));
    acc = specfun::log_add_exp(acc, lt + std::log(4.0) + expo);
  }
  return BoundValue::from_log(acc);
}

double wainwright_floor(int N, int k, int M) {
  return 4.0 * std::exp(-(M - k) / 64.0) * std::expm1(specfun::ln_binomial(N, k));
}

WainwrightComplexity wainwright_complexity(int N, int k, double csnr_min, double eta1) {
  if (k < 1 || 2 * k > N) throw DomainError("wainwright complexity: need 1 <= k <= N/2");
  if (!(csnr_min > 0.0)) throw DomainError("wainwright complexity: need csnr_min > 0");
  WainwrightComplexity w;
  w.term_binomial = specfun::ln_binomial(N - k, k);
  w.term_snr = std::log(static_cast<double>(N - k)) / csnr_min;
  w.binomial_dominates = w.term_binomial >= w.term_snr;
  w.value = k + (eta1 + 2048.0) * std::max(w.term_binomial, w.term_snr);
  return w;
}

long long rip_sample_count(double ln_T, int k, double delta, double t, double c) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("RIP count: need 0 < delta < 1");
  if (!(t > 0.0) || !(c > 0.0)) throw DomainError("RIP count: need t > 0 and c > 0");
  const double v = 2.0 / (c * delta) * (std::log(2.0) + ln_T + k * std::log(12.0 / delta) + t);
  return static_cast<long long>(std::ceil(v));
}

long long rip_block_sample_count(int L, int k0, int d, double delta, double t) {
  if (k0 < 1 || k0 > L || d < 1) throw DomainError("block RIP count: need 1 <= k0 <= L, d >= 1");
  // 2/(c delta) = 36/(7 delta) at c = 7/18.
  return rip_sample_count(specfun::ln_binomial(L, k0), k0 * d, delta, t, 7.0 / 18.0);
}

ChernoffValue chernoff_grouped_bound(const std::vector<double>& alpha_sq, const std::vector<double>& t0,
                                     int M, int k, const BoundConfig& cfg) {
  cfg.validate();
  require_measurements(M, k);
  check_grouped(alpha_sq, t0.size());
  ChernoffValue out;
  double acc = kNegInf;
  const double one_m = 1.0 - 2.0 * cfg.eta0;
  for (std::size_t idx = 0; idx < t0.size(); ++idx) {
    if (t0[idx] <= 0.0) continue;
    const int l = static_cast<int>(idx) + 1;
    const double s = (M - k) * alpha_sq[idx];
    if (!(s > 0.0)) throw DomainError("Chernoff bound: alpha_min^2 must be positive");
    if (s < kChernoffMargin * (0.5 * l - 0.5)) out.valid = false;
    const double q_term = std::log(0.5) - one_m * one_m * s / 8.0;
    const double phi = std::log(BoundConfig::b0) - specfun::ln_gamma(0.5 * l) +
                       (0.5 * l - 1.0) * std::log(0.25 * cfg.eta0 * s) - 0.5 * cfg.eta0 * s;
    acc = specfun::log_add_exp(acc, std::log(t0[idx]) + specfun::log_add_exp(q_term, phi));
  }
  out.bound = BoundValue::from_log(acc);
  return out;
}

}  // namespace unionrec::bounds
