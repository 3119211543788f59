#include "unionrec/specfun.hpp"

#include <math.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "unionrec/errors.hpp"

namespace unionrec::specfun {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = std::numbers::ln2;
constexpr double kLnPi = 1.1447298858494002;  // ln(pi)
constexpr double kEuler = std::numbers::egamma;

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(what) + ": argument must be positive and finite");
  }
}

// ln(e^x K_n(x)) for n + 1/2, from the terminating series
//   K_{n+1/2}(x) = sqrt(pi / 2x) e^{-x} sum_{j=0}^{n} (n+j)! / (j! (n-j)! (2x)^j).
double ln_k_scaled_half_integer(int n, double x) {
  double acc = -kInf;
  const double ln2x = std::log(2.0 * x);
  for (int j = 0; j <= n; ++j) {
    const double term = ln_gamma(n + j + 1.0) - ln_gamma(j + 1.0) - ln_gamma(n - j + 1.0) - j * ln2x;
    acc = log_add_exp(acc, term);
  }
  return 0.5 * (kLnPi - kLn2 - std::log(x)) + acc;
}

// Power series for K_0 and K_1, accurate for 0 < x <= 2.
void k01_series(double x, double& k0, double& k1) {
  const double q = 0.25 * x * x;
  const double lnhalf = std::log(0.5 * x);

  // K_0 = -(ln(x/2) + gamma) I_0 + sum_{k>=1} H_k q^k / (k!)^2
  double i0 = 1.0;
  double s0 = 0.0;
  double term = 1.0;  // q^k / (k!)^2
  double harmonic = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    i0 += term;
    s0 += harmonic * term;
    if (term < 1e-18 * i0) break;
  }
  k0 = -(lnhalf + kEuler) * i0 + s0;

  // K_1 = 1/x + ln(x/2) I_1 - (x/4) sum_{k>=0} (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
  double i1s = 0.0;
  double s1 = 0.0;
  term = 1.0;  // q^k / (k! (k+1)!)
  harmonic = 0.0;  // H_k
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      term *= q / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
    }
    const double psi_sum = (-kEuler + harmonic) + (-kEuler + harmonic + 1.0 / (k + 1));
    i1s += term;
    s1 += psi_sum * term;
    if (k > 0 && term < 1e-18 * i1s) break;
  }
  k1 = 1.0 / x + lnhalf * (0.5 * x * i1s) - 0.25 * x * s1;
}

// Steed's continued fraction (Temme's CF2 with mu = 0) for x > 2, giving
// e^x K_0(x) and e^x K_1(x).
void k01_scaled_cf(double x, double& k0s, double& k1s) {
  constexpr double eps = 1e-16;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 100000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  h = a1 * h;
  k0s = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
  k1s = k0s * (x + 0.5 - h) / x;
}

// ln(e^x K_n(x)) for integer n >= 0 via upward recurrence
// K_{m+1} = K_{m-1} + (2m / x) K_m, rescaled to stay in range.
double ln_k_scaled_integer(int n, double x) {
  double k0 = 0.0;
  double k1 = 0.0;
  if (x <= 2.0) {
    k01_series(x, k0, k1);
    // Bring into the scaled convention.
    const double ex = std::exp(x);
    k0 *= ex;
    k1 *= ex;
  } else {
    k01_scaled_cf(x, k0, k1);
  }
  if (n == 0) return std::log(k0);
  double log_scale = 0.0;
  double prev = k0;
  double cur = k1;
  for (int m = 1; m < n; ++m) {
    const double next = prev + (2.0 * m / x) * cur;
    prev = cur;
    cur = next;
    if (cur > 1e250) {
      prev *= 1e-250;
      cur *= 1e-250;
      log_scale += 250.0 * std::numbers::ln10;
    }
  }
  return std::log(cur) + log_scale;
}

double ln_k_scaled(HalfOrder nu, double x) {
  require_positive(x, "bessel_k");
  if (nu.is_integer()) return ln_k_scaled_integer(nu.twice_nu / 2, x);
  return ln_k_scaled_half_integer((nu.twice_nu - 1) / 2, x);
}

void require_dof(int l, const char* what) {
  if (l < 1) throw DomainError(std::string(what) + ": degrees of freedom must be >= 1");
}

}  // namespace

HalfOrder HalfOrder::from_twice(int twice_nu) {
  // K_nu = K_{-nu}: store the non-negative order.
  return HalfOrder{twice_nu < 0 ? -twice_nu : twice_nu};
}

double gaussian_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double ln_gaussian_q(double x) {
  if (x < 30.0) return std::log(gaussian_q(x));
  // Asymptotic expansion of Mills' ratio; relative error < 1e-12 for x >= 30.
  const double inv2 = 1.0 / (x * x);
  const double series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
  return -0.5 * x * x - std::log(x) - 0.5 * (kLn2 + kLnPi) + std::log(series);
}

double ln_gamma(double x) {
  require_positive(x, "ln_gamma");
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double ln_binomial(double n, double k) {
  if (k < 0.0 || k > n) return -kInf;
  return ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
}

double bessel_k_scaled(HalfOrder nu, double x) { return std::exp(ln_k_scaled(nu, x)); }

double ln_bessel_k(HalfOrder nu, double x) { return ln_k_scaled(nu, x) - x; }

BesselValue bessel_k_checked(HalfOrder nu, double x) {
  const double v = std::exp(ln_bessel_k(nu, x));
  return BesselValue{v, std::isinf(v)};
}

double bessel_k(HalfOrder nu, double x) { return bessel_k_checked(nu, x).value; }

double ln_psi_term(int l, double lambda, double eta0) {
  require_dof(l, "psi_term");
  require_positive(lambda, "psi_term (lambda)");
  if (!(eta0 > 0.0 && eta0 < 0.5)) throw DomainError("psi_term: eta0 must lie in (0, 1/2)");
  const double z = eta0 * lambda;
  const HalfOrder nu = HalfOrder::for_dof(l);
  return 0.5 * kLn2 - l * kLn2 - ln_gamma(0.5 * l) + nu.value() * std::log(z) +
         ln_bessel_k(nu, 0.5 * z);
}

double psi_term(int l, double lambda, double eta0) {
  return std::exp(ln_psi_term(l, lambda, eta0));
}

double chi2_diff_pdf(int l, double w) {
  require_dof(l, "chi2_diff_pdf");
  const HalfOrder nu = HalfOrder::for_dof(l);
  const double norm = 0.5 * kLnPi + l * kLn2 + ln_gamma(0.5 * l);
  const double a = std::abs(w);
  if (a == 0.0) {
    if (l == 1) return kInf;
    // w^nu K_nu(w/2) -> Gamma(nu) 2^{2 nu - 1} as w -> 0.
    return std::exp(ln_gamma(nu.value()) + (2.0 * nu.value() - 1.0) * kLn2 - norm);
  }
  return std::exp(nu.value() * std::log(a) + ln_bessel_k(nu, 0.5 * a) - norm);
}

double ln_chi2_diff_tail_bound(int l, double delta) {
  require_dof(l, "chi2_diff_tail_bound");
  require_positive(delta, "chi2_diff_tail_bound");
  const HalfOrder nu = HalfOrder::for_dof(l);
  return 0.5 * kLn2 - (l + 1) * kLn2 - ln_gamma(0.5 * l) + nu.value() * std::log(delta) +
         ln_bessel_k(nu, 0.5 * delta);
}

double chi2_diff_tail_bound(int l, double delta) {
  return std::exp(ln_chi2_diff_tail_bound(l, delta));
}

double chi2_diff_tail_bound_rederived(int l, double delta) {
  require_dof(l, "chi2_diff_tail_bound_rederived");
  require_positive(delta, "chi2_diff_tail_bound_rederived");
  const HalfOrder nu = HalfOrder::from_twice(l);
  return std::exp(nu.value() * std::log(delta) + ln_bessel_k(nu, 0.5 * delta) - l * kLn2 -
                  ln_gamma(0.5 * l));
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace unionrec::specfun
