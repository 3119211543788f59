#pragma once

// Special functions behind the error bounds: Gaussian Q, log-Gamma,
// modified Bessel K of integer and half-integer order, and the density and
// tail of the difference of two independent chi-square variables.
//
// Everything that can underflow has a log-space companion (ln_*), which the
// bound calculators use so that arguments in the thousands stay finite.

namespace unionrec::specfun {

// Order nu = twice_nu / 2, restricted to nu >= 0 (K_nu = K_{-nu}).
struct HalfOrder {
  int twice_nu = 0;

  static HalfOrder from_twice(int twice_nu);
  // nu = (l - 1) / 2, the order that appears with l degrees of freedom.
  static HalfOrder for_dof(int l) { return from_twice(l - 1); }

  double value() const { return 0.5 * twice_nu; }
  bool is_integer() const { return twice_nu % 2 == 0; }
};

double gaussian_q(double x);
double ln_gaussian_q(double x);

/// ln Gamma(x) for x > 0; throws DomainError otherwise.
double ln_gamma(double x);

/// ln C(n, k) through ln Gamma, exact enough for counts far beyond 2^53.
double ln_binomial(double n, double k);

struct BesselValue {
  double value = 0.0;
  bool overflow = false;  // value is +inf because K_nu(x) exceeds double range
};

/// K_nu(x) for x > 0. Overflow is reported through the flag (value = +inf).
BesselValue bessel_k_checked(HalfOrder nu, double x);
double bessel_k(HalfOrder nu, double x);

/// e^x K_nu(x), finite wherever ln_bessel_k is.
double bessel_k_scaled(HalfOrder nu, double x);
double ln_bessel_k(HalfOrder nu, double x);

/// Psi(l, lambda) = sqrt(2) / (2^l Gamma(l/2)) (eta0 lambda)^{(l-1)/2}
///                  K_{(l-1)/2}(eta0 lambda / 2).
double psi_term(int l, double lambda, double eta0);
double ln_psi_term(int l, double lambda, double eta0);

/// Density of w = x1 - x2 with x1, x2 iid chi-square(l). Returns +inf at
/// w = 0 for l = 1 (integrable log singularity).
double chi2_diff_pdf(int l, double w);

/// sqrt(2) / (2^{l+1} Gamma(l/2)) delta^{(l-1)/2} K_{(l-1)/2}(delta / 2),
/// so that psi_term(l, lambda, eta0) == 2 * chi2_diff_tail_bound(l, eta0 lambda).
/// NOTE: this expression undershoots the true tail Pr(x1 - x2 > delta) by a
/// roughly constant factor (about 0.63 for l = 2); see
/// chi2_diff_tail_bound_rederived for a bound that holds.
double chi2_diff_tail_bound(int l, double delta);
double ln_chi2_diff_tail_bound(int l, double delta);

/// delta^{l/2} K_{l/2}(delta / 2) / (2^l Gamma(l/2)): the Chernoff-type bound
/// obtained when the Gaussian integral over w keeps its sqrt(4 pi t) factor.
double chi2_diff_tail_bound_rederived(int l, double delta);

/// log(exp(a) + exp(b)) without overflow; -inf is the identity.
double log_add_exp(double a, double b);

}  // namespace unionrec::specfun
