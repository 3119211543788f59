#pragma once

// Probability-of-error bounds for ML subspace recovery and the matching
// sample-complexity formulas, plus two comparison calculators (the
// Wainwright-style bound and RIP sample counts).
//
// Sums over the overlap l are accumulated in log space. Every bound returns
// its raw value (which may exceed 1) together with the value clamped to [0, 1].

#include <cmath>
#include <cstddef>
#include <vector>

#include "unionrec/linalg.hpp"
#include "unionrec/model.hpp"

namespace unionrec::bounds {

struct BoundConfig {
  double eta0 = 0.25;
  double r0 = 1.0;
  static constexpr double b0 = 0.62665706865775012;  // sqrt(2 pi) / 4

  /// Throws DomainError unless 0 < eta0 < 1/2 and r0 > 0.
  void validate() const;
};

struct BoundValue {
  double raw = 0.0;
  double clamped = 0.0;
  double log_raw = 0.0;

  static BoundValue from_log(double log_raw);
};

/// Q(1/2 (1 - 2 eta0) sqrt(lambda)) + Psi(l, lambda).
BoundValue pairwise_error_bound(int l, double lambda, const BoundConfig& cfg);
double ln_pairwise_error_bound(int l, double lambda, const BoundConfig& cfg);

struct PairStat {
  std::size_t j = 0;  // true subspace
  std::size_t i = 0;  // competing candidate
  int l = 0;          // overlap
  double lambda = 0.0;
};

/// (1/T) sum over ordered pairs of pairwise_error_bound.
BoundValue union_avg_bound(const std::vector<PairStat>& pairs, std::size_t T, const BoundConfig& cfg);

/// All ordered pairs of a general union, signal coeffs[j] in subspace j;
/// l counts columns of V_j outside span(V_i).
std::vector<PairStat> pair_statistics(const linalg::Mat& A, const model::GeneralUnion& u,
                                      const std::vector<linalg::Vec>& coeffs,
                                      const model::NoiseSpec& noise);
/// Block model: signals[j] is supported on the j-th enumerated support; l counts blocks.
std::vector<PairStat> pair_statistics(const linalg::Mat& A, const model::BlockModel& m,
                                      const std::vector<model::BlockSignal>& signals,
                                      const model::NoiseSpec& noise);

// Per-overlap inputs of the grouped bound. Index l - 1 holds overlap l.
struct GroupedInputs {
  std::vector<double> alpha_sq;               // min over j, i at overlap l and null directions
  std::vector<double> t0;                     // max over j of T_j(l)
  std::vector<std::vector<double>> t_per_j;   // T_j(l)
};

GroupedInputs grouped_inputs(const linalg::Mat& A, const model::GeneralUnion& u,
                             const std::vector<linalg::Vec>& coeffs, const model::NoiseSpec& noise);

/// sum_l T0(l) [Q(1/2 (1 - 2 eta0) sqrt((M-k) a_l)) + Psi(l, (M-k) a_l)].
/// Overlaps with T0(l) = 0 are skipped.
BoundValue grouped_bound(const std::vector<double>& alpha_sq, const std::vector<double>& t0, int M,
                         int k, const BoundConfig& cfg);

/// The same sum with T_j(l) in place of T0(l), averaged over j: the stage
/// before the maximum over j is taken.
BoundValue grouped_bound_averaged(const std::vector<double>& alpha_sq,
                                  const std::vector<std::vector<double>>& t_per_j, int M, int k,
                                  const BoundConfig& cfg);

struct ComplexityReport {
  double m1 = 0.0;
  double m2 = 0.0;
  int l1 = 0;  // maximizing overlap for m1 (0 when not applicable)
  int l2 = 0;
  int dominating_l = 0;
  long long m_required = 0;  // ceil(k + max(m1, m2, 0))
};

ComplexityReport general_complexity(const std::vector<double>& alpha_sq, const std::vector<double>& t0,
                                    int k, const BoundConfig& cfg);

/// Corollary-style bound for block-sparse signals under a Gaussian operator.
BoundValue block_bound_random(int L, int k0, int d, int M, double bsnr_min, const BoundConfig& cfg);
ComplexityReport block_complexity(int L, int k0, int d, double bsnr_min, const BoundConfig& cfg);

/// Standard sparsity (d = 1, L = N).
BoundValue standard_bound_random(int N, int k, int M, double csnr_min, const BoundConfig& cfg);

/// k + eta / snr * log(t0_bar): the simplified form of the requirement with
/// the constant left to the caller.
double simplified_complexity(int k, double eta, double snr, double t0_bar);

BoundValue wainwright_bound(int N, int k, int M, double csnr_min);
/// 4 e^{-(M-k)/64} (C(N, k) - 1), the CSNR -> infinity limit of wainwright_bound.
double wainwright_floor(int N, int k, int M);

struct WainwrightComplexity {
  double value = 0.0;
  double term_binomial = 0.0;  // log C(N-k, k)
  double term_snr = 0.0;       // log(N-k) / CSNR
  bool binomial_dominates = true;
};

WainwrightComplexity wainwright_complexity(int N, int k, double csnr_min, double eta1);

/// ceil(2/(c delta) (log 2T + k log(12/delta) + t)); T passed through ln_T.
long long rip_sample_count(double ln_T, int k, double delta, double t, double c);
/// Block specialization: prefactor 36/(7 delta) and T = C(L, k0).
long long rip_block_sample_count(int L, int k0, int d, double delta, double t);

struct ChernoffValue {
  BoundValue bound;
  bool valid = true;  // (M-k) alpha^2 large against l/2 - 1/2 for every l used
};

// Validity threshold: (M-k) alpha^2 >= kChernoffMargin * (l/2 - 1/2).
inline constexpr double kChernoffMargin = 10.0;

ChernoffValue chernoff_grouped_bound(const std::vector<double>& alpha_sq, const std::vector<double>& t0,
                                     int M, int k, const BoundConfig& cfg);

}  // namespace unionrec::bounds
