#pragma once

// Seeded Monte Carlo harness: empirical error rates of ML and B-OMP next to
// the analytic bounds, over a sweep in M or in the minimum block SNR.
//
// Every random draw comes from a stream derived from (master seed, point,
// unit, purpose), so results do not depend on sharding or thread count.

#include <atomic>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "unionrec/bounds.hpp"
#include "unionrec/linalg.hpp"
#include "unionrec/model.hpp"

namespace unionrec::montecarlo {

using linalg::Mat;
using linalg::Vec;

enum class Axis { M, bsnr_db };
enum class Basis { identity, random };

inline constexpr int kMaxRedraws = 3;

struct ExperimentConfig {
  std::string name = "custom";
  int L = 10;
  int d = 2;
  int k0 = 3;
  Basis basis = Basis::identity;
  // Non-empty: general union of these N x k bases (ML only, no block bounds).
  std::vector<Mat> union_bases;

  Axis axis = Axis::M;
  std::vector<double> axis_values;
  int M = 0;               // fixed M when sweeping the SNR
  double bsnr_db = 13.0;   // fixed SNR when sweeping M
  double bsnr_ratio = 1.0;

  long long trials = 2000;
  long long trials_per_matrix = 100;
  std::uint64_t seed = 1;
  bool use_ml = true;
  bool use_bomp = false;
  bounds::BoundConfig bound;
  model::NoiseSpec noise;

  bool general() const { return !union_bases.empty(); }
  int N() const;
  int k() const;
  int M_at(std::size_t point) const;
  double bsnr_db_at(std::size_t point) const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct Tally {
  long long trials = 0;
  long long ml_errors = 0;
  long long bomp_errors = 0;
  long long failures = 0;  // trials needing at least one matrix redraw

  Tally& operator+=(const Tally& o);
  friend bool operator==(const Tally&, const Tally&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for `errors` out of `n` at normal quantile z.
Interval wilson_interval(long long errors, long long n, double z = 1.96);

struct PointRecord {
  std::size_t index = 0;
  double axis_value = 0.0;
  int M = 0;
  double bsnr_db = 0.0;
  Tally tally;
  // NaN where a decoder is disabled or a bound does not apply.
  double ml_rate = 0.0;
  double bomp_rate = 0.0;
  Interval ml_ci;
  Interval bomp_ci;
  bounds::BoundValue block_bound;
  bounds::ChernoffValue chernoff;
  double wainwright_raw = 0.0;
  double elapsed_s = 0.0;
  std::uint64_t point_seed = 0;  // derive_seed(master, point, 0, support)
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<PointRecord> points;  // sorted by axis value
  bool complete = true;
  std::string resume_token;         // checkpoint path when incomplete
};

/// Tally over trials [first, last) of one point. `threads` only affects speed.
Tally run_point_range(const ExperimentConfig& cfg, std::size_t point, long long first, long long last,
                      int threads = 1);

PointRecord run_point(const ExperimentConfig& cfg, std::size_t point, int threads = 1);

/// Tally -> rates, intervals and analytic bounds for one point.
PointRecord make_record(const ExperimentConfig& cfg, std::size_t point, const Tally& tally);

struct SweepOptions {
  int threads = 1;
  // When set, completed points are persisted here and reloaded on rerun.
  std::string checkpoint_path;
  const std::atomic<bool>* cancel = nullptr;
};

SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opts = {});

inline constexpr const char* kCsvSchema = "unionrec-sweep/1";

void write_sweep_csv(const SweepResult& result, std::ostream& out);
void write_sweep_json(const SweepResult& result, std::ostream& out);

struct PairwiseConfig {
  Mat A;      // M x N
  Mat Vj;     // true subspace basis, N x k
  Mat Vi;     // competing basis, N x k
  Vec x;      // ambient signal in span(Vj)
  model::NoiseSpec noise;
  bounds::BoundConfig bound;
  long long draws = 100000;
  std::uint64_t seed = 1;
};

struct EventEstimate {
  long long count = 0;
  double rate = 0.0;
  Interval ci;  // Wilson, z = 3
};

struct PairwiseRecord {
  double lambda = 0.0;
  double delta_star = 0.0;
  int l = 0;  // columns of Vj outside span(Vi)
  long long draws = 0;
  EventEstimate error;  // Delta_ij < 0
  EventEstimate h1;
  EventEstimate h2;
  long long error_outside_union = 0;  // error events in neither h1 nor h2
  double q_term = 0.0;                // Q(1/2 (1 - 2 eta0) sqrt(lambda))
  double tail_bound_x2 = 0.0;         // 2 chi2_diff_tail_bound(l, delta*)
  double tail_bound_rederived_x2 = 0.0;
  double lemma_bound = 0.0;           // q_term + Psi(l, lambda), raw
};

PairwiseRecord pairwise_validation(const PairwiseConfig& cfg);

/// Pairwise instance on a block model: Gaussian A (M rows), a signal on
/// `truth` drawn at `bsnr_db` and rescaled so that lambda_{j\i} = lambda.
PairwiseConfig make_block_pair(const model::BlockModel& m, int M, const model::SupportSet& truth,
                               const model::SupportSet& rival, double bsnr_db, double lambda,
                               std::uint64_t seed, long long draws, const bounds::BoundConfig& bound);

}  // namespace unionrec::montecarlo
