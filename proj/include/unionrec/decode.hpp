#pragma once

// Support / subspace recovery: exhaustive ML decoding and Block-OMP.

#include <optional>
#include <vector>

#include "unionrec/linalg.hpp"
#include "unionrec/model.hpp"

namespace unionrec::decode {

using linalg::Mat;
using linalg::Vec;

struct DecodeResult {
  std::size_t index = 0;                    // position in the candidate list
  std::optional<model::SupportSet> support; // set in block mode
  double residual_energy = 0.0;
  std::vector<double> energies;             // per candidate, empty for B-OMP
};

// Exhaustive ML decoder over a fixed candidate list. The Q factor of every
// candidate is computed once, so one decoder serves every trial that shares
// the same sampling operator.
class MlDecoder {
 public:
  /// Throws RankDeficient naming the first degenerate candidate.
  explicit MlDecoder(const std::vector<Mat>& candidates);
  /// Block mode: candidates are A * build_block_basis(model, U) for U in `supports`.
  MlDecoder(const Mat& A, const model::BlockModel& model, std::vector<model::SupportSet> supports);

  std::size_t size() const { return projectors_.size(); }
  int rows() const { return projectors_.empty() ? 0 : static_cast<int>(projectors_.front().rows()); }

  /// argmin_i ||P_i^perp y||^2, ties to the lowest index.
  DecodeResult decode(const Vec& y, bool keep_energies = false) const;

 private:
  std::vector<linalg::Projector> projectors_;
  std::vector<model::SupportSet> supports_;
};

DecodeResult ml_decode(const Vec& y, const std::vector<Mat>& candidates);

/// Delta_ij(y) = ||P_i^perp y||^2 - ||P_j^perp y||^2.
double decision_statistic(const Vec& y, const Mat& bi, const Mat& bj);

struct BompTrace {
  model::SupportSet support;
  std::vector<int> order;              // blocks in selection order
  std::vector<double> residual_norms;  // ||r_t|| for t = 0..k0
};

/// Block-OMP with k0 iterations; the argmax runs over blocks not yet selected.
BompTrace bomp_trace(const Vec& y, const std::vector<Mat>& blocks, int k0);
model::SupportSet bomp(const Vec& y, const std::vector<Mat>& blocks, int k0);

/// Blocks A * V_i of a block model under operator A.
std::vector<Mat> sampled_blocks(const Mat& A, const model::BlockModel& model);

struct TrialOutcome {
  bool correct = false;
};

TrialOutcome evaluate_trial(const model::SupportSet& truth, const DecodeResult& estimate);
TrialOutcome evaluate_trial(const model::SupportSet& truth, const model::SupportSet& estimate);
TrialOutcome evaluate_trial(std::size_t truth, const DecodeResult& estimate);

}  // namespace unionrec::decode
