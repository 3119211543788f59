#include "unionrec/decode.hpp"

#include <limits>

#include "unionrec/errors.hpp"

namespace unionrec::decode {

namespace {

std::vector<linalg::Projector> factor_all(const std::vector<Mat>& candidates) {
  std::vector<linalg::Projector> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i > 0 && candidates[i].rows() != candidates[0].rows()) {
      throw DimensionMismatch("candidate " + std::to_string(i) + " has a different row count");
    }
    if (candidates[i].rows() <= candidates[i].cols()) {
      throw DimensionMismatch("ML decoding needs M > k");
    }
    try {
      out.emplace_back(candidates[i]);
    } catch (const RankDeficient&) {
      throw RankDeficient("candidate " + std::to_string(i) + " is rank deficient",
                          static_cast<std::ptrdiff_t>(i));
    }
  }
  return out;
}

}  // namespace

MlDecoder::MlDecoder(const std::vector<Mat>& candidates) : projectors_(factor_all(candidates)) {
  if (projectors_.empty()) throw NoCandidate("ML decoder: empty candidate list");
}

MlDecoder::MlDecoder(const Mat& A, const model::BlockModel& model,
                     std::vector<model::SupportSet> supports)
    : supports_(std::move(supports)) {
  if (supports_.empty()) throw NoCandidate("ML decoder: empty candidate list");
  const Mat av = A * model.V;
  std::vector<Mat> cands;
  cands.reserve(supports_.size());
  for (const auto& u : supports_) {
    Mat b(av.rows(), static_cast<Eigen::Index>(u.size()) * model.d);
    Eigen::Index pos = 0;
    for (int blk : u.indices()) {
      b.middleCols(pos, model.d) = av.middleCols(static_cast<Eigen::Index>(blk) * model.d, model.d);
      pos += model.d;
    }
    cands.push_back(std::move(b));
  }
  projectors_ = factor_all(cands);
}

DecodeResult MlDecoder::decode(const Vec& y, bool keep_energies) const {
  if (y.size() != rows()) throw DimensionMismatch("ML decoder: y has the wrong length");
  DecodeResult res;
  res.residual_energy = std::numeric_limits<double>::infinity();
  if (keep_energies) res.energies.reserve(projectors_.size());
  for (std::size_t i = 0; i < projectors_.size(); ++i) {
    const double e = projectors_[i].residual_energy(y);
    if (keep_energies) res.energies.push_back(e);
    if (e < res.residual_energy) {
      res.residual_energy = e;
      res.index = i;
    }
  }
  if (!supports_.empty()) res.support = supports_[res.index];
  return res;
}

DecodeResult ml_decode(const Vec& y, const std::vector<Mat>& candidates) {
  return MlDecoder(candidates).decode(y, true);
}

double decision_statistic(const Vec& y, const Mat& bi, const Mat& bj) {
  return linalg::residual_project(bi, y).squaredNorm() - linalg::residual_project(bj, y).squaredNorm();
}

BompTrace bomp_trace(const Vec& y, const std::vector<Mat>& blocks, int k0) {
  const int L = static_cast<int>(blocks.size());
  if (k0 < 1 || k0 > L) throw DomainError("bomp: need 1 <= k0 <= L");
  const Eigen::Index M = y.size();
  const Eigen::Index d = blocks.front().cols();
  for (const auto& b : blocks) {
    if (b.rows() != M || b.cols() != d) throw DimensionMismatch("bomp: blocks must all be M x d");
  }
  if (M < static_cast<Eigen::Index>(k0) * d) throw DimensionMismatch("bomp: need M >= k0 d");

  BompTrace tr;
  std::vector<bool> taken(L, false);
  Mat selected(M, 0);
  Vec r = y;
  tr.residual_norms.push_back(r.norm());
  for (int t = 0; t < k0; ++t) {
    int best = -1;
    double best_corr = -1.0;
    for (int i = 0; i < L; ++i) {
      if (taken[i]) continue;
      const double corr = (blocks[i].transpose() * r).norm();
      if (corr > best_corr) {
        best_corr = corr;
        best = i;
      }
    }
    taken[best] = true;
    tr.order.push_back(best);
    selected.conservativeResize(Eigen::NoChange, selected.cols() + d);
    selected.rightCols(d) = blocks[best];
    try {
      r = linalg::residual_project(selected, y);
    } catch (const RankDeficient&) {
      throw RankDeficient("bomp: selected columns became rank deficient at step " + std::to_string(t + 1),
                          best);
    }
    tr.residual_norms.push_back(r.norm());
  }
  tr.support = model::SupportSet(tr.order, L);
  return tr;
}

model::SupportSet bomp(const Vec& y, const std::vector<Mat>& blocks, int k0) {
  return bomp_trace(y, blocks, k0).support;
}

std::vector<Mat> sampled_blocks(const Mat& A, const model::BlockModel& model) {
  const Mat av = A * model.V;
  std::vector<Mat> out;
  out.reserve(model.L);
  for (int i = 0; i < model.L; ++i) out.push_back(av.middleCols(static_cast<Eigen::Index>(i) * model.d, model.d));
  return out;
}

TrialOutcome evaluate_trial(const model::SupportSet& truth, const DecodeResult& estimate) {
  return {estimate.support.has_value() && *estimate.support == truth};
}

TrialOutcome evaluate_trial(const model::SupportSet& truth, const model::SupportSet& estimate) {
  return {estimate == truth};
}

TrialOutcome evaluate_trial(std::size_t truth, const DecodeResult& estimate) {
  return {estimate.index == truth};
}

}  // namespace unionrec::decode
