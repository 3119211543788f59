#pragma once

#include <cstdint>

#include "unionrec/linalg.hpp"
#include "unionrec/model.hpp"

namespace testutil {

inline unionrec::linalg::Mat gaussian(int r, int c, std::uint64_t seed) {
  return unionrec::model::sample_gaussian_operator(r, c, seed).A;
}

inline unionrec::linalg::Vec gaussian_vec(int n, std::uint64_t seed) { return gaussian(n, 1, seed).col(0); }

// I - B (B^T B)^{-1} B^T, formed explicitly.
inline unionrec::linalg::Mat explicit_residual_projector(const unionrec::linalg::Mat& b) {
  const auto n = b.rows();
  return unionrec::linalg::Mat::Identity(n, n) - b * (b.transpose() * b).inverse() * b.transpose();
}

}  // namespace testutil
