#pragma once

// Unions of subspaces (general and block-structured), signals, sampling
// operators and the SNR / overlap quantities the error bounds consume.

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "unionrec/linalg.hpp"
#include "unionrec/rng.hpp"

namespace unionrec::model {

using linalg::Mat;
using linalg::Vec;

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

// Sorted, duplicate-free set of block indices.
class SupportSet {
 public:
  SupportSet() = default;
  /// Sorts `indices`; throws DomainError on duplicates or indices outside [0, L).
  SupportSet(std::vector<int> indices, int L);

  const std::vector<int>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool contains(int block) const;

  friend bool operator==(const SupportSet&, const SupportSet&) = default;
  friend auto operator<=>(const SupportSet&, const SupportSet&) = default;

  std::string to_string() const;

 private:
  std::vector<int> indices_;
};

struct BlockModel {
  int L = 0;
  int d = 0;
  int k0 = 0;
  Mat V;  // N x N orthonormal, N = L d

  /// Validates 1 <= k0 <= L/2, d >= 1 and V^T V = I (to 1e-9).
  static BlockModel make(int L, int d, int k0, Mat V);
  static BlockModel with_identity(int L, int d, int k0);

  int N() const { return L * d; }
  int k() const { return k0 * d; }
  double T() const;  // C(L, k0)
  Mat block(int i) const { return V.middleCols(static_cast<Eigen::Index>(i) * d, d); }
};

struct GeneralUnion {
  int N = 0;
  int k = 0;
  std::vector<Mat> bases;  // each N x k

  /// Validates full column rank and pairwise distinctness (overlap >= 1).
  static GeneralUnion make(std::vector<Mat> bases);

  std::size_t T() const { return bases.size(); }
  /// Columns of basis j outside span(basis i): the index set W_{j\i}.
  std::vector<int> missing_columns(std::size_t j, std::size_t i) const;
};

struct BlockSignal {
  Vec c;  // length N
  SupportSet support;
  int d = 1;

  Vec block(int i) const { return c.segment(static_cast<Eigen::Index>(i) * d, d); }
  /// Coefficients of the supported blocks, concatenated in index order.
  Vec support_coefficients() const;
};

struct SamplingOperator {
  enum class Provenance { explicit_matrix, gaussian };
  Mat A;
  Provenance provenance = Provenance::explicit_matrix;
  std::uint64_t seed = 0;

  static SamplingOperator from_matrix(Mat A);
  int M() const { return static_cast<int>(A.rows()); }
  int N() const { return static_cast<int>(A.cols()); }
};

struct NoiseSpec {
  double sigma_w2 = 1.0;
  // Noiseless mode: w = 0 while sigma_w2 still normalizes SNR quantities.
  bool noiseless = false;

  void validate() const;
};

std::vector<SupportSet> enumerate_supports(int L, int k0,
                                           std::size_t cap = kDefaultEnumerationCap);

/// |Uj \ Ui|.
int overlap_l(const SupportSet& uj, const SupportSet& ui);

/// Exact binomial coefficient; throws SizeError past 2^64.
std::uint64_t binomial(int n, int k);

/// C(k0, l) C(L - k0, l): candidate supports at overlap l from a fixed truth.
std::uint64_t count_t_of_l(int L, int k0, int l);

Mat build_block_basis(const BlockModel& model, const SupportSet& u);

SamplingOperator sample_gaussian_operator(int M, int N, std::uint64_t seed);

/// N x N orthonormal matrix from the QR of a seeded Gaussian draw.
Mat random_orthonormal(int N, std::uint64_t seed);

/// Uniformly random k0-subset of {0..L-1}.
SupportSet random_support(int L, int k0, Rng& rng);

Vec draw_noise(int M, const NoiseSpec& noise, Rng& rng);

/// y = A V c + w with w ~ N(0, sigma_w2 I), seeded.
Vec observe(const SamplingOperator& op, const BlockModel& model, const BlockSignal& signal,
            const NoiseSpec& noise, std::uint64_t seed);
Vec observe(const SamplingOperator& op, const GeneralUnion& u, std::size_t index,
            const Vec& coeffs, const NoiseSpec& noise, std::uint64_t seed);

double bsnr_min(const BlockSignal& signal, const NoiseSpec& noise);
double csnr_min(const BlockSignal& signal, const NoiseSpec& noise);

/// Block energies equally spaced on [s, s * ratio] with s = sigma_w2 10^{db/10},
/// assigned to the supported blocks in a seeded random order; directions
/// uniform on the sphere.
BlockSignal generate_block_signal(const BlockModel& model, const SupportSet& support,
                                  double bsnr_min_db, double bsnr_ratio,
                                  const NoiseSpec& noise, std::uint64_t seed);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// lambda_{j\i} = ||P_i^perp A x||^2 / sigma_w2 for x = V c.
double lambda_j_given_i(const Mat& A, const Mat& candidate_basis, const Vec& x,
                        const NoiseSpec& noise);
double lambda_j_given_i(const SamplingOperator& op, const BlockModel& model,
                        const SupportSet& candidate, const BlockSignal& signal,
                        const NoiseSpec& noise);
double lambda_j_given_i(const SamplingOperator& op, const GeneralUnion& u, std::size_t true_j,
                        std::size_t candidate_i, const Vec& coeffs, const NoiseSpec& noise);

/// min over candidates i at overlap l, and over the null-space directions
/// q_{m,i} of P_i^perp, of <q_{m,i}, A x>^2 / sigma_w2. Overlap counts blocks
/// for the block model and columns for a general union.
/// Throws NoCandidate if no candidate has overlap l.
double alpha_min_sq(const SamplingOperator& op, const BlockModel& model, const BlockSignal& signal,
                    int l, const NoiseSpec& noise);
double alpha_min_sq(const SamplingOperator& op, const GeneralUnion& u, std::size_t true_j,
                    const Vec& coeffs, int l, const NoiseSpec& noise);

/// Explicit matrix from CSV, one matrix row per line.
Mat load_matrix_csv(const std::string& path);
void save_matrix_csv(const Mat& m, const std::string& path);

}  // namespace unionrec::model
