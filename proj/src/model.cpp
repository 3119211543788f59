#include "unionrec/model.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "unionrec/errors.hpp"
#include "unionrec/specfun.hpp"

namespace unionrec::model {

namespace {

// Column-in-span test used for W_{j\i}.
constexpr double kSpanTolerance = 1e-9;

Vec gaussian_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

SupportSet::SupportSet(std::vector<int> indices, int L) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw DomainError("support set has duplicate indices");
  }
  for (int i : indices_) {
    if (i < 0 || i >= L) throw DomainError("support index " + std::to_string(i) + " outside [0, L)");
  }
}

bool SupportSet::contains(int block) const {
  return std::binary_search(indices_.begin(), indices_.end(), block);
}

std::string SupportSet::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(indices_[i]);
  }
  return s + "}";
}

BlockModel BlockModel::make(int L, int d, int k0, Mat V) {
  if (L < 1 || d < 1) throw DomainError("block model: need L >= 1 and d >= 1");
  if (k0 < 1 || 2 * k0 > L) throw DomainError("block model: need 1 <= k0 <= L/2");
  const Eigen::Index n = static_cast<Eigen::Index>(L) * d;
  if (V.rows() != n || V.cols() != n) throw DimensionMismatch("block model: V must be N x N");
  if ((V.transpose() * V - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9) {
    throw DomainError("block model: V is not orthonormal");
  }
  return BlockModel{L, d, k0, std::move(V)};
}

BlockModel BlockModel::with_identity(int L, int d, int k0) {
  return make(L, d, k0, Mat::Identity(static_cast<Eigen::Index>(L) * d, static_cast<Eigen::Index>(L) * d));
}

double BlockModel::T() const { return std::exp(specfun::ln_binomial(L, k0)); }

GeneralUnion GeneralUnion::make(std::vector<Mat> bases) {
  if (bases.empty()) throw DomainError("general union: no bases");
  GeneralUnion u;
  u.N = static_cast<int>(bases.front().rows());
  u.k = static_cast<int>(bases.front().cols());
  for (std::size_t i = 0; i < bases.size(); ++i) {
    if (bases[i].rows() != u.N || bases[i].cols() != u.k) {
      throw DimensionMismatch("general union: basis " + std::to_string(i) + " has the wrong shape");
    }
    try {
      linalg::qr_thin(bases[i]);
    } catch (const RankDeficient& e) {
      throw RankDeficient("general union: basis " + std::to_string(i) + " is rank deficient",
                          static_cast<std::ptrdiff_t>(i));
    }
  }
  u.bases = std::move(bases);
  for (std::size_t j = 0; j < u.T(); ++j) {
    for (std::size_t i = 0; i < u.T(); ++i) {
      if (i != j && u.missing_columns(j, i).empty()) {
        throw DomainError("general union: subspace " + std::to_string(j) + " lies inside subspace " +
                          std::to_string(i));
      }
    }
  }
  return u;
}

std::vector<int> GeneralUnion::missing_columns(std::size_t j, std::size_t i) const {
  const linalg::Projector pi(bases.at(i));
  std::vector<int> w;
  for (int m = 0; m < k; ++m) {
    const Vec col = bases.at(j).col(m);
    if (pi.residual(col).norm() > kSpanTolerance * col.norm()) w.push_back(m);
  }
  return w;
}

Vec BlockSignal::support_coefficients() const {
  Vec out(static_cast<Eigen::Index>(support.size()) * d);
  Eigen::Index pos = 0;
  for (int b : support.indices()) {
    out.segment(pos, d) = block(b);
    pos += d;
  }
  return out;
}

SamplingOperator SamplingOperator::from_matrix(Mat A) {
  if (A.rows() < 1 || A.cols() < 1) throw DimensionMismatch("sampling operator: empty matrix");
  if (!A.allFinite()) throw DomainError("sampling operator: non-finite entries");
  return SamplingOperator{std::move(A), Provenance::explicit_matrix, 0};
}

void NoiseSpec::validate() const {
  if (!(sigma_w2 > 0.0) || !std::isfinite(sigma_w2)) throw DomainError("noise: sigma_w2 must be positive");
}

std::vector<SupportSet> enumerate_supports(int L, int k0, std::size_t cap) {
  if (k0 < 1 || k0 > L) throw DomainError("enumerate_supports: need 1 <= k0 <= L");
  const double count = std::exp(specfun::ln_binomial(L, k0));
  if (count > static_cast<double>(cap) + 0.5) {
    throw SizeError("enumerate_supports: C(" + std::to_string(L) + "," + std::to_string(k0) +
                    ") exceeds the enumeration cap of " + std::to_string(cap));
  }
  std::vector<SupportSet> out;
  out.reserve(static_cast<std::size_t>(count + 0.5));
  std::vector<int> idx(k0);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.emplace_back(idx, L);
    // Advance to the next combination in lexicographic order.
    int pos = k0 - 1;
    while (pos >= 0 && idx[pos] == L - k0 + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int q = pos + 1; q < k0; ++q) idx[q] = idx[q - 1] + 1;
  }
  return out;
}

int overlap_l(const SupportSet& uj, const SupportSet& ui) {
  int count = 0;
  for (int b : uj.indices()) {
    if (!ui.contains(b)) ++count;
  }
  return count;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    // result * num / i is exact at every step.
    const std::uint64_t g = std::gcd(result, static_cast<std::uint64_t>(i));
    const std::uint64_t r = result / g;
    const std::uint64_t den = static_cast<std::uint64_t>(i) / g;
    const std::uint64_t n2 = num / den;
    if (r > std::numeric_limits<std::uint64_t>::max() / n2) throw SizeError("binomial overflow");
    result = r * n2;
  }
  return result;
}

std::uint64_t count_t_of_l(int L, int k0, int l) {
  if (l < 1 || l > k0) throw DomainError("count_t_of_l: need 1 <= l <= k0");
  return binomial(k0, l) * binomial(L - k0, l);
}

Mat build_block_basis(const BlockModel& model, const SupportSet& u) {
  Mat out(model.N(), static_cast<Eigen::Index>(u.size()) * model.d);
  Eigen::Index pos = 0;
  for (int b : u.indices()) {
    if (b >= model.L) throw DomainError("build_block_basis: block index out of range");
    out.middleCols(pos, model.d) = model.block(b);
    pos += model.d;
  }
  return out;
}

SamplingOperator sample_gaussian_operator(int M, int N, std::uint64_t seed) {
  if (M < 1 || N < 1) throw DimensionMismatch("sample_gaussian_operator: need M, N >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat a(M, N);
  // Row-major draw order.
  for (int r = 0; r < M; ++r)
    for (int c = 0; c < N; ++c) a(r, c) = normal(rng);
  return SamplingOperator{std::move(a), SamplingOperator::Provenance::gaussian, seed};
}

Mat random_orthonormal(int N, std::uint64_t seed) {
  const Mat g = sample_gaussian_operator(N, N, seed).A;
  return linalg::qr_thin(g).q;
}

SupportSet random_support(int L, int k0, Rng& rng) {
  std::vector<int> pool(L);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k0; ++i) {
    std::uniform_int_distribution<int> pick(i, L - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k0);
  return SupportSet(std::move(pool), L);
}

Vec draw_noise(int M, const NoiseSpec& noise, Rng& rng) {
  if (noise.noiseless) return Vec::Zero(M);
  return std::sqrt(noise.sigma_w2) * gaussian_vector(M, rng);
}

Vec observe(const SamplingOperator& op, const BlockModel& model, const BlockSignal& signal,
            const NoiseSpec& noise, std::uint64_t seed) {
  if (op.N() != model.N() || signal.c.size() != model.N()) {
    throw DimensionMismatch("observe: operator, model and signal dimensions disagree");
  }
  Rng rng(seed);
  return op.A * (model.V * signal.c) + draw_noise(op.M(), noise, rng);
}

Vec observe(const SamplingOperator& op, const GeneralUnion& u, std::size_t index,
            const Vec& coeffs, const NoiseSpec& noise, std::uint64_t seed) {
  if (op.N() != u.N || coeffs.size() != u.k || index >= u.T()) {
    throw DimensionMismatch("observe: operator, union and coefficient dimensions disagree");
  }
  Rng rng(seed);
  return op.A * (u.bases[index] * coeffs) + draw_noise(op.M(), noise, rng);
}

double bsnr_min(const BlockSignal& signal, const NoiseSpec& noise) {
  if (signal.support.size() == 0) throw DomainError("bsnr_min: empty support");
  double best = std::numeric_limits<double>::infinity();
  for (int b : signal.support.indices()) best = std::min(best, signal.block(b).squaredNorm());
  return best / noise.sigma_w2;
}

double csnr_min(const BlockSignal& signal, const NoiseSpec& noise) {
  if (signal.support.size() == 0) throw DomainError("csnr_min: empty support");
  double best = std::numeric_limits<double>::infinity();
  for (int b : signal.support.indices()) best = std::min(best, signal.block(b).array().square().minCoeff());
  return best / noise.sigma_w2;
}

BlockSignal generate_block_signal(const BlockModel& model, const SupportSet& support,
                                  double bsnr_min_db, double bsnr_ratio,
                                  const NoiseSpec& noise, std::uint64_t seed) {
  if (!(bsnr_ratio >= 1.0)) throw DomainError("generate_block_signal: bsnr_ratio must be >= 1");
  if (static_cast<int>(support.size()) != model.k0) {
    throw DomainError("generate_block_signal: support must have k0 blocks");
  }
  Rng rng(seed);
  const double lo = noise.sigma_w2 * db_to_linear(bsnr_min_db);
  const int k0 = model.k0;
  std::vector<double> energies(k0);
  for (int m = 0; m < k0; ++m) {
    const double t = k0 == 1 ? 0.0 : static_cast<double>(m) / (k0 - 1);
    energies[m] = lo * (1.0 + t * (bsnr_ratio - 1.0));
  }
  std::shuffle(energies.begin(), energies.end(), rng);

  BlockSignal s{Vec::Zero(model.N()), support, model.d};
  int slot = 0;
  for (int b : support.indices()) {
    Vec dir = gaussian_vector(model.d, rng);
    while (dir.norm() == 0.0) dir = gaussian_vector(model.d, rng);
    s.c.segment(static_cast<Eigen::Index>(b) * model.d, model.d) = std::sqrt(energies[slot++]) * dir.normalized();
  }
  return s;
}

double lambda_j_given_i(const Mat& A, const Mat& candidate_basis, const Vec& x,
                        const NoiseSpec& noise) {
  const Mat b = A * candidate_basis;
  return linalg::residual_project(b, A * x).squaredNorm() / noise.sigma_w2;
}

double lambda_j_given_i(const SamplingOperator& op, const BlockModel& model,
                        const SupportSet& candidate, const BlockSignal& signal,
                        const NoiseSpec& noise) {
  if (candidate == signal.support) throw DomainError("lambda_j_given_i: candidate equals the truth");
  return lambda_j_given_i(op.A, build_block_basis(model, candidate), model.V * signal.c, noise);
}

double lambda_j_given_i(const SamplingOperator& op, const GeneralUnion& u, std::size_t true_j,
                        std::size_t candidate_i, const Vec& coeffs, const NoiseSpec& noise) {
  if (true_j == candidate_i) throw DomainError("lambda_j_given_i: candidate equals the truth");
  return lambda_j_given_i(op.A, u.bases.at(candidate_i), u.bases.at(true_j) * coeffs, noise);
}

namespace {

// min_m <q_m, A x>^2 over the null-space directions of A * basis.
double min_null_projection_sq(const Mat& A, const Mat& basis, const Vec& ax) {
  const Mat q = linalg::nullspace_basis(A * basis);
  return (q.transpose() * ax).array().square().minCoeff();
}

}  // namespace

double alpha_min_sq(const SamplingOperator& op, const BlockModel& model, const BlockSignal& signal,
                    int l, const NoiseSpec& noise) {
  const Vec ax = op.A * (model.V * signal.c);
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& cand : enumerate_supports(model.L, model.k0)) {
    if (overlap_l(signal.support, cand) != l) continue;
    found = true;
    best = std::min(best, min_null_projection_sq(op.A, build_block_basis(model, cand), ax));
  }
  if (!found) throw NoCandidate("alpha_min_sq: no candidate at overlap " + std::to_string(l));
  return best / noise.sigma_w2;
}

double alpha_min_sq(const SamplingOperator& op, const GeneralUnion& u, std::size_t true_j,
                    const Vec& coeffs, int l, const NoiseSpec& noise) {
  const Vec ax = op.A * (u.bases.at(true_j) * coeffs);
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < u.T(); ++i) {
    if (i == true_j || static_cast<int>(u.missing_columns(true_j, i).size()) != l) continue;
    found = true;
    best = std::min(best, min_null_projection_sq(op.A, u.bases[i], ax));
  }
  if (!found) throw NoCandidate("alpha_min_sq: no candidate at overlap " + std::to_string(l));
  return best / noise.sigma_w2;
}

Mat load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open matrix file");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno), "not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(path + ":" + std::to_string(lineno), "ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path, "empty matrix file");
  Mat m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

void save_matrix_csv(const Mat& m, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

}  // namespace unionrec::model
