#pragma once

// Shared fixtures and brute-force oracles. Nothing here calls into the code
// under test except for type definitions.

#include "thpi/codes.hpp"
#include "thpi/matrix.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace thpi::test {

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline DataMatrix gaussian_data(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  return DataMatrix(gaussian(rows, cols, seed, scale));
}

inline Matrix centered(const Matrix& m) {
  return m.rowwise() - m.colwise().mean();
}

inline BinaryCodeMatrix random_codes(Index n, Index bits, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  BinaryCodeMatrix::SignMatrix s(n, bits);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < bits; ++j) s(i, j) = coin(rng) ? 1 : -1;
  return BinaryCodeMatrix(s);
}

/// Orthonormal columns by modified Gram-Schmidt on a Gaussian matrix.
inline Matrix gram_schmidt_orthonormal(Index d, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix q(d, c);
  for (Index j = 0; j < c; ++j) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = g(rng);
    for (Index k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
    for (Index k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
    q.col(j) = v / v.norm();
  }
  return q;
}

/// Elementwise sum of squares with explicit loops.
inline double frob2(const Matrix& m) {
  double s = 0.0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return s;
}

/// Exhaustive maximizer of tr(B^T S) over sign matrices with ceil(n/2)
/// positives per column. Enumerates whole matrices, not columns.
inline BinaryCodeMatrix brute_force_balanced(const Matrix& scores) {
  const Index n = scores.rows(), c = scores.cols();
  const Index pos = (n + 1) / 2;
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 0; m < (1u << n); ++m) {
    if (static_cast<Index>(__builtin_popcount(m)) == pos) masks.push_back(m);
  }
  std::vector<std::size_t> choice(static_cast<std::size_t>(c), 0), best;
  double best_value = -std::numeric_limits<double>::infinity();
  while (true) {
    double value = 0.0;
    for (Index j = 0; j < c; ++j) {
      const std::uint32_t m = masks[choice[static_cast<std::size_t>(j)]];
      for (Index i = 0; i < n; ++i) value += ((m >> i) & 1u ? 1.0 : -1.0) * scores(i, j);
    }
    if (value > best_value) {
      best_value = value;
      best = choice;
    }
    std::size_t j = 0;
    while (j < choice.size() && ++choice[j] == masks.size()) choice[j++] = 0;
    if (j == choice.size()) break;
  }
  BinaryCodeMatrix::SignMatrix s(n, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < n; ++i)
      s(i, j) = (masks[best[static_cast<std::size_t>(j)]] >> i) & 1u ? 1 : -1;
  return BinaryCodeMatrix(s);
}

/// Bit-by-bit Hamming distance on the unpacked signs.
inline int naive_hamming(const BinaryCodeMatrix& a, Index i, const BinaryCodeMatrix& b, Index j) {
  int d = 0;
  for (Index k = 0; k < a.bits(); ++k) d += a.signs()(i, k) != b.signs()(j, k);
  return d;
}

/// Full std::sort of (distance, id) pairs.
inline std::vector<std::uint32_t> naive_rank(const BinaryCodeMatrix& db, const BinaryCodeMatrix& q,
                                             Index qi) {
  std::vector<std::pair<int, std::uint32_t>> v;
  for (Index i = 0; i < db.rows(); ++i) {
    v.emplace_back(naive_hamming(db, i, q, qi), static_cast<std::uint32_t>(i));
  }
  std::sort(v.begin(), v.end());
  std::vector<std::uint32_t> out;
  for (const auto& p : v) out.push_back(p.second);
  return out;
}

/// AP straight from the definition: mean over relevant items of the
/// precision at the rank where each one appears.
inline double naive_ap(const std::vector<std::uint32_t>& ranked,
                       const std::vector<std::uint32_t>& relevant) {
  if (relevant.empty()) return 0.0;
  const std::set<std::uint32_t> rel(relevant.begin(), relevant.end());
  double sum = 0.0;
  int hits = 0;
  for (std::size_t pos = 0; pos < ranked.size(); ++pos) {
    if (rel.count(ranked[pos])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return sum / static_cast<double>(rel.size());
}

inline double naive_precision(const std::vector<std::uint32_t>& ranked,
                              const std::vector<std::uint32_t>& relevant, std::size_t k) {
  const std::set<std::uint32_t> top(ranked.begin(), ranked.begin() + static_cast<long>(k));
  std::size_t hits = 0;
  for (std::uint32_t r : relevant) hits += top.count(r);
  return static_cast<double>(hits) / static_cast<double>(k);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("thpi_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace thpi::test
