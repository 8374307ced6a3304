#pragma once

#include "thpi/codes.hpp"
#include "thpi/kernels.hpp"
#include "thpi/model.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace thpi {

/// Immutable packed-code database. Rows are kept in ascending id order so
/// that ranking ties resolve by ascending id.
class HammingIndex {
 public:
  explicit HammingIndex(const BinaryCodeMatrix& codes);
  HammingIndex(const BinaryCodeMatrix& codes, const std::vector<std::uint32_t>& ids);

  Index size() const noexcept { return codes_.rows(); }
  Index bits() const noexcept { return codes_.bits(); }
  const std::vector<std::uint32_t>& ids() const noexcept { return ids_; }

  /// All ids by ascending Hamming distance, ties by ascending id.
  kernels::IdList search(std::span<const std::uint64_t> query, Index query_bits) const;
  std::vector<kernels::IdList> search_all(const BinaryCodeMatrix& queries,
                                          kernels::Exec exec = kernels::Exec::parallel) const;

 private:
  BinaryCodeMatrix codes_;
  std::vector<std::uint32_t> ids_;
  bool identity_ids_ = true;
};

/// Where the "average distance to the r-th nearest neighbor" is averaged.
enum class ThresholdMode { database, queries };

struct GroundTruth {
  std::vector<kernels::IdList> relevant;  // per query, ascending database row ids
  double threshold = 0.0;
  Index r = 50;
};

/// Euclidean-threshold relevance: threshold is the mean distance from each
/// database point to its r'-th nearest other database point,
/// r' = min(r, N - 1) (clamped with a warning). A database row is relevant to
/// a query when their distance is <= threshold.
GroundTruth ground_truth(const DataMatrix& database, const DataMatrix& queries, Index r = 50,
                         ThresholdMode mode = ThresholdMode::database,
                         kernels::Exec exec = kernels::Exec::parallel);

/// AP over the full ranking: (1/|rel|) sum_i i / rank_i. `relevant` must be
/// sorted. Returns 0 for an empty relevant set.
double average_precision(std::span<const std::uint32_t> ranked,
                         std::span<const std::uint32_t> relevant);

/// |top-K ∩ relevant| / K for each K; K larger than the ranking is clamped
/// with a warning.
std::vector<std::pair<Index, double>> precision_at_k(std::span<const std::uint32_t> ranked,
                                                     std::span<const std::uint32_t> relevant,
                                                     std::span<const Index> ks);

struct EvalReport {
  double map = 0.0;
  std::vector<std::pair<Index, double>> precision_at_k;
  /// APs of the queries included in the MAP mean (nonempty relevant set).
  std::vector<double> per_query_ap;
  std::vector<Index> query_ids;
  Index excluded_queries = 0;
  Index database_size = 0;
  Index bits = 0;
  std::string method;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double threshold = 0.0;
  Index r = 0;
};

/// Ranks every query against the database and aggregates MAP and
/// precision@K over queries with a nonempty relevant set.
EvalReport evaluate_codes(const BinaryCodeMatrix& database_codes,
                          const BinaryCodeMatrix& query_codes, const GroundTruth& truth,
                          std::span<const Index> ks,
                          kernels::Exec exec = kernels::Exec::parallel);

EvalReport evaluate(const HashModel& model, const DataMatrix& database, const DataMatrix& queries,
                    const GroundTruth& truth, std::span<const Index> ks,
                    kernels::Exec exec = kernels::Exec::parallel);

std::string report_text(const EvalReport& report);
/// One `metric=value` line per metric.
std::string report_metrics(const EvalReport& report);
/// "K,precision" rows with a header line.
std::string report_precision_csv(const EvalReport& report);
/// "query,ap" rows with a header line.
std::string report_ap_csv(const EvalReport& report);

/// Writes <prefix>.report.txt, <prefix>.metrics, <prefix>.pk.csv, <prefix>.ap.csv.
void write_report(const EvalReport& report, const std::filesystem::path& prefix);

}  // namespace thpi
