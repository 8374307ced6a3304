#include "thpi/retrieval.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <numeric>

namespace thpi {
namespace {

kernels::RowMajor row_major(const DataMatrix& x) { return x.values(); }

std::vector<char> relevance_mask(std::span<const std::uint32_t> ranked,
                                 std::span<const std::uint32_t> relevant) {
  std::uint32_t top = 0;
  for (std::uint32_t id : ranked) top = std::max(top, id);
  std::vector<char> mask(static_cast<std::size_t>(top) + 1, 0);
  for (std::uint32_t id : relevant) {
    if (id <= top) mask[id] = 1;
  }
  return mask;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace

HammingIndex::HammingIndex(const BinaryCodeMatrix& codes) : codes_(codes) {
  ids_.resize(static_cast<std::size_t>(codes.rows()));
  std::iota(ids_.begin(), ids_.end(), 0u);
}

HammingIndex::HammingIndex(const BinaryCodeMatrix& codes, const std::vector<std::uint32_t>& ids) {
  if (static_cast<Index>(ids.size()) != codes.rows()) {
    throw DataError(fmt::format("index: {} ids for {} codes", ids.size(), codes.rows()));
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&ids](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (ids[order[i]] == ids[order[i - 1]]) {
      throw DataError(fmt::format("index: duplicate id {}", ids[order[i]]));
    }
  }
  BinaryCodeMatrix::SignMatrix signs(codes.rows(), codes.bits());
  ids_.resize(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    signs.row(static_cast<Index>(i)) = codes.signs().row(static_cast<Index>(order[i]));
    ids_[i] = ids[order[i]];
    if (ids_[i] != i) identity_ids_ = false;
  }
  codes_ = BinaryCodeMatrix(std::move(signs));
}

kernels::IdList HammingIndex::search(std::span<const std::uint64_t> query, Index query_bits) const {
  if (size() == 0) throw DataError("search on an empty index");
  if (query_bits != bits()) {
    throw DataError(fmt::format("search: query has {} bits, index has {}", query_bits, bits()));
  }
  kernels::IdList ranked = kernels::omp::hamming_rank_one(codes_, query);
  if (!identity_ids_) {
    for (auto& pos : ranked) pos = ids_[pos];
  }
  return ranked;
}

std::vector<kernels::IdList> HammingIndex::search_all(const BinaryCodeMatrix& queries,
                                                      kernels::Exec exec) const {
  if (size() == 0) throw DataError("search on an empty index");
  if (queries.bits() != bits()) {
    throw DataError(fmt::format("search: queries have {} bits, index has {}", queries.bits(),
                                bits()));
  }
  auto ranked = exec == kernels::Exec::serial ? kernels::serial::hamming_rank(codes_, queries)
                                              : kernels::omp::hamming_rank(codes_, queries);
  if (!identity_ids_) {
    for (auto& list : ranked)
      for (auto& pos : list) pos = ids_[pos];
  }
  return ranked;
}

GroundTruth ground_truth(const DataMatrix& database, const DataMatrix& queries, Index r,
                         ThresholdMode mode, kernels::Exec exec) {
  if (database.rows() < 2) {
    throw DataError(fmt::format("ground truth needs at least 2 database rows, got {}",
                                database.rows()));
  }
  if (queries.cols() != database.cols()) {
    throw DataError(fmt::format("ground truth: queries have {} columns, database has {}",
                                queries.cols(), database.cols()));
  }
  if (r < 1) throw ConfigError("ground truth: r must be >= 1");
  const kernels::RowMajor db = row_major(database);
  const kernels::RowMajor qs = row_major(queries);
  const bool serial = exec == kernels::Exec::serial;

  std::vector<double> dists;
  Index used = r;
  if (mode == ThresholdMode::database) {
    if (r > database.rows() - 1) {
      used = database.rows() - 1;
      spdlog::warn("ground truth: r={} clamped to {} (database has {} rows)", r, used,
                   database.rows());
    }
    dists = serial ? kernels::serial::kth_neighbor_distance(db, used)
                   : kernels::omp::kth_neighbor_distance(db, used);
  } else {
    if (queries.rows() < 1) throw DataError("ground truth: no queries to average over");
    if (r > database.rows()) {
      used = database.rows();
      spdlog::warn("ground truth: r={} clamped to {} (database has {} rows)", r, used,
                   database.rows());
    }
    dists = serial ? kernels::serial::query_kth_neighbor_distance(db, qs, used)
                   : kernels::omp::query_kth_neighbor_distance(db, qs, used);
  }
  double sum = 0.0;
  for (double d : dists) sum += d;

  GroundTruth truth;
  truth.r = used;
  truth.threshold = sum / static_cast<double>(dists.size());
  truth.relevant = serial ? kernels::serial::within_radius(db, qs, truth.threshold)
                          : kernels::omp::within_radius(db, qs, truth.threshold);
  return truth;
}

double average_precision(std::span<const std::uint32_t> ranked,
                         std::span<const std::uint32_t> relevant) {
  if (relevant.empty() || ranked.empty()) return 0.0;
  const std::vector<char> mask = relevance_mask(ranked, relevant);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < ranked.size(); ++pos) {
    if (mask[ranked[pos]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

std::vector<std::pair<Index, double>> precision_at_k(std::span<const std::uint32_t> ranked,
                                                     std::span<const std::uint32_t> relevant,
                                                     std::span<const Index> ks) {
  const std::vector<char> mask =
      ranked.empty() ? std::vector<char>{} : relevance_mask(ranked, relevant);
  std::vector<std::pair<Index, double>> out;
  out.reserve(ks.size());
  for (Index k : ks) {
    if (k < 1) throw ConfigError(fmt::format("precision@K needs K >= 1, got {}", k));
    Index used = k;
    if (used > static_cast<Index>(ranked.size())) {
      used = static_cast<Index>(ranked.size());
      spdlog::warn("precision@K: K={} clamped to database size {}", k, used);
    }
    if (used == 0) {
      out.emplace_back(used, 0.0);
      continue;
    }
    Index hits = 0;
    for (Index pos = 0; pos < used; ++pos) hits += mask[ranked[static_cast<std::size_t>(pos)]];
    out.emplace_back(used, static_cast<double>(hits) / static_cast<double>(used));
  }
  return out;
}

EvalReport evaluate_codes(const BinaryCodeMatrix& database_codes,
                          const BinaryCodeMatrix& query_codes, const GroundTruth& truth,
                          std::span<const Index> ks, kernels::Exec exec) {
  if (query_codes.rows() == 0) throw DataError("evaluate: no queries");
  if (static_cast<Index>(truth.relevant.size()) != query_codes.rows()) {
    throw DataError(fmt::format("evaluate: ground truth covers {} queries, got {}",
                                truth.relevant.size(), query_codes.rows()));
  }
  const HammingIndex index(database_codes);
  const std::vector<kernels::IdList> ranked = index.search_all(query_codes, exec);

  // Clamp once so the warning is not repeated per query.
  std::vector<Index> clamped;
  for (Index k : ks) {
    if (k < 1) throw ConfigError(fmt::format("precision@K needs K >= 1, got {}", k));
    if (k > index.size()) {
      spdlog::warn("precision@K: K={} clamped to database size {}", k, index.size());
    }
    clamped.push_back(std::min(k, index.size()));
  }

  const auto nq = static_cast<std::size_t>(query_codes.rows());
  std::vector<double> ap(nq, 0.0);
  std::vector<std::vector<std::pair<Index, double>>> pk(nq);
  if (exec == kernels::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t q = 0; q < nq; ++q) {
      ap[q] = average_precision(ranked[q], truth.relevant[q]);
      pk[q] = precision_at_k(ranked[q], truth.relevant[q], clamped);
    }
  } else {
    for (std::size_t q = 0; q < nq; ++q) {
      ap[q] = average_precision(ranked[q], truth.relevant[q]);
      pk[q] = precision_at_k(ranked[q], truth.relevant[q], clamped);
    }
  }

  EvalReport report;
  report.bits = database_codes.bits();
  report.database_size = index.size();
  report.threshold = truth.threshold;
  report.r = truth.r;
  std::vector<double> pk_sum(clamped.size(), 0.0);
  double ap_sum = 0.0;
  for (std::size_t q = 0; q < nq; ++q) {
    if (truth.relevant[q].empty()) {
      ++report.excluded_queries;
      continue;
    }
    report.per_query_ap.push_back(ap[q]);
    report.query_ids.push_back(static_cast<Index>(q));
    ap_sum += ap[q];
    for (std::size_t j = 0; j < clamped.size(); ++j) pk_sum[j] += pk[q][j].second;
  }
  const auto included = static_cast<double>(report.per_query_ap.size());
  report.map = included > 0 ? ap_sum / included : 0.0;
  for (std::size_t j = 0; j < clamped.size(); ++j) {
    report.precision_at_k.emplace_back(clamped[j], included > 0 ? pk_sum[j] / included : 0.0);
  }
  if (report.per_query_ap.empty()) {
    spdlog::warn("evaluate: every query has an empty relevant set; MAP reported as 0");
  }
  return report;
}

EvalReport evaluate(const HashModel& model, const DataMatrix& database, const DataMatrix& queries,
                    const GroundTruth& truth, std::span<const Index> ks, kernels::Exec exec) {
  EvalReport report = evaluate_codes(encode(model, database), encode(model, queries), truth, ks, exec);
  report.method = std::string(to_string(model.method));
  report.seed = model.hyper.seed;
  return report;
}

std::string report_text(const EvalReport& report) {
  std::string out;
  out += fmt::format("method: {}\n", report.method);
  out += fmt::format("bits: {}\n", report.bits);
  out += fmt::format("seed: {}\n", report.seed);
  out += fmt::format("alpha: {}\n", report.alpha);
  out += fmt::format("database size: {}\n", report.database_size);
  out += fmt::format("ground truth: r={} threshold={}\n", report.r, report.threshold);
  out += fmt::format("queries evaluated: {} (excluded with no relevant items: {})\n",
                     report.per_query_ap.size(), report.excluded_queries);
  out += fmt::format("MAP: {:.6f}\n", report.map);
  for (const auto& [k, p] : report.precision_at_k) {
    out += fmt::format("precision@{}: {:.6f}\n", k, p);
  }
  return out;
}

std::string report_metrics(const EvalReport& report) {
  std::string out;
  out += fmt::format("method={}\n", report.method);
  out += fmt::format("bits={}\n", report.bits);
  out += fmt::format("seed={}\n", report.seed);
  out += fmt::format("alpha={}\n", report.alpha);
  out += fmt::format("map={}\n", report.map);
  out += fmt::format("queries={}\n", report.per_query_ap.size());
  out += fmt::format("excluded_queries={}\n", report.excluded_queries);
  out += fmt::format("database_size={}\n", report.database_size);
  out += fmt::format("threshold={}\n", report.threshold);
  out += fmt::format("r={}\n", report.r);
  for (const auto& [k, p] : report.precision_at_k) out += fmt::format("precision@{}={}\n", k, p);
  return out;
}

std::string report_precision_csv(const EvalReport& report) {
  std::string out = "K,precision\n";
  for (const auto& [k, p] : report.precision_at_k) out += fmt::format("{},{}\n", k, p);
  return out;
}

std::string report_ap_csv(const EvalReport& report) {
  std::string out = "query,ap\n";
  for (std::size_t i = 0; i < report.per_query_ap.size(); ++i) {
    out += fmt::format("{},{}\n", report.query_ids[i], report.per_query_ap[i]);
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& prefix) {
  const std::string base = prefix.string();
  write_text(base + ".report.txt", report_text(report));
  write_text(base + ".metrics", report_metrics(report));
  write_text(base + ".pk.csv", report_precision_csv(report));
  write_text(base + ".ap.csv", report_ap_csv(report));
}

}  // namespace thpi
