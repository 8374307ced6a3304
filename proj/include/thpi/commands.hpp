#pragma once

// Orchestration behind the `thpi` command-line tool. Each command is a
// library function so that tests can drive it without spawning processes.

#include "thpi/config.hpp"
#include "thpi/dataset_io.hpp"
#include "thpi/model.hpp"
#include "thpi/retrieval.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace thpi {

struct SynthParams {
  Index n_pairs = 1111;
  Index d_target = 64;
  Index d_source = 48;
  Index clusters = 5;
  Index latent_dim = 16;
  double noise_target = 1.0;
  double noise_source = 1.0;
  /// Spread of the cluster centers relative to the unit within-cluster spread.
  double center_scale = 3.0;
  std::uint64_t seed = 0;
};

struct SynthData {
  DataMatrix target;
  DataMatrix source;
  std::vector<Index> labels;
};

/// Two index-parallel views of a shared latent cluster structure:
/// z = center[label] + N(0, I), target = A_T z + noise_T e_T, source = A_S z + noise_S e_S.
SynthData synth_dataset(const SynthParams& params);

/// Writes target.bin, source.bin, labels.csv and manifest.txt into `out_dir`.
void cmd_synth(const SynthParams& params, const std::filesystem::path& out_dir);

/// Writes the split matrices and split_manifest.txt into `out_dir`.
SplitBundle cmd_split(const RunConfig& config, std::uint64_t seed,
                      const std::filesystem::path& out_dir);

struct TrainInputs {
  DataMatrix target;        // X_T
  DataMatrix source_corr;   // X_SC (unused by itq, lsh)
  DataMatrix source_extra;  // X_SU (lapitq+ only)
};

struct TrainOutcome {
  HashModel model;
  /// Loss/objective after every completed iteration (empty for lsh).
  std::vector<double> trace;
};

/// Checks shapes and parameters for one (method, bits) run before any
/// training starts.
void check_train_inputs(Method method, const TrainInputs& inputs, Index bits,
                        const RunConfig& config);

/// Dispatches to the trainer of `method`, applying the optional PCA front end.
TrainOutcome train_method(Method method, const TrainInputs& inputs, Index bits,
                          const RunConfig& config, std::uint64_t seed);

/// Trains config.methods[0] at config.bits[0] with config.seeds[0]; writes the
/// model to config.out and `iter=<t> objective=<v>` lines to config.out + ".log".
TrainOutcome cmd_train(const RunConfig& config);

/// Encodes a matrix and writes one row of +1/-1 per instance.
void cmd_encode(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                const std::filesystem::path& out_path, const std::string& format = "");

struct EvalRequest {
  std::filesystem::path model;
  std::filesystem::path database;
  std::filesystem::path queries;
  std::filesystem::path out_prefix;
  Index r = 50;
  std::vector<Index> ks{10, 50, 100};
  ThresholdMode mode = ThresholdMode::database;
  std::string format;
};

/// Ground truth, encoding, ranking, report files. Nothing is written when
/// the query file is empty or dimensions disagree.
EvalReport cmd_eval(const EvalRequest& request);

struct BenchCell {
  Method method = Method::itq;
  Index bits = 0;
  std::uint64_t seed = 0;
  std::optional<EvalReport> report;  // empty when the cell failed
  std::string error;
};

struct BenchAggregate {
  Method method = Method::itq;
  Index bits = 0;
  double mean_map = 0.0;
  Index runs = 0;
  Index missing = 0;
  std::vector<std::pair<Index, double>> mean_precision;
};

struct BenchResult {
  std::vector<BenchCell> cells;  // ordered by (method, bits, seed) as configured
  std::vector<BenchAggregate> aggregates;
};

/// split -> train -> eval for every (method, bits, seed); cells may run on
/// `config.workers` threads, aggregation order is fixed.
BenchResult run_bench(const DataMatrix& target_all, const DataMatrix& source_all,
                      const RunConfig& config);

/// Table with one `mean` row per (method, bits) followed by `seed` rows.
std::string bench_table_csv(const BenchResult& result);
/// method,K,precision rows for one code length.
std::string bench_precision_csv(const BenchResult& result, Index bits);
/// MAP table laid out with methods as rows and code lengths as columns.
std::string bench_summary_text(const BenchResult& result, const RunConfig& config);

/// Loads config.target/config.source, runs the benchmark and writes
/// table.csv, pk_<bits>.csv and summary.txt into config.out.
BenchResult cmd_bench(const RunConfig& config);

void inspect_model(const HashModel& model, std::ostream& out);

}  // namespace thpi
