#include "thpi/commands.hpp"

#include "thpi/baselines.hpp"
#include "thpi/error.hpp"
#include "thpi/itq.hpp"
#include "thpi/itq_plus.hpp"
#include "thpi/lap_itq_plus.hpp"
#include "thpi/preprocess.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <map>
#include <random>
#include <thread>

namespace thpi {
namespace {

namespace fs = std::filesystem;

MatrixFormat resolve_format(const std::string& format, const fs::path& path) {
  return format.empty() ? format_from_path(path) : parse_format(format);
}

DataMatrix load(const std::string& path, const std::string& format, std::string_view role) {
  if (path.empty()) throw ConfigError(fmt::format("no {} file given", role));
  return load_matrix(path, resolve_format(format, path));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

bool uses_source(Method m) {
  return m == Method::itq_plus || m == Method::lap_itq_plus || m == Method::cca_itq;
}

}  // namespace

SynthData synth_dataset(const SynthParams& p) {
  if (p.n_pairs < 1 || p.d_target < 1 || p.d_source < 1 || p.clusters < 1 || p.latent_dim < 1) {
    throw ConfigError("synth: sizes must be positive");
  }
  if (!(p.noise_target >= 0.0) || !(p.noise_source >= 0.0) || !(p.center_scale >= 0.0)) {
    throw ConfigError("synth: noise and center scale must be >= 0");
  }
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, p.clusters - 1);
  auto gaussian = [&](Index rows, Index cols, double scale) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = scale * gauss(rng);
    return m;
  };
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(p.latent_dim));
  const Matrix a_t = gaussian(p.d_target, p.latent_dim, map_scale);
  const Matrix a_s = gaussian(p.d_source, p.latent_dim, map_scale);
  const Matrix centers = gaussian(p.clusters, p.latent_dim, p.center_scale);

  Matrix target(p.n_pairs, p.d_target);
  Matrix source(p.n_pairs, p.d_source);
  std::vector<Index> labels(static_cast<std::size_t>(p.n_pairs));
  for (Index i = 0; i < p.n_pairs; ++i) {
    const Index label = pick(rng);
    labels[static_cast<std::size_t>(i)] = label;
    Vector z = centers.row(label).transpose();
    for (Index j = 0; j < p.latent_dim; ++j) z(j) += gauss(rng);
    Vector t = a_t * z;
    Vector s = a_s * z;
    for (Index j = 0; j < p.d_target; ++j) t(j) += p.noise_target * gauss(rng);
    for (Index j = 0; j < p.d_source; ++j) s(j) += p.noise_source * gauss(rng);
    target.row(i) = t.transpose();
    source.row(i) = s.transpose();
  }
  return {DataMatrix(std::move(target)), DataMatrix(std::move(source)), std::move(labels)};
}

void cmd_synth(const SynthParams& p, const fs::path& out_dir) {
  const SynthData data = synth_dataset(p);
  ensure_dir(out_dir);
  save_matrix(out_dir / "target.bin", data.target, MatrixFormat::thpi_bin);
  save_matrix(out_dir / "source.bin", data.source, MatrixFormat::thpi_bin);
  std::string labels;
  for (Index l : data.labels) labels += fmt::format("{}\n", l);
  write_text(out_dir / "labels.csv", labels);
  write_text(out_dir / "manifest.txt",
             fmt::format("n_pairs={}\nd_target={}\nd_source={}\nclusters={}\nlatent_dim={}\n"
                         "noise_target={}\nnoise_source={}\ncenter_scale={}\nseed={}\ntarget=target.bin\n"
                         "source=source.bin\nlabels=labels.csv\n",
                         p.n_pairs, p.d_target, p.d_source, p.clusters, p.latent_dim, p.noise_target, p.noise_source,
                         p.center_scale, p.seed));
}

SplitBundle cmd_split(const RunConfig& config, std::uint64_t seed, const fs::path& out_dir) {
  config.validate();
  const DataMatrix target = load(config.target, config.format, "target");
  const DataMatrix source = load(config.source, config.format, "source");
  SplitBundle split = make_split(target, source, config.alpha, config.test_fraction, seed);
  ensure_dir(out_dir);
  save_matrix(out_dir / "target_train.bin", split.target_train, MatrixFormat::thpi_bin);
  save_matrix(out_dir / "source_corr.bin", split.source_corr, MatrixFormat::thpi_bin);
  if (!split.source_extra.empty()) {
    save_matrix(out_dir / "source_extra.bin", split.source_extra, MatrixFormat::thpi_bin);
  }
  if (!split.target_test.empty()) {
    save_matrix(out_dir / "target_test.bin", split.target_test, MatrixFormat::thpi_bin);
  }
  save_matrix(out_dir / "target_database.bin", split.target_database, MatrixFormat::thpi_bin);
  write_text(out_dir / "split_manifest.txt",
             fmt::format("seed={}\nalpha={}\nrealized_alpha={}\ntest_fraction={}\nn={}\nn_extra={}\n"
                         "n_test={}\ncorr={}\nextra={}\ntest={}\n",
                         seed, config.alpha, split.realized_alpha(), config.test_fraction,
                         split.corr_origin.size(), split.extra_origin.size(),
                         split.test_origin.size(), fmt::join(split.corr_origin, ","),
                         fmt::join(split.extra_origin, ","), fmt::join(split.test_origin, ",")));
  return split;
}

void check_train_inputs(Method method, const TrainInputs& in, Index bits, const RunConfig& config) {
  in.target.require_nonempty("target training data");
  if (bits < 1) throw ConfigError("bits must be >= 1");
  if (config.pca_energy == 0.0 && method != Method::lsh && bits > in.target.cols()) {
    throw ConfigError(fmt::format("{} bits exceed the target dimension {}", bits,
                                  in.target.cols()));
  }
  if (uses_source(method)) {
    in.source_corr.require_nonempty("source correspondence data");
    if (in.source_corr.rows() != in.target.rows()) {
      throw DataError(fmt::format("{} target rows but {} source correspondence rows",
                                  in.target.rows(), in.source_corr.rows()));
    }
    if (config.pca_energy == 0.0 && bits > in.source_corr.cols()) {
      throw ConfigError(fmt::format("{} bits exceed the source dimension {}", bits,
                                    in.source_corr.cols()));
    }
  }
  if (method == Method::itq_plus || method == Method::lap_itq_plus) {
    if (in.target.rows() < 2) throw DataError("transfer methods need at least 2 correspondences");
  }
  if (method == Method::lap_itq_plus) {
    if (!in.source_extra.empty() && in.source_extra.cols() != in.source_corr.cols()) {
      throw DataError("extra source rows and correspondences differ in dimension");
    }
    if (config.k_graph >= in.target.rows()) {
      throw ConfigError(fmt::format("graph k={} must be smaller than n={}", config.k_graph,
                                    in.target.rows()));
    }
  }
}

TrainOutcome train_method(Method method, const TrainInputs& inputs, Index bits,
                          const RunConfig& config, std::uint64_t seed) {
  config.validate();
  check_train_inputs(method, inputs, bits, config);

  TrainInputs work = inputs;
  std::optional<LinearProjection> target_pca;
  CenteringInfo raw_center;
  const bool rotation_method =
      method == Method::itq || method == Method::itq_plus || method == Method::lap_itq_plus;
  const bool use_pca = config.pca_energy > 0.0 || (config.pca_to_bits && rotation_method);
  if (use_pca) {
    // Energy-based PCA when requested, otherwise exactly `bits` components.
    auto fit = [&](const DataMatrix& x) {
      return config.pca_energy > 0.0 ? pca_fit(x, config.pca_energy)
                                     : pca_fit_components(x, bits);
    };
    auto [tc, tinfo] = zero_center(inputs.target);
    target_pca = fit(tc);
    work.target = project(tc, *target_pca);
    raw_center = std::move(tinfo);
    if (uses_source(method)) {
      const DataMatrix all = stack_rows(inputs.source_corr, inputs.source_extra);
      auto [sc, sinfo] = zero_center(all);
      const LinearProjection source_pca = fit(sc);
      work.source_corr = project(apply_centering(inputs.source_corr, sinfo), source_pca);
      if (!inputs.source_extra.empty()) {
        work.source_extra = project(apply_centering(inputs.source_extra, sinfo), source_pca);
      }
    }
    if (method != Method::lsh && bits > work.target.cols()) {
      throw ConfigError(fmt::format("PCA at energy {} keeps {} target dimensions, fewer than {} "
                                    "bits",
                                    config.pca_energy, work.target.cols(), bits));
    }
    if (uses_source(method) && bits > work.source_corr.cols()) {
      throw ConfigError(fmt::format("PCA at energy {} keeps {} source dimensions, fewer than {} "
                                    "bits",
                                    config.pca_energy, work.source_corr.cols(), bits));
    }
  }

  TrainOutcome out;
  switch (method) {
    case Method::itq: {
      ItqOptions opts;
      opts.iters = config.iters;
      opts.seed = seed;
      opts.rel_tol = config.rel_tol;
      ItqResult fit;
      out.model = itq_fit(work.target, bits, opts, &fit);
      out.trace = std::move(fit.loss_trace);
      break;
    }
    case Method::itq_plus: {
      ItqPlusOptions opts{config.iters, seed, config.rel_tol, BStep::balanced};
      auto [model, state] = itq_plus_train(work.target, work.source_corr, bits, config.lambda1, opts);
      out.model = std::move(model);
      out.trace = std::move(state.objective_trace);
      break;
    }
    case Method::lap_itq_plus: {
      LapItqPlusOptions opts;
      opts.iters = config.iters;
      opts.seed = seed;
      opts.rel_tol = config.rel_tol;
      opts.lambda2 = config.lambda2;
      opts.k_graph = config.k_graph;
      opts.inner_iters = config.inner_iters;
      opts.rebalance = config.rebalance;
      LapItqPlusResult fit = lap_itq_plus_train(work.target, work.source_corr, work.source_extra,
                                                bits, config.lambda1, opts);
      out.model = std::move(fit.model);
      out.trace = std::move(fit.full_objective_trace);
      break;
    }
    case Method::lsh:
      out.model = lsh_fit(work.target, bits, seed);
      break;
    case Method::cca_itq: {
      ItqOptions opts;
      opts.iters = config.iters;
      opts.seed = seed;
      opts.rel_tol = config.rel_tol;
      ItqResult fit;
      out.model = cca_itq_fit(work.target, work.source_corr, bits, opts, &fit);
      out.trace = std::move(fit.loss_trace);
      break;
    }
  }

  if (target_pca) {
    LinearProjection& pre = out.model.preprocessing;
    if (pre.kind == ProjectionKind::identity) {
      pre = *target_pca;
    } else {
      pre.matrix = target_pca->matrix * pre.matrix;
    }
    out.model.centering = raw_center;
  }
  out.model.validate();
  return out;
}

TrainOutcome cmd_train(const RunConfig& config) {
  config.validate();
  if (config.out.empty()) throw ConfigError("train: --out model path is required");
  const Method method = config.methods.front();
  TrainInputs inputs;
  inputs.target = load(config.target, config.format, "target");
  if (uses_source(method)) inputs.source_corr = load(config.source, config.format, "source");
  if (method == Method::lap_itq_plus && !config.source_extra.empty()) {
    inputs.source_extra = load(config.source_extra, config.format, "source-extra");
  }
  const Index bits = config.bits.front();
  check_train_inputs(method, inputs, bits, config);

  TrainOutcome out = train_method(method, inputs, bits, config, config.seeds.front());
  save_model(out.model, config.out);
  std::string log;
  for (std::size_t t = 0; t < out.trace.size(); ++t) {
    log += fmt::format("iter={} objective={}\n", t + 1, out.trace[t]);
  }
  write_text(config.out + ".log", log);
  return out;
}

void cmd_encode(const fs::path& model_path, const fs::path& data_path, const fs::path& out_path,
                const std::string& format) {
  const HashModel model = load_model(model_path);
  const DataMatrix x = load_matrix(data_path, resolve_format(format, data_path));
  const BinaryCodeMatrix codes = encode(model, x);
  std::string text;
  for (Index i = 0; i < codes.rows(); ++i) {
    for (Index b = 0; b < codes.bits(); ++b) {
      if (b) text.push_back(',');
      text += codes.signs()(i, b) > 0 ? "1" : "-1";
    }
    text.push_back('\n');
  }
  write_text(out_path, text);
}

EvalReport cmd_eval(const EvalRequest& req) {
  if (req.out_prefix.empty()) throw ConfigError("eval: --out prefix is required");
  const HashModel model = load_model(req.model);
  const DataMatrix db = load_matrix(req.database, resolve_format(req.format, req.database));
  const DataMatrix queries = load_matrix(req.queries, resolve_format(req.format, req.queries));
  if (db.cols() != model.input_dim() || queries.cols() != model.input_dim()) {
    throw DataError(fmt::format("eval: model expects {} columns, database has {}, queries have {}",
                                model.input_dim(), db.cols(), queries.cols()));
  }
  const GroundTruth truth = ground_truth(db, queries, req.r, req.mode);
  EvalReport report = evaluate(model, db, queries, truth, req.ks);
  write_report(report, req.out_prefix);
  return report;
}

BenchResult run_bench(const DataMatrix& target_all, const DataMatrix& source_all,
                      const RunConfig& config) {
  config.validate();
  struct SeedData {
    std::optional<SplitBundle> split;
    std::optional<GroundTruth> truth;
    std::string error;
  };
  std::vector<SeedData> per_seed(config.seeds.size());
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    try {
      per_seed[s].split =
          make_split(target_all, source_all, config.alpha, config.test_fraction, config.seeds[s]);
      if (per_seed[s].split->target_test.empty()) throw DataError("split has no test queries");
      per_seed[s].truth = ground_truth(per_seed[s].split->target_database,
                                       per_seed[s].split->target_test, config.r_groundtruth,
                                       config.threshold_mode);
    } catch (const Error& e) {
      per_seed[s].error = e.what();
    }
  }

  BenchResult result;
  for (Method m : config.methods)
    for (Index b : config.bits)
      for (std::uint64_t seed : config.seeds) result.cells.push_back({m, b, seed, std::nullopt, {}});

  const std::size_t per_method_bits = config.seeds.size();
  auto run_cell = [&](std::size_t idx) {
    BenchCell& cell = result.cells[idx];
    const SeedData& sd = per_seed[idx % per_method_bits];
    if (!sd.split) {
      cell.error = sd.error;
      return;
    }
    try {
      const SplitBundle& split = *sd.split;
      TrainInputs inputs{split.target_train, split.source_corr, split.source_extra};
      TrainOutcome trained = train_method(cell.method, inputs, cell.bits, config, cell.seed);
      EvalReport report = evaluate(trained.model, split.target_database, split.target_test,
                                   *sd.truth, config.ks);
      report.alpha = config.alpha;
      cell.report = std::move(report);
    } catch (const Error& e) {
      cell.error = e.what();
    }
  };

  const std::size_t workers = std::min<std::size_t>(config.workers, result.cells.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < result.cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < result.cells.size(); i = next++) run_cell(i);
      });
    }
  }
  for (const BenchCell& cell : result.cells) {
    if (!cell.report) {
      spdlog::warn("bench cell {} bits={} seed={} failed: {}", to_string(cell.method), cell.bits,
                   cell.seed, cell.error);
    }
  }

  for (std::size_t start = 0; start < result.cells.size(); start += per_method_bits) {
    BenchAggregate agg;
    agg.method = result.cells[start].method;
    agg.bits = result.cells[start].bits;
    double sum = 0.0;
    std::vector<double> pk_sum;
    for (std::size_t i = start; i < start + per_method_bits; ++i) {
      const BenchCell& cell = result.cells[i];
      if (!cell.report) {
        ++agg.missing;
        continue;
      }
      ++agg.runs;
      sum += cell.report->map;
      if (pk_sum.empty()) {
        pk_sum.assign(cell.report->precision_at_k.size(), 0.0);
        for (const auto& [k, p] : cell.report->precision_at_k) agg.mean_precision.emplace_back(k, 0.0);
      }
      for (std::size_t j = 0; j < pk_sum.size(); ++j) pk_sum[j] += cell.report->precision_at_k[j].second;
    }
    if (agg.runs > 0) {
      agg.mean_map = sum / static_cast<double>(agg.runs);
      for (std::size_t j = 0; j < pk_sum.size(); ++j) {
        agg.mean_precision[j].second = pk_sum[j] / static_cast<double>(agg.runs);
      }
    }
    result.aggregates.push_back(std::move(agg));
  }
  return result;
}

std::string bench_table_csv(const BenchResult& result) {
  std::string out = "kind,method,bits,seed,map,runs,missing\n";
  for (const BenchAggregate& a : result.aggregates) {
    out += fmt::format("mean,{},{},all,{},{},{}\n", to_string(a.method), a.bits,
                       a.runs > 0 ? fmt::format("{}", a.mean_map) : std::string("NA"), a.runs,
                       a.missing);
  }
  for (const BenchCell& c : result.cells) {
    out += fmt::format("seed,{},{},{},{},{},{}\n", to_string(c.method), c.bits, c.seed,
                       c.report ? fmt::format("{}", c.report->map) : std::string("NA"),
                       c.report ? 1 : 0, c.report ? 0 : 1);
  }
  return out;
}

std::string bench_precision_csv(const BenchResult& result, Index bits) {
  std::string out = "method,K,precision\n";
  for (const BenchAggregate& a : result.aggregates) {
    if (a.bits != bits) continue;
    for (const auto& [k, p] : a.mean_precision) {
      out += fmt::format("{},{},{}\n", to_string(a.method), k, p);
    }
  }
  return out;
}

std::string bench_summary_text(const BenchResult& result, const RunConfig& config) {
  std::string out = fmt::format("MAP (%) averaged over {} seed(s), alpha={}\n", config.seeds.size(),
                                config.alpha);
  out += fmt::format("{:<10}", "method");
  for (Index b : config.bits) out += fmt::format("{:>10}", fmt::format("{} bits", b));
  out += '\n';
  for (Method m : config.methods) {
    out += fmt::format("{:<10}", to_string(m));
    for (Index b : config.bits) {
      std::string cell = "NA";
      for (const BenchAggregate& a : result.aggregates) {
        if (a.method == m && a.bits == b && a.runs > 0) cell = fmt::format("{:.2f}", 100.0 * a.mean_map);
      }
      out += fmt::format("{:>10}", cell);
    }
    out += '\n';
  }
  return out;
}

BenchResult cmd_bench(const RunConfig& config) {
  config.validate();
  if (config.out.empty()) throw ConfigError("bench: --out directory is required");
  const DataMatrix target = load(config.target, config.format, "target");
  const DataMatrix source = load(config.source, config.format, "source");
  BenchResult result = run_bench(target, source, config);
  const fs::path dir = config.out;
  ensure_dir(dir);
  write_text(dir / "table.csv", bench_table_csv(result));
  for (Index b : config.bits) {
    write_text(dir / fmt::format("pk_{}.csv", b), bench_precision_csv(result, b));
  }
  write_text(dir / "summary.txt", bench_summary_text(result, config));
  write_text(dir / "config.txt", to_config_text(config));
  return result;
}

void inspect_model(const HashModel& model, std::ostream& out) {
  out << fmt::format("method: {}\n", to_string(model.method));
  out << fmt::format("bits: {}\n", model.bits);
  out << fmt::format("input dimension: {}\n", model.input_dim());
  out << fmt::format("preprocessing: {} ({} -> {})\n", to_string(model.preprocessing.kind),
                     model.preprocessing.d_in(), model.preprocessing.d_out());
  out << fmt::format("rotation: {} x {}\n", model.rotation.rows(), model.rotation.cols());
  const Matrix gram = model.rotation.transpose() * model.rotation;
  out << fmt::format("||R^T R - I||_F: {:.3e}\n",
                     (gram - Matrix::Identity(gram.rows(), gram.cols())).norm());
  out << fmt::format("lambda1: {}\nlambda2: {}\nk: {}\niters: {}\nseed: {}\n", model.hyper.lambda1,
                     model.hyper.lambda2, model.hyper.k_graph, model.hyper.iters, model.hyper.seed);
}

}  // namespace thpi
