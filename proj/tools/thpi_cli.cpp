// thpi: train, encode and evaluate binary hash functions from the shell.

#include "thpi/commands.hpp"
#include "thpi/config.hpp"
#include "thpi/dataset_io.hpp"
#include "thpi/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

// Flags that map one-to-one onto RunConfig keys. Values stay strings so that
// the config parser does all range checking in one place.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App& app, const std::string& flag, const std::string& key,
           const std::string& help) {
    options.emplace_back(key, app.add_option(flag, values[key], help));
  }

  thpi::RunConfig resolve() const {
    thpi::RunConfig config;
    if (!config_path.empty()) config = thpi::load_config(config_path);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) thpi::apply_config_value(config, key, values.at(key));
    }
    config.validate();
    return config;
  }
};

void add_run_flags(CLI::App& app, ConfigFlags& flags) {
  app.add_option("--config", flags.config_path, "key=value config file; flags override it");
  flags.add(app, "--target", "target", "target-domain matrix (csv or thpi-bin)");
  flags.add(app, "--source", "source", "source-domain matrix, row-aligned with --target");
  flags.add(app, "--source-extra", "source_extra", "unpaired source rows (lapitq+)");
  flags.add(app, "--method", "methods", "itq, itq+, lapitq+, lsh, cca-itq (comma list for bench)");
  flags.add(app, "--bits", "bits", "code length(s), comma separated");
  flags.add(app, "--alpha", "alpha", "correspondence ratio n/(n+n_S)");
  flags.add(app, "--lambda1", "lambda1", "transfer weight");
  flags.add(app, "--lambda2", "lambda2", "graph weight");
  flags.add(app, "--k", "k", "k of the Hamming kNN graph");
  flags.add(app, "--iters", "iters", "maximum outer iterations");
  flags.add(app, "--seed", "seed", "single seed");
  flags.add(app, "--seeds", "seeds", "comma separated seeds");
  flags.add(app, "--pca-energy", "pca_energy", "PCA front end energy in (0,1]; 0 disables");
  flags.add(app, "--pca-to-bits", "pca_to_bits",
            "true/false: project onto `bits` principal components when pca-energy is 0");
  flags.add(app, "--out", "out", "output path");
  flags.add(app, "--format", "format", "csv or thpi-bin (default: by extension)");
  flags.add(app, "--workers", "workers", "parallel bench cells");
  flags.add(app, "--r-groundtruth", "r_groundtruth", "neighbor rank defining the threshold");
  flags.add(app, "--ks", "ks", "precision cutoffs, comma separated");
}

int run(int argc, char** argv) {
  CLI::App app{"thpi: transfer hashing with privileged information"};
  app.require_subcommand(1);

  thpi::SynthParams synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "generate a two-view synthetic dataset");
  synth_cmd->add_option("--n-pairs", synth.n_pairs)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--d-target", synth.d_target)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--d-source", synth.d_source)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--clusters", synth.clusters)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--latent-dim", synth.latent_dim)->check(CLI::PositiveNumber);
  double noise = -1.0;
  synth_cmd->add_option("--noise", noise, "noise level of both views")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--noise-target", synth.noise_target)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--noise-source", synth.noise_source)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--center-scale", synth.center_scale)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  ConfigFlags split_flags;
  auto* split_cmd = app.add_subcommand("split", "split paired data into train/corr/extra/test");
  add_run_flags(*split_cmd, split_flags);

  ConfigFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train one model and write it to --out");
  add_run_flags(*train_cmd, train_flags);

  std::string enc_model, enc_data, enc_out, enc_format;
  auto* encode_cmd = app.add_subcommand("encode", "encode a matrix into +1/-1 codes");
  encode_cmd->add_option("--model", enc_model)->required();
  encode_cmd->add_option("--data", enc_data)->required();
  encode_cmd->add_option("--out", enc_out)->required();
  encode_cmd->add_option("--format", enc_format);

  thpi::EvalRequest eval;
  std::string eval_model, eval_db, eval_q, eval_out, eval_ks, eval_mode;
  auto* eval_cmd = app.add_subcommand("eval", "MAP and precision@K of a model");
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--database", eval_db)->required();
  eval_cmd->add_option("--queries", eval_q)->required();
  eval_cmd->add_option("--out", eval_out, "report prefix")->required();
  eval_cmd->add_option("--r-groundtruth", eval.r);
  eval_cmd->add_option("--ks", eval_ks);
  eval_cmd->add_option("--threshold-mode", eval_mode)->check(CLI::IsMember({"database", "queries"}));
  eval_cmd->add_option("--format", eval.format);

  ConfigFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "split/train/eval over methods, bits and seeds");
  add_run_flags(*bench_cmd, bench_flags);

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect-model", "print a model summary");
  inspect_cmd->add_option("model", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : thpi::exit_code(thpi::ErrorKind::config);
  }

  if (*synth_cmd) {
    if (noise >= 0.0) {
      if (synth_cmd->count("--noise-target") == 0) synth.noise_target = noise;
      if (synth_cmd->count("--noise-source") == 0) synth.noise_source = noise;
    }
    thpi::cmd_synth(synth, synth_out);
  } else if (*split_cmd) {
    const thpi::RunConfig config = split_flags.resolve();
    if (config.out.empty()) throw thpi::ConfigError("split: --out directory is required");
    for (std::uint64_t seed : config.seeds) {
      const std::filesystem::path dir = config.seeds.size() == 1
                                            ? std::filesystem::path(config.out)
                                            : std::filesystem::path(config.out) /
                                                  ("seed_" + std::to_string(seed));
      thpi::cmd_split(config, seed, dir);
    }
  } else if (*train_cmd) {
    const thpi::TrainOutcome out = thpi::cmd_train(train_flags.resolve());
    std::cout << "trained " << thpi::to_string(out.model.method) << " with "
              << out.model.bits << " bits in " << out.trace.size() << " iterations\n";
  } else if (*encode_cmd) {
    thpi::cmd_encode(enc_model, enc_data, enc_out, enc_format);
  } else if (*eval_cmd) {
    eval.model = eval_model;
    eval.database = eval_db;
    eval.queries = eval_q;
    eval.out_prefix = eval_out;
    if (!eval_ks.empty()) eval.ks = thpi::parse_list<thpi::Index>(eval_ks);
    if (eval_mode == "queries") eval.mode = thpi::ThresholdMode::queries;
    const thpi::EvalReport report = thpi::cmd_eval(eval);
    std::cout << thpi::report_text(report);
  } else if (*bench_cmd) {
    const thpi::RunConfig config = bench_flags.resolve();
    const thpi::BenchResult result = thpi::cmd_bench(config);
    std::cout << thpi::bench_summary_text(result, config);
  } else if (*inspect_cmd) {
    thpi::inspect_model(thpi::load_model(inspect_path), std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const thpi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return thpi::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
