#pragma once

// Command-line entry point. Six subcommands (gen-data, train, eval,
// gradcheck, ablate, timing) share a config pipeline: optional config file,
// then repeated --set key=value overrides (last write wins). Every run
// writes its artifacts plus a manifest (version tag, command, seed, resolved
// config) into the --out directory.
//
// Exit codes: 0 success, 1 usage, 2 data/config error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eagcl/common.hpp"
#include "eagcl/config.hpp"
#include "eagcl/dataio.hpp"
#include "eagcl/toy.hpp"
#include "eagcl/training.hpp"

namespace eagcl {

namespace detail {

inline ConfigMap load_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
  ConfigMap cm = config_path.empty() ? ConfigMap{} : ConfigMap::parse_file(config_path);
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    cm.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return cm;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << content;
}

inline void write_manifest(const std::string& out_dir, const std::string& command,
                           std::uint64_t seed, const std::string& config_kv) {
  std::ostringstream os;
  os << "version=" << kVersion << '\n'
     << "command=" << command << '\n'
     << "seed=" << seed << "\n\n"
     << config_kv;
  write_file(out_dir + "/manifest.txt", os.str());
}

// Loads a TSV and drops the dense-index-to-original-id sidecar next to the
// run's other artifacts.
inline Dataset load_dataset_with_sidecar(const std::string& data_path, const std::string& out_dir) {
  Dataset ds = parse_dataset_file(data_path);
  std::ostringstream os;
  serialize_id_maps(ds.id_maps, os);
  write_file(out_dir + "/idmap.tsv", os.str());
  return ds;
}

inline std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": expected a number, got '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("--seeds: expected an integer, got '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("--seeds: empty list");
  return out;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"desk-scale cross-domain sequential recommender"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir = "out", checkpoint_path;
  std::vector<std::string> overrides;
  std::string fractions_str = "0.2,0.4,0.6,0.8,1.0";
  std::string seeds_str = "1,2,3,4,5";
  std::size_t timing_epochs = 2;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--set", overrides, "override config entries (key=value, repeatable)");
    sub->add_option("--out", out_dir, "output directory (created if missing)")
        ->capture_default_str();
  };

  CLI::App* gen = app.add_subcommand("gen-data", "synthesize a cross-domain dataset");
  add_common(gen);
  CLI::App* train = app.add_subcommand("train", "fit the model on a dataset");
  add_common(train);
  train->add_option("--data", data_path, "dataset TSV")->required();
  CLI::App* eval = app.add_subcommand("eval", "rank held-out targets with a checkpoint");
  add_common(eval);
  eval->add_option("--data", data_path, "dataset TSV")->required();
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file from train")->required();
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  add_common(gradcheck);
  CLI::App* ablate = app.add_subcommand("ablate", "train and score the model variants");
  add_common(ablate);
  ablate->add_option("--data", data_path, "dataset TSV")->required();
  ablate->add_option("--seeds", seeds_str, "comma-separated seeds")->capture_default_str();
  CLI::App* timing = app.add_subcommand("timing", "wall-clock scaling study");
  add_common(timing);
  timing->add_option("--data", data_path, "dataset TSV (default: synthesize from config)");
  timing->add_option("--fractions", fractions_str, "comma-separated dataset fractions")
      ->capture_default_str();
  timing->add_option("--timing-epochs", timing_epochs, "epochs per fraction")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    std::filesystem::create_directories(out_dir);
    ConfigMap cm = detail::load_config(config_path, overrides);

    if (gen->parsed()) {
      SynthConfig sc = synth_from_config(cm);
      cm.finish();
      std::vector<HybridSequence> seqs = synthesize(sc);
      std::ostringstream tsv;
      serialize_dataset(seqs, tsv);
      detail::write_file(out_dir + "/data.tsv", tsv.str());
      detail::write_manifest(out_dir, "gen-data", sc.seed, config_snapshot(sc));
      std::size_t events = 0;
      for (const auto& s : seqs) events += s.events.size();
      std::cout << "wrote " << out_dir << "/data.tsv: " << seqs.size() << " sequences, " << events
                << " events, A:B ratio " << realized_interaction_ratio(seqs) << '\n';
    } else if (train->parsed()) {
      TrainConfig tc = TrainConfig::from_config(cm);
      cm.finish();
      Dataset ds = detail::load_dataset_with_sidecar(data_path, out_dir);
      DatasetSplit split =
          split_dataset(ds.sequences, tc.train_fraction, derive_seed(tc.seed, "split"));
      Trainer tr = Trainer::fresh(split, tc);
      std::ofstream trace(out_dir + "/trace.csv");
      if (!trace) throw DataError("cannot write " + out_dir + "/trace.csv");
      FitResult fit = tr.fit(split.train, &trace);
      save_checkpoint(tr.to_checkpoint(), out_dir + "/checkpoint.txt");
      detail::write_manifest(out_dir, "train", tc.seed, config_snapshot(tc));
      for (std::size_t e = 0; e < fit.epoch_joint.size(); ++e)
        std::cout << "epoch " << e << " joint " << fit.epoch_joint[e] << '\n';
      if (fit.stopped_early) std::cout << "early stop after " << fit.epochs_run << " epochs\n";
      std::cout << "wrote " << out_dir << "/checkpoint.txt\n";
    } else if (eval->parsed()) {
      TrainConfig tc = TrainConfig::from_config(cm);
      cm.finish();
      Dataset ds = detail::load_dataset_with_sidecar(data_path, out_dir);
      DatasetSplit split =
          split_dataset(ds.sequences, tc.train_fraction, derive_seed(tc.seed, "split"));
      Checkpoint ck = load_checkpoint(checkpoint_path);
      if (ck.params.sizes.m != ds.m || ck.params.sizes.n != ds.n || ck.params.sizes.p != ds.p)
        throw DataError("checkpoint sizes do not match dataset");
      if (ck.seed != tc.seed)
        push_warning("eval: checkpoint seed differs from config seed; using config split seed");
      Trainer tr(ck.params, tc);
      tr.restore(ck);
      EvalResult ev = tr.evaluate(split);
      detail::write_file(out_dir + "/report.csv", format_report_csv(ev.reports));
      detail::write_file(out_dir + "/report.txt", format_report_text(ev.reports));
      detail::write_manifest(out_dir, "eval", tc.seed, config_snapshot(tc));
      std::cout << format_report_text(ev.reports);
    } else if (gradcheck->parsed()) {
      if (!cm.has("embed_dim")) cm.set("embed_dim", "4");
      TrainConfig tc = TrainConfig::from_config(cm);
      cm.finish();
      Dataset toy = toy_dataset();
      GradCheckReport report = model_grad_check(toy.sequences, toy.m, toy.n, toy.p, tc);
      std::ostringstream os;
      report.print(os);
      detail::write_file(out_dir + "/gradcheck.txt", os.str());
      detail::write_manifest(out_dir, "gradcheck", tc.seed, config_snapshot(tc));
      std::cout << os.str();
      if (!report.pass) return 3;
    } else if (ablate->parsed()) {
      TrainConfig tc = TrainConfig::from_config(cm);
      cm.finish();
      Dataset ds = detail::load_dataset_with_sidecar(data_path, out_dir);
      DatasetSplit split =
          split_dataset(ds.sequences, tc.train_fraction, derive_seed(tc.seed, "split"));
      AblationResult res = run_ablation(split, tc, ablation_variants(),
                                        detail::parse_seed_list(seeds_str), &std::cout);
      detail::write_file(out_dir + "/ablation.csv", format_ablation_csv(res));
      detail::write_manifest(out_dir, "ablate", tc.seed, config_snapshot(tc));
      std::cout << "variant medians (NDCG@10):\n";
      for (const auto& row : res.rows)
        std::cout << "  " << row.variant << "  A=" << row.median_ndcg_a10
                  << "  B=" << row.median_ndcg_b10 << '\n';
    } else if (timing->parsed()) {
      TrainConfig tc = TrainConfig::from_config(cm);
      Dataset ds;
      if (data_path.empty()) {
        SynthConfig sc = synth_from_config(cm);
        cm.finish();
        ds = dataset_from_sequences(synthesize(sc));
      } else {
        cm.finish();
        ds = parse_dataset_file(data_path);
      }
      TimingResult res = timing_study(ds, tc, detail::parse_double_list(fractions_str, "--fractions"),
                                      timing_epochs, &std::cout);
      detail::write_file(out_dir + "/timing.csv", format_timing_csv(res));
      detail::write_manifest(out_dir, "timing", tc.seed, config_snapshot(tc));
      std::cout << "slope=" << res.slope << " intercept=" << res.intercept
                << " r_squared=" << res.r_squared << '\n';
    }
    for (const auto& w : drain_warnings()) std::cerr << "warning: " << w << '\n';
    return 0;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "contract error: " << e.what() << '\n';
    return 2;
  }
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.push_back("eagcl");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace eagcl
