// affdbn command-line front end.

#include "affdbn/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace affdbn;

namespace {

struct CommonFlags {
  std::uint64_t dbn_seed = 0;
  std::uint64_t gmm_seed = 1;
  std::uint64_t fold_seed = 0;
  int epochs = TrainConfig{}.epochs;
  double lr = TrainConfig{}.learning_rate;
  int cd_k = TrainConfig{}.cd_k;
  int batch_size = TrainConfig{}.batch_size;
  int folds = 5;
  int repeats = 10;
  unsigned threads = 0;
  std::string timestamp;

  TrainConfig train() const {
    TrainConfig c;
    c.learning_rate = lr;
    c.cd_k = cd_k;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.seed = dbn_seed;
    c.validate();
    return c;
  }
  std::string stamp() const { return timestamp.empty() ? utc_timestamp() : timestamp; }
};

void add_training_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--dbn-seed", f.dbn_seed, "Seed for representation training")->capture_default_str();
  app->add_option("--gmm-seed", f.gmm_seed, "Seed for GMM initialisation")->capture_default_str();
  app->add_option("--epochs", f.epochs, "RBM training epochs")->capture_default_str();
  app->add_option("--lr", f.lr, "RBM learning rate")->capture_default_str();
  app->add_option("--cd-k", f.cd_k, "Gibbs steps per CD update")->capture_default_str();
  app->add_option("--batch-size", f.batch_size, "Mini-batch size")->capture_default_str();
}

void add_protocol_flags(CLI::App* app, CommonFlags& f) {
  add_training_flags(app, f);
  app->add_option("--fold-seed", f.fold_seed, "Seed for the fold plan")->capture_default_str();
  app->add_option("--folds", f.folds, "Folds per repeat")->capture_default_str();
  app->add_option("--repeats", f.repeats, "Repeats of the fold plan")->capture_default_str();
  app->add_option("--threads", f.threads, "Worker threads (0: all cores)")->capture_default_str();
  app->add_option("--timestamp", f.timestamp, "Timestamp written to result rows (default: now, UTC)");
}

struct ConfigFlags {
  std::string method = "unimodal";
  std::string modalities;
  std::string aligner;
  std::string arch = "2";
  Index pca_dims = 2;
};

void add_config_flags(CLI::App* app, ConfigFlags& c) {
  app->add_option("--method", c.method,
                  "unimodal|early_fusion|late_fusion|affect_aligned|pca_baseline|human_baseline")
      ->capture_default_str();
  app->add_option("--modalities", c.modalities, "Input modalities, e.g. valence+visual");
  app->add_option("--aligner", c.aligner, "Affect modalities for affect_aligned, e.g. arousal+valence");
  app->add_option("--arch", c.arch, "Architecture, e.g. 512-256-2")->capture_default_str();
  app->add_option("--pca-dims", c.pca_dims, "Components for pca_baseline")->capture_default_str();
}

ExperimentConfig make_config(const ConfigFlags& c, const CommonFlags& f) {
  ExperimentConfig config;
  config.method = parse_method(c.method);
  if (!c.modalities.empty()) config.modalities = parse_modality_set(c.modalities);
  if (!c.aligner.empty()) config.aligner = parse_modality_set(c.aligner);
  if (config.method != Method::pca_baseline && config.method != Method::human_baseline)
    config.architecture = Architecture::parse(c.arch);
  config.pca_dims = c.pca_dims;
  config.train = f.train();
  config.gmm_seed = f.gmm_seed;
  config.validate();
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << text;
}

std::vector<ResultRow> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return read_results(in, path);
}

std::vector<PredictionRow> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return read_predictions(in, path);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

struct RunOutput {
  std::vector<ResultRow> rows;
  std::string predictions;
};

RunOutput run_configs(const std::vector<ExperimentConfig>& configs, const FeatureTable& table,
                      const CommonFlags& f, bool want_predictions, bool progress) {
  const auto plan = make_folds(table.records, f.folds, f.repeats, f.fold_seed);
  const std::string stamp = f.stamp();
  RunOutput out;
  std::ostringstream predictions;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (progress)
      std::cerr << "[" << i + 1 << "/" << configs.size() << "] " << to_string(configs[i].method) << ' '
                << configs[i].modality_label() << ' ' << configs[i].architecture_label() << '\n';
    const auto result = run_experiment(configs[i], table.records, plan, {f.threads});
    auto rows = result_rows(result, stamp);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    if (want_predictions) write_predictions(predictions, result, table.records);
  }
  out.predictions = predictions.str();
  return out;
}

void emit_results(const RunOutput& run, const std::string& out_path, const std::string& predictions_path) {
  std::ostringstream text;
  write_results(text, run.rows);
  write_text(out_path, text.str());
  if (!predictions_path.empty()) write_text(predictions_path, run.predictions);
  for (const auto& r : run.rows)
    if (r.record == "aggregate")
      std::cerr << r.method << ' ' << r.modalities << ' ' << r.architecture
                << "  auc=" << (r.auc ? std::to_string(*r.auc) : std::string("n/a"))
                << " accuracy=" << r.accuracy << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised deception detection from affect and audio-visual features"};
  app.require_subcommand(1);
  CommonFlags flags;
  ConfigFlags cfg;

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset of frame files plus a manifest");
  SyntheticOptions synth_opts;
  std::string synth_out;
  std::string synth_informative = "valence+visual";
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--speakers", synth_opts.n_speakers)->capture_default_str();
  synth->add_option("--videos", synth_opts.videos_per_speaker, "Videos per speaker")->capture_default_str();
  synth->add_option("--separation", synth_opts.separation)->capture_default_str();
  synth->add_option("--seed", synth_opts.seed)->capture_default_str();
  synth->add_option("--informative", synth_informative, "Modalities carrying class signal")->capture_default_str();
  synth->add_option("--min-frames", synth_opts.min_frames)->capture_default_str();
  synth->add_option("--max-frames", synth_opts.max_frames)->capture_default_str();

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Aggregate frame files listed in a manifest into a feature table");
  std::string manifest, features_out;
  ingest_cmd->add_option("--manifest", manifest)->required();
  ingest_cmd->add_option("--out", features_out, "Feature table CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a representation on every row and save it");
  std::string features, model_out, gmm_out;
  train->add_option("--features", features)->required();
  train->add_option("--out", model_out, "Model file")->required();
  train->add_option("--gmm-out", gmm_out, "Also fit, orient and save the GMM on the representations");
  add_config_flags(train, cfg);
  add_training_flags(train, flags);

  // represent
  auto* represent_cmd = app.add_subcommand("represent", "Map feature rows through a saved model");
  std::string model_in, represent_out;
  represent_cmd->add_option("--features", features)->required();
  represent_cmd->add_option("--model", model_in)->required();
  represent_cmd->add_option("--out", represent_out, "CSV output (default: stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate one configuration");
  std::string results_out, predictions_out;
  evaluate->add_option("--features", features)->required();
  evaluate->add_option("--out", results_out, "Results CSV (default: stdout)");
  evaluate->add_option("--predictions", predictions_out, "Per-sample predictions CSV");
  add_config_flags(evaluate, cfg);
  add_protocol_flags(evaluate, flags);

  // grid
  auto* grid = app.add_subcommand("grid", "Cross-validate the experiment grid or a subset of it");
  std::vector<std::string> grid_archs, grid_methods, grid_sets;
  bool quiet = false;
  grid->add_option("--features", features)->required();
  grid->add_option("--out", results_out, "Results CSV (default: stdout)");
  grid->add_option("--predictions", predictions_out, "Per-sample predictions CSV");
  grid->add_option("--archs", grid_archs, "Keep only these architectures / PCA dims")->delimiter(',');
  grid->add_option("--methods", grid_methods, "Keep only these methods")->delimiter(',');
  grid->add_option("--set", grid_sets, "Keep only these modality labels (repeatable)");
  grid->add_flag("--quiet", quiet, "No progress output");
  add_protocol_flags(grid, flags);

  // report
  auto* report = app.add_subcommand("report", "Render a results table, or compare two prediction files");
  std::string results_in, report_format = "grid", report_out;
  std::vector<std::string> compare;
  report->add_option("--results", results_in);
  report->add_option("--format", report_format, "csv|grid")->capture_default_str();
  report->add_option("--out", report_out, "Output file (default: stdout)");
  report->add_option("--compare", compare, "Two prediction files for McNemar's test")->expected(2);

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Cross-validate the human or PCA baseline");
  std::string baseline_kind = "human";
  baseline->add_option("--kind", baseline_kind, "human|pca")->capture_default_str();
  baseline->add_option("--features", features)->required();
  baseline->add_option("--modalities", cfg.modalities, "PCA input modalities");
  baseline->add_option("--dims", cfg.pca_dims, "PCA components")->capture_default_str();
  baseline->add_option("--out", results_out, "Results CSV (default: stdout)");
  baseline->add_option("--predictions", predictions_out, "Per-sample predictions CSV");
  add_protocol_flags(baseline, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      synth_opts.informative = synth_informative.empty() ? ModalitySet{} : parse_modality_set(synth_informative);
      const fs::path dir(synth_out);
      fs::create_directories(dir / "frames");
      std::vector<ManifestEntry> entries;
      for (const auto& video : generate_synthetic_videos(synth_opts)) {
        for (const auto& [m, stream] : video.streams) {
          const fs::path rel = fs::path("frames") / (video.video_id + "_" + std::string(to_string(m)) + ".csv");
          write_frame_file(dir / rel, stream);
          entries.push_back({video.video_id, video.speaker_id, video.label, stream.fps, m, rel, stream.features()});
        }
      }
      write_manifest(dir / "manifest.csv", entries);
      std::cerr << "wrote " << entries.size() << " frame files and " << (dir / "manifest.csv").string() << '\n';
    } else if (*ingest_cmd) {
      const auto table = ingest(manifest);
      save_feature_table(features_out, table);
      std::cerr << "aggregated " << table.records.size() << " videos into " << features_out << '\n';
    } else if (*train) {
      const auto config = make_config(cfg, flags);
      if (config.method == Method::human_baseline) throw std::invalid_argument("the human baseline has no model");
      const auto table = load_feature_table(features);
      const auto rows = all_rows(table.records.size());
      const auto rep = fit_representation(config, table.records, rows);
      save_model(model_out, to_model_file(rep));
      if (!gmm_out.empty()) {
        const Matrix z = apply_representation(rep, table.records, rows);
        GmmOptions gopt;
        gopt.seed = config.gmm_seed;
        const auto labels = labels_of(table.records);
        const auto gmm = orient_gmm(fit_gmm(z, gopt), z, labels);
        save_model(gmm_out, ModelFile{gmm, rep.inputs, {}});
      }
      std::cerr << "saved " << model_out << '\n';
    } else if (*represent_cmd) {
      const auto file = load_model(model_in);
      const auto table = load_feature_table(features);
      const auto rep = to_representation(file);
      const Matrix z = apply_representation(rep, table.records, all_rows(table.records.size()));
      std::ostringstream out;
      out << "video_id";
      for (Index j = 0; j < z.cols(); ++j) out << ",z" << j;
      out << '\n';
      char buf[40];
      for (Index i = 0; i < z.rows(); ++i) {
        out << table.records[static_cast<std::size_t>(i)].video_id;
        for (Index j = 0; j < z.cols(); ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", z(i, j));
          out << ',' << buf;
        }
        out << '\n';
      }
      write_text(represent_out, out.str());
    } else if (*evaluate) {
      const auto config = make_config(cfg, flags);
      const auto table = load_feature_table(features);
      emit_results(run_configs({config}, table, flags, !predictions_out.empty(), false), results_out,
                   predictions_out);
    } else if (*grid) {
      std::vector<ExperimentConfig> configs;
      for (const auto& m : grid_methods) parse_method(m);  // reject typos early
      for (const auto& a : grid_archs) Architecture::parse(a);
      const auto grid_all = paper_grid(flags.train(), flags.gmm_seed);
      auto require_known = [&](const std::vector<std::string>& filter, const char* what, auto field) {
        for (const auto& v : filter)
          if (std::none_of(grid_all.begin(), grid_all.end(), [&](const auto& c) { return field(c) == v; }))
            throw std::invalid_argument(std::string("no grid configuration has ") + what + " '" + v + "'");
      };
      require_known(grid_archs, "architecture", [](const ExperimentConfig& c) { return c.architecture_label(); });
      require_known(grid_sets, "modality set", [](const ExperimentConfig& c) { return c.modality_label(); });
      for (auto c : grid_all) {
        auto keep = [](const std::vector<std::string>& filter, const std::string& value) {
          return filter.empty() || std::find(filter.begin(), filter.end(), value) != filter.end();
        };
        if (!keep(grid_methods, std::string(to_string(c.method)))) continue;
        if (!keep(grid_sets, c.modality_label())) continue;
        if (c.method != Method::human_baseline && !keep(grid_archs, c.architecture_label())) continue;
        configs.push_back(std::move(c));
      }
      if (configs.empty()) throw std::invalid_argument("the filters select no configuration");
      const auto table = load_feature_table(features);
      emit_results(run_configs(configs, table, flags, !predictions_out.empty(), !quiet), results_out,
                   predictions_out);
    } else if (*report) {
      if (!compare.empty()) {
        const auto r = compare_predictions(load_predictions(compare[0]), load_predictions(compare[1]));
        std::ostringstream out;
        out << "b,c,chi2,p_value\n" << r.b << ',' << r.c << ',' << r.chi2 << ',' << r.p_value << '\n';
        write_text(report_out, out.str());
      } else {
        if (results_in.empty()) throw std::invalid_argument("report needs --results or --compare");
        ReportFormat format;
        if (report_format == "csv")
          format = ReportFormat::csv;
        else if (report_format == "grid")
          format = ReportFormat::grid;
        else
          throw std::invalid_argument("unknown report format '" + report_format + "'");
        write_text(report_out, render_report(load_results(results_in), format));
      }
    } else if (*baseline) {
      if (baseline_kind == "human")
        cfg.method = "human_baseline";
      else if (baseline_kind == "pca")
        cfg.method = "pca_baseline";
      else
        throw std::invalid_argument("unknown baseline '" + baseline_kind + "'");
      const auto config = make_config(cfg, flags);
      const auto table = load_feature_table(features);
      emit_results(run_configs({config}, table, flags, !predictions_out.empty(), false), results_out,
                   predictions_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
