#include "affdbn/harness.hpp"

#include "affdbn/random.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace affdbn {

std::vector<Label> labels_of(std::span<const VideoRecord> records) {
  std::vector<Label> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

Matrix feature_matrix(std::span<const VideoRecord> records, std::span<const std::size_t> rows,
                      const ModalitySet& modalities) {
  if (rows.empty()) throw std::invalid_argument("feature_matrix: no rows selected");
  Matrix out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& rec = records[rows[i]];
    const Vector v = early_fuse(rec.features, modalities);
    if (i == 0) out.resize(static_cast<Index>(rows.size()), v.size());
    if (v.size() != out.cols())
      throw std::invalid_argument("video '" + rec.video_id + "' has an inconsistent feature width");
    out.row(static_cast<Index>(i)) = v.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<FoldSplit> FoldPlan::splits(std::span<const VideoRecord> records) const {
  std::vector<FoldSplit> out;
  for (int r = 0; r < static_cast<int>(speakers.size()); ++r) {
    std::unordered_map<std::string, int> fold_of;
    for (int f = 0; f < static_cast<int>(speakers[r].size()); ++f)
      for (const auto& s : speakers[r][f]) fold_of[s] = f;
    for (int f = 0; f < static_cast<int>(speakers[r].size()); ++f) {
      FoldSplit split{r, f, {}, {}};
      for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = fold_of.find(records[i].speaker_id);
        if (it == fold_of.end())
          throw std::invalid_argument("speaker '" + records[i].speaker_id + "' is not part of the fold plan");
        (it->second == f ? split.test : split.train).push_back(i);
      }
      out.push_back(std::move(split));
    }
  }
  return out;
}

FoldPlan make_folds(std::span<const VideoRecord> records, int n_folds, int n_repeats, std::uint64_t seed) {
  if (n_folds < 2 || n_repeats < 1) throw std::invalid_argument("make_folds: need n_folds >= 2 and n_repeats >= 1");

  std::map<std::string, int> balance;  // speaker -> (#deceptive - #truthful)
  for (const auto& r : records) balance[r.speaker_id] += is_deceptive(r.label) ? 1 : -1;
  if (static_cast<int>(balance.size()) < n_folds)
    throw std::invalid_argument("make_folds: " + std::to_string(balance.size()) + " speakers cannot fill " +
                                std::to_string(n_folds) + " folds");

  FoldPlan plan{n_folds, n_repeats, seed, {}};
  for (int r = 0; r < n_repeats; ++r) {
    std::vector<std::string> order;
    for (const auto& [s, _] : balance) order.push_back(s);
    Rng rng(derive_seed(seed, "folds.repeat" + std::to_string(r)));
    rng.shuffle(order.begin(), order.end());
    std::stable_partition(order.begin(), order.end(), [&](const std::string& s) { return balance[s] >= 0; });

    std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(n_folds));
    std::vector<std::array<int, 2>> group_counts(static_cast<std::size_t>(n_folds), {0, 0});
    for (const auto& s : order) {
      const int group = balance[s] >= 0 ? 0 : 1;
      std::size_t best = 0;
      for (std::size_t f = 1; f < folds.size(); ++f) {
        const auto key = std::make_pair(folds[f].size(), group_counts[f][group]);
        const auto best_key = std::make_pair(folds[best].size(), group_counts[best][group]);
        if (key < best_key) best = f;
      }
      folds[best].push_back(s);
      ++group_counts[best][group];
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    plan.speakers.push_back(std::move(folds));
  }
  return plan;
}

// ---------------------------------------------------------------------------

MinMaxScaler minmax_fit(const Matrix& train) {
  if (train.rows() == 0) throw std::invalid_argument("minmax_fit: empty training matrix");
  MinMaxScaler s;
  s.min = train.colwise().minCoeff().transpose();
  s.range = train.colwise().maxCoeff().transpose() - s.min;
  return s;
}

Matrix minmax_apply(const Matrix& x, const MinMaxScaler& scaler) {
  if (x.cols() != scaler.width()) throw std::invalid_argument("minmax_apply: width mismatch");
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double range = scaler.range(j);
    if (range > 0.0)
      out.col(j) = ((x.col(j).array() - scaler.min(j)) / range).cwiseMax(0.0).cwiseMin(1.0);
    else
      out.col(j).setZero();
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Method m) {
  switch (m) {
    case Method::unimodal: return "unimodal";
    case Method::early_fusion: return "early_fusion";
    case Method::late_fusion: return "late_fusion";
    case Method::affect_aligned: return "affect_aligned";
    case Method::pca_baseline: return "pca_baseline";
    case Method::human_baseline: return "human_baseline";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::unimodal, Method::early_fusion, Method::late_fusion, Method::affect_aligned,
                   Method::pca_baseline, Method::human_baseline})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  train.validate();
  const auto fail = [&](const std::string& why) {
    throw std::invalid_argument(std::string(to_string(method)) + ": " + why);
  };
  for (const auto* set : {&modalities, &aligner})
    if (canonical(*set) != *set) fail("modality sets must be in canonical order");
  switch (method) {
    case Method::unimodal:
      if (modalities.size() != 1) fail("needs exactly one modality");
      architecture.validate();
      break;
    case Method::early_fusion:
      if (modalities.size() < 2) fail("needs at least two modalities");
      architecture.validate();
      break;
    case Method::late_fusion:
      if (modalities.size() < 2) fail("needs at least two modalities");
      architecture.validate();
      if (!architecture.stacked()) fail("needs a stacked architecture (single-RBM late fusion is undefined)");
      break;
    case Method::affect_aligned: {
      architecture.validate();
      if (aligner.empty() || modalities.empty()) fail("needs an affect aligner and an AV target");
      for (Modality m : aligner)
        if (m != Modality::arousal && m != Modality::valence) fail("aligner must be arousal and/or valence");
      for (Modality m : modalities)
        if (m != Modality::audio && m != Modality::visual) fail("target must be audio and/or visual");
      break;
    }
    case Method::pca_baseline:
      if (modalities.empty()) fail("needs at least one modality");
      if (pca_dims < 1) fail("PCA dimension must be positive");
      break;
    case Method::human_baseline:
      break;
  }
}

ModalitySet ExperimentConfig::used_modalities() const {
  ModalitySet all = modalities;
  all.insert(all.end(), aligner.begin(), aligner.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::string ExperimentConfig::modality_label() const {
  if (method == Method::human_baseline) return "-";
  if (method == Method::affect_aligned) return to_string(aligner) + ">" + to_string(modalities);
  return to_string(modalities);
}

std::string ExperimentConfig::architecture_label() const {
  switch (method) {
    case Method::human_baseline: return "-";
    case Method::pca_baseline: return std::to_string(pca_dims);
    default: return architecture.to_string();
  }
}

TrainedRepresentation fit_representation(const ExperimentConfig& config, std::span<const VideoRecord> records,
                                         std::span<const std::size_t> rows) {
  config.validate();
  TrainedRepresentation rep;
  rep.method = config.method;
  rep.inputs = config.modalities;
  if (config.method == Method::human_baseline) return rep;

  ModalityMatrices scaled;
  for (Modality m : config.used_modalities()) {
    const Matrix raw = feature_matrix(records, rows, {m});
    auto scaler = minmax_fit(raw);
    scaled.emplace(m, minmax_apply(raw, scaler));
    rep.scalers.emplace(m, std::move(scaler));
  }

  switch (config.method) {
    case Method::unimodal:
    case Method::early_fusion:
      rep.model = train_dbn(early_fuse(scaled, config.modalities), config.architecture, config.train);
      break;
    case Method::late_fusion: {
      ModalityMatrices inputs;
      for (Modality m : config.modalities) inputs.emplace(m, scaled.at(m));
      rep.model = train_late_fusion(inputs, config.architecture, config.train);
      break;
    }
    case Method::affect_aligned:
      rep.model = train_affect_aligned(early_fuse(scaled, config.modalities), early_fuse(scaled, config.aligner),
                                       config.architecture, config.train);
      // Only the AV stream is read at inference.
      for (Modality m : config.aligner) rep.scalers.erase(m);
      break;
    case Method::pca_baseline:
      rep.model = fit_pca(early_fuse(scaled, config.modalities), config.pca_dims);
      break;
    case Method::human_baseline:
      break;
  }
  return rep;
}

Matrix apply_representation(const TrainedRepresentation& rep, std::span<const VideoRecord> records,
                            std::span<const std::size_t> rows) {
  if (rep.method == Method::human_baseline) return Matrix(static_cast<Index>(rows.size()), 0);
  ModalityMatrices scaled;
  for (Modality m : rep.inputs) {
    auto it = rep.scalers.find(m);
    if (it == rep.scalers.end())
      throw std::invalid_argument("representation has no scaler for '" + std::string(to_string(m)) + "'");
    scaled.emplace(m, minmax_apply(feature_matrix(records, rows, {m}), it->second));
  }
  return std::visit(
      [&](const auto& model) -> Matrix {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, DbnModel>) return represent(early_fuse(scaled, rep.inputs), model);
        else if constexpr (std::is_same_v<T, LateFusionModel>) return represent_late(scaled, model);
        else if constexpr (std::is_same_v<T, AlignedDbnModel>)
          return represent_aligned(early_fuse(scaled, rep.inputs), model);
        else if constexpr (std::is_same_v<T, PcaModel>) return project(early_fuse(scaled, rep.inputs), model);
        else throw std::invalid_argument("representation has no model");
      },
      rep.model);
}

FoldResult run_fold(const ExperimentConfig& config, std::span<const VideoRecord> records, const FoldSplit& split) {
  FoldResult out;
  out.repeat = split.repeat;
  out.fold = split.fold;
  out.test_rows = split.test;
  if (split.test.empty() || split.train.empty()) throw std::invalid_argument("run_fold: empty train or test split");

  std::vector<Label> test_labels;
  for (std::size_t i : split.test) test_labels.push_back(records[i].label);

  std::vector<double> scores;
  if (config.method == Method::human_baseline) {
    scores.assign(split.test.size(), 1.0);
  } else {
    std::vector<Label> train_labels;
    for (std::size_t i : split.train) train_labels.push_back(records[i].label);
    const auto rep = fit_representation(config, records, split.train);
    const Matrix train_z = apply_representation(rep, records, split.train);
    const Matrix test_z = apply_representation(rep, records, split.test);
    GmmOptions gmm_options;
    gmm_options.seed = config.gmm_seed;
    const GmmModel gmm = orient_gmm(fit_gmm(train_z, gmm_options), train_z, train_labels);
    const Vector s = score_deceptive(test_z, gmm);
    scores.assign(s.data(), s.data() + s.size());
  }

  const MetricsReport m = evaluate_scores(scores, test_labels);
  out.auc = m.auc;
  out.accuracy = m.accuracy;
  out.precision = m.precision;
  out.scores = m.scores;
  out.correct = m.correct;
  return out;
}

std::optional<double> ExperimentResult::mean_auc() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& f : folds)
    if (f.auc) sum += *f.auc, ++n;
  if (n == 0) return std::nullopt;
  return sum / n;
}

double ExperimentResult::mean_accuracy() const {
  double sum = 0.0;
  for (const auto& f : folds) sum += f.accuracy;
  return folds.empty() ? 0.0 : sum / static_cast<double>(folds.size());
}

std::optional<double> ExperimentResult::mean_precision() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& f : folds)
    if (f.precision) sum += *f.precision, ++n;
  if (n == 0) return std::nullopt;
  return sum / n;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::span<const VideoRecord> records,
                                const FoldPlan& plan, const RunOptions& options) {
  config.validate();
  const auto splits = plan.splits(records);
  ExperimentResult result{config, plan.seed, std::vector<FoldResult>(splits.size())};

  unsigned threads = options.threads ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(splits.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < splits.size(); ++i) result.folds[i] = run_fold(config, records, splits[i]);
    return result;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(splits.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < splits.size(); i = next++) {
      try {
        result.folds[i] = run_fold(config, records, splits[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

McNemarResult compare_experiments(const ExperimentResult& a, const ExperimentResult& b) {
  if (a.folds.size() != b.folds.size()) throw std::invalid_argument("compare_experiments: different fold plans");
  std::vector<bool> ca, cb;
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    if (a.folds[i].test_rows != b.folds[i].test_rows)
      throw std::invalid_argument("compare_experiments: runs used different fold plans");
    ca.insert(ca.end(), a.folds[i].correct.begin(), a.folds[i].correct.end());
    cb.insert(cb.end(), b.folds[i].correct.begin(), b.folds[i].correct.end());
  }
  return mcnemar(ca, cb);
}

std::vector<std::pair<ModalitySet, ModalitySet>> aligned_pairs() {
  const std::vector<ModalitySet> aligners{{Modality::arousal}, {Modality::valence}, {Modality::arousal, Modality::valence}};
  const std::vector<ModalitySet> targets{{Modality::audio}, {Modality::visual}, {Modality::audio, Modality::visual}};
  std::vector<std::pair<ModalitySet, ModalitySet>> out;
  for (const auto& a : aligners)
    for (const auto& t : targets) out.emplace_back(a, t);
  return out;
}

std::vector<ExperimentConfig> paper_grid(const TrainConfig& train, std::uint64_t gmm_seed) {
  std::vector<ExperimentConfig> out;
  auto base = [&](Method m) {
    ExperimentConfig c;
    c.method = m;
    c.train = train;
    c.gmm_seed = gmm_seed;
    return c;
  };
  const auto archs = grid_architectures();
  const auto combos = multimodal_combinations();

  for (Modality m : kAllModalities)
    for (const auto& a : archs) {
      auto c = base(Method::unimodal);
      c.modalities = {m};
      c.architecture = a;
      out.push_back(c);
    }
  for (const auto& set : combos)
    for (const auto& a : archs) {
      auto c = base(Method::early_fusion);
      c.modalities = set;
      c.architecture = a;
      out.push_back(c);
    }
  for (const auto& set : combos)
    for (const auto& a : archs) {
      if (!a.stacked()) continue;
      auto c = base(Method::late_fusion);
      c.modalities = set;
      c.architecture = a;
      out.push_back(c);
    }
  for (const auto& [aligner, target] : aligned_pairs())
    for (const auto& a : archs) {
      auto c = base(Method::affect_aligned);
      c.aligner = aligner;
      c.modalities = target;
      c.architecture = a;
      out.push_back(c);
    }
  std::vector<ModalitySet> feature_sets;
  for (Modality m : kAllModalities) feature_sets.push_back({m});
  feature_sets.insert(feature_sets.end(), combos.begin(), combos.end());
  for (const auto& set : feature_sets)
    for (Index d : {2, 4}) {
      auto c = base(Method::pca_baseline);
      c.modalities = set;
      c.pca_dims = d;
      out.push_back(c);
    }
  out.push_back(base(Method::human_baseline));
  return out;
}

}  // namespace affdbn
