#pragma once

#include "affdbn/align.hpp"
#include "affdbn/cluster.hpp"
#include "affdbn/common.hpp"
#include "affdbn/dbn.hpp"
#include "affdbn/fusion.hpp"
#include "affdbn/timeseries.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace affdbn {

struct VideoRecord {
  std::string video_id;
  std::string speaker_id;
  Label label = Label::truthful;
  std::map<Modality, Vector> features;  // aggregated attribute vectors
};

std::vector<Label> labels_of(std::span<const VideoRecord> records);

/// Stacks the canonical concatenation of `modalities` for the given rows.
Matrix feature_matrix(std::span<const VideoRecord> records, std::span<const std::size_t> rows,
                      const ModalitySet& modalities);

// ---------------------------------------------------------------------------
// Speaker-disjoint folds

struct FoldSplit {
  int repeat = 0;
  int fold = 0;
  std::vector<std::size_t> train;  // record indices, ascending
  std::vector<std::size_t> test;
};

struct FoldPlan {
  int n_folds = 5;
  int n_repeats = 10;
  std::uint64_t seed = 0;
  // speakers[repeat][fold] -> speaker ids, sorted
  std::vector<std::vector<std::vector<std::string>>> speakers;

  /// Repeat-major list of n_repeats * n_folds train/test splits.
  std::vector<FoldSplit> splits(std::span<const VideoRecord> records) const;
};

/// Greedy label-balanced assignment of speakers to folds. Per repeat the
/// speakers are shuffled, then grouped by majority label (deceptive group
/// first, ties count as deceptive); each speaker goes to the fold with the
/// fewest speakers, then the fewest speakers of its group, then the lowest
/// index.
FoldPlan make_folds(std::span<const VideoRecord> records, int n_folds = 5, int n_repeats = 10,
                    std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Train-fold min-max scaling

struct MinMaxScaler {
  Vector min;
  Vector range;  // max - min; 0 marks a constant column

  Index width() const { return min.size(); }
  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

MinMaxScaler minmax_fit(const Matrix& train);
/// (x - min) / range clamped to [0, 1]; constant columns map to 0.
Matrix minmax_apply(const Matrix& x, const MinMaxScaler& scaler);

// ---------------------------------------------------------------------------
// Experiments

enum class Method { unimodal, early_fusion, late_fusion, affect_aligned, pca_baseline, human_baseline };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct ExperimentConfig {
  Method method = Method::unimodal;
  ModalitySet modalities;  // inputs; for affect_aligned the AV target
  ModalitySet aligner;     // affect_aligned only: arousal and/or valence
  Architecture architecture{{2}};
  Index pca_dims = 2;
  TrainConfig train;
  std::uint64_t gmm_seed = 1;

  void validate() const;
  /// Every modality the method reads (inputs plus aligner).
  ModalitySet used_modalities() const;
  /// "valence+visual", or "valence>audio+visual" for aligned runs.
  std::string modality_label() const;
  /// Architecture string, PCA dimension, or "-" for the human baseline.
  std::string architecture_label() const;
};

/// The representation side of one experiment, trained on one fold.
struct TrainedRepresentation {
  Method method = Method::unimodal;
  ModalitySet inputs;  // modalities read at inference time
  std::map<Modality, MinMaxScaler> scalers;
  std::variant<std::monostate, DbnModel, LateFusionModel, AlignedDbnModel, PcaModel> model;
};

/// Fits per-modality scalers on `rows`, then the representation model.
TrainedRepresentation fit_representation(const ExperimentConfig& config, std::span<const VideoRecord> records,
                                         std::span<const std::size_t> rows);

/// Scales with the stored scalers and maps rows to the representation space.
/// The human baseline has no representation and yields an N x 0 matrix.
Matrix apply_representation(const TrainedRepresentation& rep, std::span<const VideoRecord> records,
                            std::span<const std::size_t> rows);

struct FoldResult {
  int repeat = 0;
  int fold = 0;
  std::optional<double> auc;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::vector<std::size_t> test_rows;
  std::vector<double> scores;
  std::vector<bool> correct;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::uint64_t fold_seed = 0;
  std::vector<FoldResult> folds;  // (repeat, fold) order

  /// Mean of per-fold AUCs over folds where AUC is defined.
  std::optional<double> mean_auc() const;
  double mean_accuracy() const;
  /// Mean over folds where precision is defined.
  std::optional<double> mean_precision() const;
};

struct RunOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Runs one fold experiment end to end: scale, train representation, fit and
/// orient the GMM on the train rows, score the test rows.
FoldResult run_fold(const ExperimentConfig& config, std::span<const VideoRecord> records, const FoldSplit& split);

/// All fold experiments of the plan; results are ordered by (repeat, fold)
/// whatever the completion order.
ExperimentResult run_experiment(const ExperimentConfig& config, std::span<const VideoRecord> records,
                                const FoldPlan& plan, const RunOptions& options = {});

/// McNemar on pooled per-sample correctness of two runs over the same plan.
McNemarResult compare_experiments(const ExperimentResult& a, const ExperimentResult& b);

/// The full grid: 4 unimodal x 8, 11 early x 8, 11 late x 6, 9 aligned x 8
/// DBN configurations, 15 feature sets x {2, 4} PCA, and the human baseline.
std::vector<ExperimentConfig> paper_grid(const TrainConfig& train = {}, std::uint64_t gmm_seed = 1);

/// Affect aligners {arousal}, {valence}, {arousal, valence} crossed with AV
/// targets {audio}, {visual}, {audio, visual}.
std::vector<std::pair<ModalitySet, ModalitySet>> aligned_pairs();

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticOptions {
  int n_speakers = 20;
  int videos_per_speaker = 6;
  double separation = 3.0;
  std::uint64_t seed = 0;
  ModalitySet informative{Modality::valence, Modality::visual};
  std::map<Modality, Index> feature_counts{
      {Modality::arousal, 1}, {Modality::audio, 58}, {Modality::valence, 1}, {Modality::visual, 31}};
  Index min_frames = 100;
  Index max_frames = 1000;
  double fps = 30.0;
};

struct SyntheticVideo {
  std::string video_id;
  std::string speaker_id;
  Label label = Label::truthful;
  std::map<Modality, FrameStream> streams;
};

/// Frame-level synthetic videos. Each video has a latent vector made of a
/// class term (+/- separation / 2 along a fixed direction), a speaker offset,
/// and video noise. Every feature of a modality is an AR(1) series whose
/// level and log-amplitude are affine in the latent; uninformative
/// modalities see a latent without the class term. Labels alternate within a
/// speaker, so the classes are balanced when videos_per_speaker is even.
std::vector<SyntheticVideo> generate_synthetic_videos(const SyntheticOptions& options);

/// generate_synthetic_videos followed by temporal aggregation.
std::vector<VideoRecord> generate_synthetic(const SyntheticOptions& options);

VideoRecord aggregate_record(const SyntheticVideo& video);

}  // namespace affdbn
