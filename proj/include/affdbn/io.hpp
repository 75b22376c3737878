#pragma once

#include "affdbn/harness.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace affdbn {

/// Raised for malformed or unreadable input files; the message names the
/// file and, where it applies, the row and column.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Manifest and frame files
//
// Manifest: CSV with header
//   video_id,speaker_id,label,fps,modality,path,n_features
// one row per (video, modality). Paths are relative to the manifest's
// directory. Frame files hold a header row of feature names followed by one
// comma- or tab-separated numeric row per frame.

struct ManifestEntry {
  std::string video_id;
  std::string speaker_id;
  Label label = Label::truthful;
  double fps = 30.0;
  Modality modality = Modality::valence;
  std::filesystem::path path;
  Index n_features = 0;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);

/// Reads one frame file; `expected_features` < 0 skips the width check.
FrameStream read_frame_file(const std::filesystem::path& path, Modality modality, double fps,
                            Index expected_features = -1);
void write_frame_file(const std::filesystem::path& path, const FrameStream& stream);

struct FeatureTable {
  std::vector<VideoRecord> records;
  std::map<Modality, std::vector<std::string>> feature_names;  // per frame-level feature
};

/// Parses every frame file referenced by the manifest and aggregates it.
FeatureTable ingest(const std::filesystem::path& manifest);

/// Wide CSV: video_id,speaker_id,label then one column per attribute named
/// modality/feature/attribute; values in round-trip precision.
void write_feature_table(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table(std::istream& in, const std::string& source = "feature table");
void save_feature_table(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable load_feature_table(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Model files
//
// Binary, little-endian: magic "AFFDBNMF", u32 version, u8 kind, the input
// modalities and per-modality scalers, the model payload, then an "END!"
// marker. Doubles are stored bit-exactly.

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelKind : std::uint8_t { dbn = 1, late_fusion = 2, aligned = 3, pca = 4, gmm = 5 };

std::string_view to_string(ModelKind kind);

using Model = std::variant<DbnModel, LateFusionModel, AlignedDbnModel, PcaModel, GmmModel>;

struct ModelFile {
  Model model;
  ModalitySet inputs;
  std::map<Modality, MinMaxScaler> scalers;

  ModelKind kind() const;
};

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

void write_model(std::ostream& out, const ModelFile& file);
ModelFile read_model(std::istream& in, const std::string& source = "model");

/// Converts between a trained representation and its file form. The human
/// baseline has no model and cannot be stored.
ModelFile to_model_file(const TrainedRepresentation& rep);
TrainedRepresentation to_representation(const ModelFile& file);

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
  std::string record = "fold";  // "fold" or "aggregate"
  std::string method;
  std::string modalities;
  std::string architecture;
  std::optional<int> repeat;
  std::optional<int> fold;
  std::optional<double> auc;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::uint64_t dbn_seed = 0;
  std::uint64_t gmm_seed = 0;
  std::uint64_t fold_seed = 0;
  std::string timestamp;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// One row per fold experiment followed by the aggregate row.
std::vector<ResultRow> result_rows(const ExperimentResult& result, const std::string& timestamp);

void write_results(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results(std::istream& in, const std::string& source = "results");

/// Per-sample predictions of one run: repeat,fold,video_id,label,score,correct.
void write_predictions(std::ostream& out, const ExperimentResult& result, std::span<const VideoRecord> records);

struct PredictionRow {
  int repeat = 0;
  int fold = 0;
  std::string video_id;
  Label label = Label::truthful;
  double score = 0.0;
  bool correct = false;
};
std::vector<PredictionRow> read_predictions(std::istream& in, const std::string& source = "predictions");

/// McNemar over two prediction files produced on the same fold plan.
McNemarResult compare_predictions(const std::vector<PredictionRow>& a, const std::vector<PredictionRow>& b);

enum class ReportFormat { csv, grid };

/// csv: header plus one aggregate row per configuration (fold rows are
/// averaged when a configuration has no aggregate row).
/// grid: configurations x architecture columns of mean AUC, with the best
/// cell of every column marked '*'.
std::string render_report(const std::vector<ResultRow>& rows, ReportFormat format);

/// ISO-8601 UTC; honours SOURCE_DATE_EPOCH when set.
std::string utc_timestamp();

}  // namespace affdbn
