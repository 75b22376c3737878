#include "affdbn/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace affdbn {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(delim, start);
    out.push_back(trim(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return !text.empty() && ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return !text.empty() && ec == std::errc{} && ptr == text.data() + text.size();
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

void require_plain_field(const std::string& value, const char* what) {
  if (value.empty() || value.find_first_of(",\t\r\n") != std::string::npos)
    throw std::invalid_argument(std::string(what) + " '" + value + "' must be non-empty and free of separators");
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  return out;
}

char detect_delimiter(const std::string& header) { return header.find('\t') != std::string::npos ? '\t' : ','; }

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  auto in = open_in(manifest);
  const std::string where = manifest.string();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(where + ": empty manifest");
  const std::vector<std::string> expected{"video_id", "speaker_id", "label", "fps", "modality", "path", "n_features"};
  if (split(line, ',') != expected)
    throw FormatError(where + ": header must be video_id,speaker_id,label,fps,modality,path,n_features");

  const fs::path base = manifest.parent_path();
  std::vector<ManifestEntry> out;
  std::set<std::pair<std::string, Modality>> seen;
  std::map<std::string, const ManifestEntry*> first_of_video;
  std::map<Modality, Index> width_of;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::string at = where + " row " + std::to_string(row);
    const auto cells = split(line, ',');
    if (cells.size() != expected.size())
      throw FormatError(at + ": expected 7 columns, found " + std::to_string(cells.size()));
    ManifestEntry e;
    e.video_id = cells[0];
    e.speaker_id = cells[1];
    if (e.video_id.empty() || e.speaker_id.empty()) throw FormatError(at + ": empty video_id or speaker_id");
    try {
      e.label = parse_label(cells[2]);
      e.modality = parse_modality(cells[4]);
    } catch (const std::invalid_argument& err) {
      throw FormatError(at + ": " + err.what());
    }
    if (!parse_double(cells[3], e.fps) || !(e.fps > 0.0)) throw FormatError(at + ": fps must be a positive number");
    if (cells[5].empty()) throw FormatError(at + ": empty path");
    e.path = base / cells[5];
    if (!parse_int(cells[6], e.n_features) || e.n_features < 1)
      throw FormatError(at + ": n_features must be a positive integer");

    if (!seen.emplace(e.video_id, e.modality).second)
      throw FormatError(at + ": duplicate modality '" + std::string(to_string(e.modality)) + "' for video '" +
                        e.video_id + "'");
    auto [wit, new_width] = width_of.emplace(e.modality, e.n_features);
    if (!new_width && wit->second != e.n_features)
      throw FormatError(at + ": n_features " + std::to_string(e.n_features) + " for modality '" +
                        std::string(to_string(e.modality)) + "' differs from earlier rows (" +
                        std::to_string(wit->second) + ")");
    out.push_back(std::move(e));
  }
  for (const auto& e : out) {
    auto [it, inserted] = first_of_video.emplace(e.video_id, &e);
    if (!inserted && (it->second->speaker_id != e.speaker_id || it->second->label != e.label ||
                      it->second->fps != e.fps))
      throw FormatError(where + ": video '" + e.video_id + "' has conflicting speaker, label or fps");
  }
  if (out.empty()) throw FormatError(where + ": manifest has no rows");
  return out;
}

void write_manifest(const fs::path& manifest, const std::vector<ManifestEntry>& entries) {
  auto out = open_out(manifest);
  out << "video_id,speaker_id,label,fps,modality,path,n_features\n";
  const fs::path base = manifest.parent_path();
  for (const auto& e : entries) {
    require_plain_field(e.video_id, "video id");
    require_plain_field(e.speaker_id, "speaker id");
    const fs::path rel = e.path.is_absolute() ? e.path.lexically_relative(fs::absolute(base)) : e.path;
    out << e.video_id << ',' << e.speaker_id << ',' << to_string(e.label) << ',' << format_double(e.fps) << ','
        << to_string(e.modality) << ',' << rel.generic_string() << ',' << e.n_features << '\n';
  }
}

FrameStream read_frame_file(const fs::path& path, Modality modality, double fps, Index expected_features) {
  auto in = open_in(path);
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw FormatError(where + ": missing header row");
  const char delim = detect_delimiter(line);
  FrameStream stream;
  stream.modality = modality;
  stream.fps = fps;
  stream.feature_names = split(line, delim);
  const auto width = static_cast<Index>(stream.feature_names.size());
  if (expected_features >= 0 && width != expected_features)
    throw FormatError(where + ": header has " + std::to_string(width) + " columns, manifest declares " +
                      std::to_string(expected_features));

  std::vector<double> values;
  Index frames = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++frames;
    const auto cells = split(line, delim);
    if (static_cast<Index>(cells.size()) != width)
      throw FormatError(where + ": row " + std::to_string(frames) + " (line " + std::to_string(line_no) + ") has " +
                        std::to_string(cells.size()) + " columns, expected " + std::to_string(width));
    for (Index j = 0; j < width; ++j) {
      double x = 0.0;
      if (!parse_double(cells[static_cast<std::size_t>(j)], x))
        throw FormatError(where + ": row " + std::to_string(frames) + " (line " + std::to_string(line_no) +
                          "), column " + std::to_string(j + 1) + " ('" + stream.feature_names[j] +
                          "'): not a finite number: '" + cells[static_cast<std::size_t>(j)] + "'");
      values.push_back(x);
    }
  }
  if (frames == 0) throw FormatError(where + ": no frame rows");
  stream.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), frames, width);
  return stream;
}

void write_frame_file(const fs::path& path, const FrameStream& stream) {
  auto out = open_out(path);
  for (Index j = 0; j < stream.features(); ++j) {
    if (j) out << ',';
    out << (stream.feature_names.empty() ? "f" + std::to_string(j) : stream.feature_names[j]);
  }
  out << '\n';
  for (Index t = 0; t < stream.frames(); ++t) {
    for (Index j = 0; j < stream.features(); ++j) {
      if (j) out << ',';
      out << format_double(stream.values(t, j));
    }
    out << '\n';
  }
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

FeatureTable ingest(const fs::path& manifest) {
  const auto entries = read_manifest(manifest);
  FeatureTable table;
  std::map<std::string, std::size_t> index_of;
  for (const auto& e : entries) {
    auto [it, inserted] = index_of.emplace(e.video_id, table.records.size());
    if (inserted) table.records.push_back({e.video_id, e.speaker_id, e.label, {}});
    FrameStream stream = read_frame_file(e.path, e.modality, e.fps, e.n_features);
    stream.video_id = e.video_id;
    try {
      table.records[it->second].features.emplace(e.modality, aggregate_video(stream).values);
    } catch (const std::invalid_argument& err) {
      throw FormatError(e.path.string() + ": " + err.what());
    }
    auto& names = table.feature_names[e.modality];
    if (names.empty()) names = stream.feature_names;
  }
  // Every video must carry the same modalities.
  const auto& first = table.records.front();
  for (const auto& r : table.records) {
    if (r.features.size() != first.features.size() ||
        !std::equal(r.features.begin(), r.features.end(), first.features.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }))
      throw FormatError(manifest.string() + ": video '" + r.video_id + "' does not list the same modalities as '" +
                        first.video_id + "'");
  }
  return table;
}

// ---------------------------------------------------------------------------
// Feature table

void write_feature_table(std::ostream& out, const FeatureTable& table) {
  if (table.records.empty()) throw std::invalid_argument("write_feature_table: no records");
  const auto& first = table.records.front();
  out << "video_id,speaker_id,label";
  for (const auto& [m, v] : first.features) {
    const Index features = v.size() / kAttributesPerFeature;
    const auto names_it = table.feature_names.find(m);
    for (Index j = 0; j < features; ++j) {
      std::string name = "f" + std::to_string(j);
      if (names_it != table.feature_names.end() && static_cast<Index>(names_it->second.size()) == features)
        name = names_it->second[static_cast<std::size_t>(j)];
      for (auto attr : kAttributeNames) out << ',' << to_string(m) << '/' << name << '/' << attr;
    }
  }
  out << '\n';
  for (const auto& r : table.records) {
    require_plain_field(r.video_id, "video id");
    require_plain_field(r.speaker_id, "speaker id");
    out << r.video_id << ',' << r.speaker_id << ',' << to_string(r.label);
    for (const auto& [m, v] : first.features) {
      auto it = r.features.find(m);
      if (it == r.features.end() || it->second.size() != v.size())
        throw std::invalid_argument("write_feature_table: video '" + r.video_id + "' has inconsistent modalities");
      for (Index k = 0; k < it->second.size(); ++k) out << ',' << format_double(it->second(k));
    }
    out << '\n';
  }
}

FeatureTable read_feature_table(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source + ": empty feature table");
  const auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "video_id" || header[1] != "speaker_id" || header[2] != "label")
    throw FormatError(source + ": header must start with video_id,speaker_id,label");

  // Column blocks per modality, in header order.
  struct Block {
    Modality modality;
    std::size_t begin, end;
  };
  std::vector<Block> blocks;
  FeatureTable table;
  for (std::size_t c = 3; c < header.size(); ++c) {
    const auto parts = split(header[c], '/');
    if (parts.size() != 3) throw FormatError(source + ": column " + std::to_string(c + 1) + " is not modality/feature/attribute");
    Modality m;
    try {
      m = parse_modality(parts[0]);
    } catch (const std::invalid_argument& e) {
      throw FormatError(source + ": column " + std::to_string(c + 1) + ": " + e.what());
    }
    if (blocks.empty() || blocks.back().modality != m) {
      if (table.feature_names.count(m)) throw FormatError(source + ": modality '" + parts[0] + "' columns are not contiguous");
      blocks.push_back({m, c, c});
      table.feature_names[m];
    }
    blocks.back().end = c + 1;
    const std::size_t attr = (c - blocks.back().begin) % kAttributesPerFeature;
    if (parts[2] != kAttributeNames[attr])
      throw FormatError(source + ": column " + std::to_string(c + 1) + " should be attribute '" +
                        std::string(kAttributeNames[attr]) + "'");
    if (attr == 0) table.feature_names[m].push_back(parts[1]);
  }
  for (const auto& b : blocks)
    if ((b.end - b.begin) % kAttributesPerFeature != 0)
      throw FormatError(source + ": modality '" + std::string(to_string(b.modality)) +
                        "' column count is not a multiple of 17");

  std::set<std::string> ids;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string at = source + " row " + std::to_string(row);
    if (cells.size() != header.size())
      throw FormatError(at + ": expected " + std::to_string(header.size()) + " columns, found " +
                        std::to_string(cells.size()));
    VideoRecord r;
    r.video_id = cells[0];
    r.speaker_id = cells[1];
    if (!ids.insert(r.video_id).second) throw FormatError(at + ": duplicate video_id '" + r.video_id + "'");
    try {
      r.label = parse_label(cells[2]);
    } catch (const std::invalid_argument& e) {
      throw FormatError(at + ": " + e.what());
    }
    for (const auto& b : blocks) {
      Vector v(static_cast<Index>(b.end - b.begin));
      for (std::size_t c = b.begin; c < b.end; ++c)
        if (!parse_double(cells[c], v(static_cast<Index>(c - b.begin))))
          throw FormatError(at + ", column " + std::to_string(c + 1) + ": not a finite number: '" + cells[c] + "'");
      r.features.emplace(b.modality, std::move(v));
    }
    table.records.push_back(std::move(r));
  }
  if (table.records.empty()) throw FormatError(source + ": no data rows");
  return table;
}

void save_feature_table(const fs::path& path, const FeatureTable& table) {
  auto out = open_out(path);
  write_feature_table(out, table);
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

FeatureTable load_feature_table(const fs::path& path) {
  auto in = open_in(path);
  return read_feature_table(in, path.string());
}

// ---------------------------------------------------------------------------
// Model files

namespace {

constexpr char kMagic[8] = {'A', 'F', 'F', 'D', 'B', 'N', 'M', 'F'};
constexpr char kEnd[4] = {'E', 'N', 'D', '!'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t x) { bytes(reinterpret_cast<const char*>(&x), 1); }
  void u32(std::uint32_t x) { le(x, 4); }
  void u64(std::uint64_t x) { le(x, 8); }
  void i32(std::int32_t x) { u32(static_cast<std::uint32_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }

  void vector(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index k = 0; k < m.size(); ++k) f64(m.data()[k]);
  }
  void modalities(const ModalitySet& set) {
    u32(static_cast<std::uint32_t>(set.size()));
    for (Modality m : set) u8(static_cast<std::uint8_t>(m));
  }
  void architecture(const Architecture& a) {
    u32(static_cast<std::uint32_t>(a.layer_sizes.size()));
    for (Index s : a.layer_sizes) u64(static_cast<std::uint64_t>(s));
  }
  void config(const TrainConfig& c) {
    f64(c.learning_rate);
    i32(c.cd_k);
    i32(c.epochs);
    i32(c.batch_size);
    u64(c.seed);
  }
  void rbm(const RbmParams<double>& p) {
    matrix(p.weights);
    vector(p.visible_bias);
    vector(p.hidden_bias);
  }
  void dbn(const DbnModel& m) {
    architecture(m.architecture);
    config(m.config);
    u32(static_cast<std::uint32_t>(m.layers.size()));
    for (const auto& l : m.layers) rbm(l);
  }

 private:
  void le(std::uint64_t x, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    bytes(buf, static_cast<std::size_t>(n));
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError(source_ + ": " + why + " (at byte " + std::to_string(pos_) + ")");
  }

  const char* take(std::size_t n) {
    if (data_.size() - pos_ < n) fail("file is truncated");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint8_t u8() { return static_cast<std::uint8_t>(*take(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  Index count(std::uint64_t element_bytes) {
    const std::uint64_t n = u64();
    if (element_bytes > 0 && n > remaining() / element_bytes) fail("file is truncated");
    return static_cast<Index>(n);
  }
  Vector vector() {
    const Index n = count(8);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = f64();
    return v;
  }
  Matrix matrix() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (cols != 0 && rows > remaining() / 8 / cols) fail("file is truncated");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = f64();
    return m;
  }
  Modality modality() {
    const auto raw = u8();
    if (raw > static_cast<std::uint8_t>(Modality::visual)) fail("invalid modality code");
    return static_cast<Modality>(raw);
  }
  ModalitySet modalities() {
    const auto n = u32();
    if (n > kAllModalities.size()) fail("invalid modality count");
    ModalitySet set;
    for (std::uint32_t i = 0; i < n; ++i) set.push_back(modality());
    return set;
  }
  Architecture architecture() {
    const auto n = u32();
    if (n == 0 || n > remaining() / 8) fail("invalid architecture");
    Architecture a;
    for (std::uint32_t i = 0; i < n; ++i) a.layer_sizes.push_back(static_cast<Index>(u64()));
    return a;
  }
  TrainConfig config() {
    TrainConfig c;
    c.learning_rate = f64();
    c.cd_k = i32();
    c.epochs = i32();
    c.batch_size = i32();
    c.seed = u64();
    return c;
  }
  RbmParams<double> rbm() {
    RbmParams<double> p;
    p.weights = matrix();
    p.visible_bias = vector();
    p.hidden_bias = vector();
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    return p;
  }
  DbnModel dbn() {
    DbnModel m;
    m.architecture = architecture();
    m.config = config();
    const auto n = u32();
    if (n != m.architecture.layer_sizes.size()) fail("layer count does not match the architecture");
    for (std::uint32_t i = 0; i < n; ++i) m.layers.push_back(rbm());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      if (m.layers[i].n_hidden() != m.architecture.layer_sizes[i]) fail("layer width does not match the architecture");
      if (i > 0 && m.layers[i].n_visible() != m.layers[i - 1].n_hidden()) fail("consecutive layers do not chain");
    }
    return m;
  }

 private:
  std::uint64_t le(int n) {
    const char* p = take(static_cast<std::size_t>(n));
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return x;
  }

  std::vector<char> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::dbn: return "dbn";
    case ModelKind::late_fusion: return "late_fusion";
    case ModelKind::aligned: return "aligned";
    case ModelKind::pca: return "pca";
    case ModelKind::gmm: return "gmm";
  }
  return "?";
}

ModelKind ModelFile::kind() const {
  return static_cast<ModelKind>(model.index() + 1);
}

void write_model(std::ostream& out, const ModelFile& file) {
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(file.kind()));
  w.modalities(file.inputs);
  w.u32(static_cast<std::uint32_t>(file.scalers.size()));
  for (const auto& [m, s] : file.scalers) {
    w.u8(static_cast<std::uint8_t>(m));
    w.vector(s.min);
    w.vector(s.range);
  }
  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, DbnModel>) {
          w.dbn(model);
        } else if constexpr (std::is_same_v<T, LateFusionModel>) {
          w.architecture(model.architecture);
          w.config(model.config);
          w.u32(static_cast<std::uint32_t>(model.per_modality.size()));
          for (const auto& [m, p] : model.per_modality) {
            w.u8(static_cast<std::uint8_t>(m));
            w.rbm(p);
          }
          w.dbn(model.joint);
        } else if constexpr (std::is_same_v<T, AlignedDbnModel>) {
          w.architecture(model.architecture);
          w.config(model.config);
          w.dbn(model.av);
          w.dbn(model.affect);
          w.u32(static_cast<std::uint32_t>(model.transforms.size()));
          for (const auto& t : model.transforms) {
            w.matrix(t.rotation);
            w.vector(t.centroid_x);
            w.vector(t.centroid_a);
          }
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          w.vector(model.mean);
          w.matrix(model.components);
        } else {
          w.f64(model.weights[0]);
          w.f64(model.weights[1]);
          w.matrix(model.means);
          w.matrix(model.variances);
          w.i32(model.deceptive_component);
        }
      },
      file.model);
  w.bytes(kEnd, sizeof kEnd);
  if (!out) throw FormatError("failed writing model");
}

ModelFile read_model(std::istream& in, const std::string& source) {
  std::vector<char> data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader r(std::move(data), source);
  const char* magic = r.take(sizeof kMagic);
  if (!std::equal(magic, magic + sizeof kMagic, kMagic)) r.fail("not a model file (bad magic)");
  const auto version = r.u32();
  if (version != kModelFormatVersion)
    r.fail("unsupported model format version " + std::to_string(version) + " (this build reads version " +
           std::to_string(kModelFormatVersion) + ")");

  const auto kind = r.u8();
  ModelFile file;
  file.inputs = r.modalities();
  const auto n_scalers = r.u32();
  if (n_scalers > kAllModalities.size()) r.fail("invalid scaler count");
  for (std::uint32_t i = 0; i < n_scalers; ++i) {
    const Modality m = r.modality();
    MinMaxScaler s{r.vector(), r.vector()};
    if (s.min.size() != s.range.size()) r.fail("scaler vectors differ in length");
    file.scalers.emplace(m, std::move(s));
  }

  switch (static_cast<ModelKind>(kind)) {
    case ModelKind::dbn:
      file.model = r.dbn();
      break;
    case ModelKind::late_fusion: {
      LateFusionModel m;
      m.architecture = r.architecture();
      m.config = r.config();
      const auto n = r.u32();
      if (n > kAllModalities.size()) r.fail("invalid modality count");
      for (std::uint32_t i = 0; i < n; ++i) {
        const Modality mod = r.modality();
        m.per_modality.emplace(mod, r.rbm());
      }
      m.joint = r.dbn();
      file.model = std::move(m);
      break;
    }
    case ModelKind::aligned: {
      AlignedDbnModel m;
      m.architecture = r.architecture();
      m.config = r.config();
      m.av = r.dbn();
      m.affect = r.dbn();
      const auto n = r.u32();
      if (n != m.av.layers.size()) r.fail("transform count does not match layer count");
      for (std::uint32_t i = 0; i < n; ++i) {
        AlignmentTransform<double> t;
        t.rotation = r.matrix();
        t.centroid_x = r.vector();
        t.centroid_a = r.vector();
        m.transforms.push_back(std::move(t));
      }
      file.model = std::move(m);
      break;
    }
    case ModelKind::pca: {
      PcaModel m;
      m.mean = r.vector();
      m.components = r.matrix();
      if (m.components.cols() != m.mean.size()) r.fail("PCA components do not match the mean width");
      file.model = std::move(m);
      break;
    }
    case ModelKind::gmm: {
      GmmModel m;
      m.weights = {r.f64(), r.f64()};
      m.means = r.matrix();
      m.variances = r.matrix();
      m.deceptive_component = r.i32();
      if (m.means.rows() != 2 || m.variances.rows() != 2 || m.means.cols() != m.variances.cols())
        r.fail("GMM parameter shapes are inconsistent");
      file.model = std::move(m);
      break;
    }
    default:
      r.fail("unknown model kind " + std::to_string(kind));
  }

  const char* end = r.take(sizeof kEnd);
  if (!std::equal(end, end + sizeof kEnd, kEnd)) r.fail("missing end marker");
  if (r.remaining() != 0) r.fail("trailing bytes after end marker");
  return file;
}

void save_model(const fs::path& path, const ModelFile& file) {
  std::ostringstream buffer(std::ios::binary);
  write_model(buffer, file);
  auto out = open_out(path, std::ios::binary);
  const std::string bytes = buffer.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

ModelFile load_model(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_model(in, path.string());
}

ModelFile to_model_file(const TrainedRepresentation& rep) {
  ModelFile file;
  file.inputs = rep.inputs;
  file.scalers = rep.scalers;
  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          throw std::invalid_argument("the human baseline has no model to save");
        else
          file.model = model;
      },
      rep.model);
  return file;
}

TrainedRepresentation to_representation(const ModelFile& file) {
  TrainedRepresentation rep;
  rep.inputs = file.inputs;
  rep.scalers = file.scalers;
  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, DbnModel>) {
          rep.method = file.inputs.size() > 1 ? Method::early_fusion : Method::unimodal;
          rep.model = model;
        } else if constexpr (std::is_same_v<T, LateFusionModel>) {
          rep.method = Method::late_fusion;
          rep.model = model;
        } else if constexpr (std::is_same_v<T, AlignedDbnModel>) {
          rep.method = Method::affect_aligned;
          rep.model = model;
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          rep.method = Method::pca_baseline;
          rep.model = model;
        } else {
          throw std::invalid_argument("a GMM file is not a representation model");
        }
      },
      file.model);
  if (rep.inputs.empty()) throw std::invalid_argument("model file lists no input modalities");
  return rep;
}

// ---------------------------------------------------------------------------
// Results

std::vector<ResultRow> result_rows(const ExperimentResult& result, const std::string& timestamp) {
  const auto& c = result.config;
  ResultRow base;
  base.method = std::string(to_string(c.method));
  base.modalities = c.modality_label();
  base.architecture = c.architecture_label();
  base.dbn_seed = c.train.seed;
  base.gmm_seed = c.gmm_seed;
  base.fold_seed = result.fold_seed;
  base.timestamp = timestamp;

  std::vector<ResultRow> rows;
  for (const auto& f : result.folds) {
    ResultRow r = base;
    r.repeat = f.repeat;
    r.fold = f.fold;
    r.auc = f.auc;
    r.accuracy = f.accuracy;
    r.precision = f.precision;
    rows.push_back(std::move(r));
  }
  ResultRow agg = base;
  agg.record = "aggregate";
  agg.auc = result.mean_auc();
  agg.accuracy = result.mean_accuracy();
  agg.precision = result.mean_precision();
  rows.push_back(std::move(agg));
  return rows;
}

namespace {

const char* kResultsHeader =
    "record,method,modalities,architecture,repeat,fold,auc,accuracy,precision,dbn_seed,gmm_seed,fold_seed,timestamp";

void write_result_row(std::ostream& out, const ResultRow& r) {
  auto opt_int = [](const std::optional<int>& x) { return x ? std::to_string(*x) : std::string(); };
  out << r.record << ',' << r.method << ',' << r.modalities << ',' << r.architecture << ',' << opt_int(r.repeat)
      << ',' << opt_int(r.fold) << ',' << format_optional(r.auc) << ',' << format_double(r.accuracy) << ','
      << format_optional(r.precision) << ',' << r.dbn_seed << ',' << r.gmm_seed << ',' << r.fold_seed << ','
      << r.timestamp << '\n';
}

}  // namespace

void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) write_result_row(out, r);
}

std::vector<ResultRow> read_results(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader)
    throw FormatError(source + ": not a results table (unexpected header)");
  std::vector<ResultRow> rows;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::string at = source + " row " + std::to_string(row);
    const auto c = split(line, ',');
    if (c.size() != 13) throw FormatError(at + ": expected 13 columns");
    ResultRow r;
    r.record = c[0];
    if (r.record != "fold" && r.record != "aggregate") throw FormatError(at + ": record must be fold or aggregate");
    r.method = c[1];
    r.modalities = c[2];
    r.architecture = c[3];
    auto opt_int = [&](const std::string& s, std::optional<int>& out, const char* what) {
      if (s.empty()) return;
      int v = 0;
      if (!parse_int(s, v)) throw FormatError(at + ": invalid " + what);
      out = v;
    };
    auto opt_double = [&](const std::string& s, std::optional<double>& out, const char* what) {
      if (s.empty()) return;
      double v = 0;
      if (!parse_double(s, v)) throw FormatError(at + ": invalid " + what);
      out = v;
    };
    opt_int(c[4], r.repeat, "repeat");
    opt_int(c[5], r.fold, "fold");
    opt_double(c[6], r.auc, "auc");
    if (!parse_double(c[7], r.accuracy)) throw FormatError(at + ": invalid accuracy");
    opt_double(c[8], r.precision, "precision");
    if (!parse_int(c[9], r.dbn_seed) || !parse_int(c[10], r.gmm_seed) || !parse_int(c[11], r.fold_seed))
      throw FormatError(at + ": invalid seed");
    r.timestamp = c[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_predictions(std::ostream& out, const ExperimentResult& result, std::span<const VideoRecord> records) {
  out << "repeat,fold,video_id,label,score,correct\n";
  for (const auto& f : result.folds)
    for (std::size_t i = 0; i < f.test_rows.size(); ++i) {
      const auto& rec = records[f.test_rows[i]];
      out << f.repeat << ',' << f.fold << ',' << rec.video_id << ',' << to_string(rec.label) << ','
          << format_double(f.scores[i]) << ',' << (f.correct[i] ? 1 : 0) << '\n';
    }
}

std::vector<PredictionRow> read_predictions(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "repeat,fold,video_id,label,score,correct")
    throw FormatError(source + ": not a predictions file (unexpected header)");
  std::vector<PredictionRow> rows;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::string at = source + " row " + std::to_string(row);
    const auto c = split(line, ',');
    if (c.size() != 6) throw FormatError(at + ": expected 6 columns");
    PredictionRow p;
    int correct = 0;
    if (!parse_int(c[0], p.repeat) || !parse_int(c[1], p.fold) || !parse_double(c[4], p.score) ||
        !parse_int(c[5], correct) || (correct != 0 && correct != 1))
      throw FormatError(at + ": malformed prediction row");
    p.video_id = c[2];
    try {
      p.label = parse_label(c[3]);
    } catch (const std::invalid_argument& e) {
      throw FormatError(at + ": " + e.what());
    }
    p.correct = correct == 1;
    rows.push_back(std::move(p));
  }
  return rows;
}

McNemarResult compare_predictions(const std::vector<PredictionRow>& a, const std::vector<PredictionRow>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("prediction files differ in length");
  std::vector<bool> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].repeat != b[i].repeat || a[i].fold != b[i].fold || a[i].video_id != b[i].video_id)
      throw std::invalid_argument("prediction files were not produced on the same fold plan (row " +
                                  std::to_string(i + 1) + ")");
    ca.push_back(a[i].correct);
    cb.push_back(b[i].correct);
  }
  return mcnemar(ca, cb);
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    long long v = 0;
    if (parse_int(std::string_view(epoch), v)) now = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace affdbn
