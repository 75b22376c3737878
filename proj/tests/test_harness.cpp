#include "affdbn/harness.hpp"

#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace affdbn;

namespace {

std::vector<VideoRecord> toy_records(int speakers, int videos, Rng& rng, Index width = 3) {
  std::vector<VideoRecord> out;
  for (int s = 0; s < speakers; ++s)
    for (int v = 0; v < videos; ++v) {
      VideoRecord r;
      r.speaker_id = "sp" + std::to_string(s);
      r.video_id = r.speaker_id + "_" + std::to_string(v);
      r.label = rng.uniform() < 0.5 ? Label::deceptive : Label::truthful;
      for (Modality m : kAllModalities) r.features[m] = testsupport::random_normal(width, 1, rng).col(0);
      out.push_back(std::move(r));
    }
  return out;
}

std::set<std::string> speakers_of(const std::vector<VideoRecord>& records, const std::vector<std::size_t>& rows) {
  std::set<std::string> s;
  for (auto i : rows) s.insert(records[i].speaker_id);
  return s;
}

TrainConfig quick() {
  TrainConfig c;
  c.epochs = 2;
  c.cd_k = 1;
  return c;
}

}  // namespace

TEST_CASE("fold plan for 47 speakers") {
  Rng rng(1);
  const auto records = toy_records(47, 2, rng);
  const auto plan = make_folds(records, 5, 10, 0);
  REQUIRE(plan.speakers.size() == 10);
  for (const auto& repeat : plan.speakers) {
    std::multiset<std::size_t> sizes;
    for (const auto& fold : repeat) sizes.insert(fold.size());
    CHECK(sizes == std::multiset<std::size_t>{9, 9, 9, 10, 10});
  }
  const auto again = make_folds(records, 5, 10, 0);
  CHECK(again.speakers == plan.speakers);
  CHECK(make_folds(records, 5, 10, 1).speakers != plan.speakers);

  CHECK_THROWS_AS(make_folds(records, 1, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_folds(toy_records(3, 2, rng), 5, 1, 0), std::invalid_argument);
}

TEST_CASE("property: every split is speaker-disjoint and covers all rows") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int speakers = 5 + static_cast<int>(rng.below(40));
    const auto records = toy_records(speakers, 1 + static_cast<int>(rng.below(5)), rng);
    const auto plan = make_folds(records, 5, 2, rng.next());
    const auto splits = plan.splits(records);
    CHECK(splits.size() == 10);
    for (const auto& s : splits) {
      const auto tr = speakers_of(records, s.train);
      for (const auto& sp : speakers_of(records, s.test)) CHECK(tr.count(sp) == 0);
      CHECK(s.train.size() + s.test.size() == records.size());
      CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    }
  }
}

TEST_CASE("min-max scaling") {
  Matrix train(2, 2);
  train << 2, 7, 4, 7;
  const auto s = minmax_fit(train);
  const Matrix scaled = minmax_apply(train, s);
  CHECK(scaled(0, 0) == 0.0);
  CHECK(scaled(1, 0) == 1.0);
  CHECK(scaled.col(1).isZero());
  Matrix test(3, 2);
  test << 3, 9, 5, 1, 0, 7;
  const Matrix st = minmax_apply(test, s);
  CHECK(st(0, 0) == 0.5);
  CHECK(st(1, 0) == 1.0);
  CHECK(st(2, 0) == 0.0);
  CHECK(st.col(1).isZero());
  CHECK_THROWS_AS(minmax_apply(Matrix::Zero(1, 3), s), std::invalid_argument);
}

TEST_CASE("scalers ignore test rows") {
  Rng rng(3);
  const auto records = toy_records(12, 3, rng);
  const auto plan = make_folds(records, 4, 1, 0);
  ExperimentConfig cfg;
  cfg.method = Method::pca_baseline;
  cfg.modalities = {Modality::valence, Modality::visual};
  for (const auto& split : plan.splits(records)) {
    const auto full = fit_representation(cfg, records, split.train);
    // Dropping a test record from the dataset cannot change the scalers.
    std::vector<VideoRecord> fewer;
    std::vector<std::size_t> remap;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (i != split.test.front()) remap.push_back(fewer.size()), fewer.push_back(records[i]);
      else remap.push_back(SIZE_MAX);
    std::vector<std::size_t> train;
    for (auto i : split.train) train.push_back(remap[i]);
    CHECK(fit_representation(cfg, fewer, train).scalers == full.scalers);
  }
}

TEST_CASE("experiment config validation") {
  ExperimentConfig c;
  c.method = Method::unimodal;
  c.modalities = {Modality::valence, Modality::visual};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.method = Method::late_fusion;
  c.architecture = Architecture::parse("2");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.architecture = Architecture::parse("8-2");
  CHECK_NOTHROW(c.validate());
  c.method = Method::affect_aligned;
  c.modalities = {Modality::visual};
  c.aligner = {Modality::audio};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.aligner = {Modality::arousal};
  CHECK_NOTHROW(c.validate());
  CHECK(c.modality_label() == "arousal>visual");

  Rng rng(4);
  const auto records = toy_records(6, 2, rng);
  ExperimentConfig bad;
  bad.method = Method::unimodal;
  const auto plan = make_folds(records, 3, 1, 0);
  CHECK_THROWS_AS(run_experiment(bad, records, plan), std::invalid_argument);
}

TEST_CASE("grid enumeration") {
  const auto grid = paper_grid();
  std::map<Method, int> counts;
  for (const auto& c : grid) {
    CHECK_NOTHROW(c.validate());
    ++counts[c.method];
  }
  CHECK(counts[Method::unimodal] == 32);
  CHECK(counts[Method::early_fusion] == 88);
  CHECK(counts[Method::late_fusion] == 66);
  CHECK(counts[Method::affect_aligned] == 72);
  CHECK(counts[Method::pca_baseline] == 30);
  CHECK(counts[Method::human_baseline] == 1);
  CHECK(counts[Method::unimodal] + counts[Method::early_fusion] + counts[Method::late_fusion] +
            counts[Method::affect_aligned] ==
        258);
}

TEST_CASE("human baseline through the harness") {
  Rng rng(5);
  const auto records = toy_records(10, 4, rng);
  std::size_t deceptive = 0;
  for (const auto& r : records) deceptive += is_deceptive(r.label);
  ExperimentConfig c;
  c.method = Method::human_baseline;
  const auto result = run_experiment(c, records, make_folds(records, 5, 2, 0));
  std::size_t correct = 0, total = 0;
  for (const auto& f : result.folds)
    for (bool ok : f.correct) correct += ok, ++total;
  CHECK(total == 2 * records.size());
  CHECK(static_cast<double>(correct) / total == doctest::Approx(static_cast<double>(deceptive) / records.size()));
}

TEST_CASE("runs are deterministic and ordered regardless of threads") {
  SyntheticOptions o;
  o.n_speakers = 8;
  o.videos_per_speaker = 4;
  o.max_frames = 150;
  const auto records = generate_synthetic(o);
  ExperimentConfig c;
  c.method = Method::early_fusion;
  c.modalities = {Modality::arousal, Modality::valence};
  c.architecture = Architecture::parse("8-2");
  c.train = quick();
  const auto plan = make_folds(records, 4, 2, 0);
  const auto a = run_experiment(c, records, plan, {1});
  const auto b = run_experiment(c, records, plan, {3});
  REQUIRE(a.folds.size() == 8);
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    CHECK(a.folds[i].repeat == static_cast<int>(i / 4));
    CHECK(a.folds[i].fold == static_cast<int>(i % 4));
    CHECK(a.folds[i].scores == b.folds[i].scores);
    CHECK(a.folds[i].auc == b.folds[i].auc);
  }
  // The reported AUC is the mean of the per-fold AUCs.
  double sum = 0;
  int n = 0;
  for (const auto& f : a.folds)
    if (f.auc) sum += *f.auc, ++n;
  CHECK(a.mean_auc().value() == doctest::Approx(sum / n).epsilon(1e-15));

  ExperimentConfig other = c;
  other.method = Method::pca_baseline;
  const auto p = run_experiment(other, records, plan);
  const auto mc = compare_experiments(a, p);
  CHECK(mc.b + mc.c >= 0);
}

TEST_CASE("every method runs through apply_representation") {
  SyntheticOptions o;
  o.n_speakers = 6;
  o.videos_per_speaker = 4;
  o.max_frames = 120;
  const auto records = generate_synthetic(o);
  const auto rows = testsupport::iota_rows(records.size());
  std::vector<ExperimentConfig> configs(5);
  configs[0].method = Method::unimodal;
  configs[0].modalities = {Modality::audio};
  configs[1].method = Method::early_fusion;
  configs[1].modalities = {Modality::audio, Modality::visual};
  configs[2].method = Method::late_fusion;
  configs[2].modalities = {Modality::valence, Modality::visual};
  configs[2].architecture = Architecture::parse("6-2");
  configs[3].method = Method::affect_aligned;
  configs[3].modalities = {Modality::audio};
  configs[3].aligner = {Modality::arousal, Modality::valence};
  configs[3].architecture = Architecture::parse("6-4");
  configs[4].method = Method::pca_baseline;
  configs[4].modalities = {Modality::visual};
  configs[4].pca_dims = 4;
  for (auto& c : configs) {
    c.train = quick();
    const auto rep = fit_representation(c, records, rows);
    const Matrix z = apply_representation(rep, records, rows);
    CHECK(z.rows() == static_cast<Index>(records.size()));
    CHECK(z.cols() == (c.method == Method::pca_baseline ? 4 : c.architecture.output_size()));
  }
  // Affect features are not needed at inference time.
  auto without_affect = records;
  for (auto& r : without_affect) {
    r.features.erase(Modality::arousal);
    r.features.erase(Modality::valence);
  }
  const auto rep = fit_representation(configs[3], records, rows);
  CHECK(apply_representation(rep, without_affect, rows) == apply_representation(rep, records, rows));
}

TEST_CASE("synthetic data") {
  SyntheticOptions o;
  o.n_speakers = 6;
  o.videos_per_speaker = 4;
  o.max_frames = 200;
  const auto a = generate_synthetic(o);
  const auto b = generate_synthetic(o);
  REQUIRE(a.size() == 24);
  std::size_t deceptive = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].features == b[i].features);
    deceptive += is_deceptive(a[i].label);
    CHECK(a[i].features.at(Modality::audio).size() == 986);
    CHECK(a[i].features.at(Modality::visual).size() == 527);
  }
  CHECK(deceptive == 12);

  // Strong separation: a GMM on the raw informative features already splits the classes.
  o.n_speakers = 20;
  o.videos_per_speaker = 6;
  o.separation = 8.0;
  const auto strong = generate_synthetic(o);
  const auto rows = testsupport::iota_rows(strong.size());
  Matrix x = feature_matrix(strong, rows, {Modality::valence});
  x = minmax_apply(x, minmax_fit(x));
  const auto labels = labels_of(strong);
  const auto pca = fit_pca(x, 2);
  const Matrix z = project(x, pca);
  const auto gmm = orient_gmm(fit_gmm(z), z, labels);
  const Vector s = score_deceptive(z, gmm);
  CHECK(auc(std::span<const double>(s.data(), s.size()), labels) >= 0.95);

  o.separation = -1;
  CHECK_THROWS_AS(generate_synthetic(o), std::invalid_argument);
}
