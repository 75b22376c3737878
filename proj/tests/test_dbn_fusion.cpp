#include "affdbn/dbn.hpp"
#include "affdbn/fusion.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace affdbn;
using testsupport::random_matrix;

namespace {

TrainConfig quick(int epochs = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.cd_k = 1;
  return c;
}

DbnModel zero_dbn(Index input, const Architecture& a) {
  DbnModel m{a, {}, {}};
  Index width = input;
  for (Index s : a.layer_sizes) {
    m.layers.push_back(RbmParams<double>::zeros(width, s));
    width = s;
  }
  return m;
}

}  // namespace

TEST_CASE("architecture strings") {
  CHECK(Architecture::parse("512-256-2").layer_sizes == std::vector<Index>{512, 256, 2});
  CHECK(Architecture::parse("128_64_4").to_string() == "128-64-4");
  CHECK(Architecture::parse("2").depth() == 1);
  for (const char* bad : {"", "-", "3-", "a-2", "2-0", "-1"})
    CHECK_THROWS_AS(Architecture::parse(bad), std::invalid_argument);

  const auto grid = grid_architectures();
  REQUIRE(grid.size() == 8);
  for (const auto& a : grid) {
    CHECK((a.output_size() == 2 || a.output_size() == 4));
    for (std::size_t i = 1; i < a.layer_sizes.size(); ++i) CHECK(a.layer_sizes[i] < a.layer_sizes[i - 1]);
  }
}

TEST_CASE("train_dbn shapes and determinism") {
  Rng rng(1);
  const Matrix x = random_matrix(12, 20, rng);
  const auto single = train_dbn(x, Architecture::parse("2"), quick());
  CHECK(single.layers.size() == 1);

  const Matrix wide = random_matrix(8, 1547, rng);
  const auto deep = train_dbn(wide, Architecture::parse("128-64-2"), quick(1));
  REQUIRE(deep.layers.size() == 3);
  CHECK(deep.layers[0].weights.rows() == 1547);
  CHECK(deep.layers[0].weights.cols() == 128);
  CHECK(deep.layers[1].weights.rows() == 128);
  CHECK(deep.layers[1].weights.cols() == 64);
  CHECK(deep.layers[2].weights.rows() == 64);
  CHECK(deep.layers[2].weights.cols() == 2);

  const auto again = train_dbn(x, Architecture::parse("8-4"), quick());
  const auto twin = train_dbn(x, Architecture::parse("8-4"), quick());
  CHECK(again.layers == twin.layers);
  CHECK(dbn_layer_seed(0, 0) != dbn_layer_seed(0, 1));
}

TEST_CASE("represent") {
  Rng rng(2);
  const Matrix x = random_matrix(6, 10, rng);
  CHECK(represent(x, zero_dbn(10, Architecture::parse("6-3-2"))).isConstant(0.5));

  const auto m = train_dbn(x, Architecture::parse("6-3-2"), quick());
  const Matrix all = represent(x, m);
  const Matrix one = represent(x.row(2), m);
  CHECK((one.row(0) - all.row(2)).cwiseAbs().maxCoeff() < 1e-12);

  Matrix manual = x;
  for (const auto& l : m.layers) manual = hidden_cond_prob(manual, l);
  CHECK((manual - all).cwiseAbs().maxCoeff() < 1e-12);

  for (const auto& a : grid_architectures())
    CHECK(represent(x, zero_dbn(10, a)).cols() == a.output_size());
  CHECK_THROWS_AS(represent(Matrix::Zero(2, 9), m), std::invalid_argument);
}

TEST_CASE("multimodal combinations") {
  const auto c = multimodal_combinations();
  REQUIRE(c.size() == 11);
  int pairs = 0, triples = 0, quads = 0;
  for (const auto& s : c) {
    pairs += s.size() == 2;
    triples += s.size() == 3;
    quads += s.size() == 4;
    CHECK(std::is_sorted(s.begin(), s.end()));
  }
  CHECK(pairs == 6);
  CHECK(triples == 4);
  CHECK(quads == 1);
}

TEST_CASE("early fusion") {
  Rng rng(3);
  ModalityVectors parts{{Modality::arousal, random_matrix(17, 1, rng).col(0)},
                        {Modality::audio, random_matrix(986, 1, rng).col(0)},
                        {Modality::valence, random_matrix(17, 1, rng).col(0)},
                        {Modality::visual, random_matrix(527, 1, rng).col(0)}};
  CHECK(early_fuse(parts, {Modality::valence, Modality::visual}).size() == 544);
  CHECK(early_fuse(parts, {Modality::arousal, Modality::audio, Modality::valence, Modality::visual}).size() == 1547);
  CHECK(early_fuse(parts, {Modality::valence}) == parts.at(Modality::valence));
  // Canonical order regardless of how the set is written.
  CHECK(early_fuse(parts, parse_modality_set("visual+valence")) ==
        early_fuse(parts, parse_modality_set("valence,visual")));
  CHECK_THROWS_AS(parse_modality_set("valence+valence"), std::invalid_argument);
  CHECK_THROWS_AS(parse_modality_set("smell"), std::invalid_argument);

  // Early fusion then train_dbn is train_dbn on the concatenation.
  ModalityMatrices mats{{Modality::valence, random_matrix(10, 17, rng)}, {Modality::visual, random_matrix(10, 30, rng)}};
  Matrix cat(10, 47);
  cat << mats[Modality::valence], mats[Modality::visual];
  const Matrix fused = early_fuse(mats, {Modality::valence, Modality::visual});
  CHECK(fused == cat);
  CHECK(train_dbn(fused, Architecture::parse("4"), quick()).layers ==
        train_dbn(cat, Architecture::parse("4"), quick()).layers);
}

TEST_CASE("late fusion") {
  Rng rng(4);
  ModalityMatrices mats{{Modality::valence, random_matrix(9, 17, rng)}, {Modality::visual, random_matrix(9, 40, rng)}};
  const auto m = train_late_fusion(mats, Architecture::parse("16-8-2"), quick());
  CHECK(m.per_modality.size() == 2);
  CHECK(m.joint.input_width() == 32);
  CHECK(m.joint.layers.size() == 2);
  CHECK(represent_late(mats, m).cols() == 2);
  CHECK(m.modalities() == ModalitySet{Modality::valence, Modality::visual});

  const auto twin = train_late_fusion(mats, Architecture::parse("16-8-2"), quick());
  CHECK(twin.joint.layers == m.joint.layers);
  CHECK(twin.per_modality == m.per_modality);

  CHECK_THROWS_AS(train_late_fusion(mats, Architecture::parse("2"), quick()), std::invalid_argument);

  // Composition oracle.
  Matrix joint_in(9, 32);
  joint_in << hidden_cond_prob(mats[Modality::valence], m.per_modality.at(Modality::valence)),
      hidden_cond_prob(mats[Modality::visual], m.per_modality.at(Modality::visual));
  CHECK((represent(joint_in, m.joint) - represent_late(mats, m)).cwiseAbs().maxCoeff() < 1e-12);

  // Rows are independent.
  ModalityMatrices single{{Modality::valence, mats[Modality::valence].row(4)},
                          {Modality::visual, mats[Modality::visual].row(4)}};
  CHECK((represent_late(single, m).row(0) - represent_late(mats, m).row(4)).cwiseAbs().maxCoeff() < 1e-12);

  LateFusionModel zero = m;
  for (auto& [mod, p] : zero.per_modality) p = RbmParams<double>::zeros(p.n_visible(), p.n_hidden());
  for (auto& l : zero.joint.layers) l = RbmParams<double>::zeros(l.n_visible(), l.n_hidden());
  CHECK(represent_late(mats, zero).isConstant(0.5));
}

TEST_CASE("late fusion joint width is M times h1") {
  Rng rng(5);
  ModalityMatrices mats;
  for (Modality mod : kAllModalities) mats[mod] = random_matrix(6, 5, rng);
  const auto m = train_late_fusion(mats, Architecture::parse("3-2"), quick(1));
  CHECK(m.joint.input_width() == 12);
}
