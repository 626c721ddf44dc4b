// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "radarseg/errors.hpp"
#include "radarseg/pointcloud.hpp"
#include "radarseg/synthdata.hpp"
#include "testutil.hpp"

using namespace radarseg;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_SUITE("pointcloud") {

TEST_CASE("gauss weights: coincident points and a unit offset") {
  const std::vector<Vec3> coincident{{1, 2, 3}, {1, 2, 3}};
  const AdjacencyWeights w = gauss_weights(coincident);
  CHECK(w.at(0, 0) == 1.0);
  CHECK(w.at(0, 1) == 1.0);
  CHECK(w.at(1, 0) == 1.0);
  CHECK(w.at(1, 1) == 1.0);

  const std::vector<Vec3> pair{{0, 0, 0}, {1, 0, 0}};
  const AdjacencyWeights w2 = gauss_weights(pair);
  CHECK(w2.at(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(w2.at(0, 1) == doctest::Approx(0.36788).epsilon(1e-4));
}

TEST_CASE("gauss weights match an independent double loop") {
  Rng rng(3);
  std::vector<Vec3> pts;
  for (int i = 0; i < 5; ++i) {
    pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  }
  const AdjacencyWeights w = gauss_weights(pts);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      const double dx = pts[i].x - pts[j].x;
      const double dy = pts[i].y - pts[j].y;
      const double dz = pts[i].z - pts[j].z;
      const double expected = std::exp(-(dx * dx + dy * dy + dz * dz));
      CHECK(std::fabs(w.at(i, j) - expected) < 1e-15);
    }
  }
}

TEST_CASE("gauss weights properties over random clouds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<Vec3> pts;
    const std::size_t n = 1 + rng.uniform_index(12);
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)});
    }
    const AdjacencyWeights w = gauss_weights(pts);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(w.at(i, i) == 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(w.at(i, j) == w.at(j, i));
        CHECK(w.at(i, j) > 0.0);
        CHECK(w.at(i, j) <= 1.0);
      }
    }
  }
}

TEST_CASE("gauss weights reject non-finite coordinates") {
  const std::vector<Vec3> bad{{0, 0, 0}, {std::nan(""), 0, 0}};
  CHECK_THROWS_AS(gauss_weights(bad), DataError);
}

TEST_CASE("coarsen maps pairs and covers all three classes") {
  CHECK(coarsen(FineLabel::Head) == CoarseLabel::HeadTorso);
  CHECK(coarsen(FineLabel::Chest) == CoarseLabel::HeadTorso);
  CHECK(coarsen(FineLabel::LeftArm) == CoarseLabel::Arm);
  CHECK(coarsen(FineLabel::RightArm) == CoarseLabel::Arm);
  CHECK(coarsen(FineLabel::LeftLeg) == CoarseLabel::Leg);
  CHECK(coarsen(FineLabel::RightLeg) == CoarseLabel::Leg);

  std::set<CoarseLabel> image;
  for (int c = 0; c < kFineClasses; ++c) image.insert(coarsen(static_cast<FineLabel>(c)));
  CHECK(image.size() == 3);  // surjective
}

TEST_CASE("single point round trip is exact") {
  Sequence seq;
  seq.subject_id = "solo";
  Frame frame;
  frame.frame_index = 0;
  frame.points.push_back({{0.1234567890123456789, -2.5e-17, 3.0}, FineLabel::Chest,
                          CoarseLabel::HeadTorso});
  seq.frames.push_back(frame);

  const std::string path = testutil::temp_path("single.csv");
  write_sequence(seq, path);
  CHECK(read_sequence(path) == seq);
}

TEST_CASE("generated walk round trips exactly") {
  GenConfig cfg;
  cfg.n_frames = 11;
  cfg.points_per_frame = 16;
  cfg.seed = 7;
  const Sequence seq = generate(cfg, "walker");
  const std::string path = testutil::temp_path("walk.csv");
  write_sequence(seq, path);
  CHECK(read_sequence(path) == seq);
}

TEST_CASE("parse errors cite the line") {
  const std::string path = testutil::temp_path("bad_label.csv");
  write_text(path,
             "subject_id,frame_idx,x,y,z,fine_label,coarse_label\n"
             "s0,0,0,0,0,head,head_torso\n"
             "s0,0,1,1,1,torso,head_torso\n");
  try {
    read_sequence(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("torso") != std::string::npos);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("wrong column count and non-numeric values are parse errors") {
  const std::string path = testutil::temp_path("bad_cols.csv");
  write_text(path,
             "subject_id,frame_idx,x,y,z,fine_label,coarse_label\n"
             "s0,0,0,0,0,head\n");
  CHECK_THROWS_AS(read_sequence(path), ParseError);

  write_text(path,
             "subject_id,frame_idx,x,y,z,fine_label,coarse_label\n"
             "s0,0,0,zero,0,head,head_torso\n");
  CHECK_THROWS_AS(read_sequence(path), ParseError);

  write_text(path,
             "subject_id,frame_idx,x,y,z,fine_label,coarse_label\n"
             "s0,0,0,inf,0,head,head_torso\n");
  CHECK_THROWS_AS(read_sequence(path), ParseError);
}

TEST_CASE("non-increasing frame index is rejected") {
  const std::string path = testutil::temp_path("bad_order.csv");
  write_text(path,
             "subject_id,frame_idx,x,y,z,fine_label,coarse_label\n"
             "s0,1,0,0,0,head,head_torso\n"
             "s0,0,1,1,1,head,head_torso\n");
  CHECK_THROWS_AS(read_sequence(path), ParseError);
}

TEST_CASE("mismatched coarse label is rejected") {
  const std::string path = testutil::temp_path("bad_coarse.csv");
  write_text(path,
             "subject_id,frame_idx,x,y,z,fine_label,coarse_label\n"
             "s0,0,0,0,0,head,leg\n");
  CHECK_THROWS_AS(read_sequence(path), ParseError);
}

TEST_CASE("multi-subject files round trip and split on subject change") {
  GenConfig cfg;
  cfg.n_frames = 4;
  cfg.points_per_frame = 8;
  cfg.seed = 11;
  const auto dataset = generate_dataset(cfg, 3);
  const std::string path = testutil::temp_path("multi.csv");
  write_sequences(dataset, path);
  const auto loaded = read_sequences(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded == dataset);
  CHECK_THROWS_AS(read_sequence(path), DataError);  // more than one subject
}

TEST_CASE("split: degenerate all-train and the 70/20/10 contract") {
  Rng rng(4);
  Sequence seq = testutil::random_sequence(rng, 100, 3);

  const SplitResult all_train = split(seq, 1.0, 0.0, 0.0, 42);
  CHECK(all_train.train.frames.size() == 100);
  CHECK(all_train.test.frames.empty());
  CHECK(all_train.val.frames.empty());

  const SplitResult parts = split(seq, 0.7, 0.2, 0.1, 42);
  CHECK(parts.train.frames.size() == 70);
  CHECK(parts.test.frames.size() == 20);
  CHECK(parts.val.frames.size() == 10);

  // Disjoint cover, and each part in increasing frame order.
  std::set<std::size_t> seen;
  for (const Sequence* part : {&parts.train, &parts.test, &parts.val}) {
    for (std::size_t k = 0; k < part->frames.size(); ++k) {
      CHECK(seen.insert(part->frames[k].frame_index).second);
      if (k > 0) CHECK(part->frames[k].frame_index > part->frames[k - 1].frame_index);
    }
  }
  CHECK(seen.size() == 100);

  // Deterministic given the seed.
  const SplitResult again = split(seq, 0.7, 0.2, 0.1, 42);
  CHECK(again.train == parts.train);
  CHECK(again.test == parts.test);
  CHECK(again.val == parts.val);
}

TEST_CASE("split rejects fractions that do not sum to 1") {
  Rng rng(4);
  const Sequence seq = testutil::random_sequence(rng, 10, 3);
  CHECK_THROWS_AS(split(seq, 0.7, 0.2, 0.2, 1), DataError);
  CHECK_THROWS_AS(split(seq, 0.7, 0.4, -0.1, 1), DataError);
}

}  // TEST_SUITE
