// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "radarseg/errors.hpp"
#include "radarseg/pointcloud.hpp"
#include "radarseg/synthdata.hpp"
#include "testutil.hpp"

using namespace radarseg;

namespace {

double mean_nearest_neighbor_distance(const Frame& a, const Frame& b) {
  double total = 0.0;
  for (const LabeledPoint& p : a.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const LabeledPoint& q : b.points) {
      best = std::min(best, (p.position - q.position).norm());
    }
    total += best;
  }
  return total / static_cast<double>(a.points.size());
}

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("generation is bit-deterministic in the seed") {
  GenConfig cfg;
  cfg.n_frames = 12;
  cfg.points_per_frame = 24;
  cfg.seed = 99;
  const Sequence a = generate(cfg);
  const Sequence b = generate(cfg);
  CHECK(a == b);

  cfg.seed = 100;
  const Sequence c = generate(cfg);
  CHECK(a != c);
}

TEST_CASE("noiseless points sit on their part and label the nearest part") {
  GenConfig cfg;
  cfg.n_frames = 8;
  cfg.points_per_frame = 48;
  cfg.noise_sigma = 0.0;
  cfg.part_dropout_prob = 0.0;
  cfg.seed = 5;
  const Sequence seq = generate(cfg);
  Rng shape_rng(Rng::mix(cfg.seed, 1));
  const BodyShape shape = BodyShape::draw(shape_rng);
  for (const Frame& frame : seq.frames) {
    const SkeletonPose pose = pose_at(shape, frame.frame_index, cfg);
    for (const LabeledPoint& p : frame.points) {
      CHECK(distance_to_part(pose, p.fine_label, p.position) < 1e-9);
      CHECK(nearest_part(pose, p.position) == p.fine_label);
      CHECK(p.coarse_label == coarsen(p.fine_label));
    }
  }
}

TEST_CASE("noiseless frames include every part with sensible balance") {
  GenConfig cfg;
  cfg.n_frames = 20;
  cfg.points_per_frame = 64;
  cfg.noise_sigma = 0.0;
  cfg.part_dropout_prob = 0.0;
  cfg.seed = 21;
  const Sequence seq = generate(cfg);
  std::array<std::size_t, kFineClasses> totals{};
  std::size_t all = 0;
  for (const Frame& frame : seq.frames) {
    CHECK(frame.points.size() == cfg.points_per_frame);
    std::set<FineLabel> present;
    for (const LabeledPoint& p : frame.points) {
      present.insert(p.fine_label);
      ++totals[static_cast<std::size_t>(p.fine_label)];
      ++all;
    }
    CHECK(present.size() == 6);  // no dropout: every part sampled
  }
  for (std::size_t c = 0; c < kFineClasses; ++c) {
    CHECK(static_cast<double>(totals[c]) / static_cast<double>(all) < 0.60);
  }
}

TEST_CASE("dropout frequency tracks the configured rate") {
  GenConfig cfg;
  cfg.n_frames = 1000;
  cfg.points_per_frame = 32;
  cfg.seed = 7;
  cfg.part_dropout_prob = 0.15;
  const Sequence seq = generate(cfg);
  std::array<std::size_t, kFineClasses> dropped_frames{};
  for (const Frame& frame : seq.frames) {
    CHECK(!frame.points.empty());
    std::array<bool, kFineClasses> present{};
    for (const LabeledPoint& p : frame.points) {
      present[static_cast<std::size_t>(p.fine_label)] = true;
    }
    CHECK(present[static_cast<std::size_t>(FineLabel::Chest)]);  // torso never drops
    for (std::size_t c = 0; c < kFineClasses; ++c) {
      if (!present[c]) ++dropped_frames[c];
    }
  }
  for (const FineLabel part : {FineLabel::Head, FineLabel::LeftArm, FineLabel::RightArm,
                               FineLabel::LeftLeg, FineLabel::RightLeg}) {
    const double freq = static_cast<double>(dropped_frames[static_cast<std::size_t>(part)]) /
                        static_cast<double>(cfg.n_frames);
    CHECK(std::fabs(freq - cfg.part_dropout_prob) < 0.05);
  }
}

TEST_CASE("dropout happens in contiguous runs") {
  GenConfig cfg;
  cfg.n_frames = 400;
  cfg.points_per_frame = 16;
  cfg.seed = 31;
  cfg.part_dropout_prob = 0.2;
  const Sequence seq = generate(cfg);
  // Count dropout episodes of the head: with mean run length ~3 the episode
  // count must sit well below the dropped-frame count.
  std::size_t dropped = 0, episodes = 0;
  bool in_run = false;
  for (const Frame& frame : seq.frames) {
    bool head_present = false;
    for (const LabeledPoint& p : frame.points) {
      if (p.fine_label == FineLabel::Head) head_present = true;
    }
    if (!head_present) {
      ++dropped;
      if (!in_run) ++episodes;
      in_run = true;
    } else {
      in_run = false;
    }
  }
  REQUIRE(dropped > 10);
  CHECK(episodes * 2 <= dropped);  // average run of at least two frames
}

TEST_CASE("consecutive frames are closer than distant frames") {
  GenConfig cfg;
  cfg.n_frames = 40;
  cfg.points_per_frame = 32;
  cfg.seed = 13;
  const Sequence seq = generate(cfg);
  double near = 0.0, far = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k + 10 < seq.frames.size(); ++k) {
    near += mean_nearest_neighbor_distance(seq.frames[k], seq.frames[k + 1]);
    far += mean_nearest_neighbor_distance(seq.frames[k], seq.frames[k + 10]);
    ++count;
  }
  CHECK(near / count < far / count);
}

TEST_CASE("gait is periodic: poses one period apart differ only by translation") {
  GenConfig cfg;
  cfg.gait_period_frames = 16;
  Rng rng(3);
  const BodyShape shape = BodyShape::draw(rng);
  const SkeletonPose a = pose_at(shape, 4, cfg);
  const SkeletonPose b = pose_at(shape, 4 + cfg.gait_period_frames, cfg);
  CHECK(a.phase == doctest::Approx(b.phase).epsilon(1e-12));
  const Vec3 shift = b.head.center - a.head.center;
  CHECK(shift.y == 0.0);
  CHECK(shift.z == 0.0);
  CHECK(shift.x > 0.0);
  const Vec3 hand_shift = b.left_arm.b - a.left_arm.b;
  CHECK(hand_shift.x == doctest::Approx(shift.x).epsilon(1e-12));
  CHECK(std::fabs(hand_shift.z) < 1e-12);
}

TEST_CASE("limbs swing in antiphase") {
  GenConfig cfg;
  Rng rng(4);
  const BodyShape shape = BodyShape::draw(rng);
  const SkeletonPose pose = pose_at(shape, 3, cfg);  // off-peak phase
  const double left_arm_dx = pose.left_arm.b.x - pose.left_arm.a.x;
  const double right_arm_dx = pose.right_arm.b.x - pose.right_arm.a.x;
  const double left_leg_dx = pose.left_leg.b.x - pose.left_leg.a.x;
  const double right_leg_dx = pose.right_leg.b.x - pose.right_leg.a.x;
  CHECK(left_arm_dx * right_arm_dx < 0.0);
  CHECK(left_leg_dx * right_leg_dx < 0.0);
  CHECK(left_arm_dx * left_leg_dx < 0.0);  // arm opposes its own-side leg
}

TEST_CASE("generate_dataset: unique ids, derived seeds, csv round trip") {
  GenConfig cfg;
  cfg.n_frames = 100;
  cfg.points_per_frame = 16;
  cfg.seed = 55;
  const auto dataset = generate_dataset(cfg, 10);
  REQUIRE(dataset.size() == 10);

  std::set<std::string> ids;
  for (const Sequence& s : dataset) ids.insert(s.subject_id);
  CHECK(ids.size() == 10);

  GenConfig derived = cfg;
  derived.seed = Rng::mix(cfg.seed, 1000);
  CHECK(dataset[0] == generate(derived, "s000"));

  const std::string path = testutil::temp_path("dataset10.csv");
  write_sequences(dataset, path);
  CHECK(read_sequences(path) == dataset);
}

TEST_CASE("config validation") {
  GenConfig cfg;
  cfg.points_per_frame = 5;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = GenConfig{};
  cfg.part_dropout_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = GenConfig{};
  cfg.noise_sigma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  CHECK_THROWS_AS(generate_dataset(GenConfig{}, 0), DataError);
}

}  // TEST_SUITE
