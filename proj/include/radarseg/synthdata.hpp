// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radarseg/pointcloud.hpp"
#include "radarseg/rng.hpp"

namespace radarseg {

/// Synthetic walking-sequence generator settings. Point counts mirror radar
/// sparsity (tens of points per frame, not thousands).
struct GenConfig {
  std::size_t n_frames = 100;
  std::size_t points_per_frame = 64;  // >= 6 so every part can keep a point
  std::size_t gait_period_frames = 20;
  double noise_sigma = 0.02;       // meters
  double part_dropout_prob = 0.15; // stationary fraction of frames a part is untracked
  std::uint64_t seed = 0;

  void validate() const;
};

struct SphereGeom {
  Vec3 center;
  double radius = 0.0;
};

struct BoxGeom {
  Vec3 center;
  Vec3 half;  // axis-aligned half extents
};

/// A limb: the lateral surface of radius `radius` around segment [a, b].
struct SegmentGeom {
  Vec3 a, b;
  double radius = 0.0;
};

/// Per-subject proportions; constant over a sequence (rigid parts).
struct BodyShape {
  double scale = 1.0;      // overall height factor
  double arm_scale = 1.0;  // arm length factor
  double leg_scale = 1.0;  // leg length factor

  static BodyShape draw(Rng& rng);
};

/// The six-part stick figure at one instant: head sphere, torso box, and the
/// four limb segments, already translated along the walking direction.
struct SkeletonPose {
  double phase = 0.0;  // gait phase in [0, 2*pi)
  SphereGeom head;
  BoxGeom torso;
  SegmentGeom left_arm, right_arm, left_leg, right_leg;
};

/// Forward walk along +x with sinusoidal limb swing; left/right limbs move in
/// antiphase and arms are in antiphase with their same-side leg.
SkeletonPose pose_at(const BodyShape& shape, std::size_t frame_idx, const GenConfig& cfg);

/// Distance from a point to one part's surface (box SDF magnitude, sphere
/// shell distance, limb sleeve distance).
double distance_to_part(const SkeletonPose& pose, FineLabel part, const Vec3& p);
FineLabel nearest_part(const SkeletonPose& pose, const Vec3& p);

/// One walking sequence. Points are sampled on part surfaces proportionally
/// to surface area, labeled by the generating part, then jittered by
/// noise_sigma. Each part except the chest independently drops out for
/// contiguous frame runs, with stationary frequency part_dropout_prob; the
/// chest never drops, so every frame keeps at least one point. Bit-identical
/// for a given config.
Sequence generate(const GenConfig& cfg, const std::string& subject_id = "s000");

/// n_subjects sequences with per-subject body proportions and derived seeds;
/// subject ids "s000", "s001", ... The i-th entry equals a single generate()
/// call with seed Rng::mix(cfg.seed, 1000 + i).
std::vector<Sequence> generate_dataset(const GenConfig& cfg, std::size_t n_subjects);

}  // namespace radarseg
