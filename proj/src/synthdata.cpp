// SPDX-License-Identifier: Apache-2.0
#include "radarseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>

#include "radarseg/errors.hpp"

namespace radarseg {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kForwardPerFrame = 0.05;  // meters of walk progress per frame
constexpr double kArmSwing = 0.5;          // rad
constexpr double kLegSwing = 0.35;         // rad
constexpr double kDropoutMeanRun = 3.0;    // frames per dropout episode

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Vec3 normalized(const Vec3& v) {
  const double n = v.norm();
  return {v.x / n, v.y / n, v.z / n};
}

double clamp01(double t) { return std::min(1.0, std::max(0.0, t)); }

double segment_axis_distance(const SegmentGeom& s, const Vec3& p) {
  const Vec3 d = s.b - s.a;
  const double len2 = d.norm2();
  const double t = len2 > 0.0 ? clamp01((p - s.a).dot(d) / len2) : 0.0;
  return (p - (s.a + d * t)).norm();
}

double box_surface_distance(const BoxGeom& box, const Vec3& p) {
  const double qx = std::fabs(p.x - box.center.x) - box.half.x;
  const double qy = std::fabs(p.y - box.center.y) - box.half.y;
  const double qz = std::fabs(p.z - box.center.z) - box.half.z;
  const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0), oz = std::max(qz, 0.0);
  const double outside = std::sqrt(ox * ox + oy * oy + oz * oz);
  const double inside = std::min(std::max(qx, std::max(qy, qz)), 0.0);
  return std::fabs(outside + inside);
}

double sphere_area(const SphereGeom& s) { return 4.0 * kPi * s.radius * s.radius; }

double box_area(const BoxGeom& b) {
  return 8.0 * (b.half.x * b.half.y + b.half.x * b.half.z + b.half.y * b.half.z);
}

double segment_area(const SegmentGeom& s) {
  return 2.0 * kPi * s.radius * (s.b - s.a).norm();
}

Vec3 sample_sphere(const SphereGeom& s, Rng& rng) {
  Vec3 dir;
  do {
    dir = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
  } while (dir.norm2() < 1e-12);
  return s.center + normalized(dir) * s.radius;
}

Vec3 sample_box(const BoxGeom& b, Rng& rng) {
  // Pick a face by area, then a uniform point on it. Faces paired +/- per axis.
  const double ax = b.half.y * b.half.z;  // x faces
  const double ay = b.half.x * b.half.z;
  const double az = b.half.x * b.half.y;
  const double total = 2.0 * (ax + ay + az);
  double pick = rng.uniform() * total;
  const double u = rng.uniform(-1.0, 1.0);
  const double v = rng.uniform(-1.0, 1.0);
  Vec3 offset;
  if (pick < 2.0 * ax) {
    offset = {pick < ax ? b.half.x : -b.half.x, u * b.half.y, v * b.half.z};
  } else if ((pick -= 2.0 * ax) < 2.0 * ay) {
    offset = {u * b.half.x, pick < ay ? b.half.y : -b.half.y, v * b.half.z};
  } else {
    pick -= 2.0 * ay;
    offset = {u * b.half.x, v * b.half.y, pick < az ? b.half.z : -b.half.z};
  }
  return b.center + offset;
}

Vec3 sample_segment(const SegmentGeom& s, Rng& rng) {
  const Vec3 axis = normalized(s.b - s.a);
  Vec3 ref = std::fabs(axis.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 u = normalized(cross(axis, ref));
  const Vec3 v = cross(axis, u);
  const double t = rng.uniform();
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  return s.a + (s.b - s.a) * t + (u * std::cos(phi) + v * std::sin(phi)) * s.radius;
}

double part_area(const SkeletonPose& pose, FineLabel part) {
  switch (part) {
    case FineLabel::Head: return sphere_area(pose.head);
    case FineLabel::Chest: return box_area(pose.torso);
    case FineLabel::LeftArm: return segment_area(pose.left_arm);
    case FineLabel::RightArm: return segment_area(pose.right_arm);
    case FineLabel::LeftLeg: return segment_area(pose.left_leg);
    case FineLabel::RightLeg: return segment_area(pose.right_leg);
  }
  return 0.0;
}

Vec3 sample_part(const SkeletonPose& pose, FineLabel part, Rng& rng) {
  switch (part) {
    case FineLabel::Head: return sample_sphere(pose.head, rng);
    case FineLabel::Chest: return sample_box(pose.torso, rng);
    case FineLabel::LeftArm: return sample_segment(pose.left_arm, rng);
    case FineLabel::RightArm: return sample_segment(pose.right_arm, rng);
    case FineLabel::LeftLeg: return sample_segment(pose.left_leg, rng);
    case FineLabel::RightLeg: return sample_segment(pose.right_leg, rng);
  }
  throw DataError("sample_part: invalid part");
}

/// Largest-remainder allocation of `total` points over positive weights,
/// then a fix-up so no part ends up empty.
std::vector<std::size_t> allocate_counts(std::size_t total,
                                         const std::vector<double>& weights) {
  const std::size_t k = weights.size();
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  std::vector<std::size_t> counts(k, 0);
  std::vector<double> remainders(k, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = static_cast<double>(total) * weights[i] / weight_sum;
    counts[i] = static_cast<std::size_t>(exact);
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (remainders[i] > remainders[best]) best = i;
    }
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  for (std::size_t i = 0; i < k; ++i) {
    while (counts[i] == 0) {
      std::size_t donor = 0;
      for (std::size_t j = 1; j < k; ++j) {
        if (counts[j] > counts[donor]) donor = j;
      }
      --counts[donor];
      ++counts[i];
    }
  }
  return counts;
}

constexpr FineLabel kDroppableParts[] = {FineLabel::Head, FineLabel::LeftArm,
                                         FineLabel::RightArm, FineLabel::LeftLeg,
                                         FineLabel::RightLeg};

/// Two-state Markov schedule: enter dropout with probability q, stay with
/// probability s, tuned so the stationary dropped fraction is `prob` and
/// episodes last kDropoutMeanRun frames on average.
std::vector<bool> dropout_schedule(std::size_t n_frames, double prob, Rng& rng) {
  std::vector<bool> dropped(n_frames, false);
  if (prob <= 0.0) return dropped;
  if (prob >= 1.0) return std::vector<bool>(n_frames, true);
  const double stay = 1.0 - 1.0 / kDropoutMeanRun;
  const double enter = prob * (1.0 - stay) / (1.0 - prob);
  bool state = rng.uniform() < prob;  // stationary start
  for (std::size_t k = 0; k < n_frames; ++k) {
    dropped[k] = state;
    state = state ? (rng.uniform() < stay) : (rng.uniform() < enter);
  }
  return dropped;
}

}  // namespace

void GenConfig::validate() const {
  if (n_frames < 1) throw DataError("gen config: n_frames must be >= 1");
  if (points_per_frame < 6) throw DataError("gen config: points_per_frame must be >= 6");
  if (gait_period_frames < 1) throw DataError("gen config: gait_period_frames must be >= 1");
  if (noise_sigma < 0.0) throw DataError("gen config: negative noise_sigma");
  if (part_dropout_prob < 0.0 || part_dropout_prob > 1.0) {
    throw DataError("gen config: part_dropout_prob must be in [0, 1]");
  }
}

BodyShape BodyShape::draw(Rng& rng) {
  BodyShape s;
  s.scale = rng.uniform(0.92, 1.08);
  s.arm_scale = rng.uniform(0.95, 1.05);
  s.leg_scale = rng.uniform(0.95, 1.05);
  return s;
}

SkeletonPose pose_at(const BodyShape& shape, std::size_t frame_idx, const GenConfig& cfg) {
  const double s = shape.scale;
  const double phase =
      2.0 * kPi *
      static_cast<double>(frame_idx % cfg.gait_period_frames) /
      static_cast<double>(cfg.gait_period_frames);
  const double walk_x = kForwardPerFrame * s * static_cast<double>(frame_idx);

  SkeletonPose pose;
  pose.phase = phase;
  pose.head = {{walk_x, 0.0, 1.65 * s}, 0.11 * s};
  pose.torso = {{walk_x, 0.0, 1.10 * s}, {0.12 * s, 0.18 * s, 0.30 * s}};

  const double arm_len = 0.55 * s * shape.arm_scale;
  const double leg_len = 0.66 * s * shape.leg_scale;
  auto limb = [&](Vec3 joint, double length, double angle, double radius) {
    const Vec3 tip = joint + Vec3{length * std::sin(angle), 0.0, -length * std::cos(angle)};
    return SegmentGeom{joint, tip, radius};
  };
  // Left arm swings with the right leg; right arm with the left leg.
  pose.left_arm = limb({walk_x, 0.26 * s, 1.35 * s}, arm_len, kArmSwing * std::sin(phase),
                       0.045 * s);
  pose.right_arm = limb({walk_x, -0.26 * s, 1.35 * s}, arm_len,
                        kArmSwing * std::sin(phase + kPi), 0.045 * s);
  pose.left_leg = limb({walk_x, 0.10 * s, 0.72 * s}, leg_len,
                       kLegSwing * std::sin(phase + kPi), 0.055 * s);
  pose.right_leg = limb({walk_x, -0.10 * s, 0.72 * s}, leg_len,
                        kLegSwing * std::sin(phase), 0.055 * s);
  return pose;
}

double distance_to_part(const SkeletonPose& pose, FineLabel part, const Vec3& p) {
  switch (part) {
    case FineLabel::Head:
      return std::fabs((p - pose.head.center).norm() - pose.head.radius);
    case FineLabel::Chest:
      return box_surface_distance(pose.torso, p);
    case FineLabel::LeftArm:
      return std::fabs(segment_axis_distance(pose.left_arm, p) - pose.left_arm.radius);
    case FineLabel::RightArm:
      return std::fabs(segment_axis_distance(pose.right_arm, p) - pose.right_arm.radius);
    case FineLabel::LeftLeg:
      return std::fabs(segment_axis_distance(pose.left_leg, p) - pose.left_leg.radius);
    case FineLabel::RightLeg:
      return std::fabs(segment_axis_distance(pose.right_leg, p) - pose.right_leg.radius);
  }
  throw DataError("distance_to_part: invalid part");
}

FineLabel nearest_part(const SkeletonPose& pose, const Vec3& p) {
  FineLabel best = FineLabel::Head;
  double best_dist = distance_to_part(pose, best, p);
  for (int c = 1; c < kFineClasses; ++c) {
    const auto part = static_cast<FineLabel>(c);
    const double d = distance_to_part(pose, part, p);
    if (d < best_dist) {
      best = part;
      best_dist = d;
    }
  }
  return best;
}

Sequence generate(const GenConfig& cfg, const std::string& subject_id) {
  cfg.validate();
  Rng shape_rng(Rng::mix(cfg.seed, 1));
  Rng dropout_rng(Rng::mix(cfg.seed, 2));
  Rng point_rng(Rng::mix(cfg.seed, 3));

  const BodyShape shape = BodyShape::draw(shape_rng);
  std::vector<std::vector<bool>> dropped;
  for (FineLabel part : kDroppableParts) {
    (void)part;
    dropped.push_back(dropout_schedule(cfg.n_frames, cfg.part_dropout_prob, dropout_rng));
  }

  Sequence seq;
  seq.subject_id = subject_id;
  seq.frames.reserve(cfg.n_frames);
  for (std::size_t k = 0; k < cfg.n_frames; ++k) {
    const SkeletonPose pose = pose_at(shape, k, cfg);

    std::vector<FineLabel> visible{FineLabel::Chest};
    for (std::size_t d = 0; d < std::size(kDroppableParts); ++d) {
      if (!dropped[d][k]) visible.push_back(kDroppableParts[d]);
    }
    std::sort(visible.begin(), visible.end());
    std::vector<double> weights;
    for (FineLabel part : visible) weights.push_back(part_area(pose, part));
    const auto counts = allocate_counts(cfg.points_per_frame, weights);

    Frame frame;
    frame.frame_index = k;
    frame.points.reserve(cfg.points_per_frame);
    for (std::size_t v = 0; v < visible.size(); ++v) {
      for (std::size_t c = 0; c < counts[v]; ++c) {
        LabeledPoint pt;
        pt.position = sample_part(pose, visible[v], point_rng);
        pt.position.x += cfg.noise_sigma * point_rng.gaussian();
        pt.position.y += cfg.noise_sigma * point_rng.gaussian();
        pt.position.z += cfg.noise_sigma * point_rng.gaussian();
        pt.fine_label = visible[v];
        pt.coarse_label = coarsen(visible[v]);
        frame.points.push_back(pt);
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<Sequence> generate_dataset(const GenConfig& cfg, std::size_t n_subjects) {
  if (n_subjects < 1) throw DataError("generate_dataset: n_subjects must be >= 1");
  std::vector<Sequence> sequences;
  sequences.reserve(n_subjects);
  for (std::size_t i = 0; i < n_subjects; ++i) {
    GenConfig sub_cfg = cfg;
    sub_cfg.seed = Rng::mix(cfg.seed, 1000 + i);
    char id[32];
    std::snprintf(id, sizeof(id), "s%03zu", i);
    sequences.push_back(generate(sub_cfg, id));
  }
  return sequences;
}

}  // namespace radarseg
