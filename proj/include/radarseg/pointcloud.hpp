// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radarseg/tensor.hpp"

namespace radarseg {

/// Six-part body taxonomy; the enum values are the class indices used by the
/// network heads and metrics.
enum class FineLabel : int {
  Head = 0,
  Chest = 1,
  LeftArm = 2,
  RightArm = 3,
  LeftLeg = 4,
  RightLeg = 5,
};

/// Merged three-class taxonomy for the auxiliary head.
enum class CoarseLabel : int {
  HeadTorso = 0,
  Arm = 1,
  Leg = 2,
};

inline constexpr int kFineClasses = 6;
inline constexpr int kCoarseClasses = 3;

/// Head,Chest -> HeadTorso; LeftArm,RightArm -> Arm; LeftLeg,RightLeg -> Leg.
CoarseLabel coarsen(FineLabel fine);

std::string_view to_string(FineLabel label);    // csv spelling: "left_arm", ...
std::string_view to_string(CoarseLabel label);  // "head_torso", "arm", "leg"
std::optional<FineLabel> fine_label_from_string(std::string_view s);
std::optional<CoarseLabel> coarse_label_from_string(std::string_view s);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm2() const { return dot(*this); }
  double norm() const;
  bool finite() const;
  bool operator==(const Vec3&) const = default;
};

struct LabeledPoint {
  Vec3 position;  // meters
  FineLabel fine_label = FineLabel::Head;
  CoarseLabel coarse_label = CoarseLabel::HeadTorso;

  bool operator==(const LabeledPoint&) const = default;
};

/// One radar capture: n >= 1 labeled points, in file order. The network must
/// not depend on that order (tested in the net suite).
struct Frame {
  std::vector<LabeledPoint> points;
  std::size_t frame_index = 0;

  bool operator==(const Frame&) const = default;
};

/// Ordered captures of one subject; frame indices strictly increase.
struct Sequence {
  std::string subject_id;
  std::vector<Frame> frames;

  bool operator==(const Sequence&) const = default;
};

/// Symmetric Gauss-similarity matrix: w[i][j] = exp(-|p_i - p_j|^2), unit
/// diagonal, entries in (0, 1].
struct AdjacencyWeights {
  std::size_t n = 0;
  Tensor w;  // n x n

  double at(std::size_t i, std::size_t j) const { return w.at(i, j); }
};

AdjacencyWeights gauss_weights(std::span<const Vec3> points);
AdjacencyWeights gauss_weights(const Frame& frame);

/// CSV schema (UTF-8, header required):
///   subject_id,frame_idx,x,y,z,fine_label,coarse_label
/// Floats carry 17 significant digits so a write/read round trip is
/// bit-exact. Rows are grouped by subject, sorted by (frame_idx, point order).
std::vector<Sequence> read_sequences(const std::string& path);
/// Like read_sequences but the file must hold exactly one subject.
Sequence read_sequence(const std::string& path);
void write_sequences(std::span<const Sequence> sequences, const std::string& path);
void write_sequence(const Sequence& sequence, const std::string& path);

struct SplitResult {
  Sequence train, test, val;
};

/// Disjoint frame-level partition by seeded shuffle. Fractions must sum to 1
/// (within 1e-9); counts are rounded by largest remainder so they always sum
/// to the frame total. Each part keeps its frames in increasing index order.
SplitResult split(const Sequence& seq, double train_frac, double test_frac,
                  double val_frac, std::uint64_t rng_seed);

}  // namespace radarseg
