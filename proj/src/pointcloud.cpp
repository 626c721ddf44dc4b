// SPDX-License-Identifier: Apache-2.0
#include "radarseg/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "radarseg/errors.hpp"
#include "radarseg/rng.hpp"

namespace radarseg {

namespace {

constexpr std::string_view kHeader = "subject_id,frame_idx,x,y,z,fine_label,coarse_label";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const char* column) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ParseError("non-numeric " + std::string(column) + " value '" + s + "'", line_no);
  }
  if (!std::isfinite(v)) {
    throw ParseError("non-finite " + std::string(column) + " value '" + s + "'", line_no);
  }
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line_no) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError("frame_idx must be a non-negative integer, got '" + s + "'", line_no);
  }
  return static_cast<std::size_t>(std::strtoull(s.c_str(), nullptr, 10));
}

}  // namespace

CoarseLabel coarsen(FineLabel fine) {
  switch (fine) {
    case FineLabel::Head:
    case FineLabel::Chest:
      return CoarseLabel::HeadTorso;
    case FineLabel::LeftArm:
    case FineLabel::RightArm:
      return CoarseLabel::Arm;
    case FineLabel::LeftLeg:
    case FineLabel::RightLeg:
      return CoarseLabel::Leg;
  }
  throw DataError("coarsen: invalid fine label " +
                  std::to_string(static_cast<int>(fine)));
}

std::string_view to_string(FineLabel label) {
  switch (label) {
    case FineLabel::Head: return "head";
    case FineLabel::Chest: return "chest";
    case FineLabel::LeftArm: return "left_arm";
    case FineLabel::RightArm: return "right_arm";
    case FineLabel::LeftLeg: return "left_leg";
    case FineLabel::RightLeg: return "right_leg";
  }
  return "?";
}

std::string_view to_string(CoarseLabel label) {
  switch (label) {
    case CoarseLabel::HeadTorso: return "head_torso";
    case CoarseLabel::Arm: return "arm";
    case CoarseLabel::Leg: return "leg";
  }
  return "?";
}

std::optional<FineLabel> fine_label_from_string(std::string_view s) {
  for (int i = 0; i < kFineClasses; ++i) {
    const auto label = static_cast<FineLabel>(i);
    if (s == to_string(label)) return label;
  }
  return std::nullopt;
}

std::optional<CoarseLabel> coarse_label_from_string(std::string_view s) {
  for (int i = 0; i < kCoarseClasses; ++i) {
    const auto label = static_cast<CoarseLabel>(i);
    if (s == to_string(label)) return label;
  }
  return std::nullopt;
}

double Vec3::norm() const { return std::sqrt(norm2()); }

bool Vec3::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

AdjacencyWeights gauss_weights(std::span<const Vec3> points) {
  const std::size_t n = points.size();
  if (n == 0) throw DataError("gauss_weights: empty point set");
  for (const Vec3& p : points) {
    if (!p.finite()) throw DataError("gauss_weights: non-finite coordinate");
  }
  AdjacencyWeights out;
  out.n = n;
  out.w = Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.w.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double wij = std::exp(-(points[i] - points[j]).norm2());
      out.w.at(i, j) = wij;
      out.w.at(j, i) = wij;
    }
  }
  return out;
}

AdjacencyWeights gauss_weights(const Frame& frame) {
  std::vector<Vec3> pts;
  pts.reserve(frame.points.size());
  for (const LabeledPoint& p : frame.points) pts.push_back(p.position);
  return gauss_weights(pts);
}

std::vector<Sequence> read_sequences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw ParseError("bad header, expected '" + std::string(kHeader) + "'", 1);
  }

  std::vector<Sequence> sequences;
  std::vector<std::string> finished_subjects;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (fields.size() != 7) {
      throw ParseError("expected 7 columns, got " + std::to_string(fields.size()), line_no);
    }
    const std::string& subject = fields[0];
    if (subject.empty()) throw ParseError("empty subject_id", line_no);
    const std::size_t frame_idx = parse_index(fields[1], line_no);
    LabeledPoint point;
    point.position.x = parse_double(fields[2], line_no, "x");
    point.position.y = parse_double(fields[3], line_no, "y");
    point.position.z = parse_double(fields[4], line_no, "z");
    const auto fine = fine_label_from_string(fields[5]);
    if (!fine) throw ParseError("unknown fine_label '" + fields[5] + "'", line_no);
    const auto coarse = coarse_label_from_string(fields[6]);
    if (!coarse) throw ParseError("unknown coarse_label '" + fields[6] + "'", line_no);
    point.fine_label = *fine;
    point.coarse_label = *coarse;
    if (coarsen(*fine) != *coarse) {
      throw ParseError("coarse_label '" + fields[6] + "' does not match fine_label '" +
                       fields[5] + "'", line_no);
    }

    if (sequences.empty() || sequences.back().subject_id != subject) {
      if (std::find(finished_subjects.begin(), finished_subjects.end(), subject) !=
          finished_subjects.end()) {
        throw ParseError("rows for subject '" + subject + "' are not contiguous", line_no);
      }
      if (!sequences.empty()) finished_subjects.push_back(sequences.back().subject_id);
      sequences.push_back(Sequence{subject, {}});
      sequences.back().frames.push_back(Frame{{}, frame_idx});
    } else {
      Sequence& seq = sequences.back();
      const std::size_t last_idx = seq.frames.back().frame_index;
      if (frame_idx < last_idx) {
        throw ParseError("frame_idx " + std::to_string(frame_idx) +
                         " is not increasing (previous " + std::to_string(last_idx) + ")",
                         line_no);
      }
      if (frame_idx > last_idx) seq.frames.push_back(Frame{{}, frame_idx});
    }
    sequences.back().frames.back().points.push_back(point);
  }
  if (sequences.empty()) throw ParseError("file contains no data rows", line_no);
  return sequences;
}

Sequence read_sequence(const std::string& path) {
  auto sequences = read_sequences(path);
  if (sequences.size() != 1) {
    throw DataError("'" + path + "' holds " + std::to_string(sequences.size()) +
                    " subjects, expected exactly 1");
  }
  return std::move(sequences.front());
}

void write_sequences(std::span<const Sequence> sequences, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kHeader << "\n";
  for (const Sequence& seq : sequences) {
    if (seq.subject_id.empty() ||
        seq.subject_id.find_first_of(",\r\n") != std::string::npos) {
      throw DataError("subject_id '" + seq.subject_id + "' is not csv-safe");
    }
    if (seq.frames.empty()) throw DataError("sequence '" + seq.subject_id + "' has no frames");
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
      const Frame& frame = seq.frames[f];
      if (f > 0 && frame.frame_index <= seq.frames[f - 1].frame_index) {
        throw DataError("frame indices of '" + seq.subject_id + "' are not strictly increasing");
      }
      if (frame.points.empty()) {
        throw DataError("frame " + std::to_string(frame.frame_index) + " of '" +
                        seq.subject_id + "' has no points");
      }
      for (const LabeledPoint& p : frame.points) {
        out << seq.subject_id << ',' << frame.frame_index << ','
            << format_double(p.position.x) << ',' << format_double(p.position.y) << ','
            << format_double(p.position.z) << ',' << to_string(p.fine_label) << ','
            << to_string(p.coarse_label) << '\n';
      }
    }
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_sequence(const Sequence& sequence, const std::string& path) {
  write_sequences(std::span<const Sequence>(&sequence, 1), path);
}

SplitResult split(const Sequence& seq, double train_frac, double test_frac,
                  double val_frac, std::uint64_t rng_seed) {
  if (train_frac < 0 || test_frac < 0 || val_frac < 0 ||
      std::fabs(train_frac + test_frac + val_frac - 1.0) > 1e-9) {
    throw DataError("split fractions must be non-negative and sum to 1");
  }
  const std::size_t total = seq.frames.size();
  const double fracs[3] = {train_frac, test_frac, val_frac};

  // Largest-remainder rounding: counts always sum to the frame total.
  std::size_t counts[3];
  double remainders[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fracs[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(exact);
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < total) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (remainders[i] > remainders[best]) best = i;
    }
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }

  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(rng_seed);
  rng.shuffle(order);

  SplitResult result;
  Sequence* parts[3] = {&result.train, &result.test, &result.val};
  std::size_t cursor = 0;
  for (int i = 0; i < 3; ++i) {
    parts[i]->subject_id = seq.subject_id;
    std::vector<std::size_t> picked(order.begin() + cursor,
                                    order.begin() + cursor + counts[i]);
    cursor += counts[i];
    std::sort(picked.begin(), picked.end());
    for (std::size_t idx : picked) parts[i]->frames.push_back(seq.frames[idx]);
  }
  return result;
}

}  // namespace radarseg
