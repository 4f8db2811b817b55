#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "pbbc/bitbox.hpp"
#include "pbbc/kdtree.hpp"
#include "pbbc/model.hpp"

namespace pbbc {

/// Payload of one eliminated bit box.
///
/// `widths` holds the 6-bit field values (m_d, or kLosslessWidth for a raw
/// dimension). `payload` stores, for every particle except the center, one
/// word per dimension in natural dimension order: the quantization code, or
/// the raw source-precision bit pattern for a lossless dimension.
struct Sequence {
  Point center{};
  std::array<int, kMaxDims> widths{};
  std::uint32_t particle_count = 1;
  std::vector<std::uint64_t> payload;
  std::vector<ParticleId> origin_ids;

  std::uint64_t word(std::size_t particle, int d, int dims) const { return payload[particle * dims + d]; }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

/// Bits one payload word occupies for a width field.
inline int field_bits(int width, int precision) { return width == kLosslessWidth ? precision : width; }

/// Sum over dimensions of the per-particle code bits of a sequence.
inline int bits_per_particle(const Sequence& seq, int dims, int precision) {
  int sum = 0;
  for (int d = 0; d < dims; ++d) sum += field_bits(seq.widths[d], precision);
  return sum;
}

inline std::uint64_t encode_raw(double v, int precision) {
  if (precision == 32) return std::bit_cast<std::uint32_t>(static_cast<float>(v));
  return std::bit_cast<std::uint64_t>(v);
}

inline double decode_raw(std::uint64_t bits, int precision) {
  if (precision == 32) return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)));
  return std::bit_cast<double>(bits);
}

struct EliminationRecord {
  int key_bits = 0;
  std::size_t particles_absorbed = 0;
  std::size_t boxes_updated = 0;
};

struct ReductionTrace {
  std::vector<EliminationRecord> eliminations;
  std::size_t initial_boxes = 0;
  std::size_t n_seq = 0;
  /// Own particles that no code could represent within eps and were kept back.
  std::size_t retained_particles = 0;
};

/// Min-priority queue of live boxes keyed by (bits, leaf id) with lazy invalidation.
class BoxQueue {
 public:
  explicit BoxQueue(std::size_t num_leaves = 0) : version_(num_leaves, 0), live_(num_leaves, false) {}

  void push(int leaf_id, int key) {
    ensure(leaf_id);
    ++version_[leaf_id];
    live_[leaf_id] = true;
    heap_.push({key, leaf_id, version_[leaf_id]});
  }

  void remove(int leaf_id) {
    ensure(leaf_id);
    ++version_[leaf_id];
    live_[leaf_id] = false;
  }

  bool empty() {
    drop_stale();
    return heap_.empty();
  }

  /// Removes and returns the live leaf with the smallest key (ties: smallest id).
  int pick_next() {
    drop_stale();
    if (heap_.empty()) throw Error(ErrorCode::NoLiveBoxes, "no live bit boxes remain");
    const int leaf_id = heap_.top().leaf_id;
    heap_.pop();
    remove(leaf_id);
    return leaf_id;
  }

 private:
  struct Entry {
    int key;
    int leaf_id;
    std::uint64_t version;
    bool operator>(const Entry& o) const { return key != o.key ? key > o.key : leaf_id > o.leaf_id; }
  };

  void ensure(int leaf_id) {
    if (static_cast<std::size_t>(leaf_id) >= version_.size()) {
      version_.resize(leaf_id + 1, 0);
      live_.resize(leaf_id + 1, false);
    }
  }

  void drop_stale() {
    while (!heap_.empty()) {
      const Entry& top = heap_.top();
      if (live_[top.leaf_id] && version_[top.leaf_id] == top.version) return;
      heap_.pop();
    }
  }

  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
  std::vector<std::uint64_t> version_;
  std::vector<bool> live_;
};

struct ReductionResult {
  std::vector<Sequence> sequences;
  ReductionTrace trace;
  double epsilon = 0.0;
  double delta_max = 0.0;
  std::size_t leaf_capacity = 0;
};

namespace detail {

/// Appends the payload words of particle `id` to `seq` if every quantized
/// dimension reconstructs within eps; leaves `seq` untouched otherwise.
inline bool append_particle(Sequence& seq, const BitBox& box, const ParticleSet& particles, ParticleId id,
                            double eps) {
  const int dims = particles.dims();
  std::array<std::uint64_t, kMaxDims> words{};
  for (int d = 0; d < dims; ++d) {
    const double v = particles.coord(id, d);
    if (box.lossless(d)) {
      words[d] = encode_raw(v, particles.precision());
      continue;
    }
    const auto code = try_quantize(v, box.center[d], box.widths[d], eps);
    if (!code) return false;
    words[d] = *code;
  }
  seq.payload.insert(seq.payload.end(), words.begin(), words.begin() + dims);
  seq.origin_ids.push_back(id);
  ++seq.particle_count;
  return true;
}

}  // namespace detail

/// Called after every elimination with the tree and the current leaf boxes.
using ReductionObserver = std::function<void(const KdTree&, std::span<const std::optional<BitBox>>)>;

/// Greedy bit-box elimination over a k-d partition of `particles`.
///
/// Every particle ends up in exactly one sequence, either as a center or as
/// a payload entry reconstructing within eps.
inline ReductionResult compress_to_sequences(const ParticleSet& particles, const CompressorConfig& config,
                                             const ReductionObserver& observer = {}) {
  ReductionResult result;
  result.epsilon = resolve_error_bound(config.error_bound, particles);
  result.delta_max = max_range(particles);
  result.leaf_capacity = leaf_capacity(config.r_ratio, particles.size());
  const double eps = result.epsilon;
  const int dims = particles.dims();
  const int precision = particles.precision();

  KdTree tree = KdTree::build(particles, result.leaf_capacity);
  const int num_leaves = static_cast<int>(tree.num_leaves());
  std::vector<std::optional<BitBox>> boxes(num_leaves);
  BoxQueue queue(num_leaves);

  for (int leaf = 0; leaf < num_leaves; ++leaf) {
    const auto& ids = tree.leaf_particles(leaf);
    boxes[leaf] = make_bit_box(ids, particles, eps);
    tree.set_leaf_box(leaf, boxes[leaf]->extent);
    queue.push(leaf, selection_key(*boxes[leaf], dims, precision));
  }
  tree.init_box_index();
  result.trace.initial_boxes = static_cast<std::size_t>(num_leaves);

  auto refresh_leaf = [&](int leaf) {
    const auto& ids = tree.leaf_particles(leaf);
    if (ids.empty()) {
      boxes[leaf].reset();
      tree.update_leaf_box(leaf, std::nullopt);
      queue.remove(leaf);
      return;
    }
    boxes[leaf] = make_bit_box(ids, particles, eps);
    tree.update_leaf_box(leaf, boxes[leaf]->extent);
    queue.push(leaf, selection_key(*boxes[leaf], dims, precision));
  };

  std::size_t remaining = particles.size();
  while (remaining > 0) {
    const int chosen_leaf = queue.pick_next();
    const BitBox chosen = *boxes[chosen_leaf];

    Sequence seq;
    seq.center = chosen.center;
    for (int d = 0; d < dims; ++d) seq.widths[d] = chosen.field_width(d);
    seq.origin_ids.push_back(chosen.center_particle_id);

    std::vector<ParticleId> retained;
    for (ParticleId id : tree.leaf_particles(chosen_leaf)) {
      if (id == chosen.center_particle_id) continue;
      if (!detail::append_particle(seq, chosen, particles, id, eps)) retained.push_back(id);
    }

    EliminationRecord record;
    record.key_bits = selection_key(chosen, dims, precision);
    for (int leaf : tree.query_intersections(chosen.extent)) {
      if (leaf == chosen_leaf) continue;
      auto& ids = tree.leaf_particles(leaf);
      std::vector<ParticleId> kept;
      kept.reserve(ids.size());
      for (ParticleId id : ids) {
        if (chosen.extent.contains(particles.point(id)) &&
            detail::append_particle(seq, chosen, particles, id, eps)) {
          ++record.particles_absorbed;
        } else {
          kept.push_back(id);
        }
      }
      if (kept.size() != ids.size()) {
        ids = std::move(kept);
        refresh_leaf(leaf);
        ++record.boxes_updated;
      }
    }

    result.trace.retained_particles += retained.size();
    tree.leaf_particles(chosen_leaf) = std::move(retained);
    refresh_leaf(chosen_leaf);

    remaining -= seq.particle_count;
    result.trace.eliminations.push_back(record);
    result.sequences.push_back(std::move(seq));
    if (observer) observer(tree, boxes);
  }
  result.trace.n_seq = result.sequences.size();
  return result;
}

}  // namespace pbbc
