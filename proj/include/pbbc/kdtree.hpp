#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "pbbc/model.hpp"

namespace pbbc {

/// Median-split k-d tree over a particle set.
///
/// Leaves hold at most `max_leaf_size` particles. Every node additionally
/// carries an optional box: for a leaf it is the extent of the leaf's bit
/// box, for an internal node the hull of its children's boxes. An absent box
/// marks a hidden (emptied) subtree. The hull hierarchy answers box overlap
/// queries without visiting every leaf.
class KdTree {
 public:
  struct Node {
    int parent = -1;
    int left = -1;
    int right = -1;
    int split_dim = -1;
    double split_value = 0.0;
    int leaf_id = -1;
    int depth = 0;
    std::vector<ParticleId> particle_ids;
    std::optional<Aabb> box;

    bool is_leaf() const noexcept { return left < 0; }
  };

  static KdTree build(const ParticleSet& particles, std::size_t max_leaf_size) {
    if (particles.empty()) throw Error(ErrorCode::EmptySelection, "cannot build a tree without particles");
    if (max_leaf_size == 0) throw Error(ErrorCode::InvalidArgument, "leaf size must be at least 1");
    KdTree tree;
    tree.dims_ = particles.dims();
    std::vector<ParticleId> ids(particles.size());
    std::iota(ids.begin(), ids.end(), ParticleId{0});
    tree.nodes_.reserve(2 * (particles.size() / max_leaf_size + 1));
    tree.build_node(particles, ids, 0, ids.size(), -1, 0, max_leaf_size);
    return tree;
  }

  int dims() const noexcept { return dims_; }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_leaves() const noexcept { return leaf_nodes_.size(); }
  const Node& node(int index) const { return nodes_.at(index); }
  const Node& root() const { return nodes_.front(); }

  /// Node indices of all leaves, in leaf_id order.
  const std::vector<int>& leaves() const noexcept { return leaf_nodes_; }

  const Node& leaf(int leaf_id) const { return nodes_.at(leaf_nodes_.at(leaf_id)); }
  std::vector<ParticleId>& leaf_particles(int leaf_id) { return nodes_.at(leaf_nodes_.at(leaf_id)).particle_ids; }

  /// Assigns a leaf box without touching ancestors; follow with init_box_index().
  void set_leaf_box(int leaf_id, std::optional<Aabb> box) {
    nodes_.at(leaf_nodes_.at(leaf_id)).box = std::move(box);
  }

  /// Bottom-up hull initialization over the whole tree.
  void init_box_index() {
    for (int leaf_id = 0; leaf_id < static_cast<int>(leaf_nodes_.size()); ++leaf_id) {
      const Node& n = nodes_[leaf_nodes_[leaf_id]];
      if (!n.particle_ids.empty() && !n.box)
        throw Error(ErrorCode::MissingLeafBox, "leaf " + std::to_string(leaf_id) + " has particles but no box");
    }
    // Children are always created after their parent.
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
      if (!nodes_[i].is_leaf()) refresh_hull(i);
  }

  /// Leaf ids (ascending) of live leaves whose boxes overlap `probe`.
  std::vector<int> query_intersections(const Aabb& probe) const {
    std::vector<int> hits;
    if (nodes_.empty()) return hits;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (!n.box || !n.box->intersects(probe)) continue;
      if (n.is_leaf()) {
        hits.push_back(n.leaf_id);
      } else {
        stack.push_back(n.right);
        stack.push_back(n.left);
      }
    }
    return hits;
  }

  /// Replaces a leaf box (absent hides it) and refreshes the hulls on the
  /// root path. Returns the number of nodes touched.
  int update_leaf_box(int leaf_id, std::optional<Aabb> box) {
    int index = leaf_nodes_.at(leaf_id);
    nodes_[index].box = std::move(box);
    int touched = 1;
    for (index = nodes_[index].parent; index >= 0; index = nodes_[index].parent) {
      refresh_hull(index);
      ++touched;
    }
    return touched;
  }

 private:
  void refresh_hull(int index) {
    Node& n = nodes_[index];
    const auto& a = nodes_[n.left].box;
    const auto& b = nodes_[n.right].box;
    if (a && b) {
      Aabb hull = *a;
      hull.expand(*b);
      n.box = hull;
    } else if (a) {
      n.box = a;
    } else {
      n.box = b;
    }
  }

  int build_node(const ParticleSet& particles, std::vector<ParticleId>& ids, std::size_t begin,
                 std::size_t end, int parent, int depth, std::size_t max_leaf_size) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[index].parent = parent;
    nodes_[index].depth = depth;
    const std::size_t count = end - begin;
    const auto range = std::span<const ParticleId>(ids).subspan(begin, count);

    if (count <= max_leaf_size) {
      nodes_[index].leaf_id = static_cast<int>(leaf_nodes_.size());
      nodes_[index].particle_ids.assign(range.begin(), range.end());
      leaf_nodes_.push_back(index);
      return index;
    }

    // Widest extent wins; ties go to the lowest dimension.
    const Aabb box = compute_aabb(range, particles);
    int split_dim = 0;
    for (int d = 1; d < dims_; ++d)
      if (box.hi[d] - box.lo[d] > box.hi[split_dim] - box.lo[split_dim]) split_dim = d;

    // Order by (coordinate, id); the median element opens the upper half.
    const std::size_t mid = begin + count / 2;
    auto less = [&](ParticleId a, ParticleId b) {
      const double ca = particles.coord(a, split_dim);
      const double cb = particles.coord(b, split_dim);
      return ca < cb || (ca == cb && a < b);
    };
    std::nth_element(ids.begin() + begin, ids.begin() + mid, ids.begin() + end, less);

    nodes_[index].split_dim = split_dim;
    nodes_[index].split_value = particles.coord(ids[mid], split_dim);
    const int left = build_node(particles, ids, begin, mid, index, depth + 1, max_leaf_size);
    const int right = build_node(particles, ids, mid, end, index, depth + 1, max_leaf_size);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  int dims_ = 3;
  std::vector<Node> nodes_;
  std::vector<int> leaf_nodes_;
};

}  // namespace pbbc
