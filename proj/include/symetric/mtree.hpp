#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace symetric {

/// Reference index: every query scans every stored object.
template <class Object, class Metric>
class LinearScanIndex {
 public:
  explicit LinearScanIndex(Metric metric = Metric{}) : metric_(std::move(metric)) {}

  std::size_t insert(Object o) {
    objects_.push_back(std::move(o));
    return objects_.size() - 1;
  }

  /// Ids of all objects within `radius` of `q`, ascending.
  std::vector<std::size_t> range_query(const Object& q, double radius) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      ++distance_calls_;
      if (metric_(q, objects_[i]) <= radius) out.push_back(i);
    }
    return out;
  }

  const Object& object(std::size_t id) const { return objects_[id]; }
  std::size_t size() const noexcept { return objects_.size(); }
  std::size_t distance_calls() const noexcept { return distance_calls_; }

 private:
  Metric metric_;
  std::vector<Object> objects_;
  mutable std::size_t distance_calls_ = 0;
};

/// M-tree over a metric space (Ciaccia, Patella & Zezula 1997). Routing entries
/// keep a covering radius and the distance to their parent's routing object;
/// range queries prune with the triangle inequality. Insert-only.
template <class Object, class Metric>
class MTree {
 public:
  explicit MTree(Metric metric = Metric{}, std::size_t node_capacity = 16)
      : metric_(std::move(metric)), capacity_(std::max<std::size_t>(node_capacity, 4)) {
    nodes_.push_back(Node{true, {}});
    root_ = 0;
  }

  std::size_t insert(Object o) {
    const std::size_t id = objects_.size();
    objects_.push_back(std::move(o));
    if (auto split = insert_into(root_, id, std::nullopt)) {
      Node root{false, {split->first, split->second}};
      root.entries[0].parent_dist = 0;
      root.entries[1].parent_dist = 0;
      nodes_.push_back(std::move(root));
      root_ = nodes_.size() - 1;
    }
    return id;
  }

  /// Ids of all objects within `radius` of `q`, ascending.
  std::vector<std::size_t> range_query(const Object& q, double radius) const {
    std::vector<std::size_t> out;
    if (!objects_.empty()) search(root_, q, radius, std::nullopt, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  const Object& object(std::size_t id) const { return objects_[id]; }
  std::size_t size() const noexcept { return objects_.size(); }
  std::size_t distance_calls() const noexcept { return distance_calls_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  static constexpr double kSlack = 1e-9;

  struct Entry {
    std::size_t object = 0;
    double parent_dist = 0;  // distance to the routing object of the enclosing node
    double radius = 0;       // covering radius (routing entries)
    std::size_t child = 0;   // subtree (routing entries)
  };
  struct Node {
    bool leaf = true;
    std::vector<Entry> entries;
  };
  using Split = std::pair<Entry, Entry>;

  double dist(std::size_t a, std::size_t b) const {
    ++distance_calls_;
    return metric_(objects_[a], objects_[b]);
  }
  double dist(const Object& q, std::size_t b) const {
    ++distance_calls_;
    return metric_(q, objects_[b]);
  }

  std::optional<Split> insert_into(std::size_t node, std::size_t id, std::optional<std::size_t> parent_obj) {
    if (nodes_[node].leaf) {
      Entry e;
      e.object = id;
      e.parent_dist = parent_obj ? dist(id, *parent_obj) : 0.0;
      nodes_[node].entries.push_back(e);
    } else {
      // Prefer a subtree that already covers the object; otherwise the one
      // whose radius grows the least.
      std::size_t best = 0;
      double best_key = 0;
      bool best_covers = false;
      std::vector<double> d(nodes_[node].entries.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        const Entry& e = nodes_[node].entries[i];
        d[i] = dist(id, e.object);
        const bool covers = d[i] <= e.radius;
        const double key = covers ? d[i] : d[i] - e.radius;
        if (i == 0 || (covers && !best_covers) || (covers == best_covers && key < best_key)) {
          best = i;
          best_key = key;
          best_covers = covers;
        }
      }
      Entry& chosen = nodes_[node].entries[best];
      if (d[best] > chosen.radius) chosen.radius = d[best];
      const std::size_t child = chosen.child;
      const std::size_t routing = chosen.object;
      if (auto split = insert_into(child, id, routing)) {
        std::vector<Entry>& es = nodes_[node].entries;
        split->first.parent_dist = parent_obj ? dist(split->first.object, *parent_obj) : 0.0;
        split->second.parent_dist = parent_obj ? dist(split->second.object, *parent_obj) : 0.0;
        es[best] = split->first;
        es.push_back(split->second);
      }
    }
    if (nodes_[node].entries.size() > capacity_) return split_node(node);
    return std::nullopt;
  }

  // Promotes the two farthest-apart entries and assigns every entry to the
  // closer of the two.
  Split split_node(std::size_t node) {
    std::vector<Entry> es = std::move(nodes_[node].entries);
    const bool leaf = nodes_[node].leaf;
    const std::size_t n = es.size();
    std::vector<double> dm(n * n, 0.0);
    std::size_t p1 = 0, p2 = 1;
    double far = -1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        dm[i * n + j] = dm[j * n + i] = dist(es[i].object, es[j].object);
        if (dm[i * n + j] > far) {
          far = dm[i * n + j];
          p1 = i;
          p2 = j;
        }
      }
    Node a{leaf, {}}, b{leaf, {}};
    double ra = 0, rb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double da = dm[i * n + p1], db = dm[i * n + p2];
      Entry e = es[i];
      const bool to_a = i == p1 || (i != p2 && da <= db);
      if (to_a) {
        e.parent_dist = da;
        ra = std::max(ra, da + (leaf ? 0.0 : e.radius));
        a.entries.push_back(e);
      } else {
        e.parent_dist = db;
        rb = std::max(rb, db + (leaf ? 0.0 : e.radius));
        b.entries.push_back(e);
      }
    }
    nodes_[node] = std::move(a);
    nodes_.push_back(std::move(b));
    Entry ea, eb;
    ea.object = es[p1].object;
    ea.radius = ra;
    ea.child = node;
    eb.object = es[p2].object;
    eb.radius = rb;
    eb.child = nodes_.size() - 1;
    return {ea, eb};
  }

  void search(std::size_t node, const Object& q, double radius, std::optional<double> d_parent,
              std::vector<std::size_t>& out) const {
    const Node& nd = nodes_[node];
    for (const Entry& e : nd.entries) {
      const double reach = radius + (nd.leaf ? 0.0 : e.radius);
      if (d_parent && std::abs(*d_parent - e.parent_dist) > reach + kSlack) continue;
      const double d = dist(q, e.object);
      if (nd.leaf) {
        if (d <= radius) out.push_back(e.object);
      } else if (d <= reach + kSlack) {
        search(e.child, q, radius, d, out);
      }
    }
  }

  Metric metric_;
  std::size_t capacity_;
  std::vector<Object> objects_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
  mutable std::size_t distance_calls_ = 0;
};

}  // namespace symetric
