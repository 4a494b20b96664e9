#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "heatpot/geometry.hpp"

namespace heatpot {

/// Level-restricted periodic quadtree over D = [-1/2, 1/2]^2.
///
/// Nodes are addressed by (level, i, j); the root is level 0. Every interior
/// node has exactly four children stored in SW, SE, NW, NE order. After
/// enforce_balance(), any two leaves sharing an edge or corner point under
/// the periodic wrap differ by at most one level.
class AdaptiveTree {
public:
    struct Node {
        Box box;
        std::int32_t parent = -1;
        std::int32_t child[4] = {-1, -1, -1, -1}; // SW, SE, NW, NE
        bool leaf = true;
        bool alive = true;
    };

    AdaptiveTree();

    int node_count() const { return live_nodes_; }
    int leaf_count() const;
    int max_depth() const;
    const Node& node(std::int32_t id) const { return nodes_[id]; }

    std::int32_t find(int level, std::uint32_t i, std::uint32_t j) const;
    std::int32_t find(std::uint64_t key) const;

    /// Split a leaf into four children; returns their ids (SW, SE, NW, NE).
    /// The optional on_subdivide callback fires before returning.
    std::array<std::int32_t, 4> subdivide(std::int32_t id);

    /// Remove the four (leaf) children of a node, making it a leaf again.
    void coarsen(std::int32_t id);

    /// Ensure the node at (level, i, j) exists, subdividing ancestors as
    /// needed. If a subdivider is given it must perform the split itself
    /// (e.g. TreeField::subdivide_leaf); otherwise subdivide() is used.
    std::int32_t require(int level, std::uint32_t i, std::uint32_t j,
                         const std::function<void(std::int32_t)>& subdivider = nullptr);

    /// Leaf ids in Morton (depth-first SW, SE, NW, NE) order.
    std::vector<std::int32_t> leaves() const;

    /// Leaf containing point (x, y); the point is wrapped into D first.
    std::int32_t find_leaf(double x, double y) const;

    /// All leaves sharing an edge or corner with the given leaf, periodic wrap
    /// included. A leaf on a 1-cell-wide level may see itself as a neighbor.
    std::vector<std::int32_t> neighbors_periodic(std::int32_t id) const;

    /// True if coarsening the children of `parent_id` away would keep the
    /// 2:1 restriction intact.
    bool can_coarsen(std::int32_t parent_id) const;

    /// Enforce the 2:1 edge/corner balance by refinement only. If a
    /// subdivider is given it must perform each split itself; otherwise
    /// subdivide() is used.
    void enforce_balance(const std::function<void(std::int32_t)>& subdivider = nullptr);

    /// Brute-force O(N_b^2) check of the 2:1 periodic balance condition.
    bool is_balanced_bruteforce() const;

    /// Geometric adjacency of two boxes on the torus (edge or corner sharing).
    static bool boxes_adjacent_periodic(const Box& a, const Box& b);

private:
    void leaves_rec(std::int32_t id, std::vector<std::int32_t>& out) const;
    void collect_adjacent(std::int32_t id, const Box& query, std::vector<std::int32_t>& out) const;

    std::vector<Node> nodes_;
    std::unordered_map<std::uint64_t, std::int32_t> index_;
    int live_nodes_ = 0;
};

} // namespace heatpot
