#include "heatpot/adaptree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "heatpot/errors.hpp"

namespace heatpot {

namespace {
constexpr int kDi[4] = {0, 1, 0, 1};
constexpr int kDj[4] = {0, 0, 1, 1};
} // namespace

AdaptiveTree::AdaptiveTree() {
    Node root;
    root.box = Box{0, 0, 0};
    nodes_.push_back(root);
    index_[box_key(root.box)] = 0;
    live_nodes_ = 1;
}

int AdaptiveTree::leaf_count() const {
    int n = 0;
    for (const auto& nd : nodes_)
        if (nd.alive && nd.leaf) ++n;
    return n;
}

int AdaptiveTree::max_depth() const {
    int d = 0;
    for (const auto& nd : nodes_)
        if (nd.alive && nd.leaf) d = std::max(d, nd.box.level);
    return d;
}

std::int32_t AdaptiveTree::find(int level, std::uint32_t i, std::uint32_t j) const {
    return find(box_key(level, i, j));
}

std::int32_t AdaptiveTree::find(std::uint64_t key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return -1;
    return nodes_[it->second].alive ? it->second : -1;
}

std::array<std::int32_t, 4> AdaptiveTree::subdivide(std::int32_t id) {
    if (!nodes_[id].leaf) throw Error("subdivide: node is not a leaf");
    std::array<std::int32_t, 4> out;
    const Box pb = nodes_[id].box;
    for (int c = 0; c < 4; ++c) {
        Node ch;
        ch.box = Box{pb.level + 1, 2 * pb.i + kDi[c], 2 * pb.j + kDj[c]};
        ch.parent = id;
        auto key = box_key(ch.box);
        auto it = index_.find(key);
        std::int32_t cid;
        if (it != index_.end()) { // resurrect a previously coarsened slot
            cid = it->second;
            nodes_[cid] = ch;
        } else {
            cid = static_cast<std::int32_t>(nodes_.size());
            nodes_.push_back(ch);
            index_[key] = cid;
        }
        out[c] = cid;
        nodes_[id].child[c] = cid;
    }
    nodes_[id].leaf = false;
    live_nodes_ += 4;
    return out;
}

void AdaptiveTree::coarsen(std::int32_t id) {
    Node& nd = nodes_[id];
    if (nd.leaf) throw Error("coarsen: node has no children");
    for (int c = 0; c < 4; ++c) {
        Node& ch = nodes_[nd.child[c]];
        if (!ch.leaf) throw Error("coarsen: children are not leaves");
        ch.alive = false;
        nd.child[c] = -1;
    }
    nd.leaf = true;
    live_nodes_ -= 4;
}

std::int32_t AdaptiveTree::require(int level, std::uint32_t i, std::uint32_t j,
                                   const std::function<void(std::int32_t)>& subdivider) {
    std::int32_t id = find(level, i, j);
    if (id >= 0) return id;
    if (level == 0) throw Error("require: missing root");
    std::int32_t pid = require(level - 1, i / 2, j / 2, subdivider);
    if (nodes_[pid].leaf) {
        if (subdivider)
            subdivider(pid);
        else
            subdivide(pid);
    }
    return nodes_[pid].child[(j & 1u) * 2 + (i & 1u)];
}

void AdaptiveTree::leaves_rec(std::int32_t id, std::vector<std::int32_t>& out) const {
    const Node& nd = nodes_[id];
    if (nd.leaf) {
        out.push_back(id);
        return;
    }
    for (int c = 0; c < 4; ++c) leaves_rec(nd.child[c], out);
}

std::vector<std::int32_t> AdaptiveTree::leaves() const {
    std::vector<std::int32_t> out;
    out.reserve(nodes_.size());
    leaves_rec(0, out);
    return out;
}

std::int32_t AdaptiveTree::find_leaf(double x, double y) const {
    double xw = wrap_unit(x), yw = wrap_unit(y);
    std::int32_t id = 0;
    while (!nodes_[id].leaf) {
        const Box& b = nodes_[id].box;
        int di = xw >= b.cx() ? 1 : 0;
        int dj = yw >= b.cy() ? 1 : 0;
        id = nodes_[id].child[dj * 2 + di];
    }
    return id;
}

bool AdaptiveTree::boxes_adjacent_periodic(const Box& a, const Box& b) {
    auto touch1d = [](double lo1, double hi1, double lo2, double hi2) {
        for (int s = -1; s <= 1; ++s) {
            double l = lo2 + s, h = hi2 + s;
            if (hi1 >= l - 1e-12 && h >= lo1 - 1e-12) return true;
        }
        return false;
    };
    return touch1d(a.x_lo(), a.x_lo() + a.size(), b.x_lo(), b.x_lo() + b.size()) &&
           touch1d(a.y_lo(), a.y_lo() + a.size(), b.y_lo(), b.y_lo() + b.size());
}

void AdaptiveTree::collect_adjacent(std::int32_t id, const Box& query,
                                    std::vector<std::int32_t>& out) const {
    const Node& nd = nodes_[id];
    if (!boxes_adjacent_periodic(nd.box, query)) return;
    if (nd.leaf) {
        out.push_back(id);
        return;
    }
    for (int c = 0; c < 4; ++c) collect_adjacent(nd.child[c], query, out);
}

std::vector<std::int32_t> AdaptiveTree::neighbors_periodic(std::int32_t id) const {
    const Box& b = nodes_[id].box;
    std::uint32_t n = 1u << b.level;
    std::vector<std::int32_t> out;
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0) continue;
            Box cell{b.level, (b.i + n + di) % n, (b.j + n + dj) % n};
            // Walk up to the first existing node covering the cell.
            int lvl = cell.level;
            std::uint32_t ci = cell.i, cj = cell.j;
            std::int32_t nid = find(lvl, ci, cj);
            while (nid < 0) {
                --lvl;
                ci /= 2;
                cj /= 2;
                nid = find(lvl, ci, cj);
            }
            if (nodes_[nid].leaf) {
                if (nid != id && std::find(out.begin(), out.end(), nid) == out.end())
                    out.push_back(nid);
            } else {
                std::vector<std::int32_t> sub;
                collect_adjacent(nid, b, sub);
                for (auto s : sub)
                    if (s != id && std::find(out.begin(), out.end(), s) == out.end())
                        out.push_back(s);
            }
        }
    // On 1- or 2-cell-wide levels distinct offsets may alias to this cell itself.
    out.erase(std::remove(out.begin(), out.end(), id), out.end());
    return out;
}

bool AdaptiveTree::can_coarsen(std::int32_t parent_id) const {
    const Node& nd = nodes_[parent_id];
    if (nd.leaf) return false;
    for (int c = 0; c < 4; ++c)
        if (!nodes_[nd.child[c]].leaf) return false;
    // The merged leaf sits at nd.box.level; no adjacent leaf may be deeper
    // than level + 1. Children's neighbors bound the post-merge adjacency.
    for (int c = 0; c < 4; ++c) {
        for (auto nb : neighbors_periodic(nd.child[c])) {
            const Node& nbn = nodes_[nb];
            if (nbn.parent == parent_id) continue; // siblings vanish with the merge
            if (nbn.box.level > nd.box.level + 1) return false;
        }
    }
    return true;
}

void AdaptiveTree::enforce_balance(const std::function<void(std::int32_t)>& subdivider) {
    std::deque<std::int32_t> queue;
    for (auto id : leaves()) queue.push_back(id);
    while (!queue.empty()) {
        std::int32_t id = queue.front();
        queue.pop_front();
        if (!nodes_[id].alive || !nodes_[id].leaf) continue;
        const int my_level = nodes_[id].box.level;
        bool split = false;
        auto nbs = neighbors_periodic(id);
        for (auto nb : nbs) {
            if (nodes_[nb].box.level > my_level + 1) {
                split = true;
                break;
            }
        }
        if (!split) continue;
        if (subdivider)
            subdivider(id);
        else
            subdivide(id);
        for (int c = 0; c < 4; ++c) queue.push_back(nodes_[id].child[c]);
        // Coarser neighbors may become unbalanced now that this leaf split.
        for (auto nb : nbs)
            if (nodes_[nb].alive && nodes_[nb].box.level < my_level) queue.push_back(nb);
    }
}

bool AdaptiveTree::is_balanced_bruteforce() const {
    auto ls = leaves();
    for (std::size_t a = 0; a < ls.size(); ++a)
        for (std::size_t b = a + 1; b < ls.size(); ++b) {
            const Box& ba = nodes_[ls[a]].box;
            const Box& bb = nodes_[ls[b]].box;
            if (std::abs(ba.level - bb.level) <= 1) continue;
            if (boxes_adjacent_periodic(ba, bb)) return false;
        }
    return true;
}

} // namespace heatpot
