#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "heatpot/adaptree.hpp"
#include "heatpot/chebpatch.hpp"

namespace heatpot {

/// Pointwise evaluator of a p-component function on D; writes ncomp values.
using FieldFn = std::function<void(double x, double y, std::span<double> out)>;

/// A p-component field stored as per-leaf, per-component Chebyshev patches
/// on its own adaptive tree, stamped with a simulation time.
class TreeField {
public:
    TreeField() = default;
    TreeField(AdaptiveTree tree, int ncomp, int K);

    const AdaptiveTree& tree() const { return tree_; }
    AdaptiveTree& tree() { return tree_; }
    int ncomp() const { return ncomp_; }
    int order() const { return K_; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }
    double resolve_eps() const { return eps_; }
    void set_resolve_eps(double e) { eps_ = e; }
    bool max_level_hit() const { return lmax_hit_; }
    void set_max_level_hit(bool f) { lmax_hit_ = f; }

    std::size_t point_count() const { return static_cast<std::size_t>(tree_.leaf_count()) * K_ * K_; }

    /// Coefficient block of one component on one leaf (length K^2, x degree fastest).
    std::span<double> coeffs(std::uint64_t leaf_key, int comp);
    std::span<const double> coeffs(std::uint64_t leaf_key, int comp) const;
    bool has_leaf(std::uint64_t leaf_key) const { return data_.count(leaf_key) != 0; }

    ChebPatch patch(std::uint64_t leaf_key, int comp) const;
    void set_patch(std::uint64_t leaf_key, int comp, const ChebPatch& p);

    /// Drop data for leaves no longer present and allocate blocks for new ones.
    void sync_storage();

    /// Evaluate all components at a point (wrapped into D).
    void eval(double x, double y, std::span<double> out) const;
    double eval1(double x, double y, int comp = 0) const;

    /// Populate every leaf by sampling f at the leaf nodes.
    void fill_from(const FieldFn& f);

    /// Largest tail_error over leaves and components.
    double max_tail_error() const;
    /// Max |coefficient-reconstructed value| over all leaf nodes of one component.
    double max_abs(int comp) const;
    /// Mean of one component over D (exact integral of the patches).
    double mean(int comp) const;

    /// Extract one component as a scalar field on the same tree.
    TreeField component(int comp) const;

    /// In-place axpy with a field on the identical tree.
    void add_scaled(const TreeField& other, double factor);
    void scale(double factor);

    /// Split a leaf, interpolating patch data to the children.
    void subdivide_leaf(std::int32_t node_id);

    /// Coarsen leaves (bottom-up) wherever the parent reproduces all four
    /// children within tol for every component and balance is preserved.
    void coarsen_resolved(double tol);

private:
    AdaptiveTree tree_;
    int ncomp_ = 1;
    int K_ = 8;
    double time_ = 0.0;
    double eps_ = 0.0;
    bool lmax_hit_ = false;
    std::unordered_map<std::uint64_t, std::vector<double>> data_;
};

/// Resolve f on an adaptive tree, then balance. The default resolution test
/// is the discrete l2 error of each leaf interpolant against f on a 2K x 2K
/// grid (with the coefficient estimate as a certified short-circuit); with
/// use_l2_metric = false only the coefficient estimate is used. Leaves
/// stopped at max_level are flagged on the result.
TreeField build_adaptive(const FieldFn& f, int ncomp, double eps, int K, int max_level,
                         bool use_l2_metric = true, int min_level = 0);

/// Sample an existing field onto a target tree.
TreeField resample_to_tree(const TreeField& field, const AdaptiveTree& target);

/// Tree whose leaves are the finest-of-both cover of the operands' leaves.
AdaptiveTree union_tree(const AdaptiveTree& a, const AdaptiveTree& b);

/// Resample all operands to their union tree and form sum_i w_i f_i.
TreeField weighted_sum(std::span<const TreeField* const> fields, std::span<const double> weights);

/// Binary snapshot format: magic, version, K, p, eps, t header followed by
/// per-leaf records (level u8, i u32, j u32, p*K^2 coeff doubles), leaves in
/// Morton order, everything little-endian. Round trips bit-exactly.
void save_field(const TreeField& f, const std::string& path);
TreeField load_field(const std::string& path);

} // namespace heatpot
