#include "heatpot/spatial_adapt.hpp"

#include <algorithm>
#include <cmath>

#include "heatpot/errors.hpp"
#include "heatpot/parallel.hpp"

namespace heatpot {

namespace {

struct LeafData {
    std::vector<double> u; // ncomp * K^2, component-major
    std::vector<double> F;
};

struct AdaptCtx {
    const AdaptProvider* provider;
    int ncomp, K, max_level;
    double eps;
    bool test_u;
    double denom_u = 0.0, denom_F = 0.0;
    std::unordered_map<std::uint64_t, LeafData> store;
    int refined = 0, coarsened = 0;
    bool lmax_hit = false;
};

LeafData sample_box(const AdaptCtx& ctx, const Box& b) {
    const auto& e = cheb_engine(ctx.K);
    LeafData d;
    int K = ctx.K;
    d.u.resize(static_cast<std::size_t>(ctx.ncomp) * K * K);
    d.F.resize(static_cast<std::size_t>(ctx.ncomp) * K * K);
    std::vector<double> us(ctx.ncomp), fs(ctx.ncomp);
    double h = 0.5 * b.size();
    for (int bb = 0; bb < K; ++bb)
        for (int aa = 0; aa < K; ++aa) {
            (*ctx.provider)(b.cx() + h * e.nodes[aa], b.cy() + h * e.nodes[bb], us, fs);
            for (int c = 0; c < ctx.ncomp; ++c) {
                d.u[static_cast<std::size_t>(c) * K * K + bb * K + aa] = us[c];
                d.F[static_cast<std::size_t>(c) * K * K + bb * K + aa] = fs[c];
            }
        }
    return d;
}

// max |interp(parent values) - child values| over the four child grids
double child_mismatch(const AdaptCtx& ctx, const std::vector<double>& parent_vals,
                      const std::array<const LeafData*, 4>& kids, bool use_F) {
    const auto& e = cheb_engine(ctx.K);
    int K = ctx.K;
    double worst = 0.0;
    std::vector<double> coef(K * K), interp(K * K);
    static constexpr int cdi[4] = {0, 1, 0, 1};
    static constexpr int cdj[4] = {0, 0, 1, 1};
    for (int c = 0; c < ctx.ncomp; ++c) {
        e.values_to_coeffs(parent_vals.data() + static_cast<std::size_t>(c) * K * K, coef.data());
        for (int q = 0; q < 4; ++q) {
            e.eval_child_grid(coef.data(), cdi[q], cdj[q], interp.data());
            const auto& blk = use_F ? kids[q]->F : kids[q]->u;
            const double* vals = blk.data() + static_cast<std::size_t>(c) * K * K;
            for (int k = 0; k < K * K; ++k)
                worst = std::max(worst, std::fabs(interp[k] - vals[k]));
        }
    }
    return worst;
}

void refine_rec(AdaptCtx& ctx, AdaptiveTree& tree, std::int32_t id, LeafData data) {
    const Box b = tree.node(id).box;
    // provider values on the four child grids
    std::array<LeafData, 4> kid_data;
    static constexpr int cdi[4] = {0, 1, 0, 1};
    static constexpr int cdj[4] = {0, 0, 1, 1};
    for (int q = 0; q < 4; ++q)
        kid_data[q] = sample_box(ctx, Box{b.level + 1, 2 * b.i + cdi[q], 2 * b.j + cdj[q]});
    std::array<const LeafData*, 4> kptr{&kid_data[0], &kid_data[1], &kid_data[2], &kid_data[3]};

    double eF = child_mismatch(ctx, data.F, kptr, true) / std::max(ctx.denom_F, 1e-300);
    double err = eF;
    if (ctx.test_u) {
        double eu = child_mismatch(ctx, data.u, kptr, false) / std::max(ctx.denom_u, 1e-300);
        err = std::max(err, eu);
    }
    if (err < ctx.eps) {
        ctx.store[box_key(b)] = std::move(data);
        return;
    }
    if (b.level >= ctx.max_level) {
        ctx.lmax_hit = true;
        ctx.store[box_key(b)] = std::move(data);
        return;
    }
    auto kids = tree.subdivide(id);
    ++ctx.refined;
    for (int q = 0; q < 4; ++q) refine_rec(ctx, tree, kids[q], std::move(kid_data[q]));
}

} // namespace

SpatialAdaptResult spatial_adapt(const AdaptiveTree& start, int ncomp, int K,
                                 const AdaptProvider& provider, double eps, int max_level,
                                 bool test_u_refinement) {
    AdaptCtx ctx;
    ctx.provider = &provider;
    ctx.ncomp = ncomp;
    ctx.K = K;
    ctx.max_level = max_level;
    ctx.eps = eps;
    ctx.test_u = test_u_refinement;

    AdaptiveTree tree = start;
    auto ids = tree.leaves();
    std::vector<LeafData> initial(ids.size());
    parallel_for(ids.size(), [&](std::size_t k) {
        initial[k] = sample_box(ctx, tree.node(ids[k]).box);
    });
    for (const auto& d : initial) {
        for (double v : d.u) ctx.denom_u = std::max(ctx.denom_u, std::fabs(v));
        for (double v : d.F) ctx.denom_F = std::max(ctx.denom_F, std::fabs(v));
    }

    // Step 1: refinement
    for (std::size_t k = 0; k < ids.size(); ++k)
        refine_rec(ctx, tree, ids[k], std::move(initial[k]));

    // Step 2: coarsening, deepest parents first so cascades resolve in one pass
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::int32_t> parents;
        for (auto id : tree.leaves()) {
            auto pid = tree.node(id).parent;
            if (pid >= 0 && std::find(parents.begin(), parents.end(), pid) == parents.end())
                parents.push_back(pid);
        }
        std::sort(parents.begin(), parents.end(), [&](auto a, auto b) {
            return tree.node(a).box.level > tree.node(b).box.level;
        });
        for (auto pid : parents) {
            if (!tree.can_coarsen(pid)) continue;
            const Box pb = tree.node(pid).box;
            std::array<const LeafData*, 4> kptr;
            bool have = true;
            std::array<std::uint64_t, 4> kid_keys;
            for (int q = 0; q < 4 && have; ++q) {
                kid_keys[q] = box_key(tree.node(tree.node(pid).child[q]).box);
                auto it = ctx.store.find(kid_keys[q]);
                if (it == ctx.store.end())
                    have = false;
                else
                    kptr[q] = &it->second;
            }
            if (!have) continue;
            LeafData pd = sample_box(ctx, pb);
            double eu = child_mismatch(ctx, pd.u, kptr, false) / std::max(ctx.denom_u, 1e-300);
            double eF = child_mismatch(ctx, pd.F, kptr, true) / std::max(ctx.denom_F, 1e-300);
            if (std::max(eu, eF) >= ctx.eps) continue;
            tree.coarsen(pid);
            for (auto kk : kid_keys) ctx.store.erase(kk);
            ctx.store[box_key(pb)] = std::move(pd);
            ++ctx.coarsened;
            changed = true;
        }
    }

    // Assemble the solution field, then balance (interpolating new leaves).
    TreeField u(tree, ncomp, K);
    const auto& e = cheb_engine(K);
    for (auto id : u.tree().leaves()) {
        auto key = box_key(u.tree().node(id).box);
        auto it = ctx.store.find(key);
        if (it == ctx.store.end()) throw Error("spatial_adapt: missing leaf data");
        for (int c = 0; c < ncomp; ++c)
            e.values_to_coeffs(it->second.u.data() + static_cast<std::size_t>(c) * K * K,
                               u.coeffs(key, c).data());
    }
    u.tree().enforce_balance([&u](std::int32_t id) { u.subdivide_leaf(id); });
    u.sync_storage();
    u.set_resolve_eps(eps);
    u.set_max_level_hit(ctx.lmax_hit);

    SpatialAdaptResult r{std::move(u), ctx.refined, ctx.coarsened, ctx.lmax_hit};
    return r;
}

} // namespace heatpot
