#include "heatpot/treefield.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "heatpot/errors.hpp"
#include "heatpot/parallel.hpp"

namespace heatpot {

TreeField::TreeField(AdaptiveTree tree, int ncomp, int K)
    : tree_(std::move(tree)), ncomp_(ncomp), K_(K) {
    sync_storage();
}

std::span<double> TreeField::coeffs(std::uint64_t key, int comp) {
    auto it = data_.find(key);
    if (it == data_.end()) throw Error("TreeField: no data for leaf");
    return {it->second.data() + static_cast<std::size_t>(comp) * K_ * K_,
            static_cast<std::size_t>(K_) * K_};
}

std::span<const double> TreeField::coeffs(std::uint64_t key, int comp) const {
    auto it = data_.find(key);
    if (it == data_.end()) throw Error("TreeField: no data for leaf");
    return {it->second.data() + static_cast<std::size_t>(comp) * K_ * K_,
            static_cast<std::size_t>(K_) * K_};
}

ChebPatch TreeField::patch(std::uint64_t key, int comp) const {
    auto c = coeffs(key, comp);
    ChebPatch p;
    p.K = K_;
    p.box = key_box(key);
    p.coef.assign(c.begin(), c.end());
    return p;
}

void TreeField::set_patch(std::uint64_t key, int comp, const ChebPatch& p) {
    auto c = coeffs(key, comp);
    std::copy(p.coef.begin(), p.coef.end(), c.begin());
}

void TreeField::sync_storage() {
    std::unordered_map<std::uint64_t, std::vector<double>> fresh;
    for (auto id : tree_.leaves()) {
        auto key = box_key(tree_.node(id).box);
        auto it = data_.find(key);
        if (it != data_.end())
            fresh.emplace(key, std::move(it->second));
        else
            fresh.emplace(key, std::vector<double>(static_cast<std::size_t>(ncomp_) * K_ * K_, 0.0));
    }
    data_ = std::move(fresh);
}

void TreeField::eval(double x, double y, std::span<double> out) const {
    double xw = wrap_unit(x), yw = wrap_unit(y);
    auto id = tree_.find_leaf(xw, yw);
    const Box& b = tree_.node(id).box;
    double xi = 2.0 * (xw - b.cx()) / b.size();
    double eta = 2.0 * (yw - b.cy()) / b.size();
    xi = std::clamp(xi, -1.0, 1.0);
    eta = std::clamp(eta, -1.0, 1.0);
    const auto& e = cheb_engine(K_);
    auto it = data_.find(box_key(b));
    for (int c = 0; c < ncomp_; ++c)
        out[c] = e.eval(it->second.data() + static_cast<std::size_t>(c) * K_ * K_, xi, eta);
}

double TreeField::eval1(double x, double y, int comp) const {
    std::vector<double> buf(ncomp_);
    eval(x, y, buf);
    return buf[comp];
}

void TreeField::fill_from(const FieldFn& f) {
    const auto& e = cheb_engine(K_);
    auto ids = tree_.leaves();
    parallel_for(ids.size(), [&](std::size_t k) {
        const Box& b = tree_.node(ids[k]).box;
        auto& blk = data_.at(box_key(b));
        std::vector<double> vals(static_cast<std::size_t>(ncomp_) * K_ * K_);
        std::vector<double> sample(ncomp_);
        double h = 0.5 * b.size();
        for (int bb = 0; bb < K_; ++bb)
            for (int aa = 0; aa < K_; ++aa) {
                f(b.cx() + h * e.nodes[aa], b.cy() + h * e.nodes[bb], sample);
                for (int c = 0; c < ncomp_; ++c)
                    vals[static_cast<std::size_t>(c) * K_ * K_ + bb * K_ + aa] = sample[c];
            }
        for (int c = 0; c < ncomp_; ++c)
            e.values_to_coeffs(vals.data() + static_cast<std::size_t>(c) * K_ * K_,
                               blk.data() + static_cast<std::size_t>(c) * K_ * K_);
    });
}

double TreeField::max_tail_error() const {
    double worst = 0.0;
    for (auto id : tree_.leaves()) {
        auto key = box_key(tree_.node(id).box);
        for (int c = 0; c < ncomp_; ++c) worst = std::max(worst, tail_error(patch(key, c)));
    }
    return worst;
}

double TreeField::max_abs(int comp) const {
    const auto& e = cheb_engine(K_);
    double worst = 0.0;
    std::vector<double> vals(static_cast<std::size_t>(K_) * K_);
    for (auto id : tree_.leaves()) {
        auto c = coeffs(box_key(tree_.node(id).box), comp);
        e.coeffs_to_values(c.data(), vals.data());
        for (double v : vals) worst = std::max(worst, std::fabs(v));
    }
    return worst;
}

double TreeField::mean(int comp) const {
    const auto& e = cheb_engine(K_);
    double total = 0.0;
    for (auto id : tree_.leaves()) {
        const Box& b = tree_.node(id).box;
        double quarter_area = 0.25 * b.size() * b.size();
        total += quarter_area * e.integral(coeffs(box_key(b), comp).data());
    }
    return total;
}

TreeField TreeField::component(int comp) const {
    TreeField out(tree_, 1, K_);
    out.time_ = time_;
    out.eps_ = eps_;
    for (auto& [key, blk] : out.data_) {
        auto src = coeffs(key, comp);
        std::copy(src.begin(), src.end(), blk.begin());
    }
    return out;
}

void TreeField::add_scaled(const TreeField& other, double factor) {
    if (other.ncomp_ != ncomp_ || other.K_ != K_)
        throw Error("add_scaled: field layout mismatch");
    for (auto& [key, blk] : data_) {
        auto it = other.data_.find(key);
        if (it == other.data_.end()) throw Error("add_scaled: trees differ");
        for (std::size_t k = 0; k < blk.size(); ++k) blk[k] += factor * it->second[k];
    }
}

void TreeField::scale(double factor) {
    for (auto& [key, blk] : data_)
        for (auto& v : blk) v *= factor;
}

void TreeField::subdivide_leaf(std::int32_t node_id) {
    auto parent_key = box_key(tree_.node(node_id).box);
    std::vector<ChebPatch> pp(ncomp_);
    for (int c = 0; c < ncomp_; ++c) pp[c] = patch(parent_key, c);
    auto kids = tree_.subdivide(node_id);
    for (int c = 0; c < ncomp_; ++c) {
        auto grids = interp_to_children(pp[c]);
        for (int q = 0; q < 4; ++q) {
            auto key = box_key(tree_.node(kids[q]).box);
            auto it = data_.find(key);
            if (it == data_.end())
                it = data_.emplace(key, std::vector<double>(static_cast<std::size_t>(ncomp_) * K_ * K_, 0.0)).first;
            auto p = vals2coeffs(grids[q]);
            std::copy(p.coef.begin(), p.coef.end(),
                      it->second.begin() + static_cast<std::size_t>(c) * K_ * K_);
        }
    }
    data_.erase(parent_key);
}

void TreeField::coarsen_resolved(double tol) {
    bool changed = true;
    while (changed) {
        changed = false;
        // Deepest parents first so cascades resolve in one sweep.
        std::vector<std::int32_t> parents;
        for (auto id : tree_.leaves()) {
            auto pid = tree_.node(id).parent;
            if (pid >= 0 && std::find(parents.begin(), parents.end(), pid) == parents.end())
                parents.push_back(pid);
        }
        std::sort(parents.begin(), parents.end(), [&](auto a, auto b) {
            return tree_.node(a).box.level > tree_.node(b).box.level;
        });
        for (auto pid : parents) {
            if (!tree_.can_coarsen(pid)) continue;
            bool ok = true;
            std::vector<ChebPatch> merged(ncomp_);
            for (int c = 0; c < ncomp_ && ok; ++c) {
                std::array<ChebPatch, 4> ch;
                for (int q = 0; q < 4; ++q)
                    ch[q] = patch(box_key(tree_.node(tree_.node(pid).child[q]).box), c);
                auto fit = parent_fit_error(ch);
                if (fit.err > tol) ok = false;
                else merged[c] = std::move(fit.parent);
            }
            if (!ok) continue;
            std::array<std::uint64_t, 4> child_keys;
            for (int q = 0; q < 4; ++q)
                child_keys[q] = box_key(tree_.node(tree_.node(pid).child[q]).box);
            tree_.coarsen(pid);
            for (auto k : child_keys) data_.erase(k);
            auto key = box_key(tree_.node(pid).box);
            auto& blk = data_[key];
            blk.assign(static_cast<std::size_t>(ncomp_) * K_ * K_, 0.0);
            for (int c = 0; c < ncomp_; ++c)
                std::copy(merged[c].coef.begin(), merged[c].coef.end(),
                          blk.begin() + static_cast<std::size_t>(c) * K_ * K_);
            changed = true;
        }
    }
}

namespace {

struct BuildCtx {
    const FieldFn* f;
    int ncomp, K, max_level;
    double eps;
    bool use_l2; // l2-on-2K-grid metric (default) vs coefficient estimate only
    bool lmax_hit = false;
};

// Returns per-component patches if the function is resolved on the box,
// empty if the box must be split.
bool resolved_on_box(BuildCtx& ctx, const Box& b, std::vector<ChebPatch>& out) {
    const auto& e = cheb_engine(ctx.K);
    int K = ctx.K;
    std::vector<double> vals(static_cast<std::size_t>(ctx.ncomp) * K * K);
    std::vector<double> sample(ctx.ncomp);
    double h = 0.5 * b.size();
    for (int bb = 0; bb < K; ++bb)
        for (int aa = 0; aa < K; ++aa) {
            (*ctx.f)(b.cx() + h * e.nodes[aa], b.cy() + h * e.nodes[bb], sample);
            for (int c = 0; c < ctx.ncomp; ++c)
                vals[static_cast<std::size_t>(c) * K * K + bb * K + aa] = sample[c];
        }
    out.assign(ctx.ncomp, ChebPatch{});
    bool ok = true;
    for (int c = 0; c < ctx.ncomp; ++c) {
        out[c].K = K;
        out[c].box = b;
        out[c].coef.resize(static_cast<std::size_t>(K) * K);
        e.values_to_coeffs(vals.data() + static_cast<std::size_t>(c) * K * K, out[c].coef.data());
    }
    if (!ctx.use_l2) {
        for (int c = 0; c < ctx.ncomp && ok; ++c)
            if (resolve_error(out[c]) > ctx.eps) ok = false;
        return ok;
    }
    // Default metric: discrete l2 error of the interpolant against f on the
    // 2K x 2K grid. Coefficient estimates cannot short-circuit this test:
    // features far narrower than the node spacing alias to near-zero samples
    // and perfectly flat coefficients (two sharp peaks on the root grid).
    auto pts = resolve_grid_points(b, K);
    std::vector<double> fs(static_cast<std::size_t>(ctx.ncomp) * pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        (*ctx.f)(pts[k].x, pts[k].y, sample);
        for (int c = 0; c < ctx.ncomp; ++c) fs[static_cast<std::size_t>(c) * pts.size() + k] = sample[c];
    }
    for (int c = 0; c < ctx.ncomp && ok; ++c) {
        std::vector<double> one(fs.begin() + static_cast<std::ptrdiff_t>(c) * pts.size(),
                                fs.begin() + static_cast<std::ptrdiff_t>(c + 1) * pts.size());
        if (l2_resolve_error(out[c], one) > ctx.eps) ok = false;
    }
    return ok;
}

void build_rec(BuildCtx& ctx, AdaptiveTree& tree, std::int32_t id,
               std::unordered_map<std::uint64_t, std::vector<ChebPatch>>& patches) {
    const Box b = tree.node(id).box;
    std::vector<ChebPatch> pp;
    bool ok = resolved_on_box(ctx, b, pp);
    if (ok || b.level >= ctx.max_level) {
        if (!ok) ctx.lmax_hit = true;
        patches.emplace(box_key(b), std::move(pp));
        return;
    }
    auto kids = tree.subdivide(id);
    for (auto k : kids) build_rec(ctx, tree, k, patches);
}

} // namespace

TreeField build_adaptive(const FieldFn& f, int ncomp, double eps, int K, int max_level,
                         bool use_l2_metric, int min_level) {
    BuildCtx ctx{&f, ncomp, K, max_level, eps, use_l2_metric};
    AdaptiveTree tree;
    // features far narrower than the root sampling grid alias invisibly, so
    // callers can force a uniform starting depth before the adaptive descent
    for (int l = 0; l < std::min(min_level, max_level); ++l)
        for (auto id : tree.leaves()) tree.subdivide(id);
    std::unordered_map<std::uint64_t, std::vector<ChebPatch>> patches;
    for (auto id : tree.leaves()) build_rec(ctx, tree, id, patches);

    TreeField out(std::move(tree), ncomp, K);
    for (auto& [key, pp] : patches)
        for (int c = 0; c < ncomp; ++c) out.set_patch(key, c, pp[c]);
    out.tree().enforce_balance([&](std::int32_t id) { out.subdivide_leaf(id); });
    out.sync_storage();
    out.set_resolve_eps(eps);
    out.set_max_level_hit(ctx.lmax_hit);
    return out;
}

TreeField resample_to_tree(const TreeField& field, const AdaptiveTree& target) {
    TreeField out(target, field.ncomp(), field.order());
    out.set_time(field.time());
    out.set_resolve_eps(field.resolve_eps());
    out.fill_from([&field](double x, double y, std::span<double> v) { field.eval(x, y, v); });
    return out;
}

AdaptiveTree union_tree(const AdaptiveTree& a, const AdaptiveTree& b) {
    AdaptiveTree u = a;
    for (auto id : b.leaves()) {
        const Box& box = b.node(id).box;
        u.require(box.level, box.i, box.j);
    }
    return u;
}

TreeField weighted_sum(std::span<const TreeField* const> fields, std::span<const double> weights) {
    if (fields.empty() || fields.size() != weights.size())
        throw Error("weighted_sum: operand mismatch");
    AdaptiveTree u = fields[0]->tree();
    for (std::size_t k = 1; k < fields.size(); ++k) u = union_tree(u, fields[k]->tree());
    TreeField acc = resample_to_tree(*fields[0], u);
    acc.scale(weights[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
        TreeField t = resample_to_tree(*fields[k], u);
        acc.add_scaled(t, weights[k]);
    }
    return acc;
}

namespace {

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return static_cast<bool>(is);
}

constexpr std::uint32_t kMagic = 0x48505446u; // "HPTF"
constexpr std::uint32_t kVersion = 1u;

} // namespace

void save_field(const TreeField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_field: cannot open " + path);
    put(os, kMagic);
    put(os, kVersion);
    put(os, static_cast<std::uint32_t>(f.order()));
    put(os, static_cast<std::uint32_t>(f.ncomp()));
    put(os, f.resolve_eps());
    put(os, f.time());
    for (auto id : f.tree().leaves()) {
        const Box& b = f.tree().node(id).box;
        put(os, static_cast<std::uint8_t>(b.level));
        put(os, b.i);
        put(os, b.j);
        for (int c = 0; c < f.ncomp(); ++c) {
            auto span = f.coeffs(box_key(b), c);
            os.write(reinterpret_cast<const char*>(span.data()),
                     static_cast<std::streamsize>(span.size() * sizeof(double)));
        }
    }
    if (!os) throw Error("save_field: write failed for " + path);
}

TreeField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("load_field: cannot open " + path);
    std::uint32_t magic = 0, version = 0, K = 0, p = 0;
    double eps = 0, t = 0;
    if (!get(is, magic) || magic != kMagic) throw Error("load_field: bad magic");
    if (!get(is, version) || version != kVersion) throw Error("load_field: bad version");
    get(is, K);
    get(is, p);
    get(is, eps);
    if (!get(is, t)) throw Error("load_field: truncated header");

    struct Rec {
        Box box;
        std::vector<double> coef;
    };
    std::vector<Rec> recs;
    for (;;) {
        std::uint8_t level;
        if (!get(is, level)) break;
        Rec r;
        r.box.level = level;
        if (!get(is, r.box.i) || !get(is, r.box.j)) throw Error("load_field: truncated record");
        r.coef.resize(static_cast<std::size_t>(p) * K * K);
        is.read(reinterpret_cast<char*>(r.coef.data()),
                static_cast<std::streamsize>(r.coef.size() * sizeof(double)));
        if (!is) throw Error("load_field: truncated coefficients");
        recs.push_back(std::move(r));
    }

    AdaptiveTree tree;
    for (const auto& r : recs) tree.require(r.box.level, r.box.i, r.box.j);
    TreeField out(std::move(tree), static_cast<int>(p), static_cast<int>(K));
    out.set_resolve_eps(eps);
    out.set_time(t);
    for (const auto& r : recs) {
        auto key = box_key(r.box);
        if (!out.has_leaf(key)) throw Error("load_field: leaf records do not tile the domain");
        for (int c = 0; c < static_cast<int>(p); ++c) {
            auto dst = out.coeffs(key, c);
            std::copy(r.coef.begin() + static_cast<std::ptrdiff_t>(c) * K * K,
                      r.coef.begin() + static_cast<std::ptrdiff_t>(c + 1) * K * K, dst.begin());
        }
    }
    return out;
}

} // namespace heatpot
