#pragma once

#include <array>
#include <deque>
#include <string>

#include "heatpot/treefield.hpp"

namespace heatpot {

enum class SchemeKind { Implicit, Explicit, PredictorCorrector };

/// Linear multistep quadrature of the Duhamel integral. Coefficients are the
/// classical Adams ones: b_0 = 0 for explicit schemes, b_s = 0 for implicit.
struct MultistepScheme {
    int order = 1; // s in {1, 2, 4}
    SchemeKind kind = SchemeKind::Implicit;
    std::array<double, 5> b{}; // b[0..s]

    static MultistepScheme adams_moulton(int s);
    static MultistepScheme adams_bashforth(int s);
    static MultistepScheme predictor_corrector(int s);
    /// Parse am1/am2/am4/ab1/ab2/ab4/pc2/pc4.
    static MultistepScheme parse(const std::string& name);

    /// Number of stored past forcing fields required for one step.
    int history_needed() const {
        return kind == SchemeKind::Implicit ? order - 1 : order;
    }
    std::string name() const;
};

/// Ring of the last s forcing fields (solenoidal projections for Stokes/NS),
/// newest first; entries are timestamped via TreeField::time().
struct HistoryBuffer {
    std::deque<TreeField> forcing;
    int capacity = 1;

    void push(TreeField f) {
        forcing.push_front(std::move(f));
        while (static_cast<int>(forcing.size()) > capacity) forcing.pop_back();
    }
};

/// Per-step profile: phase wall times (seconds) and throughput.
struct StepReport {
    int step = 0;
    double t = 0.0;
    int n_leaf = 0;
    std::size_t n_pts = 0;
    double t_total = 0, t_fgt = 0, t_proj = 0, t_nl = 0, t_adapt = 0;
    int nl_iters_max = 0;
    int refined = 0, coarsened = 0;

    double rate(double seconds) const {
        return seconds > 0.0 ? static_cast<double>(n_pts) / seconds : 0.0;
    }
    static std::string csv_header();
    std::string csv_row() const;
};

} // namespace heatpot
