#include "heatpot/multistep.hpp"

#include <sstream>

#include "heatpot/errors.hpp"

namespace heatpot {

MultistepScheme MultistepScheme::adams_moulton(int s) {
    MultistepScheme m;
    m.order = s;
    m.kind = SchemeKind::Implicit;
    switch (s) {
        case 1: m.b = {1.0, 0, 0, 0, 0}; break;
        case 2: m.b = {0.5, 0.5, 0, 0, 0}; break;
        case 4: m.b = {9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0, 0}; break;
        default: throw ConfigError("adams_moulton: order must be 1, 2 or 4");
    }
    return m;
}

MultistepScheme MultistepScheme::adams_bashforth(int s) {
    MultistepScheme m;
    m.order = s;
    m.kind = SchemeKind::Explicit;
    switch (s) {
        case 1: m.b = {0, 1.0, 0, 0, 0}; break;
        case 2: m.b = {0, 1.5, -0.5, 0, 0}; break;
        case 4: m.b = {0, 55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0}; break;
        default: throw ConfigError("adams_bashforth: order must be 1, 2 or 4");
    }
    return m;
}

MultistepScheme MultistepScheme::predictor_corrector(int s) {
    auto m = adams_moulton(s); // corrector coefficients; predictor derived at step time
    m.kind = SchemeKind::PredictorCorrector;
    return m;
}

MultistepScheme MultistepScheme::parse(const std::string& name) {
    if (name == "am1") return adams_moulton(1);
    if (name == "am2") return adams_moulton(2);
    if (name == "am4") return adams_moulton(4);
    if (name == "ab1") return adams_bashforth(1);
    if (name == "ab2") return adams_bashforth(2);
    if (name == "ab4") return adams_bashforth(4);
    if (name == "pc1") return predictor_corrector(1);
    if (name == "pc2") return predictor_corrector(2);
    if (name == "pc4") return predictor_corrector(4);
    throw ConfigError("unknown scheme: " + name);
}

std::string MultistepScheme::name() const {
    std::string k = kind == SchemeKind::Implicit ? "am"
                    : kind == SchemeKind::Explicit ? "ab"
                                                   : "pc";
    return k + std::to_string(order);
}

std::string StepReport::csv_header() {
    return "step,t,n_leaf,n_pts,t_total,t_fgt,t_proj,t_nl,t_adapt,"
           "rate_total,rate_fgt,rate_proj,rate_nl,rate_adapt,nl_iters,refined,coarsened";
}

std::string StepReport::csv_row() const {
    std::ostringstream os;
    os.precision(10);
    os << step << ',' << t << ',' << n_leaf << ',' << n_pts << ',' << t_total << ',' << t_fgt
       << ',' << t_proj << ',' << t_nl << ',' << t_adapt << ',' << rate(t_total) << ','
       << rate(t_fgt) << ',' << rate(t_proj) << ',' << rate(t_nl) << ',' << rate(t_adapt) << ','
       << nl_iters_max << ',' << refined << ',' << coarsened;
    return os.str();
}

} // namespace heatpot
