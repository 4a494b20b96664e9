#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "heatpot/treefield.hpp"

namespace heatpot {

/// One concrete evolution problem: components, per-component diffusion,
/// initial data, forcing and (when semilinear) its Jacobian in u.
class Problem {
public:
    enum class Kind { Linear, Semilinear, GradientCoupled };

    virtual ~Problem() = default;
    virtual std::string name() const = 0;
    virtual int ncomp() const = 0;
    virtual Kind kind() const = 0;
    virtual std::vector<double> diffusion() const = 0;
    /// Apply the Helmholtz projection to the forcing before use (Stokes, NS).
    virtual bool needs_projection() const { return false; }
    virtual void initial(double x, double y, std::span<double> out) const = 0;
    /// F(u, x, t); the u argument is ignored for linear problems. For
    /// gradient-coupled problems this is only the external force f(x, t)
    /// (the advection part is assembled field-wise, see ns_nonlinear).
    virtual void forcing(std::span<const double> u, double x, double y, double t,
                         std::span<double> out) const = 0;
    /// dF/du, row-major p x p; semilinear problems must provide it.
    virtual void jacobian(std::span<const double> u, double x, double y, double t,
                          std::span<double> J) const;
    virtual bool has_exact() const { return false; }
    virtual void exact(double x, double y, double t, std::span<double> out) const;
};

struct HeatForcingParams {
    double width = 2.5e-3; // squared width of the moving Gaussians
    double diffusion = 1.0;
};

/// Eq-style rotating forcing: periodized difference of two Gaussians whose
/// centers orbit at different angular velocities.
double heat_forcing(double x, double y, double t, double width = 2.5e-3);

struct GrayScottParams {
    double gamma = 0.04;
    double kappa = 0.1;
    double du = 2e-5;
    double dv = 1e-5;
};

void gray_scott_rhs(double u, double v, const GrayScottParams& p, double& fu, double& fv);
void gray_scott_jacobian(double u, double v, const GrayScottParams& p, std::span<double> J);
void gray_scott_ic(double x, double y, double& u, double& v);

/// Closed-form manufactured Stokes solution and the forcing that makes it
/// exact: F = u_t - nu lap(u) + grad p.
struct StokesManufacturedEval {
    double u, v, p;
    double f1, f2; // forcing components
};
StokesManufacturedEval unsteady_stokes_manufactured(double x, double y, double t, double nu);

/// Divergence-free rotating Gaussian vortex (profiling problem); the printed
/// form of its second component is replaced by the stream-function-consistent
/// sign so that div u = 0 holds.
void stokes_vortex_field(double x, double y, double t, double width, double& u, double& v);
/// Forcing making the vortex field an exact unsteady Stokes solution with
/// pressure 0: F = u_t - nu lap(u).
void stokes_vortex_forcing(double x, double y, double t, double width, double nu,
                           double& f1, double& f2);

enum class ShearOrientation { Classical, PaperLiteral };
void shear_layer_ic(double x, double y, double rho, double perturbation,
                    ShearOrientation orientation, double& u1, double& u2);

/// F = -(u . grad) u + f(x, t) assembled from per-leaf Chebyshev gradients.
TreeField ns_nonlinear(const TreeField& u, const Problem& problem, double t);

/// Scalar curl of a velocity field: w = dv/dx - du/dy, per-leaf.
TreeField vorticity(const TreeField& u);

struct ProblemParams {
    double nu = 1.0;
    double forcing_width = 2.5e-3;
    double diffusion = 1.0;
    GrayScottParams gray_scott;
    double rho = 30.0;
    double perturbation = 0.05;
    ShearOrientation orientation = ShearOrientation::Classical;
};

/// Factory for the named problems: forced_heat, gray_scott,
/// stokes_manufactured, stokes_vortex, ns_shear_layer, taylor_green.
std::unique_ptr<Problem> make_problem(const std::string& name, const ProblemParams& params);

} // namespace heatpot
