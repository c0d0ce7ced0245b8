#pragma once

#include "fracinv/coefficients.hpp"
#include "fracinv/fields.hpp"
#include "fracinv/frac_time.hpp"
#include "fracinv/inversion.hpp"
#include "fracinv/mesh.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace fracinv {

/// Default mollifier width (grid cells) when smoothing is requested without one.
inline constexpr double kDefaultMollifyWidth = 2.0;
/// Lower bound on |R| at the top face below which h is not formed.
inline constexpr double kDefaultSourceFactorBound = 1e-8;

/// Separable truncated-Gaussian smoothing of a trace-grid field in (x1, t).
/// The standard deviation is `width` cells in each direction and the
/// kernel is cut at three deviations; weights are renormalized near the
/// edges of the grid. The implicit zero column at t_0 is not smoothed.
TraceMatrix mollify(const TraceMatrix& g, double width);

/// Boundary right-hand side of the fixed-point equation h = f + H f:
///   h = [ d_t^alpha g - d1(a11 d1 g) - (d2 a12) d1 g + q g ] / R   at x2 = ell,
/// with the discrete Caputo derivative in t (g_0 = 0), conservative centered
/// differences in x1 and second-order one-sided closures at x1 = -+1/2.
TraceMatrix fixed_point_h(const LateralObservation& g, const Mesh2D& mesh, const CoefficientSet& coeffs,
                          const CQWeights& weights, const TimeGrid& grid,
                          std::optional<double> mollify_width = std::nullopt,
                          double c_R = kDefaultSourceFactorBound);

using BoundaryOperator = std::function<TraceMatrix(const TraceMatrix&)>;

/// H phi = a22 d2^2 u_phi / R at the top face, where u_phi is the Neumann
/// problem with source phi R and the normal second derivative uses the
/// three-layer stencil (-7 u_M + 8 u_{M-1} - u_{M-2}) / (2 h^2) that builds
/// in the zero normal derivative. Needs M >= 3.
BoundaryOperator make_boundary_operator(InversionContext& ctx);

struct FixedPointResult {
    SourceGrid f;
    int iterations = 0;
    /// |f^{j+1} - f^j| for every completed iteration.
    std::vector<double> increments;
    bool converged = false;
};

/// f^{j+1} = h - H f^j from f^0 = h until |f^{j+1} - f^j| <= tol |f^j| or
/// j = max_iter. Throws DivergenceError when the increment fails to decrease
/// three times in a row.
FixedPointResult fixed_point_solve(const TraceMatrix& h, const BoundaryOperator& H, const TraceSpace& space,
                                   int max_iter = 50, double tol = 1e-10);

} // namespace fracinv
