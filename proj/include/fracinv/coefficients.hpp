#pragma once

#include "fracinv/mesh.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fracinv {

/// Symmetric 2x2 diffusion tensor, stored by its three independent entries.
struct Tensor2 {
    double a11 = 1.0;
    double a12 = 0.0;
    double a22 = 1.0;

    [[nodiscard]] double min_eig() const;
    [[nodiscard]] double max_eig() const;
};

using TensorField = std::function<Tensor2(double x1, double x2, double t)>;
using ScalarField = std::function<double(double x1, double x2, double t)>;

/// Coefficients of the subdiffusion operator and the source prefactor.
struct CoefficientSet {
    TensorField a;
    ScalarField q;
    ScalarField R;
    /// Declared ellipticity constant: lambda |xi|^2 <= a xi.xi <= |xi|^2 / lambda.
    double lambda = 0.25;
    /// When false, a and q are evaluated once and one factorization is reused.
    bool time_dependent = false;
    /// When false, R is evaluated once per node.
    bool source_factor_time_dependent = false;

    static CoefficientSet isotropic(ScalarField diffusivity, bool time_dependent);
};

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    double worst_value = 0.0;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    [[nodiscard]] bool ok() const;
    [[nodiscard]] std::string summary() const;
};

inline constexpr double kAssumptionTolerance = 1e-10;
inline constexpr int kAssumptionTimeSamples = 10;

/// Ellipticity sampled at triangle centroids and on a 10-point time grid.
AssumptionCheck check_ellipticity(const CoefficientSet& coeffs, const Mesh2D& mesh, double T);

/// a12(x1, +-ell, t) = 0 sampled on top/bottom nodes and edge midpoints.
AssumptionCheck check_boundary_structure(const CoefficientSet& coeffs, const Mesh2D& mesh, double T);

/// |R(x1, ell, t)| >= c_R on the top nodes.
AssumptionCheck check_source_factor(const CoefficientSet& coeffs, const Mesh2D& mesh, double T,
                                    double c_R = kAssumptionTolerance);

AssumptionReport validate_assumptions(const CoefficientSet& coeffs, const Mesh2D& mesh, double T);

} // namespace fracinv
