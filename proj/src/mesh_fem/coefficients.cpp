#include "fracinv/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fracinv {

namespace {

std::vector<double> sample_times(double T)
{
    std::vector<double> ts(kAssumptionTimeSamples);
    for (int j = 0; j < kAssumptionTimeSamples; ++j) {
        ts[j] = T * j / (kAssumptionTimeSamples - 1);
    }
    return ts;
}

} // namespace

double Tensor2::min_eig() const
{
    const double mean = 0.5 * (a11 + a22);
    const double rad = std::hypot(0.5 * (a11 - a22), a12);
    return mean - rad;
}

double Tensor2::max_eig() const
{
    const double mean = 0.5 * (a11 + a22);
    const double rad = std::hypot(0.5 * (a11 - a22), a12);
    return mean + rad;
}

CoefficientSet CoefficientSet::isotropic(ScalarField diffusivity, bool time_dependent)
{
    CoefficientSet c;
    c.a = [d = std::move(diffusivity)](double x1, double x2, double t) {
        const double v = d(x1, x2, t);
        return Tensor2{v, 0.0, v};
    };
    c.q = [](double, double, double) { return 0.0; };
    c.R = [](double, double, double) { return 1.0; };
    c.time_dependent = time_dependent;
    return c;
}

bool AssumptionReport::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string AssumptionReport::summary() const
{
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.passed ? "PASS " : "FAIL ") << c.name << " (worst " << c.worst_value << ")";
        if (!c.detail.empty()) {
            os << ": " << c.detail;
        }
        os << '\n';
    }
    return os.str();
}

AssumptionCheck check_ellipticity(const CoefficientSet& coeffs, const Mesh2D& mesh, double T)
{
    AssumptionCheck check{"ellipticity", true, std::numeric_limits<double>::infinity(), {}};
    const double lo = coeffs.lambda;
    const double hi = 1.0 / coeffs.lambda;
    for (double t : sample_times(T)) {
        for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
            const auto c = mesh.centroid(tri);
            const Tensor2 a = coeffs.a(c[0], c[1], t);
            const double emin = a.min_eig();
            const double emax = a.max_eig();
            // Margin relative to the admissible band; negative means violated.
            const double margin = std::min(emin - lo, hi - emax);
            if (margin < check.worst_value) {
                check.worst_value = margin;
            }
            if (margin < -kAssumptionTolerance && check.passed) {
                check.passed = false;
                std::ostringstream os;
                os << "eigenvalues [" << emin << ", " << emax << "] outside [" << lo << ", " << hi
                   << "] at (" << c[0] << ", " << c[1] << ", t=" << t << ")";
                check.detail = os.str();
            }
        }
    }
    return check;
}

AssumptionCheck check_boundary_structure(const CoefficientSet& coeffs, const Mesh2D& mesh, double T)
{
    AssumptionCheck check{"boundary-structure a12(x1,+-ell,t)=0", true, 0.0, {}};
    for (double t : sample_times(T)) {
        for (double x2 : {-mesh.ell, mesh.ell}) {
            for (int s = 0; s <= 2 * mesh.M; ++s) {
                const double x1 = -mesh.ell + 0.5 * s * mesh.h;
                const double v = std::abs(coeffs.a(x1, x2, t).a12);
                check.worst_value = std::max(check.worst_value, v);
                if (v > kAssumptionTolerance && check.passed) {
                    check.passed = false;
                    std::ostringstream os;
                    os << "a12 = " << v << " at (" << x1 << ", " << x2 << ", t=" << t << ")";
                    check.detail = os.str();
                }
            }
        }
    }
    return check;
}

AssumptionCheck check_source_factor(const CoefficientSet& coeffs, const Mesh2D& mesh, double T,
                                    double c_R)
{
    AssumptionCheck check{"source-factor |R(x1,ell,t)| >= c_R", true,
                          std::numeric_limits<double>::infinity(), {}};
    for (double t : sample_times(T)) {
        for (int i = 0; i <= mesh.M; ++i) {
            const double v = std::abs(coeffs.R(mesh.x1(i), mesh.ell, t));
            check.worst_value = std::min(check.worst_value, v);
            if (v < c_R && check.passed) {
                check.passed = false;
                std::ostringstream os;
                os << "|R| = " << v << " at (" << mesh.x1(i) << ", t=" << t << ")";
                check.detail = os.str();
            }
        }
    }
    return check;
}

AssumptionReport validate_assumptions(const CoefficientSet& coeffs, const Mesh2D& mesh, double T)
{
    AssumptionReport report;
    report.checks.push_back(check_ellipticity(coeffs, mesh, T));
    report.checks.push_back(check_boundary_structure(coeffs, mesh, T));
    report.checks.push_back(check_source_factor(coeffs, mesh, T));
    return report;
}

} // namespace fracinv
