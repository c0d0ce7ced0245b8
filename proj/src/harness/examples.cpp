#include "fracinv/harness.hpp"

#include "fracinv/errors.hpp"

#include <cmath>
#include <numbers>

namespace fracinv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kJumpFraction = 0.7;

double smooth_profile(double x1, double x2)
{
    return 1.0 + std::sin(kPi * x1) * x2 * (1.0 - x2);
}

double shifted_profile(double x1, double x2)
{
    return 1.0 + std::sin(kPi * (x1 + 0.5)) * (0.25 - x2 * x2);
}

double temporal_bump(double t, double T)
{
    return t * (T - t) * std::exp(t);
}

} // namespace

const char* to_string(IspKind kind)
{
    switch (kind) {
    case IspKind::ispn: return "ispn";
    case IspKind::ispd: return "ispd";
    }
    return "unknown";
}

IspKind parse_isp(const std::string& text)
{
    if (text == "ispn") {
        return IspKind::ispn;
    }
    if (text == "ispd") {
        return IspKind::ispd;
    }
    throw InvalidParameter("unknown inverse problem '" + text + "' (expected ispn or ispd)");
}

std::vector<std::string> example_ids()
{
    return {"smooth-static", "smooth-dynamic", "jump-dynamic", "smooth-dirichlet", "jump-dirichlet"};
}

Example make_example(const std::string& id, double T)
{
    if (!(T > 0.0)) {
        throw InvalidParameter("make_example: T must be positive");
    }
    Example ex;
    ex.id = id;
    ex.T = T;
    const double t_cut = kJumpFraction * T;

    if (id == "smooth-static") {
        ex.coeffs = CoefficientSet::isotropic([](double x1, double x2, double) { return smooth_profile(x1, x2); },
                                              false);
        ex.f_dagger = [T](double x1, double t) { return (0.25 - x1 * x1) * temporal_bump(t, T); };
        ex.default_isp = IspKind::ispn;
        return ex;
    }

    const auto sine_source = [T](double x1, double t) { return std::sin((x1 + 0.5) * kPi) * temporal_bump(t, T); };
    const auto cut_source = [T, t_cut](double x1, double t) {
        return t <= t_cut ? std::sin((x1 + 0.5) * kPi) * temporal_bump(t, T) : 0.0;
    };

    if (id == "smooth-dynamic" || id == "jump-dynamic") {
        ex.coeffs = CoefficientSet::isotropic(
            [](double x1, double x2, double t) { return smooth_profile(x1, x2) * (1.0 + std::sin(t)); }, true);
        ex.default_isp = IspKind::ispn;
        ex.f_dagger = (id == "smooth-dynamic") ? std::function<double(double, double)>(sine_source)
                                               : std::function<double(double, double)>(cut_source);
        return ex;
    }
    if (id == "smooth-dirichlet" || id == "jump-dirichlet") {
        ex.coeffs = CoefficientSet::isotropic(
            [](double x1, double x2, double t) { return shifted_profile(x1, x2) * (1.0 + std::sin(t)); }, true);
        ex.default_isp = IspKind::ispd;
        ex.f_dagger = (id == "smooth-dirichlet") ? std::function<double(double, double)>(sine_source)
                                                 : std::function<double(double, double)>(cut_source);
        return ex;
    }
    throw InvalidParameter("make_example: unknown example '" + id + "'");
}

AssumptionReport validate_example(const std::string& id, int M, double T)
{
    const Example ex = make_example(id, T);
    const Mesh2D mesh = build_mesh(M);
    return validate_assumptions(ex.coeffs, mesh, T);
}

} // namespace fracinv
