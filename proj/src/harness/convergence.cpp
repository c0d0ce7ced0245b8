#include "fracinv/harness.hpp"

#include "fracinv/assembly.hpp"
#include "fracinv/errors.hpp"
#include "fracinv/solver.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace fracinv {

namespace {

constexpr double kPi = std::numbers::pi;
// -Laplacian eigenvalue of cos(pi x1) cos(2 pi x2).
constexpr double kEigenvalue = 5.0 * kPi * kPi;

double spatial_mode(double x1, double x2)
{
    return std::cos(kPi * x1) * std::cos(2.0 * kPi * x2);
}

// L^2(Omega) distance between the P1 field `u` and `exact`, using the
// edge-midpoint rule on every triangle (exact for quadratics).
double l2_error(const Mesh2D& mesh, const Eigen::VectorXd& u, const std::function<double(double, double)>& exact)
{
    double sum = 0.0;
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
        const auto& t = mesh.triangles[static_cast<std::size_t>(tri)];
        const double area = mesh.signed_area(tri);
        for (int e = 0; e < 3; ++e) {
            const int a = t[e];
            const int b = t[(e + 1) % 3];
            const double xm = 0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]);
            const double ym = 0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1]);
            const double diff = 0.5 * (u[a] + u[b]) - exact(xm, ym);
            sum += area / 3.0 * diff * diff;
        }
    }
    return std::sqrt(sum);
}

Eigen::VectorXd interpolate_mode(const Mesh2D& mesh)
{
    Eigen::VectorXd x(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        x[n] = spatial_mode(mesh.nodes[n][0], mesh.nodes[n][1]);
    }
    return x;
}

ConvergenceRow space_level(const ConvergenceConfig& cfg, int M)
{
    const Mesh2D mesh = build_mesh(M);
    const TimeGrid grid = TimeGrid::uniform(cfg.T, cfg.fixed);
    const CQWeights weights = cq_weights(cfg.alpha, grid.N);
    const CoefficientSet coeffs = CoefficientSet::isotropic([](double, double, double) { return 1.0; }, false);

    std::vector<double> c(static_cast<std::size_t>(grid.N) + 1);
    for (int n = 0; n <= grid.N; ++n) {
        c[n] = cfg.amplitude * grid.t(n) * grid.t(n);
    }
    const std::vector<double> dc = caputo_apply(weights, grid, c);
    const Eigen::VectorXd mass_mode = assemble_mass(mesh).matrix * interpolate_mode(mesh);

    TimeStepper stepper(mesh, coeffs, weights, grid, BcVariant::ispn);
    const Eigen::MatrixXd hist = stepper.march(
        [&](int n, Eigen::VectorXd& load) { load.noalias() += (dc[n] + kEigenvalue * c[n]) * mass_mode; });
    const Eigen::VectorXd uT = stepper.dofs().extend(hist.col(grid.N));
    const double cT = c[grid.N];
    const double err = l2_error(mesh, uT, [cT](double x1, double x2) { return cT * spatial_mode(x1, x2); });
    return ConvergenceRow{mesh.h, grid.tau, err, std::nullopt};
}

ConvergenceRow time_level(const ConvergenceConfig& cfg, int N)
{
    const Mesh2D mesh = build_mesh(cfg.fixed);
    const TimeGrid grid = TimeGrid::uniform(cfg.T, N);
    const CQWeights weights = cq_weights(cfg.alpha, grid.N);
    const CoefficientSet coeffs = CoefficientSet::isotropic([](double, double, double) { return 1.0; }, false);

    const Eigen::VectorXd mode = interpolate_mode(mesh);
    const Eigen::VectorXd mass_mode = assemble_mass(mesh).matrix * mode;
    const Eigen::VectorXd stiff_mode = assemble_stiffness(mesh, coeffs, 0.0).matrix * mode;
    const double caputo_scale = 2.0 / gamma_fn(3.0 - cfg.alpha);

    TimeStepper stepper(mesh, coeffs, weights, grid, BcVariant::ispn);
    const Eigen::MatrixXd hist = stepper.march([&](int n, Eigen::VectorXd& load) {
        const double t = grid.t(n);
        load.noalias() += cfg.amplitude * caputo_scale * std::pow(t, 2.0 - cfg.alpha) * mass_mode;
        load.noalias() += cfg.amplitude * t * t * stiff_mode;
    });
    const Eigen::VectorXd uT = stepper.dofs().extend(hist.col(grid.N));
    // Semi-discrete solution A T^2 X_h; X_h vanishes on the lateral boundary.
    const Eigen::VectorXd exact = cfg.amplitude * cfg.T * cfg.T * mode;
    const Eigen::VectorXd diff = uT - exact;
    const double err = std::sqrt(std::max(0.0, diff.dot(assemble_mass(mesh).matrix * diff)));
    return ConvergenceRow{mesh.h, grid.tau, err, std::nullopt};
}

} // namespace

ConvergenceStudy run_convergence_study(const ConvergenceConfig& config)
{
    if (config.levels.size() < 2) {
        throw InvalidParameter("run_convergence_study: need at least two refinement levels");
    }
    if (config.fixed < 1) {
        throw InvalidParameter("run_convergence_study: fixed resolution must be positive");
    }
    ConvergenceStudy study;
    study.config = config;
    for (int level : config.levels) {
        study.rows.push_back(config.kind == ConvergenceKind::space ? space_level(config, level)
                                                                   : time_level(config, level));
    }
    const auto step = [&](const ConvergenceRow& r) { return config.kind == ConvergenceKind::space ? r.h : r.tau; };
    for (std::size_t i = 1; i < study.rows.size(); ++i) {
        const ConvergenceRow& prev = study.rows[i - 1];
        ConvergenceRow& cur = study.rows[i];
        if (prev.error > 0.0 && cur.error > 0.0) {
            cur.order = std::log(prev.error / cur.error) / std::log(step(prev) / step(cur));
        }
    }
    // Least-squares slope of log(error) on log(step).
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (const ConvergenceRow& r : study.rows) {
        if (r.error <= 0.0) {
            continue;
        }
        const double x = std::log(step(r));
        const double y = std::log(r.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        study.fitted_order = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    }
    return study;
}

void write_convergence_csv(const ConvergenceStudy& study, const std::string& path)
{
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    os << std::setprecision(17);
    os << "# kind=" << (study.config.kind == ConvergenceKind::space ? "space" : "time")
       << " alpha=" << study.config.alpha << " T=" << study.config.T << " fixed=" << study.config.fixed
       << " amplitude=" << study.config.amplitude << '\n';
    os << "h,tau,error,order\n";
    for (const ConvergenceRow& r : study.rows) {
        os << r.h << ',' << r.tau << ',' << r.error << ',';
        if (r.order) {
            os << *r.order;
        } else {
            os << "nan";
        }
        os << '\n';
    }
    os << "# fitted_order=";
    if (study.fitted_order) {
        os << *study.fitted_order;
    } else {
        os << "nan";
    }
    os << '\n';
}

} // namespace fracinv
