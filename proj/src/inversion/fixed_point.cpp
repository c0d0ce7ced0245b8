#include "fracinv/fixed_point.hpp"

#include "fracinv/errors.hpp"

#include <cmath>
#include <sstream>

namespace fracinv {

namespace {

std::vector<double> gaussian_kernel(double width)
{
    const int radius = static_cast<int>(std::ceil(3.0 * width));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    for (int j = -radius; j <= radius; ++j) {
        k[static_cast<std::size_t>(j + radius)] = std::exp(-0.5 * (j * j) / (width * width));
    }
    return k;
}

// Smooths each column of `m` (along the row index) with a renormalized kernel.
Eigen::MatrixXd smooth_rows(const Eigen::MatrixXd& m, const std::vector<double>& kernel)
{
    const int radius = static_cast<int>(kernel.size() / 2);
    const int n = static_cast<int>(m.rows());
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (int i = 0; i < n; ++i) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m.cols());
        double wsum = 0.0;
        for (int j = std::max(0, i - radius); j <= std::min(n - 1, i + radius); ++j) {
            const double w = kernel[static_cast<std::size_t>(j - i + radius)];
            acc += w * m.row(j);
            wsum += w;
        }
        out.row(i) = acc / wsum;
    }
    return out;
}

} // namespace

TraceMatrix mollify(const TraceMatrix& g, double width)
{
    if (!(width > 0.0)) {
        throw InvalidParameter("mollify: width must be positive");
    }
    const std::vector<double> kernel = gaussian_kernel(width);
    const Eigen::MatrixXd in_x = smooth_rows(g, kernel);
    return smooth_rows(in_x.transpose(), kernel).transpose();
}

TraceMatrix fixed_point_h(const LateralObservation& g, const Mesh2D& mesh, const CoefficientSet& coeffs,
                          const CQWeights& weights, const TimeGrid& grid, std::optional<double> mollify_width,
                          double c_R)
{
    if (g.kind != ObservationKind::trace) {
        throw InvalidParameter("fixed_point_h: needs trace data of the Neumann problem");
    }
    if (g.values.rows() != mesh.trace_size() || g.values.cols() != grid.N) {
        throw DimensionMismatch("fixed_point_h: data must be (M+1) x N");
    }
    if (mesh.M < 3) {
        throw InvalidParameter("fixed_point_h: need M >= 3 for the one-sided closures");
    }
    const TraceMatrix data = mollify_width ? mollify(g.values, *mollify_width) : g.values;

    const int M = mesh.M;
    const int N = grid.N;
    const double h = mesh.h;
    const double ell = mesh.ell;

    Eigen::MatrixXd series = Eigen::MatrixXd::Zero(M + 1, N + 1);
    series.rightCols(N) = data;
    const Eigen::MatrixXd caputo = caputo_apply(weights, grid, series);

    TraceMatrix out(M + 1, N);
    for (int n = 1; n <= N; ++n) {
        const double t = grid.t(n);
        const auto u = [&](int i) { return data(i, n - 1); };
        const auto a11 = [&](double x1) { return coeffs.a(x1, ell, t).a11; };
        for (int i = 0; i <= M; ++i) {
            const double x1 = mesh.x1(i);
            const double R = coeffs.R(x1, ell, t);
            if (std::abs(R) < c_R) {
                std::ostringstream os;
                os << "fixed_point_h: |R| = " << std::abs(R) << " below " << c_R << " at (x1=" << x1 << ", t=" << t
                   << ")";
                throw AssumptionViolation(os.str());
            }

            double div_flux = 0.0;  // d1(a11 d1 g)
            double d1g = 0.0;
            if (i == 0 || i == M) {
                const int s = (i == 0) ? 1 : -1;  // direction into the interior
                const double g2 = (2.0 * u(i) - 5.0 * u(i + s) + 4.0 * u(i + 2 * s) - u(i + 3 * s)) / (h * h);
                d1g = s * (-3.0 * u(i) + 4.0 * u(i + s) - u(i + 2 * s)) / (2.0 * h);
                const double da11 = s * (-3.0 * a11(x1) + 4.0 * a11(x1 + s * h) - a11(x1 + 2 * s * h)) / (2.0 * h);
                div_flux = a11(x1) * g2 + da11 * d1g;
            } else {
                const double ap = a11(x1 + 0.5 * h);
                const double am = a11(x1 - 0.5 * h);
                div_flux = (ap * (u(i + 1) - u(i)) - am * (u(i) - u(i - 1))) / (h * h);
                d1g = (u(i + 1) - u(i - 1)) / (2.0 * h);
            }
            const double a12_0 = coeffs.a(x1, ell, t).a12;
            const double a12_1 = coeffs.a(x1, ell - h, t).a12;
            const double a12_2 = coeffs.a(x1, ell - 2.0 * h, t).a12;
            const double d2a12 = (3.0 * a12_0 - 4.0 * a12_1 + a12_2) / (2.0 * h);
            const double q = coeffs.q(x1, ell, t);

            out(i, n - 1) = (caputo(i, n) - div_flux - d2a12 * d1g + q * u(i)) / R;
        }
    }
    return out;
}

BoundaryOperator make_boundary_operator(InversionContext& ctx)
{
    const Mesh2D& mesh = ctx.mesh();
    if (mesh.M < 3) {
        throw InvalidParameter("make_boundary_operator: need M >= 3");
    }
    const TimeGrid grid = ctx.grid();
    // a22 / R on the trace grid, fixed for the lifetime of the operator.
    TraceMatrix factor(mesh.trace_size(), grid.N);
    for (int n = 1; n <= grid.N; ++n) {
        for (int i = 0; i <= mesh.M; ++i) {
            const double x1 = mesh.x1(i);
            const double t = grid.t(n);
            factor(i, n - 1) = ctx.coefficients().a(x1, mesh.ell, t).a22 / ctx.coefficients().R(x1, mesh.ell, t);
        }
    }
    return [&ctx, factor](const TraceMatrix& phi) -> TraceMatrix {
        TimeStepper& st = ctx.stepper();
        const Mesh2D& m = ctx.mesh();
        const Eigen::MatrixXd hist = ctx.forward_history(SourceGrid{phi});
        const TraceMatrix d2 = (-7.0 * st.layer(hist, m.M) + 8.0 * st.layer(hist, m.M - 1) - st.layer(hist, m.M - 2))
                             / (2.0 * m.h * m.h);
        return d2.cwiseProduct(factor);
    };
}

FixedPointResult fixed_point_solve(const TraceMatrix& h, const BoundaryOperator& H, const TraceSpace& space,
                                   int max_iter, double tol)
{
    if (max_iter < 1) {
        throw InvalidParameter("fixed_point_solve: max_iter must be >= 1");
    }
    if (!(tol >= 0.0)) {
        throw InvalidParameter("fixed_point_solve: tol must be non-negative");
    }
    FixedPointResult res;
    TraceMatrix f = h;
    int rising = 0;
    for (int j = 0; j < max_iter; ++j) {
        TraceMatrix next = h - H(f);
        const double inc = space.norm(next - f);
        const double size = space.norm(f);
        res.increments.push_back(inc);
        res.iterations = j + 1;
        f = std::move(next);
        if (inc <= tol * size) {
            res.converged = true;
            break;
        }
        if (res.increments.size() >= 2 && inc >= res.increments[res.increments.size() - 2]) {
            if (++rising >= 3) {
                throw DivergenceError("fixed_point_solve: increments failed to decrease for 3 iterations");
            }
        } else {
            rising = 0;
        }
    }
    res.f = SourceGrid{std::move(f)};
    return res;
}

} // namespace fracinv
