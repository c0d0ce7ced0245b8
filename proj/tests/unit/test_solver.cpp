#include "fracinv/assembly.hpp"
#include "fracinv/errors.hpp"
#include "fracinv/harness.hpp"
#include "fracinv/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fracinv;

namespace {

constexpr double kPi = std::numbers::pi;

SourceGrid random_source(const Mesh2D& mesh, const TimeGrid& grid, unsigned seed)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SourceGrid f = SourceGrid::zeros(mesh, grid);
    for (Eigen::Index k = 0; k < f.values.size(); ++k) {
        f.values.data()[k] = dist(gen);
    }
    return f;
}

// Time-dependent anisotropic coefficients with a non-constant source factor,
// obeying the boundary structure condition.
CoefficientSet rich_coefficients()
{
    CoefficientSet c;
    c.a = [](double x1, double x2, double t) {
        return Tensor2{1.2 + 0.3 * std::sin(kPi * x1) * (1.0 + t), 0.15 * (0.25 - x2 * x2) * std::cos(x1),
                       1.0 + 0.2 * x2 * x2 + 0.1 * t};
    };
    c.q = [](double x1, double, double t) { return 0.5 + 0.2 * x1 * x1 + 0.1 * t; };
    c.R = [](double x1, double x2, double t) { return 1.0 + 0.3 * x2 + 0.1 * x1 * t; };
    c.time_dependent = true;
    c.source_factor_time_dependent = true;
    return c;
}

} // namespace

TEST(DirectSolver, ZeroSourceGivesZeroSolution)
{
    const Mesh2D mesh = build_mesh(6);
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const CQWeights w = cq_weights(0.5, grid.N);
    const CoefficientSet c = rich_coefficients();
    const SourceGrid f = SourceGrid::zeros(mesh, grid);
    for (BcVariant v : {BcVariant::ispn, BcVariant::ispd_forward}) {
        EXPECT_EQ(solve_direct(mesh, c, w, grid, f, v).values.cwiseAbs().maxCoeff(), 0.0);
    }
    LateralObservation zero{ObservationKind::flux, TraceMatrix::Zero(mesh.trace_size(), grid.N), std::nullopt};
    EXPECT_EQ(solve_direct(mesh, c, w, grid, f, BcVariant::ispd_inversion, &zero).values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(solve_direct(mesh, c, w, grid, f, BcVariant::ispd_inversion), InvalidParameter);
    EXPECT_THROW(solve_direct(mesh, c, w, grid, f, BcVariant::adjoint), InvalidParameter);
}

TEST(DirectSolver, SolutionStartsFromRest)
{
    const Mesh2D mesh = build_mesh(6);
    const TimeGrid grid = TimeGrid::uniform(1.0, 8);
    const CQWeights w = cq_weights(0.3, grid.N);
    const SpaceTimeField u
        = solve_direct(mesh, rich_coefficients(), w, grid, random_source(mesh, grid, 3), BcVariant::ispn);
    EXPECT_EQ(u.levels(), grid.N + 1);
    EXPECT_EQ(u.values.col(0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(u.values.col(grid.N).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DirectSolver, ForwardMapIsLinear)
{
    const Mesh2D mesh = build_mesh(8);
    const TimeGrid grid = TimeGrid::uniform(1.0, 12);
    const CQWeights w = cq_weights(0.6, grid.N);
    const CoefficientSet c = rich_coefficients();
    const SourceGrid f = random_source(mesh, grid, 1);
    const SourceGrid g = random_source(mesh, grid, 2);
    const SourceGrid combo{1.7 * f.values - 0.4 * g.values};
    const auto tr = [&](const SourceGrid& s) {
        return trace_top(solve_direct(mesh, c, w, grid, s, BcVariant::ispn), mesh).values;
    };
    const TraceMatrix lhs = tr(combo);
    const TraceMatrix rhs = 1.7 * tr(f) - 0.4 * tr(g);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-11 * rhs.cwiseAbs().maxCoeff());
}

TEST(DirectSolver, StepperOptionsDoNotChangeTheResult)
{
    const Mesh2D mesh = build_mesh(6);
    const TimeGrid grid = TimeGrid::uniform(1.0, 30);
    const CQWeights w = cq_weights(0.4, grid.N);
    const CoefficientSet c = rich_coefficients();
    const SourceGrid f = random_source(mesh, grid, 9);

    auto run = [&](StepperOptions opt) {
        TimeStepper st(mesh, c, w, grid, BcVariant::ispn, opt);
        return st.march([&](int n, Eigen::VectorXd& load) { st.add_source_load(f, n, load); });
    };
    const Eigen::MatrixXd ref = run(StepperOptions{});
    StepperOptions one_column;
    one_column.history_block = 1;
    StepperOptions no_cache;
    no_cache.factor_cache_bytes = 0;
    no_cache.history_block = 7;
    const double scale = ref.cwiseAbs().maxCoeff();
    EXPECT_LE((run(one_column) - ref).cwiseAbs().maxCoeff(), 1e-13 * scale);
    EXPECT_LE((run(no_cache) - ref).cwiseAbs().maxCoeff(), 1e-13 * scale);
}

TEST(DirectSolver, RepeatedSweepsReuseStoredFactors)
{
    const Mesh2D mesh = build_mesh(8);
    const TimeGrid grid = TimeGrid::uniform(1.0, 24);
    const CQWeights w = cq_weights(0.6, grid.N);
    const CoefficientSet c = rich_coefficients();
    const SourceGrid f = random_source(mesh, grid, 10);
    const LateralObservation r{ObservationKind::trace, random_source(mesh, grid, 11).values, std::nullopt};

    auto sweeps = [&](std::size_t budget) {
        StepperOptions opt;
        opt.factor_cache_bytes = budget;
        TimeStepper st(mesh, c, w, grid, BcVariant::ispn, opt);
        std::vector<Eigen::MatrixXd> out;
        for (int rep = 0; rep < 2; ++rep) {
            out.push_back(st.march([&](int n, Eigen::VectorXd& load) { st.add_source_load(f, n, load); }));
            out.push_back(st.march_adjoint([&](int n, Eigen::VectorXd& load) {
                st.add_neumann_load(r.values.col(n - 1), n, false, load);
            }));
        }
        return out;
    };
    const auto none = sweeps(0);
    // Everything cached, and a budget that holds only a few levels.
    for (std::size_t budget : {std::size_t{1} << 30, std::size_t{20000}}) {
        const auto cached = sweeps(budget);
        for (std::size_t i = 0; i < none.size(); ++i) {
            const double scale = none[i].cwiseAbs().maxCoeff();
            EXPECT_LE((cached[i] - none[i % 2]).cwiseAbs().maxCoeff(), 1e-13 * scale) << "budget=" << budget;
        }
    }
}

TEST(Extraction, TraceAndFluxOfCoordinateFields)
{
    const Mesh2D mesh = build_mesh(5);
    SpaceTimeField lin, quad;
    lin.values.resize(mesh.num_nodes(), 4);
    quad.values.resize(mesh.num_nodes(), 4);
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        const double x2 = mesh.nodes[n][1];
        lin.values.row(n).setConstant(x2);
        quad.values.row(n).setConstant(x2 * x2);
    }
    const LateralObservation g = trace_top(lin, mesh);
    EXPECT_EQ(g.kind, ObservationKind::trace);
    EXPECT_EQ(g.values.rows(), 6);
    EXPECT_EQ(g.values.cols(), 3);
    EXPECT_LE((g.values.array() - 0.5).abs().maxCoeff(), 1e-15);

    const LateralObservation d1 = flux_top(lin, mesh);
    EXPECT_EQ(d1.kind, ObservationKind::flux);
    EXPECT_LE((d1.values.array() - 1.0).abs().maxCoeff(), 1e-12);
    const LateralObservation d2 = flux_top(quad, mesh);
    EXPECT_LE((d2.values.array() - 1.0).abs().maxCoeff(), 1e-12);

    SpaceTimeField zero;
    zero.values = Eigen::MatrixXd::Zero(mesh.num_nodes(), 4);
    EXPECT_EQ(trace_top(zero, mesh).values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(flux_top(zero, build_mesh(2)), InvalidParameter);
}

TEST(AdjointSolver, ZeroResidualGivesZeroState)
{
    const Mesh2D mesh = build_mesh(6);
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const CQWeights w = cq_weights(0.5, grid.N);
    LateralObservation r{ObservationKind::trace, TraceMatrix::Zero(mesh.trace_size(), grid.N), std::nullopt};
    EXPECT_EQ(solve_adjoint(mesh, rich_coefficients(), w, grid, r).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdjointSolver, DiscreteDualityIdentity)
{
    const Mesh2D mesh = build_mesh(16);
    const TimeGrid grid = TimeGrid::uniform(1.0, 32);
    const CoefficientSet c = rich_coefficients();
    const SparseMatrix mass = assemble_mass(mesh).matrix;
    const TraceSpace space(mesh, grid);
    for (double alpha : {0.25, 0.75}) {
        const CQWeights w = cq_weights(alpha, grid.N);
        const SourceGrid f = random_source(mesh, grid, 11);
        LateralObservation r{ObservationKind::trace, random_source(mesh, grid, 12).values, std::nullopt};

        const SpaceTimeField u = solve_direct(mesh, c, w, grid, f, BcVariant::ispn);
        const SpaceTimeField v = solve_adjoint(mesh, c, w, grid, r);
        double lhs = 0.0;
        for (int n = 1; n <= grid.N; ++n) {
            Eigen::VectorXd F(mesh.num_nodes());
            for (int node = 0; node < mesh.num_nodes(); ++node) {
                const auto& p = mesh.nodes[node];
                F[node] = f.values(node % (mesh.M + 1), n - 1) * c.R(p[0], p[1], grid.t(n));
            }
            lhs += v.values.col(n).dot(mass * F);
        }
        lhs *= grid.tau;
        const double rhs = space.inner(r.values, trace_top(u, mesh).values);
        EXPECT_NEAR(lhs / rhs, 1.0, 1e-10) << "alpha=" << alpha;
    }
}

TEST(ManufacturedSolution, TraceAndFluxMatchAnalyticValues)
{
    // u = t^2 cos(pi x1) cos(2 pi x2), a = I, q = 0: trace at x2 = 1/2 is
    // -t^2 cos(pi x1) and the normal derivative vanishes.
    const double alpha = 0.5;
    const Mesh2D mesh = build_mesh(32);
    const TimeGrid grid = TimeGrid::uniform(1.0, 40);
    const CQWeights w = cq_weights(alpha, grid.N);
    const CoefficientSet c = CoefficientSet::isotropic([](double, double, double) { return 1.0; }, false);
    Eigen::VectorXd X(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        X[n] = std::cos(kPi * mesh.nodes[n][0]) * std::cos(2.0 * kPi * mesh.nodes[n][1]);
    }
    const Eigen::VectorXd MX = assemble_mass(mesh).matrix * X;
    std::vector<double> t2(static_cast<std::size_t>(grid.N) + 1);
    for (int n = 0; n <= grid.N; ++n) {
        t2[n] = grid.t(n) * grid.t(n);
    }
    const std::vector<double> dt2 = caputo_apply(w, grid, t2);
    TimeStepper st(mesh, c, w, grid, BcVariant::ispn);
    const Eigen::MatrixXd hist = st.march(
        [&](int n, Eigen::VectorXd& load) { load += (dt2[n] + 5.0 * kPi * kPi * t2[n]) * MX; });
    const TraceMatrix g = st.trace(hist);
    const TraceMatrix d = st.flux(hist);
    double worst_trace = 0.0;
    for (int n = 1; n <= grid.N; ++n) {
        for (int i = 0; i <= mesh.M; ++i) {
            worst_trace = std::max(worst_trace, std::abs(g(i, n - 1) + t2[n] * std::cos(kPi * mesh.x1(i))));
        }
    }
    EXPECT_LE(worst_trace, 2e-2);
    // One-sided flux of the FE solution: O(h) boundary consistency.
    EXPECT_LE(d.cwiseAbs().maxCoeff(), 0.5);
}

TEST(ManufacturedSolution, ObservedOrders)
{
    ConvergenceConfig space;
    space.kind = ConvergenceKind::space;
    space.levels = {16, 32, 64};
    const ConvergenceStudy s = run_convergence_study(space);
    ASSERT_TRUE(s.fitted_order.has_value());
    EXPECT_GE(*s.fitted_order, 1.7);
    EXPECT_LE(*s.fitted_order, 2.3);

    ConvergenceConfig time;
    time.kind = ConvergenceKind::time;
    time.levels = {125, 250, 500, 1000};
    time.fixed = 8;
    const ConvergenceStudy t = run_convergence_study(time);
    ASSERT_TRUE(t.fitted_order.has_value());
    EXPECT_GE(*t.fitted_order, 0.8);
    EXPECT_LE(*t.fitted_order, 1.2);
}

TEST(ManufacturedSolution, ZeroAmplitudeGivesZeroErrors)
{
    ConvergenceConfig cfg;
    cfg.amplitude = 0.0;
    cfg.levels = {8, 16};
    for (ConvergenceKind k : {ConvergenceKind::space, ConvergenceKind::time}) {
        cfg.kind = k;
        const ConvergenceStudy s = run_convergence_study(cfg);
        for (const ConvergenceRow& r : s.rows) {
            EXPECT_EQ(r.error, 0.0);
        }
        EXPECT_FALSE(s.fitted_order.has_value());
    }
}

TEST(DirichletProblem, MeasuredFluxReproducesZeroTrace)
{
    // Imposing the flux of the Dirichlet problem as Neumann data gives back
    // (approximately) the zero Dirichlet value on the top face.
    const Mesh2D mesh = build_mesh(32);
    const TimeGrid grid = TimeGrid::uniform(1.0, 40);
    const CQWeights w = cq_weights(0.5, grid.N);
    const Example ex = make_example("smooth-dirichlet");
    const SourceGrid f = ex.sample_source(mesh, grid);
    const SpaceTimeField ud = solve_direct(mesh, ex.coeffs, w, grid, f, BcVariant::ispd_forward);
    const LateralObservation flux = flux_top(ud, mesh);
    const SpaceTimeField un = solve_direct(mesh, ex.coeffs, w, grid, f, BcVariant::ispd_inversion, &flux);
    const double top = trace_top(un, mesh).values.cwiseAbs().maxCoeff();
    const double scale = un.values.cwiseAbs().maxCoeff();
    EXPECT_LE(top, 0.05 * scale);
}
