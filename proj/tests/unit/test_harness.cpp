#include "fracinv/errors.hpp"
#include "fracinv/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace fracinv;

namespace {

std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("fracinv_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<std::string> read_lines(const std::filesystem::path& p)
{
    std::ifstream is(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(is, line);) {
        lines.push_back(line);
    }
    return lines;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.M = 8;
    c.N = 16;
    c.alpha = 0.5;
    c.epsilon = 1e-2;
    c.K_max = 10;
    c.seed = 42;
    return c;
}

} // namespace

TEST(Examples, SourceAndCoefficientValues)
{
    const Example e1 = make_example("smooth-static");
    EXPECT_NEAR(e1.f_dagger(0.0, 0.5), 0.25 * 0.25 * std::exp(0.5), 1e-15);
    EXPECT_NEAR(e1.f_dagger(0.0, 0.5), 0.103045, 1e-6);
    EXPECT_EQ(e1.default_isp, IspKind::ispn);
    EXPECT_FALSE(e1.coeffs.time_dependent);

    const Example e2 = make_example("smooth-dynamic");
    EXPECT_DOUBLE_EQ(e2.coeffs.a(0.5, 0.0, 0.0).a11, 1.0);
    EXPECT_TRUE(e2.coeffs.time_dependent);
    EXPECT_NEAR(e2.coeffs.a(0.5, 0.25, 1.0).a11, (1.0 + 0.25 * 0.75) * (1.0 + std::sin(1.0)), 1e-15);

    const Example e3 = make_example("jump-dynamic");
    for (double x1 : {-0.4, 0.0, 0.3}) {
        EXPECT_EQ(e3.f_dagger(x1, 0.75), 0.0);
        EXPECT_GT(e3.f_dagger(x1, 0.5), 0.0);
    }

    const Example e5 = make_example("jump-dirichlet");
    EXPECT_EQ(e5.default_isp, IspKind::ispd);
    EXPECT_NEAR(e5.coeffs.a(0.0, 0.0, 0.0).a11, 1.25, 1e-15);
    for (const std::string& id : example_ids()) {
        const Example e = make_example(id);
        EXPECT_EQ(e.coeffs.R(0.1, 0.5, 0.3), 1.0);
        EXPECT_EQ(e.coeffs.q(0.1, 0.5, 0.3), 0.0);
    }
    EXPECT_THROW(make_example("nope"), InvalidParameter);
}

TEST(Noise, PhiloxKnownAnswers)
{
    const auto zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(zero[0], 0x6627e8d5u);
    EXPECT_EQ(zero[1], 0xe169c58du);
    EXPECT_EQ(zero[2], 0xbc57ac4cu);
    EXPECT_EQ(zero[3], 0x9b00dbd8u);
    const auto ones = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(ones[0], 0x408f276du);
    EXPECT_EQ(ones[1], 0x41c83b0eu);
    EXPECT_EQ(ones[2], 0xa20bc7c6u);
    EXPECT_EQ(ones[3], 0x6d5451fdu);
}

TEST(Noise, SubstreamsAreDeterministicAndDistinct)
{
    const Eigen::MatrixXd a = standard_normal_field(11, 17, 123, 1, 2);
    const Eigen::MatrixXd b = standard_normal_field(11, 17, 123, 1, 2);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, standard_normal_field(11, 17, 123, 2, 1));
    EXPECT_NE(a, standard_normal_field(11, 17, 124, 1, 2));
}

TEST(Noise, StandardNormalMoments)
{
    const Eigen::MatrixXd xi = standard_normal_field(301, 1000, 7, 0, 0);
    const double n = static_cast<double>(xi.size());
    const double mean = xi.sum() / n;
    const double var = (xi.array() - mean).square().sum() / (n - 1.0);
    EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(Noise, ZeroLevelLeavesDataUntouched)
{
    const Mesh2D mesh = build_mesh(6);
    const TimeGrid grid = TimeGrid::uniform(1.0, 9);
    const TraceSpace space(mesh, grid);
    const LateralObservation g{ObservationKind::trace, standard_normal_field(7, 9, 1, 0, 0), std::nullopt};
    const SyntheticData d = add_noise(g, NoiseModel{0.0, 5, 0, 0}, space);
    EXPECT_EQ(d.noisy.values, g.values);
    EXPECT_EQ(d.delta, 0.0);
    EXPECT_THROW(add_noise(g, NoiseModel{-1.0, 5, 0, 0}, space), InvalidParameter);
}

TEST(Noise, NoiseLevelMatchesSampleVarianceOracle)
{
    // For i.i.d. unit normals, E[delta^2] = (eps |g|_inf)^2 tau N trace(M_omega).
    const Mesh2D mesh = build_mesh(100);
    const TimeGrid grid = TimeGrid::uniform(1.0, 1000);
    const TraceSpace space(mesh, grid);
    const LateralObservation g{
        ObservationKind::trace,
        SourceGrid::sample(mesh, grid, [](double x1, double t) { return (0.25 - x1 * x1) * t; }).values,
        std::nullopt};
    const double eps = 1e-2;
    const SyntheticData d = add_noise(g, NoiseModel{eps, 99, 0, 3}, space);
    const double scale = eps * g.values.cwiseAbs().maxCoeff();
    const double trace_mass = Eigen::VectorXd(Eigen::MatrixXd(space.mass()).diagonal()).sum();
    const double expected = scale * std::sqrt(grid.tau * grid.N * trace_mass);
    EXPECT_NEAR(d.delta / expected, 1.0, 0.05);
    EXPECT_EQ(d.noisy.delta.value(), d.delta);
}

TEST(Config, InverseCrimeGuard)
{
    ExperimentConfig c = small_config();
    c.refine = 1;
    EXPECT_THROW(c.validate(), InvalidParameter);
    EXPECT_THROW(synthesize_data(c), InvalidParameter);
    c.allow_inverse_crime = true;
    EXPECT_NO_THROW(c.validate());
    EXPECT_NO_THROW(synthesize_data(c));
}

TEST(Config, RejectsInvalidValues)
{
    ExperimentConfig c = small_config();
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = small_config();
    c.epsilon = -0.1;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = small_config();
    c.c_dp = 1.0;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = small_config();
    c.example = "unknown";
    EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Config, ResolvesProblemAndStoppingFromTheExample)
{
    ExperimentConfig c = small_config();
    EXPECT_EQ(c.resolved_isp(), IspKind::ispn);
    EXPECT_EQ(c.resolved_stop_mode(), StopMode::discrepancy);
    c.example = "smooth-dirichlet";
    EXPECT_EQ(c.resolved_isp(), IspKind::ispd);
    EXPECT_EQ(c.resolved_stop_mode(), StopMode::minimal_error);
    c.isp = IspKind::ispn;
    c.isp_explicit = true;
    EXPECT_EQ(c.resolved_isp(), IspKind::ispn);
    const std::string json = c.to_json();
    EXPECT_NE(json.find("\"isp\":\"ispn\""), std::string::npos);
    EXPECT_NE(json.find("\"refine\":2"), std::string::npos);
}

TEST(Synthesis, FixedSeedIsBitwiseReproducible)
{
    const ExperimentConfig c = small_config();
    const SyntheticData a = synthesize_data(c);
    const SyntheticData b = synthesize_data(c);
    EXPECT_EQ(a.noisy.values, b.noisy.values);
    EXPECT_EQ(a.delta, b.delta);
    EXPECT_GT(a.delta, 0.0);
    EXPECT_EQ(a.clean.values.rows(), 9);
    EXPECT_EQ(a.clean.values.cols(), 16);
}

TEST(Synthesis, RefinedDataConvergeToTheInversionDiscretization)
{
    ExperimentConfig c = small_config();
    c.epsilon = 0.0;
    c.refine = 1;
    c.allow_inverse_crime = true;
    const Example ex = make_example(c.example);
    const TraceMatrix same = exact_data(c, ex).values;
    c.refine = 2;
    const TraceMatrix fine = exact_data(c, ex).values;
    const double rel = (fine - same).norm() / same.norm();
    EXPECT_GT(rel, 0.0);
    EXPECT_LT(rel, 0.2);
}

TEST(Synthesis, DirichletExamplesProduceFluxData)
{
    ExperimentConfig c = small_config();
    c.example = "smooth-dirichlet";
    const SyntheticData d = synthesize_data(c);
    EXPECT_EQ(d.clean.kind, ObservationKind::flux);
    // The source heats the body, so the outward flux through the cold top face is negative.
    EXPECT_LT(d.clean.values.mean(), 0.0);
}

TEST(Table, CellFormatting)
{
    TableCell c;
    c.error = 1.26e-3;
    c.stop_index = 7;
    EXPECT_EQ(format_cell(c), "1.26e-3 (7)");
    c.error = 4.27e-5;
    c.stop_index = 50;
    EXPECT_EQ(format_cell(c), "4.27e-5 (50)");
    c.error = 9.996e-4;
    c.stop_index = 3;
    EXPECT_EQ(format_cell(c), "1.00e-3 (3)");
    c.failure = "boom";
    EXPECT_EQ(format_cell(c), "failed");
}

TEST(Table, SweepIsDeterministicAndNoiseFreeCellsRunToK)
{
    TableConfig tc;
    tc.base = small_config();
    tc.base.K_max = 6;
    tc.alphas = {0.25, 0.75};
    tc.epsilons = {0.0, 1e-2};
    tc.threads = 2;
    const TableResult a = run_table(tc);
    const TableResult b = run_table(tc);
    ASSERT_EQ(a.cells.size(), 4u);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_TRUE(a.cells[i].failure.empty()) << a.cells[i].failure;
        EXPECT_EQ(a.cells[i].error, b.cells[i].error);
        EXPECT_EQ(a.cells[i].stop_index, b.cells[i].stop_index);
        EXPECT_EQ(a.cells[i].delta, b.cells[i].delta);
    }
    EXPECT_EQ(a.cell(0, 0).stop_index, 6);
    EXPECT_EQ(a.cell(1, 0).stop_index, 6);

    const auto da = scratch_dir("table_a");
    const auto db = scratch_dir("table_b");
    write_table(a, da.string());
    write_table(b, db.string());
    for (const char* f : {"table.csv", "cells.csv", "config.json"}) {
        EXPECT_EQ(read_file(da / f), read_file(db / f)) << f;
    }
    const auto table = read_lines(da / "table.csv");
    ASSERT_EQ(table.size(), 3u);
    EXPECT_EQ(table[0], "alpha,eps=0,eps=0.01");
}

TEST(Table, FailingCellsAreRecorded)
{
    TableConfig tc;
    tc.base = small_config();
    tc.alphas = {0.5, 1.5};
    tc.epsilons = {1e-2};
    tc.threads = 1;
    const TableResult r = run_table(tc);
    EXPECT_TRUE(r.cell(0, 0).failure.empty());
    EXPECT_FALSE(r.cell(1, 0).failure.empty());
    EXPECT_EQ(format_cell(r.cell(1, 0)), "failed");
}

TEST(Export, ShapesAndStopFlag)
{
    const Mesh2D mesh = build_mesh(2);
    const TimeGrid grid = TimeGrid::uniform(1.0, 4);
    ReconstructionReport rep;
    rep.f_hat = SourceGrid::sample(mesh, grid, [](double x1, double t) { return x1 + t; });
    rep.stop_index = 1;
    for (int k = 0; k < 3; ++k) {
        IterationRecord r;
        r.k = k;
        r.J = 1.0 / (k + 1);
        r.error = 0.0;
        rep.history.push_back(r);
    }
    const SourceGrid perfect = rep.f_hat;
    const auto dir = scratch_dir("export");
    export_plot_data(rep, &perfect, mesh, grid, dir.string());

    const auto recon = read_lines(dir / "reconstruction.csv");
    const auto err = read_lines(dir / "error.csv");
    const auto hist = read_lines(dir / "history.csv");
    ASSERT_EQ(recon.size(), 1u + 3u * 4u);
    ASSERT_EQ(err.size(), 1u + 3u * 4u);
    EXPECT_EQ(recon[0], "x1,t,value");
    for (std::size_t i = 1; i < err.size(); ++i) {
        EXPECT_EQ(err[i].substr(err[i].rfind(',') + 1), "0");
    }
    ASSERT_EQ(hist.size(), 4u);
    EXPECT_EQ(hist[0].substr(hist[0].rfind(',') + 1), "is_stop");
    EXPECT_EQ(hist[1].back(), '0');
    EXPECT_EQ(hist[2].back(), '1');
    EXPECT_EQ(hist[3].back(), '0');
}

TEST(Export, FullPrecisionNumbers)
{
    const Mesh2D mesh = build_mesh(2);
    const TimeGrid grid = TimeGrid::uniform(1.0, 1);
    ReconstructionReport rep;
    rep.f_hat.values = TraceMatrix::Constant(3, 1, 1.0 / 3.0);
    rep.history.push_back(IterationRecord{});
    const auto dir = scratch_dir("precision");
    export_plot_data(rep, nullptr, mesh, grid, dir.string());
    const auto recon = read_lines(dir / "reconstruction.csv");
    EXPECT_NE(recon[1].find("0.33333333333333331"), std::string::npos);
    EXPECT_THROW(export_plot_data(rep, nullptr, build_mesh(3), grid, dir.string()), DimensionMismatch);
}

TEST(Report, JsonRoundTripAndErrorRecomputation)
{
    ExperimentConfig c = small_config();
    c.out_dir = scratch_dir("report").string();
    const RunOutcome out = run_experiment(c);
    ASSERT_TRUE(out.report.error.has_value());
    const auto path = std::filesystem::path(c.out_dir) / "report.json";
    write_report_json(out, path.string());
    const StoredReport back = read_report_json(path.string());
    EXPECT_EQ(back.report.f_hat.values, out.report.f_hat.values);
    EXPECT_EQ(back.report.stop_index, out.report.stop_index);
    EXPECT_EQ(back.report.history.size(), out.report.history.size());
    EXPECT_EQ(back.config.seed, c.seed);
    EXPECT_EQ(back.config.M, c.M);
    EXPECT_EQ(back.config.resolved_stop_mode(), StopMode::discrepancy);

    const Mesh2D mesh = build_mesh(c.M);
    const TimeGrid grid = TimeGrid::uniform(c.T, c.N);
    const TraceSpace space(mesh, grid);
    const SourceGrid fd = make_example(c.example).sample_source(mesh, grid);
    EXPECT_EQ(error_metric(back.report.f_hat, fd, space), *out.report.error);
    EXPECT_EQ(*back.report.error, *out.report.error);
}

TEST(ErrorMetric, ConstantDifferenceHasUnitNorm)
{
    const Mesh2D mesh = build_mesh(10);
    const TimeGrid grid = TimeGrid::uniform(1.0, 20);
    const TraceSpace space(mesh, grid);
    const SourceGrid a = SourceGrid::sample(mesh, grid, [](double x1, double t) { return x1 * t; });
    const SourceGrid b{a.values.array() + 1.0};
    EXPECT_EQ(error_metric(a, a, space), 0.0);
    EXPECT_NEAR(error_metric(b, a, space), 1.0, 1e-14);
    EXPECT_THROW(error_metric(a, SourceGrid{TraceMatrix::Zero(3, 3)}, space), DimensionMismatch);
}
