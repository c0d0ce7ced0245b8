// Command-line driver: single reconstructions, table sweeps, manufactured
// convergence studies, assumption checks and plot-data export.

#include "fracinv/errors.hpp"
#include "fracinv/fixed_point.hpp"
#include "fracinv/harness.hpp"
#include "fracinv/inversion.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace fracinv;

struct CliState {
    ExperimentConfig cfg;
    std::string isp = "ispn";
    std::string stop;
    std::string method = "cg";
    int threads = 0;
    std::vector<double> alphas{0.25, 0.5, 0.75};
    std::vector<double> epsilons{0.0, 1e-3, 5e-3, 1e-2, 5e-2};
    std::string kind = "both";
    std::vector<int> space_levels{16, 32, 64};
    std::vector<int> time_levels{125, 250, 500, 1000};
    int fp_iter = 50;
    double fp_tol = 1e-10;
    double mollify_width = 0.0;
    std::string report_path;
    CLI::Option* isp_opt = nullptr;
    CLI::Option* example_opt = nullptr;
};

StopMode parse_stop(const std::string& s)
{
    for (StopMode m : {StopMode::discrepancy, StopMode::minimal_error, StopMode::fixed}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw InvalidParameter("unknown stopping rule '" + s + "'");
}

void resolve(CliState& st)
{
    st.cfg.isp_explicit = st.isp_opt->count() > 0;
    if (st.cfg.isp_explicit) {
        st.cfg.isp = parse_isp(st.isp);
    }
    if (!st.stop.empty()) {
        st.cfg.stop_mode = parse_stop(st.stop);
    }
}

int cmd_run(CliState& st)
{
    resolve(st);
    ExperimentConfig& cfg = st.cfg;
    cfg.validate();
    const std::filesystem::path dir(cfg.out_dir);
    const Mesh2D mesh = build_mesh(cfg.M);
    const TimeGrid grid = TimeGrid::uniform(cfg.T, cfg.N);

    if (st.method == "fixed-point") {
        if (cfg.resolved_isp() != IspKind::ispn) {
            throw InvalidParameter("fixed-point reconstruction needs trace data (--isp ispn)");
        }
        const Example ex = make_example(cfg.example, cfg.T);
        const SyntheticData data = synthesize_data(cfg);
        const CQWeights weights = cq_weights(cfg.alpha, cfg.N);
        InversionContext ctx(mesh, ex.coeffs, weights, grid);
        const std::optional<double> width
            = st.mollify_width > 0.0 ? std::optional<double>(st.mollify_width) : std::nullopt;
        const TraceMatrix h = fixed_point_h(data.noisy, mesh, ex.coeffs, weights, grid, width);
        const FixedPointResult fp = fixed_point_solve(h, make_boundary_operator(ctx), ctx.space(), st.fp_iter,
                                                      st.fp_tol);
        const SourceGrid f_dagger = ex.sample_source(mesh, grid);
        ReconstructionReport rep;
        rep.f_hat = fp.f;
        rep.stop_index = fp.iterations;
        rep.error = error_metric(fp.f, f_dagger, ctx.space());
        rep.stop_reason = fp.converged ? "converged" : "max-iter";
        rep.config_echo = cfg.to_json();
        export_plot_data(rep, &f_dagger, mesh, grid, cfg.out_dir);
        nlohmann::ordered_json j;
        j["config"] = nlohmann::ordered_json::parse(cfg.to_json());
        j["method"] = "fixed-point";
        j["iterations"] = fp.iterations;
        j["converged"] = fp.converged;
        j["increments"] = fp.increments;
        j["error"] = *rep.error;
        j["relative_error"] = *rep.error / ctx.space().norm(f_dagger.values);
        j["mollify_width"] = st.mollify_width;
        std::ofstream(dir / "report.json") << j.dump(2) << '\n';
        std::printf("fixed-point: e = %.6e after %d iterations (%s)\n", *rep.error, fp.iterations,
                    rep.stop_reason.c_str());
        return 0;
    }
    if (st.method != "cg") {
        throw InvalidParameter("unknown method '" + st.method + "' (expected cg or fixed-point)");
    }

    const RunOutcome out = run_experiment(cfg);
    write_report_json(out, (dir / "report.json").string());
    export_plot_data(out.report, &out.f_dagger, mesh, grid, cfg.out_dir);
    std::printf("%s %s alpha=%g eps=%g: e = %.6e, k* = %d (%s), delta = %.6e\n", to_string(cfg.resolved_isp()),
                cfg.example.c_str(), cfg.alpha, cfg.epsilon, out.report.error.value_or(std::nan("")),
                out.report.stop_index, out.report.stop_reason.c_str(), out.data.delta);
    return 0;
}

int cmd_table(CliState& st)
{
    resolve(st);
    TableConfig tc;
    tc.base = st.cfg;
    tc.alphas = st.alphas;
    tc.epsilons = st.epsilons;
    tc.threads = st.threads;
    const TableResult table = run_table(tc);
    write_table(table, st.cfg.out_dir);
    std::printf("alpha");
    for (double e : tc.epsilons) {
        std::printf("\teps=%g", e);
    }
    std::printf("\n");
    for (std::size_t a = 0; a < tc.alphas.size(); ++a) {
        std::printf("%g", tc.alphas[a]);
        for (std::size_t e = 0; e < tc.epsilons.size(); ++e) {
            std::printf("\t%s", format_cell(table.cell(a, e)).c_str());
        }
        std::printf("\n");
    }
    return 0;
}

int cmd_converge(CliState& st)
{
    std::filesystem::create_directories(st.cfg.out_dir);
    const bool space = st.kind == "space" || st.kind == "both";
    const bool time = st.kind == "time" || st.kind == "both";
    if (!space && !time) {
        throw InvalidParameter("unknown study '" + st.kind + "' (expected space, time or both)");
    }
    auto report = [&](ConvergenceKind kind, const std::vector<int>& levels, int fixed, const char* name) {
        ConvergenceConfig cc;
        cc.kind = kind;
        cc.alpha = st.cfg.alpha;
        cc.T = st.cfg.T;
        cc.levels = levels;
        cc.fixed = fixed;
        const ConvergenceStudy study = run_convergence_study(cc);
        const auto path = std::filesystem::path(st.cfg.out_dir) / (std::string("convergence_") + name + ".csv");
        write_convergence_csv(study, path.string());
        std::printf("%s study (alpha=%g):\n", name, cc.alpha);
        for (const ConvergenceRow& r : study.rows) {
            std::printf("  h=%.5f tau=%.6f error=%.6e order=%s\n", r.h, r.tau, r.error,
                        r.order ? std::to_string(*r.order).c_str() : "-");
        }
        std::printf("  fitted order %s\n", study.fitted_order ? std::to_string(*study.fitted_order).c_str() : "-");
    };
    if (space) {
        report(ConvergenceKind::space, st.space_levels, 20, "space");
    }
    if (time) {
        report(ConvergenceKind::time, st.time_levels, 16, "time");
    }
    return 0;
}

int cmd_validate(CliState& st)
{
    const std::vector<std::string> ids
        = st.example_opt->count() > 0 ? std::vector<std::string>{st.cfg.example} : example_ids();
    bool ok = true;
    for (const std::string& id : ids) {
        const AssumptionReport rep = validate_example(id, std::max(st.cfg.M, 8), st.cfg.T);
        std::printf("%s: %s\n%s", id.c_str(), rep.ok() ? "ok" : "VIOLATED", rep.summary().c_str());
        ok = ok && rep.ok();
    }
    return ok ? 0 : 1;
}

int cmd_export(CliState& st)
{
    if (st.report_path.empty()) {
        throw InvalidParameter("export needs --report <report.json>");
    }
    const StoredReport stored = read_report_json(st.report_path);
    const ExperimentConfig& cfg = stored.config;
    const Mesh2D mesh = build_mesh(cfg.M);
    const TimeGrid grid = TimeGrid::uniform(cfg.T, cfg.N);
    const SourceGrid f_dagger = make_example(cfg.example, cfg.T).sample_source(mesh, grid);
    export_plot_data(stored.report, &f_dagger, mesh, grid, st.cfg.out_dir);
    std::printf("wrote reconstruction.csv, error.csv, history.csv to %s\n", st.cfg.out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Source reconstruction for time-fractional subdiffusion from lateral boundary data"};
    app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");
    app.require_subcommand(1);

    CliState st;
    ExperimentConfig& c = st.cfg;
    st.isp_opt = app.add_option("--isp", st.isp, "Inverse problem: ispn (trace data) or ispd (flux data)")
                     ->check(CLI::IsMember({"ispn", "ispd"}));
    st.example_opt = app.add_option("--example", c.example, "Example id")->check(CLI::IsMember(example_ids()));
    app.add_option("--alpha", c.alpha, "Fractional order in (0, 1)");
    app.add_option("--M", c.M, "Mesh cells per direction");
    app.add_option("--N", c.N, "Time steps");
    app.add_option("--T", c.T, "Final time");
    app.add_option("--eps", c.epsilon, "Relative noise level");
    app.add_option("--seed", c.seed, "Noise seed");
    app.add_option("--cdp", c.c_dp, "Discrepancy constant c > 1");
    app.add_option("--kmax", c.K_max, "Maximum CG iterations");
    app.add_option("--out-dir", c.out_dir, "Output directory");
    app.add_option("--refine", c.refine, "Refinement factor of the data-generating discretization");
    app.add_flag("--allow-inverse-crime", c.allow_inverse_crime, "Permit --refine 1");
    app.add_option("--stop", st.stop, "Stopping rule: discrepancy, minimal-error or fixed")
        ->check(CLI::IsMember({"discrepancy", "minimal-error", "fixed"}));
    app.add_flag("--continue-after-stop", c.continue_after_stop, "Record the history up to K after stopping");
    app.add_option("--method", st.method, "run: cg or fixed-point")->check(CLI::IsMember({"cg", "fixed-point"}));
    app.add_option("--fp-iter", st.fp_iter, "Fixed-point iteration limit");
    app.add_option("--fp-tol", st.fp_tol, "Fixed-point relative increment tolerance");
    app.add_option("--mollify", st.mollify_width, "Mollifier width in grid cells (0 = none)");
    app.add_option("--threads", st.threads, "table: worker threads (0 = hardware concurrency)");
    app.add_option("--alphas", st.alphas, "table: fractional orders")->delimiter(',');
    app.add_option("--epsilons", st.epsilons, "table: noise levels")->delimiter(',');
    app.add_option("--kind", st.kind, "converge: space, time or both")
        ->check(CLI::IsMember({"space", "time", "both"}));
    app.add_option("--space-levels", st.space_levels, "converge: mesh sizes")->delimiter(',');
    app.add_option("--time-levels", st.time_levels, "converge: time steps")->delimiter(',');
    app.add_option("--report", st.report_path, "export: report.json written by run");

    auto* run = app.add_subcommand("run", "Single reconstruction")->fallthrough();
    auto* table = app.add_subcommand("table", "Sweep over fractional orders and noise levels")->fallthrough();
    auto* converge = app.add_subcommand("converge", "Manufactured-solution convergence study")->fallthrough();
    auto* validate = app.add_subcommand("validate", "Check coefficient assumptions of the examples")->fallthrough();
    auto* exp = app.add_subcommand("export", "Write plot data from a stored report")->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(st);
        }
        if (table->parsed()) {
            return cmd_table(st);
        }
        if (converge->parsed()) {
            return cmd_converge(st);
        }
        if (validate->parsed()) {
            return cmd_validate(st);
        }
        if (exp->parsed()) {
            return cmd_export(st);
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 0;
}
