#include "fracinv/harness.hpp"

#include "fracinv/errors.hpp"
#include "fracinv/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace fracinv {

namespace {

// Runs body(0..count-1) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body)
{
    int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                body(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

std::string csv_number(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

void ExperimentConfig::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidParameter("config: alpha must lie in (0, 1)");
    }
    if (M < 3) {
        throw InvalidParameter("config: M must be >= 3");
    }
    if (N < 1) {
        throw InvalidParameter("config: N must be >= 1");
    }
    if (!(T > 0.0)) {
        throw InvalidParameter("config: T must be positive");
    }
    if (!(epsilon >= 0.0)) {
        throw InvalidParameter("config: epsilon must be non-negative");
    }
    if (!(c_dp > 1.0)) {
        throw InvalidParameter("config: the discrepancy constant must exceed 1");
    }
    if (K_max < 1) {
        throw InvalidParameter("config: K must be >= 1");
    }
    if (refine < 1) {
        throw InvalidParameter("config: refinement factor must be >= 1");
    }
    if (refine == 1 && !allow_inverse_crime) {
        throw InvalidParameter(
            "config: refinement 1 generates the data with the inversion discretization itself (inverse crime); "
            "pass --allow-inverse-crime to proceed anyway");
    }
    make_example(example, T);
}

IspKind ExperimentConfig::resolved_isp() const
{
    return isp_explicit ? isp : make_example(example, T).default_isp;
}

StopMode ExperimentConfig::resolved_stop_mode() const
{
    if (stop_mode) {
        return *stop_mode;
    }
    return resolved_isp() == IspKind::ispn ? StopMode::discrepancy : StopMode::minimal_error;
}

std::string ExperimentConfig::to_json() const
{
    nlohmann::ordered_json j;
    j["isp"] = to_string(resolved_isp());
    j["example"] = example;
    j["alpha"] = alpha;
    j["M"] = M;
    j["N"] = N;
    j["T"] = T;
    j["epsilon"] = epsilon;
    j["c_dp"] = c_dp;
    j["K_max"] = K_max;
    j["seed"] = seed;
    j["refine"] = refine;
    j["allow_inverse_crime"] = allow_inverse_crime;
    j["alpha_index"] = alpha_index;
    j["epsilon_index"] = epsilon_index;
    j["stop_mode"] = to_string(resolved_stop_mode());
    j["continue_after_stop"] = continue_after_stop;
    j["out_dir"] = out_dir;
    return j.dump();
}

LateralObservation exact_data(const ExperimentConfig& config, const Example& example)
{
    config.validate();
    const int r = config.refine;
    const IspKind isp = config.resolved_isp();
    const Mesh2D fine = build_mesh(config.M * r);
    const TimeGrid fine_grid = TimeGrid::uniform(config.T, config.N * r);
    const CQWeights weights = cq_weights(config.alpha, fine_grid.N);
    const SourceGrid f = example.sample_source(fine, fine_grid);

    TimeStepper stepper(fine, example.coeffs, weights, fine_grid,
                        isp == IspKind::ispn ? BcVariant::ispn : BcVariant::ispd_forward, StepperOptions::single_sweep());
    const Eigen::MatrixXd hist
        = stepper.march([&](int n, Eigen::VectorXd& load) { stepper.add_source_load(f, n, load); });
    const TraceMatrix full = isp == IspKind::ispn ? stepper.trace(hist) : stepper.flux(hist);

    LateralObservation g;
    g.kind = isp == IspKind::ispn ? ObservationKind::trace : ObservationKind::flux;
    g.values.resize(config.M + 1, config.N);
    for (int n = 1; n <= config.N; ++n) {
        for (int i = 0; i <= config.M; ++i) {
            g.values(i, n - 1) = full(i * r, n * r - 1);
        }
    }
    return g;
}

SyntheticData synthesize_data(const ExperimentConfig& config)
{
    const Example example = make_example(config.example, config.T);
    const LateralObservation clean = exact_data(config, example);
    const Mesh2D mesh = build_mesh(config.M);
    const TraceSpace space(mesh, TimeGrid::uniform(config.T, config.N));
    return add_noise(clean, NoiseModel{config.epsilon, config.seed, config.alpha_index, config.epsilon_index}, space);
}

RunOutcome run_experiment(const ExperimentConfig& config, const LateralObservation* clean)
{
    config.validate();
    const Example example = make_example(config.example, config.T);
    const Mesh2D mesh = build_mesh(config.M);
    const TimeGrid grid = TimeGrid::uniform(config.T, config.N);
    const CQWeights weights = cq_weights(config.alpha, config.N);

    RunOutcome out;
    out.config = config;
    out.f_dagger = example.sample_source(mesh, grid);

    InversionContext ctx(mesh, example.coeffs, weights, grid);
    const LateralObservation exact = clean != nullptr ? *clean : exact_data(config, example);
    out.data = add_noise(exact, NoiseModel{config.epsilon, config.seed, config.alpha_index, config.epsilon_index},
                         ctx.space());

    CGOptions options;
    options.stopping.mode = config.resolved_stop_mode();
    options.stopping.c = config.c_dp;
    options.stopping.delta = out.data.delta;
    options.stopping.max_iter = config.K_max;
    options.stopping.continue_after_stop = config.continue_after_stop;
    options.f_dagger = &out.f_dagger;
    out.report = cg_reconstruct(out.data.noisy, ctx, options);
    out.report.config_echo = config.to_json();
    return out;
}

const TableCell& TableResult::cell(std::size_t alpha_index, std::size_t epsilon_index) const
{
    return cells.at(alpha_index * config.epsilons.size() + epsilon_index);
}

TableResult run_table(const TableConfig& config)
{
    if (config.alphas.empty() || config.epsilons.empty()) {
        throw InvalidParameter("run_table: empty sweep");
    }
    config.base.validate();
    const Example example = make_example(config.base.example, config.base.T);
    const std::size_t na = config.alphas.size();
    const std::size_t ne = config.epsilons.size();

    auto cell_config = [&](std::size_t a, std::size_t e) {
        ExperimentConfig c = config.base;
        c.alpha = config.alphas[a];
        c.epsilon = config.epsilons[e];
        c.alpha_index = static_cast<std::uint32_t>(a);
        c.epsilon_index = static_cast<std::uint32_t>(e);
        return c;
    };

    TableResult result;
    result.config = config;
    result.cells.resize(na * ne);

    std::vector<std::optional<LateralObservation>> clean(na);
    std::vector<std::string> clean_failure(na);
    parallel_for(na, config.threads, [&](std::size_t a) {
        try {
            clean[a] = exact_data(cell_config(a, 0), example);
        } catch (const std::exception& ex) {
            clean_failure[a] = ex.what();
        }
    });

    std::mutex log_mutex;
    parallel_for(na * ne, config.threads, [&](std::size_t idx) {
        const std::size_t a = idx / ne;
        const std::size_t e = idx % ne;
        TableCell& cell = result.cells[idx];
        cell.alpha = config.alphas[a];
        cell.epsilon = config.epsilons[e];
        if (!clean[a]) {
            cell.failure = clean_failure[a];
            return;
        }
        const auto start = std::chrono::steady_clock::now();
        try {
            const RunOutcome out = run_experiment(cell_config(a, e), &*clean[a]);
            cell.error = out.report.error;
            cell.stop_index = out.report.stop_index;
            cell.delta = out.data.delta;
            cell.residual_norm = out.report.residual_norm;
        } catch (const std::exception& ex) {
            cell.failure = ex.what();
        }
        cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const std::lock_guard lock(log_mutex);
        std::fprintf(stderr, "cell alpha=%g eps=%g: %s (%.1f s)\n", cell.alpha, cell.epsilon,
                     cell.failure.empty() ? format_cell(cell).c_str() : cell.failure.c_str(), cell.seconds);
    });
    return result;
}

std::string format_cell(const TableCell& cell)
{
    if (!cell.failure.empty() || !cell.error) {
        return "failed";
    }
    const double e = *cell.error;
    int exponent = 0;
    double mantissa = 0.0;
    if (e > 0.0) {
        exponent = static_cast<int>(std::floor(std::log10(e)));
        mantissa = e / std::pow(10.0, exponent);
        // Rounding to two decimals may carry into the next decade.
        if (std::round(mantissa * 100.0) >= 1000.0) {
            mantissa /= 10.0;
            ++exponent;
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2fe%d (%d)", mantissa, exponent, cell.stop_index);
    return buf;
}

void write_table(const TableResult& table, const std::string& out_dir)
{
    std::filesystem::create_directories(out_dir);
    const auto& cfg = table.config;
    {
        std::ofstream os(std::filesystem::path(out_dir) / "table.csv");
        if (!os) {
            throw std::runtime_error("write_table: cannot open table.csv in " + out_dir);
        }
        os << "alpha";
        for (double eps : cfg.epsilons) {
            os << ",eps=" << eps;
        }
        os << '\n';
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            os << cfg.alphas[a];
            for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
                os << ',' << format_cell(table.cell(a, e));
            }
            os << '\n';
        }
    }
    {
        std::ofstream os(std::filesystem::path(out_dir) / "cells.csv");
        if (!os) {
            throw std::runtime_error("write_table: cannot open cells.csv in " + out_dir);
        }
        os << "alpha,epsilon,error,stop_index,delta,residual_norm,status\n";
        for (const TableCell& c : table.cells) {
            os << csv_number(c.alpha) << ',' << csv_number(c.epsilon) << ','
               << (c.error ? csv_number(*c.error) : std::string("nan")) << ',' << c.stop_index << ','
               << csv_number(c.delta) << ',' << csv_number(c.residual_norm) << ','
               << (c.failure.empty() ? "ok" : "failed") << '\n';
        }
    }
    {
        nlohmann::ordered_json j;
        j["base"] = nlohmann::ordered_json::parse(cfg.base.to_json());
        j["alphas"] = cfg.alphas;
        j["epsilons"] = cfg.epsilons;
        std::ofstream os(std::filesystem::path(out_dir) / "config.json");
        if (!os) {
            throw std::runtime_error("write_table: cannot open config.json in " + out_dir);
        }
        os << j.dump(2) << '\n';
    }
}

} // namespace fracinv
