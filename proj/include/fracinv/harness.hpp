#pragma once

#include "fracinv/coefficients.hpp"
#include "fracinv/fields.hpp"
#include "fracinv/frac_time.hpp"
#include "fracinv/inversion.hpp"
#include "fracinv/mesh.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fracinv {

enum class IspKind {
    /// Recover f from the lateral trace of the Neumann problem.
    ispn,
    /// Recover f from the lateral flux of the Dirichlet problem.
    ispd,
};

const char* to_string(IspKind kind);
IspKind parse_isp(const std::string& text);

/// Built-in experiment: coefficients, reference source and the inverse
/// problem it is meant for.
struct Example {
    std::string id;
    CoefficientSet coeffs;
    std::function<double(double x1, double t)> f_dagger;
    IspKind default_isp = IspKind::ispn;
    double T = 1.0;

    [[nodiscard]] SourceGrid sample_source(const Mesh2D& mesh, const TimeGrid& grid) const
    {
        return SourceGrid::sample(mesh, grid, f_dagger);
    }
};

/// Ids: smooth-static, smooth-dynamic, jump-dynamic, smooth-dirichlet,
/// jump-dirichlet. The "jump" sources are cut off at t = 0.7 T.
Example make_example(const std::string& id, double T = 1.0);
std::vector<std::string> example_ids();

/// Philox4x32-10 counter-based generator.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key);
    static Key key_from_seed(std::uint64_t seed);
};

/// Standard normal fill of an r x c matrix (column-major order) from the
/// substream (seed, stream_a, stream_b): the normals of entries 2p and 2p+1
/// come from one Box-Muller transform of the block at counter
/// (p, 0, stream_a, stream_b).
Eigen::MatrixXd standard_normal_field(int rows, int cols, std::uint64_t seed, std::uint32_t stream_a,
                                      std::uint32_t stream_b);

struct NoiseModel {
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t stream_a = 0;
    std::uint32_t stream_b = 0;
};

struct ExperimentConfig {
    IspKind isp = IspKind::ispn;
    /// True when `isp` was set explicitly rather than taken from the example.
    bool isp_explicit = false;
    std::string example = "smooth-static";
    double alpha = 0.5;
    int M = 100;
    int N = 1000;
    double T = 1.0;
    double epsilon = 0.0;
    double c_dp = 1.01;
    int K_max = 50;
    std::uint64_t seed = 20240601;
    int refine = 2;
    bool allow_inverse_crime = false;
    /// Substream indices of the noise (sweep position of the cell).
    std::uint32_t alpha_index = 0;
    std::uint32_t epsilon_index = 0;
    /// Empty means: discrepancy for ISPn, minimal-error for ISPd.
    std::optional<StopMode> stop_mode;
    bool continue_after_stop = false;
    std::string out_dir = "out";

    /// Throws InvalidParameter on an inconsistent configuration.
    void validate() const;
    [[nodiscard]] IspKind resolved_isp() const;
    [[nodiscard]] StopMode resolved_stop_mode() const;
    /// Full resolved configuration as a JSON object.
    [[nodiscard]] std::string to_json() const;
};

struct SyntheticData {
    LateralObservation clean;
    LateralObservation noisy;
    double delta = 0.0;
};

/// Exact data: direct solve on the mesh refined by config.refine in space
/// and time, restricted to the inversion grid by injection. Trace data for
/// ISPn, top flux of the Dirichlet problem for ISPd.
LateralObservation exact_data(const ExperimentConfig& config, const Example& example);

/// g_delta = g + eps |g|_inf xi, delta = |g - g_delta| in L^2(0,T; L^2(omega)).
SyntheticData add_noise(const LateralObservation& clean, const NoiseModel& noise, const TraceSpace& space);

SyntheticData synthesize_data(const ExperimentConfig& config);

struct RunOutcome {
    ExperimentConfig config;
    SyntheticData data;
    SourceGrid f_dagger;
    ReconstructionReport report;
};

/// One reconstruction. `clean` may carry precomputed exact data for the
/// configuration (shared between sweep cells).
RunOutcome run_experiment(const ExperimentConfig& config, const LateralObservation* clean = nullptr);

struct TableCell {
    double alpha = 0.0;
    double epsilon = 0.0;
    std::optional<double> error;
    int stop_index = 0;
    double delta = 0.0;
    double residual_norm = 0.0;
    double seconds = 0.0;
    std::string failure;
};

struct TableConfig {
    ExperimentConfig base;
    std::vector<double> alphas{0.25, 0.5, 0.75};
    std::vector<double> epsilons{0.0, 1e-3, 5e-3, 1e-2, 5e-2};
    /// 0 picks the hardware concurrency.
    int threads = 0;
};

struct TableResult {
    TableConfig config;
    std::vector<TableCell> cells;  // alpha-major

    [[nodiscard]] const TableCell& cell(std::size_t alpha_index, std::size_t epsilon_index) const;
};

/// Runs every (alpha, epsilon) cell; exact data is computed once per alpha.
/// A failing cell is recorded and the sweep continues.
TableResult run_table(const TableConfig& config);

/// "1.26e-3 (7)" formatting of one cell.
std::string format_cell(const TableCell& cell);

/// table.csv (formatted cells) and cells.csv (full precision) plus config.json.
void write_table(const TableResult& table, const std::string& out_dir);

enum class ConvergenceKind { space, time };

struct ConvergenceConfig {
    ConvergenceKind kind = ConvergenceKind::space;
    double alpha = 0.5;
    double T = 1.0;
    /// Mesh sizes of a space study, time steps of a time study.
    std::vector<int> levels{16, 32, 64};
    /// Time steps of a space study / mesh size of a time study.
    int fixed = 20;
    /// Scale of the manufactured solution; 0 gives the zero-source case.
    double amplitude = 1.0;
};

struct ConvergenceRow {
    double h = 0.0;
    double tau = 0.0;
    double error = 0.0;
    /// log2 of the error ratio to the previous row; empty on the first row.
    std::optional<double> order;
};

struct ConvergenceStudy {
    ConvergenceConfig config;
    std::vector<ConvergenceRow> rows;
    /// Least-squares slope of log(error) against log(h) or log(tau).
    std::optional<double> fitted_order;
};

/// Manufactured solution u = A t^2 cos(pi x1) cos(2 pi x2), a = I, q = 0.
/// Space study: the load uses the discrete Caputo derivative of t^2, so the
/// time-discrete problem is solved exactly by t_n^2 X and the L^2 error at T
/// is purely spatial. Time study: the load reproduces t^2 X_h exactly in
/// continuous time, so the error against t^2 X_h is purely temporal.
ConvergenceStudy run_convergence_study(const ConvergenceConfig& config);

void write_convergence_csv(const ConvergenceStudy& study, const std::string& path);

/// reconstruction.csv, error.csv (x1, t, value; (M+1) N rows each) and
/// history.csv (one row per iterate, the stop index flagged).
void export_plot_data(const ReconstructionReport& report, const SourceGrid* f_dagger, const Mesh2D& mesh,
                      const TimeGrid& grid, const std::string& out_dir);

/// JSON report: configuration echo, summary, history and the reconstruction.
std::string report_to_json(const RunOutcome& outcome);
void write_report_json(const RunOutcome& outcome, const std::string& path);
/// Reads a report written by write_report_json back into its configuration
/// and reconstruction.
struct StoredReport {
    ExperimentConfig config;
    ReconstructionReport report;
};
StoredReport read_report_json(const std::string& path);

/// Validates the coefficient assumptions of an example on an M x M mesh.
AssumptionReport validate_example(const std::string& id, int M = 32, double T = 1.0);

} // namespace fracinv
