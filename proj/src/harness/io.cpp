#include "fracinv/harness.hpp"

#include "fracinv/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fracinv {

namespace {

using Json = nlohmann::ordered_json;

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    os << std::setprecision(17);
    return os;
}

void write_grid_csv(const std::filesystem::path& path, const TraceMatrix& values, const Mesh2D& mesh,
                    const TimeGrid& grid)
{
    std::ofstream os = open_output(path);
    os << "x1,t,value\n";
    for (int n = 1; n <= grid.N; ++n) {
        for (int i = 0; i <= mesh.M; ++i) {
            os << mesh.x1(i) << ',' << grid.t(n) << ',' << values(i, n - 1) << '\n';
        }
    }
}

Json optional_number(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

} // namespace

void export_plot_data(const ReconstructionReport& report, const SourceGrid* f_dagger, const Mesh2D& mesh,
                      const TimeGrid& grid, const std::string& out_dir)
{
    if (report.f_hat.values.rows() != mesh.trace_size() || report.f_hat.values.cols() != grid.N) {
        throw DimensionMismatch("export_plot_data: reconstruction does not match the grids");
    }
    if (f_dagger != nullptr && !f_dagger->same_shape(report.f_hat)) {
        throw DimensionMismatch("export_plot_data: reference source does not match the reconstruction");
    }
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    write_grid_csv(dir / "reconstruction.csv", report.f_hat.values, mesh, grid);
    const TraceMatrix err = f_dagger != nullptr ? TraceMatrix(report.f_hat.values - f_dagger->values)
                                                : TraceMatrix::Constant(mesh.trace_size(), grid.N, std::nan(""));
    write_grid_csv(dir / "error.csv", err, mesh, grid);

    std::ofstream os = open_output(dir / "history.csv");
    os << "k,J,residual_norm,error,gradient_norm,step,gamma,is_stop\n";
    for (const IterationRecord& r : report.history) {
        os << r.k << ',' << r.J << ',' << r.residual_norm << ',';
        if (r.error) {
            os << *r.error;
        } else {
            os << "nan";
        }
        os << ',' << r.gradient_norm << ',' << r.step << ',' << r.gamma << ',' << (r.k == report.stop_index ? 1 : 0)
           << '\n';
    }
}

std::string report_to_json(const RunOutcome& outcome)
{
    const ReconstructionReport& rep = outcome.report;
    Json j;
    j["config"] = Json::parse(rep.config_echo);
    j["stop_index"] = rep.stop_index;
    j["stop_reason"] = rep.stop_reason;
    j["error"] = optional_number(rep.error);
    j["residual_norm"] = rep.residual_norm;
    j["delta"] = outcome.data.delta;
    Json hist = Json::array();
    for (const IterationRecord& r : rep.history) {
        hist.push_back(Json{{"k", r.k},
                            {"J", r.J},
                            {"residual_norm", r.residual_norm},
                            {"error", optional_number(r.error)},
                            {"gradient_norm", r.gradient_norm},
                            {"step", r.step},
                            {"gamma", r.gamma}});
    }
    j["history"] = std::move(hist);
    const TraceMatrix& f = rep.f_hat.values;
    j["f_hat"] = Json{{"rows", f.rows()},
                      {"cols", f.cols()},
                      {"layout", "column-major, row = x1 node, column = time level 1..N"},
                      {"values", std::vector<double>(f.data(), f.data() + f.size())}};
    return j.dump(2);
}

void write_report_json(const RunOutcome& outcome, const std::string& path)
{
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream os(p);
    if (!os) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    os << report_to_json(outcome) << '\n';
}

StoredReport read_report_json(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open report " + path);
    }
    const Json j = Json::parse(is);
    StoredReport out;
    const Json& c = j.at("config");
    ExperimentConfig& cfg = out.config;
    cfg.isp = parse_isp(c.at("isp").get<std::string>());
    cfg.isp_explicit = true;
    cfg.example = c.at("example").get<std::string>();
    cfg.alpha = c.at("alpha").get<double>();
    cfg.M = c.at("M").get<int>();
    cfg.N = c.at("N").get<int>();
    cfg.T = c.at("T").get<double>();
    cfg.epsilon = c.at("epsilon").get<double>();
    cfg.c_dp = c.at("c_dp").get<double>();
    cfg.K_max = c.at("K_max").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.refine = c.at("refine").get<int>();
    cfg.allow_inverse_crime = c.at("allow_inverse_crime").get<bool>();
    cfg.alpha_index = c.at("alpha_index").get<std::uint32_t>();
    cfg.epsilon_index = c.at("epsilon_index").get<std::uint32_t>();
    const std::string mode = c.at("stop_mode").get<std::string>();
    for (StopMode m : {StopMode::discrepancy, StopMode::minimal_error, StopMode::fixed}) {
        if (mode == to_string(m)) {
            cfg.stop_mode = m;
        }
    }
    cfg.continue_after_stop = c.at("continue_after_stop").get<bool>();
    cfg.out_dir = c.at("out_dir").get<std::string>();

    ReconstructionReport& rep = out.report;
    rep.config_echo = c.dump();
    rep.stop_index = j.at("stop_index").get<int>();
    rep.stop_reason = j.at("stop_reason").get<std::string>();
    if (!j.at("error").is_null()) {
        rep.error = j.at("error").get<double>();
    }
    rep.residual_norm = j.at("residual_norm").get<double>();
    for (const Json& h : j.at("history")) {
        IterationRecord r;
        r.k = h.at("k").get<int>();
        r.J = h.at("J").get<double>();
        r.residual_norm = h.at("residual_norm").get<double>();
        if (!h.at("error").is_null()) {
            r.error = h.at("error").get<double>();
        }
        r.gradient_norm = h.at("gradient_norm").get<double>();
        r.step = h.at("step").get<double>();
        r.gamma = h.at("gamma").get<double>();
        rep.history.push_back(r);
    }
    const Json& f = j.at("f_hat");
    const auto values = f.at("values").get<std::vector<double>>();
    const auto rows = f.at("rows").get<Eigen::Index>();
    const auto cols = f.at("cols").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
        throw DimensionMismatch("read_report_json: f_hat has the wrong number of values");
    }
    rep.f_hat.values = Eigen::Map<const Eigen::MatrixXd>(values.data(), rows, cols);
    return out;
}

} // namespace fracinv
