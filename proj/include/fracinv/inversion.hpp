#pragma once

#include "fracinv/coefficients.hpp"
#include "fracinv/fields.hpp"
#include "fracinv/frac_time.hpp"
#include "fracinv/mesh.hpp"
#include "fracinv/solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fracinv {

/// Everything one reconstruction needs: the discretization and a stepper on
/// the lateral-Dirichlet free nodes. The forward map f -> trace(u_f) and its
/// adjoint both run on that stepper, so factorizations are shared.
///
/// Not thread safe; build one context per run.
class InversionContext {
public:
    InversionContext(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                     const TimeGrid& grid, StepperOptions options = {});

    /// Free-node history of the Neumann problem with source f R.
    Eigen::MatrixXd forward_history(const SourceGrid& f);
    /// trace(u_f) on the top face, (M+1) x N.
    TraceMatrix forward_trace(const SourceGrid& f);
    /// Top trace of the zero-source problem whose conormal flux on the top
    /// face is `flux` (measured d/dx2 u, scaled by a22 internally).
    TraceMatrix neumann_response(const TraceMatrix& flux);
    /// Adjoint state for a trace residual, free-node history.
    Eigen::MatrixXd adjoint_history(const TraceMatrix& residual);
    /// Gradient of f -> (1/2)|trace(u_f) - data|^2 for the given residual,
    /// represented in the trace inner product.
    TraceMatrix gradient_from_residual(const TraceMatrix& residual);
    /// tau sum_n v_n^T Mass P_n h_n for an adjoint history v.
    double adjoint_pairing(const Eigen::MatrixXd& adjoint, const SourceGrid& h) const;

    [[nodiscard]] const Mesh2D& mesh() const { return *mesh_; }
    [[nodiscard]] const CoefficientSet& coefficients() const { return *coeffs_; }
    [[nodiscard]] const CQWeights& weights() const { return *weights_; }
    [[nodiscard]] const TimeGrid& grid() const { return grid_; }
    [[nodiscard]] const TraceSpace& space() const { return space_; }
    [[nodiscard]] TimeStepper& stepper() { return stepper_; }

private:
    void check_trace(const TraceMatrix& m, const char* who) const;

    const Mesh2D* mesh_;
    const CoefficientSet* coeffs_;
    const CQWeights* weights_;
    TimeGrid grid_;
    TimeStepper stepper_;
    TraceSpace space_;
};

/// The affine data misfit r(f) = trace(u_f) + offset - target.
///  trace data: offset = 0, target = observed trace.
///  flux data:  offset = trace of the zero-source problem carrying the
///              measured flux, target = 0 (the Dirichlet value).
struct MisfitProblem {
    ObservationKind kind = ObservationKind::trace;
    TraceMatrix target;
    TraceMatrix offset;
    std::optional<double> delta;

    static MisfitProblem from_observation(InversionContext& ctx, const LateralObservation& g_obs);

    [[nodiscard]] TraceMatrix residual(const TraceMatrix& trace) const { return trace + offset - target; }
};

/// J(f) = 1/2 |r(f)|^2 in L^2(0,T; L^2(omega)).
double eval_J(const SourceGrid& f, const MisfitProblem& problem, InversionContext& ctx);
double eval_J(const SourceGrid& f, const LateralObservation& g_obs, InversionContext& ctx);

/// J'(f) as a trace-grid field.
SourceGrid eval_gradient(const SourceGrid& f, const MisfitProblem& problem, InversionContext& ctx);
SourceGrid eval_gradient(const SourceGrid& f, const LateralObservation& g_obs, InversionContext& ctx);

/// residual_norm <= c delta. Requires c > 1 and delta >= 0.
bool discrepancy_stop(double residual_norm, double c, double delta);

enum class StopMode {
    /// First k with |r_k| <= c delta, else K.
    discrepancy,
    /// Run K iterations and keep the iterate closest to the reference source.
    minimal_error,
    /// Run exactly K iterations.
    fixed,
};

const char* to_string(StopMode mode);

struct StoppingRule {
    StopMode mode = StopMode::discrepancy;
    double c = 1.01;
    std::optional<double> delta;
    int max_iter = 50;
    /// Discrepancy mode only: keep iterating to K for the history while
    /// still returning the stopped iterate.
    bool continue_after_stop = false;
};

struct IterationRecord {
    int k = 0;
    double J = 0.0;
    double residual_norm = 0.0;
    std::optional<double> error;
    double gradient_norm = 0.0;
    /// Step s_k and conjugate coefficient gamma_k used to leave iterate k.
    double step = 0.0;
    double gamma = 0.0;
};

struct ReconstructionReport {
    SourceGrid f_hat;
    int stop_index = 0;
    std::optional<double> error;
    double residual_norm = 0.0;
    std::string stop_reason;
    std::vector<IterationRecord> history;
    /// Resolved configuration, a JSON object serialized as text.
    std::string config_echo = "{}";
};

/// What one CG iteration did: f_{k+1} = f_k + step * direction.
struct CGStep {
    int k = 0;
    const SourceGrid* f = nullptr;          // f_k
    const TraceMatrix* direction = nullptr;  // d_k
    double step = 0.0;
    double gamma = 0.0;
};

struct CGOptions {
    StoppingRule stopping;
    /// Reference source for error tracking and minimal-error selection.
    const SourceGrid* f_dagger = nullptr;
    /// Called before every update, e.g. for line-search diagnostics.
    std::function<void(const CGStep&)> observer;
};

/// Fletcher-Reeves conjugate gradient on J starting from f = 0. The residual
/// is updated by linearity, r_{k+1} = r_k + s_k u_{d_k}, so every iteration
/// costs one adjoint and one forward sweep.
ReconstructionReport cg_reconstruct(const MisfitProblem& problem, InversionContext& ctx, const CGOptions& options);
ReconstructionReport cg_reconstruct(const LateralObservation& g_obs, InversionContext& ctx,
                                    const CGOptions& options);

} // namespace fracinv
