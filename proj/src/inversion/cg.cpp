#include "fracinv/inversion.hpp"

#include "fracinv/errors.hpp"

#include <cmath>
#include <limits>

namespace fracinv {

InversionContext::InversionContext(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                                   const TimeGrid& grid, StepperOptions options)
    : mesh_(&mesh),
      coeffs_(&coeffs),
      weights_(&weights),
      grid_(grid),
      stepper_(mesh, coeffs, weights, grid, BcVariant::ispn, options),
      space_(mesh, grid)
{
}

void InversionContext::check_trace(const TraceMatrix& m, const char* who) const
{
    if (m.rows() != mesh_->trace_size() || m.cols() != grid_.N) {
        throw DimensionMismatch(std::string(who) + ": expected a (M+1) x N trace-grid field");
    }
}

Eigen::MatrixXd InversionContext::forward_history(const SourceGrid& f)
{
    check_trace(f.values, "forward_history");
    return stepper_.march([&](int n, Eigen::VectorXd& load) { stepper_.add_source_load(f, n, load); });
}

TraceMatrix InversionContext::forward_trace(const SourceGrid& f)
{
    return stepper_.trace(forward_history(f));
}

TraceMatrix InversionContext::neumann_response(const TraceMatrix& flux)
{
    check_trace(flux, "neumann_response");
    const Eigen::MatrixXd hist = stepper_.march([&](int n, Eigen::VectorXd& load) {
        stepper_.add_neumann_load(flux.col(n - 1), n, true, load);
    });
    return stepper_.trace(hist);
}

Eigen::MatrixXd InversionContext::adjoint_history(const TraceMatrix& residual)
{
    check_trace(residual, "adjoint_history");
    return stepper_.march_adjoint([&](int n, Eigen::VectorXd& load) {
        stepper_.add_neumann_load(residual.col(n - 1), n, false, load);
    });
}

TraceMatrix InversionContext::gradient_from_residual(const TraceMatrix& residual)
{
    const Eigen::MatrixXd v = adjoint_history(residual);
    TraceMatrix b(mesh_->trace_size(), grid_.N);
    for (int n = 1; n <= grid_.N; ++n) {
        b.col(n - 1) = stepper_.source_load_transpose(v.col(n), n);
    }
    return space_.riesz(b);
}

double InversionContext::adjoint_pairing(const Eigen::MatrixXd& adjoint, const SourceGrid& h) const
{
    check_trace(h.values, "adjoint_pairing");
    double sum = 0.0;
    for (int n = 1; n <= grid_.N; ++n) {
        sum += stepper_.source_load_transpose(adjoint.col(n), n).dot(h.values.col(n - 1));
    }
    return grid_.tau * sum;
}

MisfitProblem MisfitProblem::from_observation(InversionContext& ctx, const LateralObservation& g_obs)
{
    const int rows = ctx.mesh().trace_size();
    const int cols = ctx.grid().N;
    if (g_obs.values.rows() != rows || g_obs.values.cols() != cols) {
        throw DimensionMismatch("MisfitProblem: observation must be (M+1) x N");
    }
    MisfitProblem p;
    p.kind = g_obs.kind;
    p.delta = g_obs.delta;
    if (g_obs.kind == ObservationKind::trace) {
        p.target = g_obs.values;
        p.offset = TraceMatrix::Zero(rows, cols);
    } else {
        p.target = TraceMatrix::Zero(rows, cols);
        p.offset = ctx.neumann_response(g_obs.values);
    }
    return p;
}

double eval_J(const SourceGrid& f, const MisfitProblem& problem, InversionContext& ctx)
{
    const TraceMatrix r = problem.residual(ctx.forward_trace(f));
    return 0.5 * ctx.space().inner(r, r);
}

double eval_J(const SourceGrid& f, const LateralObservation& g_obs, InversionContext& ctx)
{
    return eval_J(f, MisfitProblem::from_observation(ctx, g_obs), ctx);
}

SourceGrid eval_gradient(const SourceGrid& f, const MisfitProblem& problem, InversionContext& ctx)
{
    const TraceMatrix r = problem.residual(ctx.forward_trace(f));
    return SourceGrid{ctx.gradient_from_residual(r)};
}

SourceGrid eval_gradient(const SourceGrid& f, const LateralObservation& g_obs, InversionContext& ctx)
{
    return eval_gradient(f, MisfitProblem::from_observation(ctx, g_obs), ctx);
}

bool discrepancy_stop(double residual_norm, double c, double delta)
{
    if (!(c > 1.0)) {
        throw InvalidParameter("discrepancy_stop: c must exceed 1");
    }
    if (!(delta >= 0.0)) {
        throw InvalidParameter("discrepancy_stop: delta must be non-negative");
    }
    return residual_norm <= c * delta;
}

const char* to_string(StopMode mode)
{
    switch (mode) {
    case StopMode::discrepancy: return "discrepancy";
    case StopMode::minimal_error: return "minimal-error";
    case StopMode::fixed: return "fixed";
    }
    return "unknown";
}

ReconstructionReport cg_reconstruct(const MisfitProblem& problem, InversionContext& ctx, const CGOptions& options)
{
    const StoppingRule& rule = options.stopping;
    const TraceSpace& space = ctx.space();
    if (rule.max_iter < 1) {
        throw InvalidParameter("cg_reconstruct: K must be >= 1");
    }
    std::optional<double> delta = rule.delta ? rule.delta : problem.delta;
    if (rule.mode == StopMode::discrepancy) {
        if (!delta) {
            throw InvalidParameter("cg_reconstruct: discrepancy stopping needs the noise level delta");
        }
        discrepancy_stop(0.0, rule.c, *delta);  // validates c and delta
    }
    if (rule.mode == StopMode::minimal_error && options.f_dagger == nullptr) {
        throw InvalidParameter("cg_reconstruct: minimal-error stopping needs the reference source");
    }
    if (options.f_dagger != nullptr) {
        if (options.f_dagger->values.rows() != space.rows() || options.f_dagger->values.cols() != space.cols()) {
            throw DimensionMismatch("cg_reconstruct: reference source has the wrong shape");
        }
    }
    if (problem.target.rows() != space.rows() || problem.target.cols() != space.cols()) {
        throw DimensionMismatch("cg_reconstruct: data must be (M+1) x N");
    }

    const int K = rule.max_iter;
    SourceGrid f = SourceGrid::zeros(ctx.mesh(), ctx.grid());
    // u_0 = 0, so the initial residual is the affine part alone.
    TraceMatrix r = problem.residual(TraceMatrix::Zero(space.rows(), space.cols()));
    TraceMatrix d;
    double grad_sq_prev = 0.0;

    ReconstructionReport report;
    std::optional<int> stopped_at;
    SourceGrid stopped_f;
    double best_error = std::numeric_limits<double>::infinity();
    SourceGrid best_f;
    int best_k = 0;

    for (int k = 0;; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.residual_norm = space.norm(r);
        rec.J = 0.5 * rec.residual_norm * rec.residual_norm;
        if (options.f_dagger != nullptr) {
            rec.error = error_metric(f, *options.f_dagger, space);
            if (*rec.error < best_error) {
                best_error = *rec.error;
                best_f = f;
                best_k = k;
            }
        }
        report.history.push_back(rec);

        if (rule.mode == StopMode::discrepancy && !stopped_at && rec.residual_norm <= rule.c * *delta) {
            stopped_at = k;
            stopped_f = f;
            report.stop_reason = "discrepancy";
            if (!rule.continue_after_stop) {
                break;
            }
        }
        if (k >= K) {
            if (report.stop_reason.empty()) {
                report.stop_reason = "max-iter";
            }
            break;
        }

        const TraceMatrix g = ctx.gradient_from_residual(r);
        const double grad_sq = space.inner(g, g);
        report.history.back().gradient_norm = std::sqrt(grad_sq);
        if (grad_sq == 0.0) {
            if (report.stop_reason.empty()) {
                report.stop_reason = "zero-gradient";
            }
            break;
        }
        const double gamma = (k == 0) ? 0.0 : grad_sq / grad_sq_prev;
        d = (k == 0) ? TraceMatrix(-g) : TraceMatrix(-g + gamma * d);
        grad_sq_prev = grad_sq;

        const TraceMatrix ud = ctx.forward_trace(SourceGrid{d});
        const double ud_sq = space.inner(ud, ud);
        if (ud_sq == 0.0) {
            throw DegenerateDirection("cg_reconstruct: conjugate direction has zero forward response at k="
                                      + std::to_string(k));
        }
        const double s = -space.inner(ud, r) / ud_sq;
        report.history.back().step = s;
        report.history.back().gamma = gamma;
        if (options.observer) {
            options.observer(CGStep{k, &f, &d, s, gamma});
        }
        f.values += s * d;
        r += s * ud;
    }

    const int last = report.history.back().k;
    switch (rule.mode) {
    case StopMode::discrepancy:
        if (stopped_at) {
            report.stop_index = *stopped_at;
            report.f_hat = std::move(stopped_f);
        } else {
            report.stop_index = last;
            report.f_hat = std::move(f);
        }
        break;
    case StopMode::minimal_error:
        report.stop_index = best_k;
        report.f_hat = std::move(best_f);
        report.stop_reason = "minimal-error";
        break;
    case StopMode::fixed:
        report.stop_index = last;
        report.f_hat = std::move(f);
        break;
    }
    report.residual_norm = report.history[static_cast<std::size_t>(report.stop_index)].residual_norm;
    if (options.f_dagger != nullptr) {
        report.error = error_metric(report.f_hat, *options.f_dagger, space);
    }
    return report;
}

ReconstructionReport cg_reconstruct(const LateralObservation& g_obs, InversionContext& ctx, const CGOptions& options)
{
    return cg_reconstruct(MisfitProblem::from_observation(ctx, g_obs), ctx, options);
}

} // namespace fracinv
