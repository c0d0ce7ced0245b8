#include "fracinv/solver.hpp"

#include "fracinv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fracinv {

TimeStepper::TimeStepper(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                         const TimeGrid& grid, BcVariant variant, StepperOptions options)
    : mesh_(&mesh),
      coeffs_(&coeffs),
      weights_(&weights),
      grid_(grid),
      variant_(variant),
      options_(options),
      dofs_(make_dof_map(mesh, variant)),
      scale_(std::pow(grid.tau, -weights.alpha)),
      mass_(assemble_mass(mesh).matrix),
      mass_free_(restrict_matrix(mass_, dofs_))
{
    if (weights.size() < grid.N + 1) {
        throw DimensionMismatch("TimeStepper: need N+1 convolution weights");
    }
    if (options_.history_block < 1) {
        throw InvalidParameter("TimeStepper: history_block must be >= 1");
    }
    if (coeffs.source_factor_time_dependent) {
        r_levels_.resize(mesh.num_nodes(), grid.N);
        for (int n = 1; n <= grid.N; ++n) {
            for (int node = 0; node < mesh.num_nodes(); ++node) {
                const auto& p = mesh.nodes[node];
                r_levels_(node, n - 1) = coeffs.R(p[0], p[1], grid.t(n));
            }
        }
    } else {
        r_static_.resize(mesh.num_nodes());
        for (int node = 0; node < mesh.num_nodes(); ++node) {
            const auto& p = mesh.nodes[node];
            r_static_[node] = coeffs.R(p[0], p[1], 0.0);
        }
    }
}

TimeStepper::~TimeStepper() = default;

double TimeStepper::source_factor(int node, int n) const
{
    return coeffs_->source_factor_time_dependent ? r_levels_(node, n - 1) : r_static_[node];
}

SparseMatrix TimeStepper::system_matrix(int n) const
{
    const double t = coeffs_->time_dependent ? grid_.t(n) : 0.0;
    const SparseOperator stiff = assemble_stiffness(*mesh_, *coeffs_, t);
    SparseMatrix S = restrict_matrix(stiff.matrix, dofs_);
    S += (scale_ * (*weights_)[0]) * mass_free_;
    S.makeCompressed();
    return S;
}

void TimeStepper::solve_level(int n, const Eigen::VectorXd& rhs, Eigen::VectorXd& out)
{
    auto factorize = [&](int level) {
        if (!factor_) {
            factor_ = std::make_unique<Factor>();
            factor_->analyzePattern(system_matrix(level));
        }
        factor_->factorize(system_matrix(level));
        if (factor_->info() != Eigen::Success) {
            throw SolverFailure("TimeStepper: factorization failed at level " + std::to_string(level));
        }
        factor_level_ = level;
    };

    if (!coeffs_->time_dependent) {
        if (!factor_) {
            factorize(1);
        }
        out = factor_->solve(rhs);
        return;
    }
    if (cached_l_.empty()) {
        cached_l_.resize(static_cast<std::size_t>(grid_.N) + 1);
        cached_d_.resize(static_cast<std::size_t>(grid_.N) + 1);
    }
    const auto slot = static_cast<std::size_t>(n);
    if (cached_l_[slot].size() == 0 || factor_level_ == n) {
        if (factor_level_ != n) {
            factorize(n);
        }
        const SparseMatrix& L = factor_->matrixL().nestedExpression();
        const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(L.nonZeros() + L.cols());
        if (cached_l_[slot].size() == 0 && cache_used_ + bytes <= options_.factor_cache_bytes) {
            cached_l_[slot] = Eigen::Map<const Eigen::VectorXd>(L.valuePtr(), L.nonZeros());
            cached_d_[slot] = factor_->vectorD();
            cache_used_ += bytes;
        }
        out = factor_->solve(rhs);
        return;
    }
    // Same operations as Factor::solve with the stored values.
    const SparseMatrix& pattern = factor_->matrixL().nestedExpression();
    const Eigen::Map<const SparseMatrix> L(pattern.rows(), pattern.cols(), pattern.nonZeros(),
                                           pattern.outerIndexPtr(), pattern.innerIndexPtr(),
                                           cached_l_[slot].data());
    out = factor_->permutationP() * rhs;
    L.triangularView<Eigen::UnitLower>().solveInPlace(out);
    out.array() /= cached_d_[slot].array();
    L.transpose().triangularView<Eigen::UnitUpper>().solveInPlace(out);
    out = factor_->permutationPinv() * out;
}

Eigen::MatrixXd TimeStepper::sweep(const LoadFunction& load, bool reversed)
{
    const int N = grid_.N;
    const int nf = dofs_.num_free();
    const int block = options_.history_block;
    const CQWeights& w = *weights_;

    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(nf, N + 1);
    Eigen::VectorXd load_full(mesh_->num_nodes());
    Eigen::VectorXd history(nf);
    Eigen::VectorXd rhs(nf);
    Eigen::VectorXd sol(nf);

    for (int p0 = 1; p0 <= N; p0 += block) {
        const int nb = std::min(block, N - p0 + 1);
        // Contributions of all steps before the block, one dense product.
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nf, nb);
        if (p0 > 1) {
            Eigen::MatrixXd W(p0 - 1, nb);
            for (int b = 0; b < nb; ++b) {
                for (int q = 1; q < p0; ++q) {
                    W(q - 1, b) = w[p0 + b - q];
                }
            }
            H.noalias() = U.middleCols(1, p0 - 1) * W;
        }
        for (int b = 0; b < nb; ++b) {
            const int p = p0 + b;
            const int level = reversed ? N + 1 - p : p;
            history = H.col(b);
            for (int q = p0; q < p; ++q) {
                history.noalias() += w[p - q] * U.col(q);
            }
            load_full.setZero();
            load(level, load_full);
            rhs = dofs_.restrict_vector(load_full);
            rhs.noalias() -= scale_ * (mass_free_ * history);
            solve_level(level, rhs, sol);
            U.col(p) = sol;
        }
    }

    if (!reversed) {
        return U;
    }
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(nf, N + 1);
    for (int n = 1; n <= N; ++n) {
        V.col(n) = U.col(N + 1 - n);
    }
    return V;
}

Eigen::MatrixXd TimeStepper::march(const LoadFunction& load)
{
    return sweep(load, false);
}

Eigen::MatrixXd TimeStepper::march_adjoint(const LoadFunction& load)
{
    return sweep(load, true);
}

SpaceTimeField TimeStepper::expand(const Eigen::MatrixXd& history) const
{
    SpaceTimeField u;
    u.values = Eigen::MatrixXd::Zero(mesh_->num_nodes(), history.cols());
    for (int f = 0; f < dofs_.num_free(); ++f) {
        u.values.row(dofs_.free[f]) = history.row(f);
    }
    return u;
}

TraceMatrix TimeStepper::trace(const Eigen::MatrixXd& history) const
{
    return layer(history, mesh_->M);
}

TraceMatrix TimeStepper::layer(const Eigen::MatrixXd& history, int k) const
{
    const Mesh2D& mesh = *mesh_;
    TraceMatrix g = TraceMatrix::Zero(mesh.trace_size(), grid_.N);
    for (int i = 0; i <= mesh.M; ++i) {
        const int f = dofs_.full_to_free[mesh.node(i, k)];
        if (f >= 0) {
            g.row(i) = history.row(f).segment(1, grid_.N);
        }
    }
    return g;
}

TraceMatrix TimeStepper::flux(const Eigen::MatrixXd& history) const
{
    const Mesh2D& mesh = *mesh_;
    if (mesh.M < 3) {
        throw InvalidParameter("flux: need M >= 3 for the three-layer stencil");
    }
    return (3.0 * layer(history, mesh.M) - 4.0 * layer(history, mesh.M - 1) + layer(history, mesh.M - 2))
         / (2.0 * mesh.h);
}

void TimeStepper::add_source_load(const SourceGrid& f, int n, Eigen::VectorXd& load) const
{
    const Mesh2D& mesh = *mesh_;
    if (f.values.rows() != mesh.trace_size() || f.values.cols() != grid_.N) {
        throw DimensionMismatch("add_source_load: source grid must be (M+1) x N");
    }
    Eigen::VectorXd F(mesh.num_nodes());
    const int stride = mesh.M + 1;
    for (int node = 0; node < mesh.num_nodes(); ++node) {
        F[node] = f.values(node % stride, n - 1) * source_factor(node, n);
    }
    load.noalias() += mass_ * F;
}

Eigen::VectorXd TimeStepper::source_load_transpose(const Eigen::VectorXd& v_free, int n) const
{
    const Mesh2D& mesh = *mesh_;
    const Eigen::VectorXd y = mass_ * dofs_.extend(v_free);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.trace_size());
    const int stride = mesh.M + 1;
    for (int node = 0; node < mesh.num_nodes(); ++node) {
        out[node % stride] += source_factor(node, n) * y[node];
    }
    return out;
}

void TimeStepper::add_neumann_load(const Eigen::VectorXd& psi, int n, bool conormal,
                                   Eigen::VectorXd& load) const
{
    const Mesh2D& mesh = *mesh_;
    if (!conormal) {
        load += neumann_load(mesh, psi);
        return;
    }
    Eigen::VectorXd scaled(psi.size());
    for (int i = 0; i <= mesh.M; ++i) {
        scaled[i] = coeffs_->a(mesh.x1(i), mesh.ell, grid_.t(n)).a22 * psi[i];
    }
    load += neumann_load(mesh, scaled);
}

SpaceTimeField solve_direct(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                            const TimeGrid& grid, const SourceGrid& f, BcVariant variant,
                            const LateralObservation* neumann_data)
{
    if (variant == BcVariant::adjoint) {
        throw InvalidParameter("solve_direct: use solve_adjoint for the adjoint variant");
    }
    if (variant == BcVariant::ispd_inversion) {
        if (neumann_data == nullptr) {
            throw InvalidParameter("solve_direct: ispd-inversion needs the measured flux");
        }
        if (neumann_data->values.rows() != mesh.trace_size() || neumann_data->values.cols() != grid.N) {
            throw DimensionMismatch("solve_direct: Neumann data must be (M+1) x N");
        }
    }
    TimeStepper stepper(mesh, coeffs, weights, grid, variant, StepperOptions::single_sweep());
    const Eigen::MatrixXd history = stepper.march([&](int n, Eigen::VectorXd& load) {
        stepper.add_source_load(f, n, load);
        if (variant == BcVariant::ispd_inversion) {
            stepper.add_neumann_load(neumann_data->values.col(n - 1), n, true, load);
        }
    });
    return stepper.expand(history);
}

LateralObservation trace_top(const SpaceTimeField& u, const Mesh2D& mesh)
{
    if (u.values.rows() != mesh.num_nodes() || u.values.cols() < 2) {
        throw DimensionMismatch("trace_top: field does not match the mesh");
    }
    const int N = static_cast<int>(u.values.cols()) - 1;
    LateralObservation g;
    g.kind = ObservationKind::trace;
    g.values = u.values.block(mesh.top_node(0), 1, mesh.trace_size(), N);
    return g;
}

LateralObservation flux_top(const SpaceTimeField& u, const Mesh2D& mesh)
{
    if (mesh.M < 3) {
        throw InvalidParameter("flux_top: need M >= 3 for the three-layer stencil");
    }
    if (u.values.rows() != mesh.num_nodes() || u.values.cols() < 2) {
        throw DimensionMismatch("flux_top: field does not match the mesh");
    }
    const int N = static_cast<int>(u.values.cols()) - 1;
    const int w = mesh.trace_size();
    const auto layer = [&](int k) { return u.values.block(mesh.node(0, k), 1, w, N); };
    LateralObservation g;
    g.kind = ObservationKind::flux;
    g.values = (3.0 * layer(mesh.M) - 4.0 * layer(mesh.M - 1) + layer(mesh.M - 2)) / (2.0 * mesh.h);
    return g;
}

SpaceTimeField solve_adjoint(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                             const TimeGrid& grid, const LateralObservation& residual)
{
    if (residual.values.rows() != mesh.trace_size() || residual.values.cols() != grid.N) {
        throw DimensionMismatch("solve_adjoint: residual must be (M+1) x N");
    }
    TimeStepper stepper(mesh, coeffs, weights, grid, BcVariant::adjoint, StepperOptions::single_sweep());
    const Eigen::MatrixXd history = stepper.march_adjoint([&](int n, Eigen::VectorXd& load) {
        stepper.add_neumann_load(residual.values.col(n - 1), n, false, load);
    });
    return stepper.expand(history);
}

} // namespace fracinv
