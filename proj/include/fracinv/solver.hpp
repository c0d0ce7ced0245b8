#pragma once

#include "fracinv/assembly.hpp"
#include "fracinv/coefficients.hpp"
#include "fracinv/fields.hpp"
#include "fracinv/frac_time.hpp"
#include "fracinv/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace fracinv {

struct StepperOptions {
    /// Time levels whose history is accumulated with one dense product.
    int history_block = 48;
    /// Upper bound on memory spent keeping per-level factor values when the
    /// coefficients depend on time. Levels beyond the budget are refactored
    /// on every sweep; 0 disables the cache (one-sweep solves).
    std::size_t factor_cache_bytes = std::size_t{3} << 30;

    /// Options for a stepper that marches only once.
    static StepperOptions single_sweep()
    {
        StepperOptions o;
        o.factor_cache_bytes = 0;
        return o;
    }
};

/// Writes the full-length (all mesh nodes) load vector of level n into `load`.
/// The vector arrives zeroed.
using LoadFunction = std::function<void(int n, Eigen::VectorXd& load)>;

/// Backward-Euler convolution-quadrature stepper for
///   tau^{-alpha} sum_j w_j Mass u_{n-j} + K(t_n) u_n = load_n,  u_0 = 0,
/// on the free nodes of one boundary variant.
///
/// `march` runs the forward sweep. `march_adjoint` runs the transposed sweep
/// (levels N down to 1, history from later levels), so that
///   sum_n <v_n, load_n[u]> = sum_n <load_n[v], u_n>
/// holds exactly for the discrete operators.
///
/// A stepper owns its factorizations and is not safe for concurrent use;
/// build one per run.
class TimeStepper {
public:
    TimeStepper(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                const TimeGrid& grid, BcVariant variant, StepperOptions options = {});
    ~TimeStepper();
    TimeStepper(const TimeStepper&) = delete;
    TimeStepper& operator=(const TimeStepper&) = delete;

    /// Free-node history, num_free x (N+1); column 0 is the zero initial state.
    Eigen::MatrixXd march(const LoadFunction& load);
    /// Adjoint history, num_free x (N+1); column n holds v_n, column 0 is unused (zero).
    Eigen::MatrixXd march_adjoint(const LoadFunction& load);

    [[nodiscard]] SpaceTimeField expand(const Eigen::MatrixXd& history) const;
    /// Values at the top nodes, (M+1) x N.
    [[nodiscard]] TraceMatrix trace(const Eigen::MatrixXd& history) const;
    /// Values on mesh row k (x2 = -1/2 + k h), (M+1) x N.
    [[nodiscard]] TraceMatrix layer(const Eigen::MatrixXd& history, int k) const;
    /// One-sided three-layer d/dx2 at the top, (M+1) x N.
    [[nodiscard]] TraceMatrix flux(const Eigen::MatrixXd& history) const;

    /// Mass * (f(x1, t_n) R(x, t_n)) over all nodes.
    void add_source_load(const SourceGrid& f, int n, Eigen::VectorXd& load) const;
    /// Transpose of add_source_load applied to a free-node vector:
    /// (P_n^T Mass v)_i = sum_k R(x_i, y_k, t_n) (Mass v)_(i,k).
    [[nodiscard]] Eigen::VectorXd source_load_transpose(const Eigen::VectorXd& v_free, int n) const;
    /// Surface load of Neumann data psi (trace grid) at level n; scales by the
    /// conormal factor a22(x1, ell, t_n) when `conormal` is set.
    void add_neumann_load(const Eigen::VectorXd& psi, int n, bool conormal, Eigen::VectorXd& load) const;

    [[nodiscard]] const Mesh2D& mesh() const { return *mesh_; }
    [[nodiscard]] const CoefficientSet& coefficients() const { return *coeffs_; }
    [[nodiscard]] const CQWeights& weights() const { return *weights_; }
    [[nodiscard]] const TimeGrid& grid() const { return grid_; }
    [[nodiscard]] const DofMap& dofs() const { return dofs_; }
    [[nodiscard]] BcVariant variant() const { return variant_; }
    [[nodiscard]] const SparseMatrix& mass() const { return mass_; }

private:
    using Factor = Eigen::SimplicialLDLT<SparseMatrix>;

    /// Step p = 1..N solves on level p (forward) or N+1-p (reversed); the
    /// history couples step p with steps p' < p through w_{p - p'}.
    Eigen::MatrixXd sweep(const LoadFunction& load, bool reversed);
    /// Solves the level-n system; time-dependent levels are factored on first
    /// use and their numeric factors kept while the cache budget allows.
    void solve_level(int n, const Eigen::VectorXd& rhs, Eigen::VectorXd& out);
    [[nodiscard]] SparseMatrix system_matrix(int n) const;
    [[nodiscard]] double source_factor(int node, int n) const;

    const Mesh2D* mesh_;
    const CoefficientSet* coeffs_;
    const CQWeights* weights_;
    TimeGrid grid_;
    BcVariant variant_;
    StepperOptions options_;
    DofMap dofs_;
    double scale_;  // tau^{-alpha}
    SparseMatrix mass_;       // full
    SparseMatrix mass_free_;  // restricted
    Eigen::VectorXd r_static_;   // nodal R when time independent
    Eigen::MatrixXd r_levels_;   // nodal R per level, num_nodes x N, when time dependent

    // Static coefficients use one factorization. Otherwise `factor_` holds the
    // symbolic analysis shared by all levels (the sparsity never changes) and
    // the most recent numeric factorization; cached levels keep only the
    // values of L and D.
    std::unique_ptr<Factor> factor_;
    int factor_level_ = -1;
    std::vector<Eigen::VectorXd> cached_l_;
    std::vector<Eigen::VectorXd> cached_d_;
    std::size_t cache_used_ = 0;
};

/// Direct problem with source f R.
///  ispn           homogeneous Neumann on the top face.
///  ispd_forward   homogeneous Dirichlet on the top face.
///  ispd_inversion measured flux `neumann_data` imposed as Neumann data on the top face.
SpaceTimeField solve_direct(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                            const TimeGrid& grid, const SourceGrid& f, BcVariant variant,
                            const LateralObservation* neumann_data = nullptr);

/// u at the top nodes.
LateralObservation trace_top(const SpaceTimeField& u, const Mesh2D& mesh);

/// d/dx2 u at x2 = ell by (3 u_M - 4 u_{M-1} + u_{M-2}) / (2h). Needs M >= 3.
LateralObservation flux_top(const SpaceTimeField& u, const Mesh2D& mesh);

/// Discrete adjoint of f -> trace(u_f) for the ISPn direct problem: the
/// residual enters through the top-edge mass and the sweep runs backwards
/// in time. Satisfies
///   tau sum_n <v_n, Mass F_n> = tau sum_n <residual_n, trace(u_F)_n>_omega.
SpaceTimeField solve_adjoint(const Mesh2D& mesh, const CoefficientSet& coeffs, const CQWeights& weights,
                             const TimeGrid& grid, const LateralObservation& residual);

} // namespace fracinv
