#pragma once

#include "fracinv/frac_time.hpp"
#include "fracinv/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <optional>

namespace fracinv {

/// Values on the trace grid x trace-time grid: row i is the trace node at
/// x1 = -1/2 + i h, column n-1 is time level t_n (n = 1..N). The value at
/// t_0 is implicitly zero.
using TraceMatrix = Eigen::MatrixXd;

/// Unknown source component f(x1, t).
struct SourceGrid {
    TraceMatrix values;

    static SourceGrid zeros(const Mesh2D& mesh, const TimeGrid& grid);
    static SourceGrid sample(const Mesh2D& mesh, const TimeGrid& grid,
                             const std::function<double(double x1, double t)>& fn);

    [[nodiscard]] bool same_shape(const SourceGrid& other) const
    {
        return values.rows() == other.values.rows() && values.cols() == other.values.cols();
    }
};

enum class ObservationKind { trace, flux };

/// Lateral Cauchy data on omega x {ell} x (0, T].
struct LateralObservation {
    ObservationKind kind = ObservationKind::trace;
    TraceMatrix values;
    std::optional<double> delta;
};

/// Nodal solution at t_0..t_N, one column per level.
struct SpaceTimeField {
    Eigen::MatrixXd values;

    [[nodiscard]] int levels() const { return static_cast<int>(values.cols()); }
};

/// L^2(0,T; L^2(omega)) on the trace grid: right-endpoint rectangle rule in
/// time, consistent edge mass matrix in space.
class TraceSpace {
public:
    TraceSpace(const Mesh2D& mesh, const TimeGrid& grid);

    [[nodiscard]] double inner(const TraceMatrix& a, const TraceMatrix& b) const;
    [[nodiscard]] double norm(const TraceMatrix& a) const;
    /// Riesz map: solves M_omega x = b column by column.
    [[nodiscard]] TraceMatrix riesz(const TraceMatrix& b) const;

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] const Eigen::SparseMatrix<double>& mass() const { return mass_; }
    [[nodiscard]] double tau() const { return tau_; }

private:
    void check(const TraceMatrix& a) const;

    int rows_;
    int cols_;
    double tau_;
    Eigen::SparseMatrix<double> mass_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
};

/// e = || f_hat - f_dagger ||_{L^2(0,T;L^2(omega))}.
double error_metric(const SourceGrid& f_hat, const SourceGrid& f_dagger, const TraceSpace& space);

} // namespace fracinv
