#include "fracinv/fields.hpp"

#include "fracinv/assembly.hpp"
#include "fracinv/errors.hpp"

#include <cmath>

namespace fracinv {

SourceGrid SourceGrid::zeros(const Mesh2D& mesh, const TimeGrid& grid)
{
    return SourceGrid{TraceMatrix::Zero(mesh.trace_size(), grid.N)};
}

SourceGrid SourceGrid::sample(const Mesh2D& mesh, const TimeGrid& grid,
                              const std::function<double(double, double)>& fn)
{
    SourceGrid f = zeros(mesh, grid);
    for (int n = 1; n <= grid.N; ++n) {
        for (int i = 0; i <= mesh.M; ++i) {
            f.values(i, n - 1) = fn(mesh.x1(i), grid.t(n));
        }
    }
    return f;
}

TraceSpace::TraceSpace(const Mesh2D& mesh, const TimeGrid& grid)
    : rows_(mesh.trace_size()), cols_(grid.N), tau_(grid.tau), mass_(trace_mass(mesh))
{
    factor_.compute(mass_);
    if (factor_.info() != Eigen::Success) {
        throw SolverFailure("TraceSpace: trace mass factorization failed");
    }
}

void TraceSpace::check(const TraceMatrix& a) const
{
    if (a.rows() != rows_ || a.cols() != cols_) {
        throw DimensionMismatch("TraceSpace: expected a (M+1) x N trace matrix");
    }
}

double TraceSpace::inner(const TraceMatrix& a, const TraceMatrix& b) const
{
    check(a);
    check(b);
    const TraceMatrix mb = mass_ * b;
    return tau_ * a.cwiseProduct(mb).sum();
}

double TraceSpace::norm(const TraceMatrix& a) const
{
    return std::sqrt(std::max(inner(a, a), 0.0));
}

TraceMatrix TraceSpace::riesz(const TraceMatrix& b) const
{
    check(b);
    return factor_.solve(b);
}

double error_metric(const SourceGrid& f_hat, const SourceGrid& f_dagger, const TraceSpace& space)
{
    if (!f_hat.same_shape(f_dagger)) {
        throw DimensionMismatch("error_metric: reconstruction and reference differ in shape");
    }
    return space.norm(f_hat.values - f_dagger.values);
}

} // namespace fracinv
