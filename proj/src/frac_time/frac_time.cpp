#include "fracinv/frac_time.hpp"

#include "fracinv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fracinv {

TimeGrid TimeGrid::uniform(double T, int N)
{
    if (N < 1) {
        throw InvalidParameter("TimeGrid: N must be >= 1, got " + std::to_string(N));
    }
    if (!(T > 0.0)) {
        throw InvalidParameter("TimeGrid: T must be positive");
    }
    return TimeGrid{N, T, T / N};
}

std::vector<double> binomial_series(double order, int N)
{
    std::vector<double> w(static_cast<std::size_t>(std::max(N, 0)) + 1);
    w[0] = 1.0;
    for (int j = 1; j <= N; ++j) {
        w[j] = (1.0 - (order + 1.0) / j) * w[j - 1];
    }
    return w;
}

CQWeights cq_weights(double alpha, int N)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidParameter("cq_weights: alpha must lie in (0,1), got " + std::to_string(alpha));
    }
    if (N < 1) {
        throw InvalidParameter("cq_weights: N must be >= 1");
    }
    return CQWeights{alpha, binomial_series(alpha, N)};
}

double caputo_at(const CQWeights& weights, const TimeGrid& grid, std::span<const double> u, int n)
{
    if (n < 0 || static_cast<std::size_t>(n) >= u.size()) {
        throw DimensionMismatch("caputo_at: sequence shorter than n+1");
    }
    if (n >= weights.size()) {
        throw DimensionMismatch("caputo_at: not enough weights for level n");
    }
    const double u0 = u[0];
    double acc = 0.0;
    for (int j = 0; j <= n; ++j) {
        acc += weights[j] * (u[n - j] - u0);
    }
    return acc * std::pow(grid.tau, -weights.alpha);
}

std::vector<double> caputo_apply(const CQWeights& weights, const TimeGrid& grid,
                                 std::span<const double> u)
{
    std::vector<double> out(u.size(), 0.0);
    for (std::size_t n = 1; n < u.size(); ++n) {
        out[n] = caputo_at(weights, grid, u, static_cast<int>(n));
    }
    return out;
}

Eigen::MatrixXd caputo_apply(const CQWeights& weights, const TimeGrid& grid,
                             const Eigen::MatrixXd& u)
{
    const Eigen::Index steps = u.cols();
    if (steps > weights.size()) {
        throw DimensionMismatch("caputo_apply: more time levels than weights");
    }
    const double scale = std::pow(grid.tau, -weights.alpha);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), steps);
    for (Eigen::Index n = 1; n < steps; ++n) {
        for (Eigen::Index j = 0; j <= n; ++j) {
            out.col(n) += weights[static_cast<int>(j)] * (u.col(n - j) - u.col(0));
        }
        out.col(n) *= scale;
    }
    return out;
}

std::vector<double> rl_integral_forward(double alpha, const TimeGrid& grid,
                                        std::span<const double> v)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidParameter("rl_integral: alpha must lie in (0,1)");
    }
    const int len = static_cast<int>(v.size());
    const std::vector<double> b = binomial_series(alpha - 1.0, len - 1);
    const double scale = std::pow(grid.tau, 1.0 - alpha);
    std::vector<double> out(v.size(), 0.0);
    for (int n = 0; n < len; ++n) {
        double acc = 0.0;
        for (int j = 0; j <= n; ++j) {
            acc += b[j] * v[n - j];
        }
        out[n] = scale * acc;
    }
    return out;
}

std::vector<double> rl_integral(double alpha, const TimeGrid& grid, std::span<const double> v)
{
    if (v.size() != static_cast<std::size_t>(grid.N) + 1) {
        throw DimensionMismatch("rl_integral: expected N+1 samples");
    }
    std::vector<double> reversed(v.rbegin(), v.rend());
    std::vector<double> out = rl_integral_forward(alpha, grid, reversed);
    std::reverse(out.begin(), out.end());
    return out;
}

double gamma_fn(double z)
{
    if (!(z > 0.0)) {
        throw InvalidParameter("gamma_fn: argument must be positive");
    }
    return std::tgamma(z);
}

} // namespace fracinv
