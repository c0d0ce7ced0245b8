#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace fracinv {

/// Uniform partition t_n = n * tau of (0, T], n = 0..N.
struct TimeGrid {
    int N = 1;
    double T = 1.0;
    double tau = 1.0;

    static TimeGrid uniform(double T, int N);

    [[nodiscard]] double t(int n) const { return n * tau; }
};

/// Backward-Euler convolution quadrature weights, i.e. the power-series
/// coefficients of (1 - z)^alpha.
struct CQWeights {
    double alpha = 0.5;
    std::vector<double> w;

    [[nodiscard]] int size() const { return static_cast<int>(w.size()); }
    double operator[](int j) const { return w[static_cast<std::size_t>(j)]; }
};

/// Weights w_0..w_N for 0 < alpha < 1.
CQWeights cq_weights(double alpha, int N);

/// Coefficients of (1 - z)^order for any real order. Negative orders give
/// the fractional-integral weights. No range check.
std::vector<double> binomial_series(double order, int N);

/// Discrete Caputo derivative at t_n:
///   tau^{-alpha} * sum_{j=0}^{n} w_j (u_{n-j} - u_0).
/// `u` holds u_0..u_m with m >= n.
double caputo_at(const CQWeights& weights, const TimeGrid& grid, std::span<const double> u, int n);

/// Discrete Caputo derivative at every sample, entry 0 is zero.
std::vector<double> caputo_apply(const CQWeights& weights, const TimeGrid& grid,
                                 std::span<const double> u);

/// Row-wise version: each row of `u` is a time series u_0..u_m.
Eigen::MatrixXd caputo_apply(const CQWeights& weights, const TimeGrid& grid,
                             const Eigen::MatrixXd& u);

/// Forward Riemann-Liouville integral of order 1 - alpha on the full grid:
///   tau^{1-alpha} * sum_{j=0}^{n} b_j v_{n-j},  b = coefficients of (1-z)^{alpha-1}.
std::vector<double> rl_integral_forward(double alpha, const TimeGrid& grid,
                                        std::span<const double> v);

/// Right-sided integral (_t I_T^{1-alpha} v)(t_n), realized as the forward
/// integral of the time-reversed samples. Needs v_0..v_N.
std::vector<double> rl_integral(double alpha, const TimeGrid& grid, std::span<const double> v);

/// Euler Gamma function on the positive axis.
double gamma_fn(double z);

} // namespace fracinv
