#include "fracinv/harness.hpp"

#include "fracinv/errors.hpp"

#include <cmath>
#include <numbers>

namespace fracinv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr int kRounds = 10;

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// Uniform on (0, 1) with 53 random bits; never 0 or 1.
double open_unit(std::uint32_t a, std::uint32_t b)
{
    const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

} // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k)
{
    for (int round = 0; round < kRounds; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

Philox4x32::Key Philox4x32::key_from_seed(std::uint64_t seed)
{
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

Eigen::MatrixXd standard_normal_field(int rows, int cols, std::uint64_t seed, std::uint32_t stream_a,
                                      std::uint32_t stream_b)
{
    if (rows < 0 || cols < 0) {
        throw InvalidParameter("standard_normal_field: negative shape");
    }
    Eigen::MatrixXd xi(rows, cols);
    const Eigen::Index count = xi.size();
    const Philox4x32::Key key = Philox4x32::key_from_seed(seed);
    double* out = xi.data();
    for (Eigen::Index pair = 0; 2 * pair < count; ++pair) {
        const auto r = Philox4x32::block({static_cast<std::uint32_t>(pair), 0u, stream_a, stream_b}, key);
        const double u1 = open_unit(r[0], r[1]);
        const double u2 = open_unit(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[2 * pair] = radius * std::cos(angle);
        if (2 * pair + 1 < count) {
            out[2 * pair + 1] = radius * std::sin(angle);
        }
    }
    return xi;
}

SyntheticData add_noise(const LateralObservation& clean, const NoiseModel& noise, const TraceSpace& space)
{
    if (!(noise.epsilon >= 0.0)) {
        throw InvalidParameter("add_noise: epsilon must be non-negative");
    }
    SyntheticData data;
    data.clean = clean;
    data.noisy = clean;
    if (noise.epsilon > 0.0) {
        const double scale = noise.epsilon * clean.values.cwiseAbs().maxCoeff();
        data.noisy.values += scale * standard_normal_field(static_cast<int>(clean.values.rows()),
                                                           static_cast<int>(clean.values.cols()), noise.seed,
                                                           noise.stream_a, noise.stream_b);
    }
    data.delta = space.norm(data.noisy.values - data.clean.values);
    data.clean.delta = 0.0;
    data.noisy.delta = data.delta;
    return data;
}

} // namespace fracinv
