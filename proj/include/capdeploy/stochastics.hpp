#pragma once

// Low-discrepancy sampling, normal quantiles and the correlated lognormal
// deal model (size S, multiple-on-invested-capital M).

#include "capdeploy/error.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace capdeploy {

struct LognormalParams {
    double mu = 0.0;     ///< log-space location
    double sigma = 0.0;  ///< log-space scale, >= 0

    double mean() const { return std::exp(mu + 0.5 * sigma * sigma); }
    double stddev() const {
        return mean() * std::sqrt(std::expm1(sigma * sigma));
    }
};

/// Lognormal law with the given natural-unit mean and standard deviation.
inline LognormalParams moment_match_lognormal(double mean, double std) {
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw DomainError("moment_match_lognormal: mean must be positive and finite");
    if (!(std >= 0.0) || !std::isfinite(std))
        throw DomainError("moment_match_lognormal: std must be non-negative and finite");
    const double cv = std / mean;
    const double var = std::log1p(cv * cv);
    return {std::log(mean) - 0.5 * var, std::sqrt(var)};
}

struct DealSample {
    double size = 0.0;  ///< currency ($M)
    double moic = 0.0;  ///< underwritten multiple
};

struct DealModel {
    LognormalParams size;       ///< law of S
    LognormalParams growth;     ///< law of (1 + r); M = (1 + r)^H
    double rho_log = 0.0;       ///< corr(log S, log M)
    double exit_years = 5.0;    ///< H
    double moic_hurdle = 1.0;   ///< M_hurdle
    double noise_sigma = 0.0;   ///< log-space realized/underwritten noise
    double noise_mu = 0.0;

    void validate() const {
        if (!(size.sigma >= 0.0) || !(growth.sigma >= 0.0) || !(noise_sigma >= 0.0))
            throw DomainError("DealModel: log-space scales must be non-negative");
        if (!(std::abs(rho_log) <= 1.0))
            throw DomainError("DealModel: rho_log must lie in [-1, 1]");
        if (!(exit_years > 0.0))
            throw DomainError("DealModel: exit_years must be positive");
        if (!(moic_hurdle > 0.0))
            throw DomainError("DealModel: moic_hurdle must be positive");
        if (!std::isfinite(size.mu) || !std::isfinite(growth.mu) || !std::isfinite(noise_mu))
            throw DomainError("DealModel: log-space locations must be finite");
    }

    /// Law of log M.
    LognormalParams moic_law() const {
        return {exit_years * growth.mu, exit_years * growth.sigma};
    }
};

// ---------------------------------------------------------------------------
// Standard normal

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// Standard normal quantile: Acklam's rational approximation polished with
/// one Halley step against erfc.
inline double inverse_normal_cdf(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw DomainError("inverse_normal_cdf: argument must lie in (0, 1)");

    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                             -2.759285104469687e+02, 1.383577518672690e+02,
                                             -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                             -1.556989798598866e+02, 6.680131188771972e+01,
                                             -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                             -2.400758277161838e+00, -2.549732539343734e+00,
                                             4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                             2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement. In the upper tail work with the complement to keep
    // relative precision.
    const double e = (u > 0.5) ? (1.0 - u) - 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0)
                               : normal_cdf(x) - u;
    const double t = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= t / (1.0 + 0.5 * x * t);
    return x;
}

// ---------------------------------------------------------------------------
// Sobol sequence, dimensions 1 and 2.
//
// Dimension 1 is the van der Corput sequence in base 2; dimension 2 uses the
// primitive polynomial x + 1 with initial direction number m_1 = 1 (the
// first two dimensions of the Joe-Kuo tables). Points are generated in Gray
// code order, so the point with index 0 is the origin.

class SobolSequence {
public:
    static constexpr unsigned kBits = 32;
    static constexpr unsigned kMaxDim = 2;

    explicit SobolSequence(unsigned dim) : dim_(dim) {
        if (dim < 1 || dim > kMaxDim)
            throw CapabilityError("Sobol generator supports dimensions 1 and 2 only, got " +
                                  std::to_string(dim));
        for (unsigned i = 0; i < kBits; ++i) directions_[0][i] = std::uint32_t{1} << (kBits - 1 - i);
        directions_[1][0] = std::uint32_t{1} << (kBits - 1);
        for (unsigned i = 1; i < kBits; ++i)
            directions_[1][i] = directions_[1][i - 1] ^ (directions_[1][i - 1] >> 1);
    }

    unsigned dim() const { return dim_; }

    /// Integer coordinates of the point with the given index.
    std::array<std::uint32_t, kMaxDim> integer_point(std::uint64_t index) const {
        std::array<std::uint32_t, kMaxDim> x{};
        std::uint64_t gray = index ^ (index >> 1);
        for (unsigned bit = 0; gray != 0 && bit < kBits; ++bit, gray >>= 1) {
            if (gray & 1u)
                for (unsigned d = 0; d < dim_; ++d) x[d] ^= directions_[d][bit];
        }
        return x;
    }

    /// Fills `out` (row-major, n * dim) with points skip .. skip + n - 1.
    void generate(std::uint64_t skip, std::size_t n, std::span<double> out) const {
        constexpr double scale = 1.0 / 4294967296.0;
        auto x = integer_point(skip);
        for (std::size_t i = 0; i < n; ++i) {
            for (unsigned d = 0; d < dim_; ++d) out[i * dim_ + d] = x[d] * scale;
            const std::uint64_t idx = skip + i;
            const unsigned c = static_cast<unsigned>(std::countr_one(idx));
            if (c >= kBits) break;
            for (unsigned d = 0; d < dim_; ++d) x[d] ^= directions_[d][c];
        }
    }

private:
    unsigned dim_;
    std::array<std::array<std::uint32_t, kBits>, kMaxDim> directions_{};
};

/// n points of a dim-dimensional Sobol sequence after skipping `skip`,
/// row-major (point i occupies [i*dim, i*dim + dim)).
inline std::vector<double> sobol_points(std::size_t n, unsigned dim, std::uint64_t skip) {
    if (n < 1) throw DomainError("sobol_points: n must be at least 1");
    SobolSequence seq(dim);
    if (skip + n > (std::uint64_t{1} << SobolSequence::kBits))
        throw CapabilityError("sobol_points: index range exceeds 2^32");
    std::vector<double> out(n * dim);
    seq.generate(skip, n, out);
    return out;
}

// ---------------------------------------------------------------------------
// Pseudorandom stream

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Reproducible uniform/normal stream. Conversions are spelled out rather than
/// delegated to <random> distributions, whose output is implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() { return inverse_normal_cdf(uniform()); }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Deal sampling

struct QmcSource {
    std::uint64_t skip = 0;
};
struct PseudorandomSource {
    std::uint64_t seed = 0;
};
using SampleSource = std::variant<QmcSource, PseudorandomSource>;

/// Maps a pair of independent standard normals to a deal through the 2x2
/// Cholesky factor of the log-space correlation.
inline DealSample deal_from_normals(const DealModel& model, double z1, double z2) {
    const double z2c = model.rho_log * z1 + std::sqrt(1.0 - model.rho_log * model.rho_log) * z2;
    return {std::exp(model.size.mu + model.size.sigma * z1),
            std::exp(model.exit_years * (model.growth.mu + model.growth.sigma * z2c))};
}

/// Sobol points skip .. skip+n-1 mapped into (0,1)^2 by shifting each point to
/// the centre of its cell at the resolution of the first 2^m indices that
/// contain the range. For skip = 0 and n = 2^m this is the centred (0,m,2)-net.
inline std::vector<double> centered_sobol_uniforms(std::size_t n, std::uint64_t skip) {
    auto pts = sobol_points(n, 2, skip);
    const unsigned m = static_cast<unsigned>(std::bit_width(skip + n - 1));
    const double shift = std::ldexp(0.5, -static_cast<int>(m));
    for (double& u : pts) u += shift;
    return pts;
}

inline std::vector<DealSample> sample_deals(const DealModel& model, std::size_t n,
                                            const SampleSource& source) {
    if (n < 1) throw DomainError("sample_deals: n must be at least 1");
    model.validate();
    std::vector<DealSample> deals;
    deals.reserve(n);
    if (const auto* qmc = std::get_if<QmcSource>(&source)) {
        const auto u = centered_sobol_uniforms(n, qmc->skip);
        for (std::size_t i = 0; i < n; ++i)
            deals.push_back(deal_from_normals(model, inverse_normal_cdf(u[2 * i]),
                                              inverse_normal_cdf(u[2 * i + 1])));
    } else {
        RandomStream rng(std::get<PseudorandomSource>(source).seed);
        for (std::size_t i = 0; i < n; ++i) {
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            deals.push_back(deal_from_normals(model, z1, z2));
        }
    }
    return deals;
}

// ---------------------------------------------------------------------------
// Underwriting noise

struct NoiseParams {
    double sigma = 0.0;
    double mu = 0.0;
};

/// Log-normal ratio realized/underwritten that lies within a factor `factor`
/// of 1 with probability `confidence`. Mean-unbiased (E[ratio] = 1) unless
/// `mean_unbiased` is false, in which case the median is 1.
inline NoiseParams calibrate_noise(double factor, double confidence, bool mean_unbiased = true) {
    if (!(factor >= 1.0)) throw DomainError("calibrate_noise: factor must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw DomainError("calibrate_noise: confidence must lie in (0, 1)");
    const double z = inverse_normal_cdf(0.5 * (1.0 + confidence));
    const double sigma = std::log(factor) / z;
    return {sigma, mean_unbiased ? -0.5 * sigma * sigma : 0.0};
}

inline double realize_moic(double underwritten, const DealModel& model, double z) {
    if (!(underwritten > 0.0)) throw DomainError("realize_moic: underwritten MOIC must be positive");
    return underwritten * std::exp(model.noise_mu + model.noise_sigma * z);
}

}  // namespace capdeploy
