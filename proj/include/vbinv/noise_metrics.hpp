#ifndef VBINV_NOISE_METRICS_HPP
#define VBINV_NOISE_METRICS_HPP

// Impulsive-noise generation, the relative-error metric, and the
// outlier-weight separation diagnostic.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vbinv {

// Corruption pattern: each component is independently replaced by
// y_i + eps * N(0,1) with probability `corruption_rate`, where
// eps = max_i |y_i| of the exact data.
struct NoiseSpec {
    double corruption_rate = 0.5;
    std::uint64_t seed = 0;
};

struct CorruptionResult {
    Eigen::VectorXd data;
    std::vector<bool> mask; // true = corrupted
    double realized_rate = 0.0;
};

// Deterministic for a fixed seed. Two mt19937_64 streams are used - one for
// the corruption mask (seed xor 0x9E3779B97F4A7C15) and one for the Gaussian
// draws (seed) - and a Gaussian is drawn for every component whether or not
// it is corrupted, so the draws stay aligned when only the rate changes.
// Gaussians come from the cosine branch of the Box-Muller transform applied
// to 53-bit uniforms.
CorruptionResult corrupt(const Eigen::VectorXd& y_exact, const NoiseSpec& spec);

// ||u - u_exact|| / ||u_exact||; throws DomainError when u_exact is zero.
double relative_error(const Eigen::VectorXd& u, const Eigen::VectorXd& u_exact);

struct WeightSeparation {
    double min_clean;
    double max_corrupt;
    bool separated; // max_corrupt < min_clean
};

// Requires at least one corrupted and one clean entry.
WeightSeparation weight_separation(const Eigen::VectorXd& weights,
    const std::vector<bool>& mask);

// index,y_exact,y,mask
void write_noise_csv(const std::filesystem::path& path, const Eigen::VectorXd& y_exact,
    const CorruptionResult& result);

} // namespace vbinv

#endif
