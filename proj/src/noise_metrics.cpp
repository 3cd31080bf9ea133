#include "vbinv/noise_metrics.hpp"
#include "vbinv/csv.hpp"
#include "vbinv/errors.hpp"

#include <cmath>
#include <random>

namespace vbinv {

namespace {

constexpr std::uint64_t kMaskStreamSalt = 0x9E3779B97F4A7C15ULL;

double uniform01(std::mt19937_64& gen)
{
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& gen)
{
    double u1 = uniform01(gen);
    if (u1 <= 0.0)
        u1 = 0x1.0p-53;
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace

CorruptionResult corrupt(const Eigen::VectorXd& y_exact, const NoiseSpec& spec)
{
    if (y_exact.size() < 1)
        throw DimensionError("corrupt requires at least one data component");
    if (!(spec.corruption_rate >= 0.0 && spec.corruption_rate <= 1.0))
        throw DomainError("corruption rate must lie in [0, 1]");

    std::mt19937_64 gaussian_stream(spec.seed);
    std::mt19937_64 mask_stream(spec.seed ^ kMaskStreamSalt);
    const double magnitude = y_exact.cwiseAbs().maxCoeff();

    CorruptionResult result;
    result.data = y_exact;
    result.mask.assign(static_cast<size_t>(y_exact.size()), false);
    int corrupted = 0;
    for (Eigen::Index i = 0; i < y_exact.size(); ++i) {
        const double z = standard_normal(gaussian_stream);
        if (uniform01(mask_stream) < spec.corruption_rate) {
            result.data[i] = y_exact[i] + magnitude * z;
            result.mask[static_cast<size_t>(i)] = true;
            ++corrupted;
        }
    }
    result.realized_rate = static_cast<double>(corrupted)
        / static_cast<double>(y_exact.size());
    return result;
}

double relative_error(const Eigen::VectorXd& u, const Eigen::VectorXd& u_exact)
{
    if (u.size() != u_exact.size())
        throw DimensionError("relative_error: dimension mismatch");
    const double scale = u_exact.norm();
    if (scale == 0.0)
        throw DomainError("relative error is undefined for a zero exact solution");
    return (u - u_exact).norm() / scale;
}

WeightSeparation weight_separation(const Eigen::VectorXd& weights,
    const std::vector<bool>& mask)
{
    if (mask.size() != static_cast<size_t>(weights.size()))
        throw DimensionError("weight_separation: mask length mismatch");
    bool any_clean = false;
    bool any_corrupt = false;
    double min_clean = 0.0;
    double max_corrupt = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (mask[static_cast<size_t>(i)]) {
            max_corrupt = any_corrupt ? std::max(max_corrupt, w) : w;
            any_corrupt = true;
        } else {
            min_clean = any_clean ? std::min(min_clean, w) : w;
            any_clean = true;
        }
    }
    if (!any_clean || !any_corrupt)
        throw DomainError("weight_separation needs both clean and corrupted entries");
    return WeightSeparation{ min_clean, max_corrupt, max_corrupt < min_clean };
}

void write_noise_csv(const std::filesystem::path& path, const Eigen::VectorXd& y_exact,
    const CorruptionResult& result)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<size_t>(y_exact.size()));
    for (Eigen::Index i = 0; i < y_exact.size(); ++i)
        rows.push_back({ static_cast<double>(i), y_exact[i], result.data[i],
            result.mask[static_cast<size_t>(i)] ? 1.0 : 0.0 });
    csv::write_table(path, { "index", "y_exact", "y", "mask" }, rows);
}

} // namespace vbinv
