#pragma once

#include "ccs/error.hpp"
#include "ccs/types.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ccs::rl {

/// v(z) = sum_j c_j k(z, z_j) with a Gaussian kernel. Updates within
/// `threshold` of an existing center accumulate there instead of growing the
/// dictionary (threshold 0 keeps every distinct center).
class KernelValueFunction {
public:
    KernelValueFunction(double width, double threshold) : scale_(-0.5 / (width * width)), threshold_(threshold)
    {
        ccs::detail::require(width > 0.0, "KernelValueFunction: width must be positive");
        ccs::detail::require(threshold >= 0.0, "KernelValueFunction: threshold must be non-negative");
    }

    double operator()(const Vector& z) const
    {
        double v = 0.0;
        for (std::size_t j = 0; j < centers_.size(); ++j) {
            v += coefficients_[j] * std::exp(scale_ * (z - centers_[j]).squaredNorm());
        }
        return v;
    }

    void update(const Vector& z, double amount)
    {
        std::size_t nearest = centers_.size();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < centers_.size(); ++j) {
            const double d2 = (z - centers_[j]).squaredNorm();
            if (d2 < best) {
                best = d2;
                nearest = j;
            }
        }
        if (nearest < centers_.size() && std::sqrt(best) <= threshold_) {
            coefficients_[nearest] += amount;
            return;
        }
        centers_.push_back(z);
        coefficients_.push_back(amount);
    }

    std::size_t size() const noexcept { return centers_.size(); }
    const std::vector<Vector>& centers() const noexcept { return centers_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }

private:
    double scale_;
    double threshold_;
    std::vector<Vector> centers_;
    std::vector<double> coefficients_;
};

} // namespace ccs::rl
