#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mixdyn {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Max-shifted log(sum(exp(v))). Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
    double hi = kNegInf;
    for (double x : v) hi = std::max(hi, x);
    if (hi == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

// Streaming accumulator for log-sum-exp with running max rescaling.
class LogSumExp {
public:
    void add(double x) {
        if (x == kNegInf) return;
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }
    double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
};

}  // namespace mixdyn
