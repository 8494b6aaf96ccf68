#pragma once

// Synthetic piecewise-stationary outcome streams.

#include <algorithm>
#include <vector>

#include "mixdyn/harness/config.hpp"
#include "mixdyn/harness/rng.hpp"

namespace mixdyn::harness {

struct Stream {
    std::vector<double> outcomes;
    std::vector<Time> segment_lengths;
};

// Deterministic in (config, seed). Binary outcomes are emitted whenever the
// loss is bernoulli; otherwise alternating streams swing between +param and
// -param.
inline Stream generate(const ExperimentConfig& config) {
    validate(config);
    Stream s;
    s.outcomes.reserve(static_cast<std::size_t>(config.horizon));
    s.segment_lengths = config.segment_lengths();
    Rng rng(config.seed);
    const bool binary = config.loss == "bernoulli";
    Time t = 0;
    for (const auto& seg : config.segments) {
        for (Time k = 0; k < seg.length; ++k, ++t) {
            double x = 0.0;
            switch (config.generator) {
                case GeneratorKind::piecewise_bernoulli:
                    x = rng.bernoulli(seg.param) ? 1.0 : 0.0;
                    break;
                case GeneratorKind::piecewise_gaussian_clipped:
                    x = std::clamp(rng.gaussian(seg.param, config.sigma), -1.0, 1.0);
                    break;
                case GeneratorKind::adversarial_alternating:
                    if (binary) x = t % 2 == 0 ? 1.0 : 0.0;
                    else x = t % 2 == 0 ? seg.param : -seg.param;
                    break;
            }
            s.outcomes.push_back(x);
        }
    }
    return s;
}

}  // namespace mixdyn::harness
