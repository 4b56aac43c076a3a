#pragma once

#include "mrfrf/lti.hpp"

#include <optional>
#include <string>

namespace mrfrf {

/// Noise sources of the multirate loop. All standard deviations default to zero.
struct NoiseSpec {
    double eh_std = 0.0;               ///< std of white e_h; eps_h = H e_h adds to y_h
    std::optional<RationalTF> shaping; ///< H, fast-rate n_y x n_y; identity when empty
    double el_std = 0.0;               ///< std of white eps_l added to y_l only
    double dh_std = 0.0;               ///< std of white d_h added at one plant input
    std::size_t dh_channel = 0;        ///< plant input receiving d_h
    double dh_sign = 1.0;

    [[nodiscard]] bool silent() const { return eh_std == 0.0 && el_std == 0.0 && dh_std == 0.0; }
};

/// Fast-rate plant P, slow-rate controller C behind the downsampler, ZOH hold,
/// and fast-rate filters between the hold and the plant input:
///   u_h = r_h - filters * H_u * C * (S_d y_h + eps_l),   y_h = P (u_h + d_h) + eps_h.
struct MultirateLoopSpec {
    RationalTF plant;
    RationalTF controller;
    std::optional<RationalTF> filters;
    std::size_t factor = 1;
    NoiseSpec noise;

    [[nodiscard]] std::size_t n_inputs() const { return plant.n_inputs(); }
    [[nodiscard]] std::size_t n_outputs() const { return plant.n_outputs(); }
    [[nodiscard]] double fast_sample_time() const { return plant.sample_time(); }
    [[nodiscard]] double slow_sample_time() const { return plant.sample_time() * static_cast<double>(factor); }

    [[nodiscard]] RationalTF filters_or_identity() const {
        return filters ? *filters : RationalTF::identity(n_inputs(), fast_sample_time());
    }
    [[nodiscard]] RationalTF shaping_or_identity() const {
        return noise.shaping ? *noise.shaping : RationalTF::identity(n_outputs(), fast_sample_time());
    }

    void validate() const {
        if (factor < 1) throw InvalidArgument("loop: downsampling factor must be >= 1");
        const double th = fast_sample_time();
        if (controller.n_inputs() != n_outputs() || controller.n_outputs() != n_inputs())
            throw InvalidArgument("loop: controller must be n_u x n_y (" + std::to_string(n_inputs()) + "x" +
                                  std::to_string(n_outputs()) + ")");
        if (!same_sample_time(controller.sample_time(), th * static_cast<double>(factor)))
            throw RateMismatch("loop: controller must run at the slow sample time F*T_h");
        if (filters) {
            if (filters->n_inputs() != n_inputs() || filters->n_outputs() != n_inputs())
                throw InvalidArgument("loop: filters must be n_u x n_u");
            if (!same_sample_time(filters->sample_time(), th)) throw RateMismatch("loop: filters must be fast-rate");
        }
        if (noise.shaping) {
            if (noise.shaping->n_inputs() != n_outputs() || noise.shaping->n_outputs() != n_outputs())
                throw InvalidArgument("loop: noise shaping H must be n_y x n_y");
            if (!same_sample_time(noise.shaping->sample_time(), th))
                throw RateMismatch("loop: noise shaping H must be fast-rate");
        }
        if (noise.dh_channel >= n_inputs()) throw InvalidArgument("loop: d_h channel out of range");
        if (noise.eh_std < 0 || noise.el_std < 0 || noise.dh_std < 0)
            throw InvalidArgument("loop: noise standard deviations must be non-negative");
    }
};

} // namespace mrfrf
