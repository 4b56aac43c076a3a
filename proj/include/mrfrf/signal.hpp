#pragma once

#include "mrfrf/core.hpp"

#include <optional>
#include <string>

namespace mrfrf {

enum class RateTag { fast, slow };

inline const char* to_string(RateTag tag) { return tag == RateTag::fast ? "fast" : "slow"; }

/// Multichannel real sampled signal, stored channels x samples.
struct SignalRecord {
    Matrix data;
    double sample_time = 1.0;
    RateTag rate = RateTag::fast;
    std::optional<std::size_t> n_periods;

    SignalRecord() = default;
    SignalRecord(Matrix d, double ts, RateTag tag, std::optional<std::size_t> periods = std::nullopt)
        : data(std::move(d)), sample_time(ts), rate(tag), n_periods(periods) {
        validate();
    }

    [[nodiscard]] std::size_t channels() const noexcept { return static_cast<std::size_t>(data.rows()); }
    [[nodiscard]] std::size_t samples() const noexcept { return static_cast<std::size_t>(data.cols()); }

    void validate() const {
        if (!(sample_time > 0.0) || !std::isfinite(sample_time))
            throw InvalidArgument("signal sample time must be positive");
        if (n_periods) {
            if (*n_periods == 0) throw InvalidArgument("n_periods must be positive");
            if (samples() % *n_periods != 0)
                throw InvalidArgument("sample count " + std::to_string(samples()) +
                                      " is not divisible by n_periods " + std::to_string(*n_periods));
        }
    }

    /// Samples [first, first + count) as a new record with the same rate.
    [[nodiscard]] SignalRecord slice(std::size_t first, std::size_t count) const {
        if (first + count > samples()) throw InvalidArgument("slice out of range");
        return {data.middleCols(idx(first), idx(count)), sample_time, rate};
    }

    /// One period of a periodic record.
    [[nodiscard]] SignalRecord period(std::size_t p) const {
        if (!n_periods) throw InvalidArgument("record carries no period bookkeeping");
        const std::size_t len = samples() / *n_periods;
        return slice(p * len, len);
    }
};

} // namespace mrfrf
