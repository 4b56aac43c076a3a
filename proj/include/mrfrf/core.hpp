#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrfrf {

using cd = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or violated preconditions on library calls.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class RateMismatch : public Error {
public:
    using Error::Error;
};

/// A pole of a rational system sits exactly on the evaluation grid.
class PoleOnGrid : public Error {
public:
    PoleOnGrid(std::size_t bin, const std::string& what) : Error(what), bin_(bin) {}
    [[nodiscard]] std::size_t bin() const noexcept { return bin_; }

private:
    std::size_t bin_;
};

class UnstableSystem : public Error {
public:
    UnstableSystem(double radius, const std::string& what) : Error(what), radius_(radius) {}
    [[nodiscard]] double spectral_radius() const noexcept { return radius_; }

private:
    double radius_;
};

/// I + C P_l singular at some bin.
class IllPosedLoop : public Error {
public:
    IllPosedLoop(std::size_t bin, const std::string& what) : Error(what), bin_(bin) {}
    [[nodiscard]] std::size_t bin() const noexcept { return bin_; }

private:
    std::size_t bin_;
};

class RankDeficient : public Error {
public:
    RankDeficient(double condition, const std::string& what) : Error(what), condition_(condition) {}
    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Malformed or inconsistent input data (files, records). `row` is 1-based when known.
class DataError : public Error {
public:
    explicit DataError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
        : Error(what), row_(row) {}
    [[nodiscard]] std::optional<std::size_t> row() const noexcept { return row_; }

private:
    std::optional<std::size_t> row_;
};

/// Unusable configuration: unknown preset, missing field, unreadable scenario.
class ConfigError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Frequency grid
// ---------------------------------------------------------------------------

/// The full-circle DFT grid w_k = 2 pi k / (N T), k = 0..N-1.
struct FrequencyGrid {
    std::size_t bins = 0;
    double sample_time = 1.0;

    FrequencyGrid() = default;
    FrequencyGrid(std::size_t n, double ts) : bins(n), sample_time(ts) {
        if (n == 0) throw InvalidArgument("frequency grid needs at least one bin");
        if (!(ts > 0.0) || !std::isfinite(ts)) throw InvalidArgument("sample time must be positive");
    }

    [[nodiscard]] double omega(std::size_t k) const {
        return 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(bins) * sample_time);
    }
    [[nodiscard]] double freq_hz(std::size_t k) const {
        return static_cast<double>(k) / (static_cast<double>(bins) * sample_time);
    }
    /// zeta_k = exp(-j w_k T), i.e. the value substituted for q^{-1}.
    [[nodiscard]] cd zeta(std::size_t k) const { return unit_root(-static_cast<long long>(k % bins), bins); }

    /// exp(2 pi j num / den), reduced so that large exponents keep full precision.
    static cd unit_root(long long num, std::size_t den) {
        const auto d = static_cast<long long>(den);
        long long r = num % d;
        if (r < 0) r += d;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(den);
        return {std::cos(angle), std::sin(angle)};
    }

    friend bool operator==(const FrequencyGrid& a, const FrequencyGrid& b) {
        return a.bins == b.bins && a.sample_time == b.sample_time;
    }
};

/// Per-bin complex matrix response n_y x n_u on a full frequency grid.
struct FrfMatrix {
    FrequencyGrid grid;
    std::size_t n_outputs = 0;
    std::size_t n_inputs = 0;
    std::vector<CMatrix> values;

    FrfMatrix() = default;
    FrfMatrix(FrequencyGrid g, std::size_t ny, std::size_t nu)
        : grid(g), n_outputs(ny), n_inputs(nu),
          values(g.bins, CMatrix::Zero(static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nu))) {}

    [[nodiscard]] std::size_t bins() const noexcept { return values.size(); }
    [[nodiscard]] const CMatrix& operator[](std::size_t k) const { return values[k]; }
    [[nodiscard]] CMatrix& operator[](std::size_t k) { return values[k]; }
    [[nodiscard]] cd at(std::size_t k, std::size_t i, std::size_t j) const {
        return values[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

inline Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

inline bool same_sample_time(double a, double b, double rel = 1e-12) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

} // namespace mrfrf
