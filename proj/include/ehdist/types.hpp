// Domain types shared by every module: system parameters, battery state,
// per-slot decisions, and the energy arrival model.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehdist/rng.hpp"

namespace ehdist {

// =============================================================================
// Errors
// =============================================================================

/// Thrown when a policy tries to consume more energy than the battery holds.
class EnergyCausalityError : public std::runtime_error {
public:
    EnergyCausalityError(double consumed, double available, long long slot = -1)
        : std::runtime_error(format(consumed, available, slot)),
          consumed_(consumed), available_(available), slot_(slot) {}

    double consumed() const { return consumed_; }
    double available() const { return available_; }
    long long slot() const { return slot_; } ///< -1 when outside a simulation

private:
    static std::string format(double consumed, double available, long long slot) {
        std::string msg = "energy causality violated: consumed " +
                          std::to_string(consumed) + " > battery " +
                          std::to_string(available);
        if (slot >= 0) msg += " at slot " + std::to_string(slot);
        return msg;
    }
    double consumed_;
    double available_;
    long long slot_;
};

/// Thrown when an iterative solver hits its iteration cap before converging.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string &what, double final_span)
        : std::runtime_error(what + " (final span " + std::to_string(final_span) + ")"),
          final_span_(final_span) {}

    double final_span() const { return final_span_; }

private:
    double final_span_;
};

// =============================================================================
// System parameters
// =============================================================================

/**
 * @brief Static problem parameters.
 *
 * A sensor samples a zero-mean Gaussian source with variance sigma_s_sq and
 * forwards it over an additive Gaussian channel with noise variance
 * sigma_c_sq. Harvested energy is stored in a battery of capacity
 * battery_capacity, and collecting samples costs sampling_cost energy per
 * unit on-time (zero for the cost-free problem).
 */
struct SystemParams {
    double sigma_s_sq = 1.0;       ///< Source variance, > 0
    double sigma_c_sq = 1.0;       ///< Channel noise variance, > 0
    double battery_capacity = 1.0; ///< Battery size B, > 0
    double sampling_cost = 0.0;    ///< Cost per unit on-time, >= 0

    bool operator==(const SystemParams &) const = default;

    void validate() const {
        if (!(sigma_s_sq > 0.0))
            throw std::invalid_argument("sigma_s_sq must be > 0 (got " +
                                        std::to_string(sigma_s_sq) + ")");
        if (!(sigma_c_sq > 0.0))
            throw std::invalid_argument("sigma_c_sq must be > 0 (got " +
                                        std::to_string(sigma_c_sq) + ")");
        if (!(battery_capacity > 0.0))
            throw std::invalid_argument("battery_capacity must be > 0 (got " +
                                        std::to_string(battery_capacity) + ")");
        if (!(sampling_cost >= 0.0))
            throw std::invalid_argument("sampling_cost must be >= 0 (got " +
                                        std::to_string(sampling_cost) + ")");
    }

    /// Tolerance used when checking consumption against the battery level.
    /// Absorbs floating-point drift accumulated over long simulations.
    double feasibility_tol() const { return 1e-9 * battery_capacity; }
};

// =============================================================================
// Battery and decisions
// =============================================================================

/// Battery level, always within [0, B].
struct BatteryState {
    double level = 0.0;
};

/**
 * @brief A slot's control decision: the on-fraction and the transmit power.
 *
 * theta is the portion of the slot during which the sensor samples and
 * transmits; power is the transmit power while on. In the cost-free problem
 * theta is identically 1. Energy drawn from the battery over the slot is
 * theta * (sampling_cost + power).
 */
struct SlotDecision {
    double theta = 1.0;
    double power = 0.0;

    double consumed(const SystemParams &params) const {
        return theta * (params.sampling_cost + power);
    }
};

// =============================================================================
// Arrival model
// =============================================================================

/**
 * @brief I.i.d. energy arrival process.
 *
 * Three kinds are supported:
 *  - Bernoulli: an arrival of fixed magnitude (battery-filling in the
 *    canonical case, magnitude == B) with probability p, else nothing;
 *  - FiniteSupport: an arbitrary finite distribution of arrival sizes;
 *  - Sampler: a continuous uniform distribution on [lo, hi].
 *
 * All support must lie in [0, B]: larger packets could not be stored anyway.
 * The derived mean mu and fraction q = mu / B drive the fixed fraction
 * policies and every analytic bound.
 */
class ArrivalModel {
public:
    enum class Kind { Bernoulli, FiniteSupport, Sampler };

    struct Atom {
        double value = 0.0;
        double prob = 0.0;

        bool operator==(const Atom &) const = default;
    };

    static ArrivalModel bernoulli(double p, double magnitude) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("bernoulli p must be in [0,1] (got " +
                                        std::to_string(p) + ")");
        if (!(magnitude >= 0.0))
            throw std::invalid_argument("bernoulli magnitude must be >= 0");
        ArrivalModel m;
        m.kind_ = Kind::Bernoulli;
        m.p_ = p;
        m.magnitude_ = magnitude;
        m.atoms_ = {{0.0, 1.0 - p}, {magnitude, p}};
        m.mean_ = p * magnitude;
        m.build_cdf();
        return m;
    }

    static ArrivalModel finite_support(std::vector<Atom> atoms) {
        if (atoms.empty())
            throw std::invalid_argument("finite_support needs at least one atom");
        ArrivalModel m;
        m.kind_ = Kind::FiniteSupport;
        m.atoms_ = std::move(atoms);
        double total = 0.0, mean = 0.0;
        for (const auto &a : m.atoms_) {
            if (!(a.value >= 0.0))
                throw std::invalid_argument("finite_support values must be >= 0");
            if (!(a.prob >= 0.0))
                throw std::invalid_argument("finite_support probabilities must be >= 0");
            total += a.prob;
            mean += a.value * a.prob;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("finite_support probabilities must sum to 1 (got " +
                                        std::to_string(total) + ")");
        m.mean_ = mean;
        m.build_cdf();
        return m;
    }

    /// Continuous uniform arrivals on [lo, hi].
    static ArrivalModel uniform(double lo, double hi) {
        if (!(lo >= 0.0) || !(hi >= lo))
            throw std::invalid_argument("uniform requires 0 <= lo <= hi");
        ArrivalModel m;
        m.kind_ = Kind::Sampler;
        m.lo_ = lo;
        m.hi_ = hi;
        m.mean_ = 0.5 * (lo + hi);
        return m;
    }

    Kind kind() const { return kind_; }
    bool has_finite_support() const { return kind_ != Kind::Sampler; }

    double mean() const { return mean_; }

    /// Fraction q = mu / B used by the fixed fraction policies.
    double fraction(const SystemParams &params) const {
        return mean_ / params.battery_capacity;
    }

    double max_support() const {
        if (kind_ == Kind::Sampler) return hi_;
        double m = 0.0;
        for (const auto &a : atoms_)
            if (a.prob > 0.0) m = std::max(m, a.value);
        return m;
    }

    /// Atoms of a finite-support model (Bernoulli included).
    const std::vector<Atom> &atoms() const {
        if (!has_finite_support())
            throw std::logic_error("continuous Sampler model has no atoms");
        return atoms_;
    }

    double bernoulli_p() const {
        if (kind_ != Kind::Bernoulli)
            throw std::logic_error("bernoulli_p on non-Bernoulli model");
        return p_;
    }

    /// Check the model against a battery: support in [0, B] and 0 <= q <= 1.
    void validate(const SystemParams &params) const {
        const double B = params.battery_capacity;
        if (max_support() > B * (1.0 + 1e-12))
            throw std::invalid_argument(
                "arrival support exceeds battery capacity (max " +
                std::to_string(max_support()) + " > B " + std::to_string(B) + ")");
        const double q = fraction(params);
        if (!(q >= 0.0 && q <= 1.0 + 1e-12))
            throw std::invalid_argument("fraction q = mean/B outside [0,1]");
    }

    double sample(std::mt19937_64 &rng) const {
        const double u = uniform01(rng);
        switch (kind_) {
        case Kind::Bernoulli:
            return u < p_ ? magnitude_ : 0.0;
        case Kind::FiniteSupport: {
            for (std::size_t i = 0; i + 1 < cdf_.size(); ++i)
                if (u < cdf_[i]) return atoms_[i].value;
            return atoms_.back().value;
        }
        case Kind::Sampler:
            return lo_ + (hi_ - lo_) * u;
        }
        return 0.0; // unreachable
    }

private:
    ArrivalModel() = default;

    void build_cdf() {
        cdf_.clear();
        double acc = 0.0;
        for (const auto &a : atoms_) {
            acc += a.prob;
            cdf_.push_back(acc);
        }
    }

    Kind kind_ = Kind::Bernoulli;
    std::vector<Atom> atoms_;
    std::vector<double> cdf_;
    double p_ = 0.0;
    double magnitude_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double mean_ = 0.0;
};

} // namespace ehdist
