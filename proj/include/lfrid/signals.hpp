#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "lfrid/errors.hpp"
#include "lfrid/random.hpp"

namespace lfrid {

enum class Excitation { Multisine, Sweep, External };

inline std::string to_string(Excitation e) {
    switch (e) {
        case Excitation::Multisine: return "multisine";
        case Excitation::Sweep: return "sweep";
        case Excitation::External: return "external";
    }
    return "external";
}

inline Excitation excitation_from_string(const std::string& s) {
    if (s == "multisine") return Excitation::Multisine;
    if (s == "sweep") return Excitation::Sweep;
    if (s == "external") return Excitation::External;
    throw InvalidSpec("unknown excitation tag '" + s + "'");
}

/// Sampled multichannel input/output data shared by every module.
///
/// u is N x n_u and y (when present) N x n_y in physical units. For periodic
/// data n_periods counts the identical steady-state periods the record holds.
struct SignalRecord {
    Eigen::MatrixXd u;
    Eigen::MatrixXd y;  // zero columns when the record carries input only
    double fs = 0.0;
    int n_periods = 1;
    Excitation excitation = Excitation::External;

    Eigen::Index n_samples() const { return u.rows(); }
    Eigen::Index n_inputs() const { return u.cols(); }
    Eigen::Index n_outputs() const { return y.cols(); }
    bool has_output() const { return y.cols() > 0 && y.rows() == u.rows(); }

    /// Samples of one period (the whole record when aperiodic).
    Eigen::Index period_length() const { return u.rows() / n_periods; }

    /// True when the content is periodic in steady state, so period-based
    /// statistics and steady-state evaluation apply.
    bool periodic() const { return excitation == Excitation::Multisine || n_periods > 1; }

    void validate() const {
        if (u.rows() < 1) throw InvalidSpec("record has no samples");
        if (y.cols() > 0 && y.rows() != u.rows())
            throw DimMismatch("u has " + std::to_string(u.rows()) + " rows, y has " +
                              std::to_string(y.rows()));
        if (!(fs > 0.0)) throw InvalidSpec("fs must be positive");
        if (n_periods < 1) throw InvalidSpec("n_periods must be >= 1");
        if (n_periods > 1 && u.rows() % n_periods != 0)
            throw InvalidSpec("sample count not divisible by n_periods");
    }
};

/// Root-mean-square of one channel (population convention, 1/N).
inline double rms(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

/// Per-channel RMS of a sample matrix (channels in columns).
inline Eigen::VectorXd rms_per_channel(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    Eigen::VectorXd out(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(c) = rms(m.col(c));
    return out;
}

/// Per-channel sample standard deviation, 1/N convention.
inline Eigen::VectorXd std_per_channel(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    Eigen::VectorXd out(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double mean = m.col(c).mean();
        out(c) = std::sqrt((m.col(c).array() - mean).square().sum() /
                           static_cast<double>(m.rows()));
    }
    return out;
}

struct MultisineSpec {
    Eigen::Index n_samples = 8192;  // one period
    double fs = 750.0;
    double f_min = 5.0;
    double f_max = 150.0;
    double amplitude_rms = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_samples < 2) throw InvalidSpec("multisine needs at least 2 samples");
        if (!(fs > 0.0)) throw InvalidSpec("fs must be positive");
        if (!(0.0 <= f_min && f_min < f_max && f_max < fs / 2.0))
            throw InvalidSpec("need 0 <= f_min < f_max < fs/2");
        if (!(amplitude_rms > 0.0)) throw InvalidSpec("amplitude_rms must be positive");
    }
};

struct SweepSpec {
    double f_start = 20.0;
    double f_end = 50.0;
    double sweep_rate = 10.0;  // Hz per minute
    double amplitude_rms = 1.0;
    double fs = 750.0;

    double duration_s() const { return (f_end - f_start) / (sweep_rate / 60.0); }

    void validate() const {
        if (!(f_start < f_end)) throw InvalidSpec("need f_start < f_end");
        if (!(sweep_rate > 0.0)) throw InvalidSpec("sweep_rate must be positive");
        if (!(fs > 0.0)) throw InvalidSpec("fs must be positive");
        if (!(amplitude_rms > 0.0)) throw InvalidSpec("amplitude_rms must be positive");
    }
};

/// One period of a random-phase multisine.
///
/// Every integer DFT bin k with f_min <= k*fs/N <= f_max is excited with equal
/// magnitude and an independent phase drawn uniformly on [0, 2*pi) from the
/// seeded generator. DC and Nyquist are never excited, so the signal is
/// zero-mean by construction. The result is rescaled to the requested sample
/// RMS.
inline SignalRecord gen_multisine(const MultisineSpec& spec) {
    spec.validate();
    const Eigen::Index n = spec.n_samples;
    Eigen::Index k_lo = static_cast<Eigen::Index>(std::ceil(spec.f_min * n / spec.fs));
    Eigen::Index k_hi = static_cast<Eigen::Index>(std::floor(spec.f_max * n / spec.fs));
    k_lo = std::max<Eigen::Index>(k_lo, 1);          // exclude DC
    k_hi = std::min<Eigen::Index>(k_hi, (n - 1) / 2);  // exclude Nyquist
    if (k_lo > k_hi)
        throw EmptyBand("no DFT bin inside [" + std::to_string(spec.f_min) + ", " +
                        std::to_string(spec.f_max) + "] Hz at N=" + std::to_string(n));

    Rng rng(spec.seed);
    Eigen::VectorXd signal = Eigen::VectorXd::Zero(n);
    const double w0 = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (Eigen::Index k = k_lo; k <= k_hi; ++k) {
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (Eigen::Index i = 0; i < n; ++i)
            signal(i) += std::cos(w0 * static_cast<double>(k) * static_cast<double>(i) + phase);
    }
    signal *= spec.amplitude_rms / rms(signal);

    SignalRecord rec;
    rec.u = signal;
    rec.fs = spec.fs;
    rec.n_periods = 1;
    rec.excitation = Excitation::Multisine;
    return rec;
}

/// Linear sinesweep from f_start to f_end at the given rate.
///
/// The phase is the integral of the instantaneous frequency,
/// phi(t) = 2*pi*(f_start*t + rate*t^2/2), so the frequency moves continuously
/// instead of stepping. Scaled to the requested sample RMS.
inline SignalRecord gen_sweep(const SweepSpec& spec) {
    spec.validate();
    const double rate = spec.sweep_rate / 60.0;  // Hz/s
    const double duration = spec.duration_s();
    const Eigen::Index n = static_cast<Eigen::Index>(std::llround(duration * spec.fs));
    if (n < 1) throw InvalidSpec("sweep duration shorter than one sample");

    Eigen::VectorXd signal(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.fs;
        const double phase = 2.0 * std::numbers::pi * (spec.f_start * t + 0.5 * rate * t * t);
        signal(i) = std::sin(phase);
    }
    signal *= spec.amplitude_rms / rms(signal);

    SignalRecord rec;
    rec.u = signal;
    rec.fs = spec.fs;
    rec.n_periods = 1;
    rec.excitation = Excitation::Sweep;
    return rec;
}

} // namespace lfrid
