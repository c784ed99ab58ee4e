#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

namespace lfrid {

/// Forward DFT of one real channel; returns the non-negative-frequency half
/// (N/2 + 1 bins), unnormalized like a plain DFT.
inline Eigen::VectorXcd dft_half(const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::FFT<double> fft;
    std::vector<double> in(x.data(), x.data() + x.size());
    std::vector<std::complex<double>> out;
    fft.fwd(out, in);
    const Eigen::Index half = x.size() / 2 + 1;
    Eigen::VectorXcd result(half);
    for (Eigen::Index i = 0; i < half; ++i) result(i) = out[static_cast<std::size_t>(i)];
    return result;
}

/// Magnitude spectrum of the non-negative bins.
inline Eigen::VectorXd dft_magnitude(const Eigen::Ref<const Eigen::VectorXd>& x) {
    return dft_half(x).cwiseAbs();
}

/// Frequency axis in Hz for dft_half output.
inline Eigen::VectorXd dft_frequencies(Eigen::Index n_samples, double fs) {
    const Eigen::Index half = n_samples / 2 + 1;
    Eigen::VectorXd f(half);
    for (Eigen::Index i = 0; i < half; ++i)
        f(i) = static_cast<double>(i) * fs / static_cast<double>(n_samples);
    return f;
}

} // namespace lfrid
