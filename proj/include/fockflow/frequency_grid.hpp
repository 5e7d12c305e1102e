#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <stdexcept>

#include "fockflow/constants.hpp"

namespace fockflow {

// Uniform angular-frequency axis delta_i = (i - N/2) dw about an absolute
// center frequency, with the conjugate time axis t_j = (j - N/2) dt,
// dt = 2pi/(N dw). Spectra are stored versus detuning (rotating frame); the
// absolute center enters only through medium responses.
//
// Transform convention: chi(t) = (2pi)^{-1/2} Integral dw e^{-iwt} chi(w),
// discretized so that the pair is exactly unitary (Parseval holds to
// rounding): to_time = shift-FFT-shift * dw/sqrt(2pi).
template <class Scalar>
class FrequencyGridT {
   public:
    using Complex = std::complex<Scalar>;
    using ArrayR = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using ArrayC = Eigen::Array<Complex, Eigen::Dynamic, 1>;

    FrequencyGridT(Scalar center, Scalar spacing, Eigen::Index count)
        : center_(center), spacing_(spacing), count_(count) {
        if (!(spacing > Scalar(0)))
            throw std::invalid_argument("FrequencyGrid: spacing must be > 0");
        if (count < 1024 || (count & (count - 1)) != 0)
            throw std::invalid_argument(
                "FrequencyGrid: count must be a power of two >= 1024");
    }

    Scalar center() const { return center_; }
    Scalar spacing() const { return spacing_; }
    Eigen::Index count() const { return count_; }
    Scalar span() const { return spacing_ * static_cast<Scalar>(count_); }
    Scalar time_step() const {
        return constants::two_pi / (spacing_ * static_cast<Scalar>(count_));
    }
    Scalar time_window() const { return constants::two_pi / spacing_; }

    Scalar detuning(Eigen::Index i) const {
        return (static_cast<Scalar>(i) - static_cast<Scalar>(count_ / 2)) * spacing_;
    }
    Scalar time(Eigen::Index j) const {
        return (static_cast<Scalar>(j) - static_cast<Scalar>(count_ / 2)) *
               time_step();
    }

    ArrayR detunings() const {
        ArrayR d(count_);
        for (Eigen::Index i = 0; i < count_; ++i) d[i] = detuning(i);
        return d;
    }
    ArrayR times() const {
        ArrayR t(count_);
        for (Eigen::Index j = 0; j < count_; ++j) t[j] = time(j);
        return t;
    }

    // nearest grid index for a detuning; must land strictly inside the axis
    Eigen::Index index_of(Scalar det) const {
        const auto k = static_cast<Eigen::Index>(
            std::lround(det / spacing_ + static_cast<Scalar>(count_ / 2)));
        if (k < 0 || k >= count_)
            throw std::domain_error("FrequencyGrid: detuning outside the grid");
        return k;
    }

    bool operator==(const FrequencyGridT& o) const {
        return center_ == o.center_ && spacing_ == o.spacing_ && count_ == o.count_;
    }
    bool operator!=(const FrequencyGridT& o) const { return !(*this == o); }

    ArrayC to_time(const ArrayC& spectrum) const {
        check_size(spectrum.size());
        ArrayC shifted = rotate_half(spectrum);
        Eigen::Vector<Complex, Eigen::Dynamic> out(count_);
        fft_engine().fwd(out, shifted.matrix().eval());
        ArrayC result = rotate_half(ArrayC(out.array()));
        const Scalar norm = spacing_ / std::sqrt(Scalar(constants::two_pi));
        return result * norm;
    }

    ArrayC to_frequency(const ArrayC& signal) const {
        check_size(signal.size());
        ArrayC shifted = rotate_half(signal);
        Eigen::Vector<Complex, Eigen::Dynamic> out(count_);
        fft_engine().inv(out, shifted.matrix().eval());
        ArrayC result = rotate_half(ArrayC(out.array()));
        // inv() includes 1/N; remaining factor N dt / sqrt(2pi)
        const Scalar norm = std::sqrt(Scalar(constants::two_pi)) / spacing_;
        return result * norm;
    }

   private:
    static Eigen::FFT<Scalar>& fft_engine() {
        static thread_local Eigen::FFT<Scalar> engine;
        return engine;
    }

    void check_size(Eigen::Index n) const {
        if (n != count_)
            throw std::logic_error("FrequencyGrid: array size does not match grid");
    }

    // for even N, fftshift and ifftshift coincide: rotate by N/2
    ArrayC rotate_half(const ArrayC& x) const {
        const Eigen::Index h = count_ / 2;
        ArrayC y(count_);
        y.head(h) = x.tail(h);
        y.tail(h) = x.head(h);
        return y;
    }

    Scalar center_;
    Scalar spacing_;
    Eigen::Index count_;
};

using FrequencyGrid = FrequencyGridT<double>;

// Project default: 2 MHz spacing (500 ns unaliased window) with a
// power-of-two count spanning +-65.5 GHz around the given center.
inline FrequencyGrid default_grid(double center) {
    return FrequencyGrid(center, constants::two_pi * 2e6, 1 << 16);
}

}  // namespace fockflow
