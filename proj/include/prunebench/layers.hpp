#pragma once

// Per-frame kernels shared by the streaming engine and the trainer.
//
// Activations are stored channel-major: a (C x F) frame lives at
// buf[c * F + f]. Every conv-like layer sees two time steps (the previous
// frame and the current one) through kernel time taps 0 and 1.

#include "prunebench/model.hpp"

#include <cmath>
#include <cstddef>

namespace prunebench::kernels {

inline constexpr double kLeakySlope = 0.2;
inline constexpr std::size_t kTaps = kKernelTime * kKernelFreq;

template <typename T>
inline T leaky_relu(T x)
{
    return x > T{0} ? x : static_cast<T>(kLeakySlope) * x;
}

template <typename T>
inline T leaky_relu_grad(T pre)
{
    return pre > T{0} ? T{1} : static_cast<T>(kLeakySlope);
}

/// Inner product with eight independent partial sums, so the compiler can
/// vectorize without reassociating. The summation order is fixed, keeping
/// results bit-reproducible.
template <typename T>
inline T dot(const T* a, const T* b, std::size_t n)
{
    constexpr std::size_t kLanes = 8;
    T part[kLanes] = {};
    const std::size_t body = n - n % kLanes;
    for (std::size_t i = 0; i < body; i += kLanes)
        for (std::size_t l = 0; l < kLanes; ++l)
            part[l] += a[i + l] * b[i + l];
    T acc{0};
    for (std::size_t i = body; i < n; ++i)
        acc += a[i] * b[i];
    for (std::size_t l = 0; l < kLanes; ++l)
        acc += part[l];
    return acc;
}

/// Gathers the (C_in x kt x kf) receptive field of encoder output bin `f`.
/// Frequency taps land on 2f-1, 2f, 2f+1 with zero padding.
template <typename T>
inline void gather_patch(const T* prev, const T* cur, std::size_t c_in, std::size_t f_in, std::size_t f, T* patch)
{
    for (std::size_t c = 0; c < c_in; ++c) {
        const T* src[2] = {prev + c * f_in, cur + c * f_in};
        for (std::size_t kt = 0; kt < 2; ++kt)
            for (std::size_t k = 0; k < 3; ++k) {
                const std::ptrdiff_t bin = static_cast<std::ptrdiff_t>(2 * f + k) - 1;
                patch[c * kTaps + kt * 3 + k] =
                    (bin >= 0 && bin < static_cast<std::ptrdiff_t>(f_in)) ? src[kt][bin] : T{0};
            }
    }
}

/// Strided causal convolution: (C_in x F_in) -> (C_out x F_in/2).
template <typename T>
void conv_forward(const T* weight, const T* bias, const T* prev, const T* cur, std::size_t c_in, std::size_t f_in,
                  std::size_t c_out, T* out, T* patch)
{
    const std::size_t f_out = f_in / kFreqStride;
    const std::size_t row = c_in * kTaps;
    for (std::size_t f = 0; f < f_out; ++f) {
        gather_patch(prev, cur, c_in, f_in, f, patch);
        for (std::size_t o = 0; o < c_out; ++o)
            out[o * f_out + f] = bias[o] + dot(weight + o * row, patch, row);
    }
}

/// Accumulates weight/bias/input gradients of conv_forward.
template <typename T>
void conv_backward(const T* weight, const T* prev, const T* cur, const T* dout, std::size_t c_in, std::size_t f_in,
                   std::size_t c_out, T* dweight, T* dbias, T* dprev, T* dcur, T* patch, T* dpatch)
{
    const std::size_t f_out = f_in / kFreqStride;
    const std::size_t row = c_in * kTaps;
    for (std::size_t f = 0; f < f_out; ++f) {
        gather_patch(prev, cur, c_in, f_in, f, patch);
        for (std::size_t i = 0; i < row; ++i)
            dpatch[i] = T{0};
        for (std::size_t o = 0; o < c_out; ++o) {
            const T g = dout[o * f_out + f];
            if (g == T{0})
                continue;
            dbias[o] += g;
            T* dw = dweight + o * row;
            const T* w = weight + o * row;
            for (std::size_t i = 0; i < row; ++i) {
                dw[i] += g * patch[i];
                dpatch[i] += g * w[i];
            }
        }
        for (std::size_t c = 0; c < c_in; ++c) {
            T* dst[2] = {dprev + c * f_in, dcur + c * f_in};
            for (std::size_t kt = 0; kt < 2; ++kt)
                for (std::size_t k = 0; k < 3; ++k) {
                    const std::ptrdiff_t bin = static_cast<std::ptrdiff_t>(2 * f + k) - 1;
                    if (bin >= 0 && bin < static_cast<std::ptrdiff_t>(f_in))
                        dst[kt][bin] += dpatch[c * kTaps + kt * 3 + k];
                }
        }
    }
}

/// Transposed convolution, the mirror of conv_forward:
/// (C_in x F_in) -> (C_out x 2 F_in). Input bin f feeds outputs 2f-1..2f+1;
/// the first tap of bin 0 falls off the edge and is cropped.
template <typename T>
void deconv_forward(const T* weight, const T* bias, const T* prev, const T* cur, std::size_t c_in, std::size_t f_in,
                    std::size_t c_out, T* out, T* acc)
{
    const std::size_t f_out = f_in * kFreqStride;
    for (std::size_t o = 0; o < c_out; ++o)
        for (std::size_t f = 0; f < f_out; ++f)
            out[o * f_out + f] = bias[o];
    const std::size_t row = c_out * kTaps;
    for (std::size_t f = 0; f < f_in; ++f) {
        for (std::size_t i = 0; i < row; ++i)
            acc[i] = T{0};
        for (std::size_t c = 0; c < c_in; ++c) {
            const T a0 = prev[c * f_in + f];
            const T a1 = cur[c * f_in + f];
            const T* w = weight + c * row;
            // Each output channel owns 6 weights (3 on the previous frame, 3
            // on the current one); two channels form a 12-wide block.
            const T coef[12] = {a0, a0, a0, a1, a1, a1, a0, a0, a0, a1, a1, a1};
            std::size_t j = 0;
            for (; j + 12 <= row; j += 12)
                for (std::size_t q = 0; q < 12; ++q)
                    acc[j + q] += coef[q] * w[j + q];
            for (; j < row; ++j)
                acc[j] += coef[j % 6] * w[j];
        }
        for (std::size_t o = 0; o < c_out; ++o)
            for (std::size_t k = 0; k < 3; ++k) {
                const std::ptrdiff_t bin = static_cast<std::ptrdiff_t>(2 * f + k) - 1;
                if (bin >= 0 && bin < static_cast<std::ptrdiff_t>(f_out))
                    out[o * f_out + bin] += acc[o * kTaps + k] + acc[o * kTaps + 3 + k];
            }
    }
}

template <typename T>
void deconv_backward(const T* weight, const T* prev, const T* cur, const T* dout, std::size_t c_in, std::size_t f_in,
                     std::size_t c_out, T* dweight, T* dbias, T* dprev, T* dcur, T* gtmp)
{
    const std::size_t f_out = f_in * kFreqStride;
    for (std::size_t o = 0; o < c_out; ++o)
        for (std::size_t f = 0; f < f_out; ++f)
            dbias[o] += dout[o * f_out + f];
    const std::size_t row = c_out * kTaps;
    for (std::size_t f = 0; f < f_in; ++f) {
        // gtmp[o*3 + k] = dL/d out[o, 2f+k-1]
        for (std::size_t o = 0; o < c_out; ++o)
            for (std::size_t k = 0; k < 3; ++k) {
                const std::ptrdiff_t bin = static_cast<std::ptrdiff_t>(2 * f + k) - 1;
                gtmp[o * 3 + k] =
                    (bin >= 0 && bin < static_cast<std::ptrdiff_t>(f_out)) ? dout[o * f_out + bin] : T{0};
            }
        for (std::size_t c = 0; c < c_in; ++c) {
            const T a0 = prev[c * f_in + f];
            const T a1 = cur[c * f_in + f];
            const T* w = weight + c * row;
            T* dw = dweight + c * row;
            T g0{0}, g1{0};
            for (std::size_t o = 0; o < c_out; ++o) {
                const T* g = gtmp + o * 3;
                const T* wo = w + o * kTaps;
                T* dwo = dw + o * kTaps;
                for (std::size_t k = 0; k < 3; ++k) {
                    g0 += wo[k] * g[k];
                    g1 += wo[3 + k] * g[k];
                    dwo[k] += a0 * g[k];
                    dwo[3 + k] += a1 * g[k];
                }
            }
            dprev[c * f_in + f] += g0;
            dcur[c * f_in + f] += g1;
        }
    }
}

/// y = W x (+ b), W is (rows x cols) row-major.
template <typename T>
void matvec(const T* weight, const T* bias, const T* x, std::size_t rows, std::size_t cols, T* y)
{
    for (std::size_t r = 0; r < rows; ++r)
        y[r] = bias[r] + dot(weight + r * cols, x, cols);
}

/// One GRU step: reset/update/candidate gates with separate input and
/// recurrent biases. `gi`/`gh` are 3H scratch, `h_new` may not alias `h_prev`.
template <typename T>
void gru_forward(const T* w_ih, const T* w_hh, const T* b_ih, const T* b_hh, const T* u, const T* h_prev,
                 std::size_t hidden, std::size_t input, T* gi, T* gh, T* h_new, T* r_out = nullptr,
                 T* z_out = nullptr, T* n_out = nullptr)
{
    matvec(w_ih, b_ih, u, 3 * hidden, input, gi);
    matvec(w_hh, b_hh, h_prev, 3 * hidden, hidden, gh);
    for (std::size_t j = 0; j < hidden; ++j) {
        const T r = sigmoid(gi[j] + gh[j]);
        const T z = sigmoid(gi[hidden + j] + gh[hidden + j]);
        const T n = std::tanh(gi[2 * hidden + j] + r * gh[2 * hidden + j]);
        h_new[j] = (T{1} - z) * n + z * h_prev[j];
        if (r_out) {
            r_out[j] = r;
            z_out[j] = z;
            n_out[j] = n;
        }
    }
}

} // namespace prunebench::kernels
