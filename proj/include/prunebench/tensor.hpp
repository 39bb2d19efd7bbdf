#pragma once

// Minimal dense row-major tensor and the handful of primitives the rest of
// the library needs: per-coordinate slice norms, index selection along an
// axis, matmul and pointwise arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace prunebench {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? "," : "") << shape[i];
    os << ')';
    return os.str();
}

template <typename T = float>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape))
    {
        check_shape(shape_);
        data_.assign(shape_size(shape_), fill);
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
    {
        check_shape(shape_);
        if (data_.size() != shape_size(shape_))
            throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_string(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    T* raw() noexcept { return data_.data(); }
    const T* raw() const noexcept { return data_.data(); }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    template <typename... Idx>
    T& at(Idx... idx) { return data_[offset({static_cast<std::size_t>(idx)...})]; }
    template <typename... Idx>
    const T& at(Idx... idx) const { return data_[offset({static_cast<std::size_t>(idx)...})]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    Tensor<U> cast() const
    {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor& a, const Tensor& b)
    {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    static void check_shape(const Shape& shape)
    {
        if (shape.empty() || shape.size() > 4)
            throw std::invalid_argument("tensor rank must be 1-4, got " + std::to_string(shape.size()));
        for (auto d : shape)
            if (d == 0)
                throw std::invalid_argument("tensor dimensions must be positive: " + shape_string(shape));
    }

    std::size_t offset(std::initializer_list<std::size_t> idx) const
    {
        if (idx.size() != shape_.size())
            throw std::invalid_argument("index rank mismatch");
        std::size_t off = 0;
        std::size_t axis = 0;
        for (auto i : idx) {
            if (i >= shape_[axis])
                throw std::out_of_range("tensor index out of range");
            off = off * shape_[axis] + i;
            ++axis;
        }
        return off;
    }

    Shape shape_;
    std::vector<T> data_;
};

namespace detail {

// Splits a shape around `axis` into (outer, axis length, inner) so that the
// flat index of (o, j, i) is (o * len + j) * inner + i.
struct AxisSplit {
    std::size_t outer;
    std::size_t len;
    std::size_t inner;
};

inline AxisSplit split_axis(const Shape& shape, std::size_t axis)
{
    if (axis >= shape.size())
        throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for rank " +
                                    std::to_string(shape.size()));
    AxisSplit s{1, shape[axis], 1};
    for (std::size_t i = 0; i < axis; ++i)
        s.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i)
        s.inner *= shape[i];
    return s;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op)
{
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                    " vs " + shape_string(b.shape()));
}

} // namespace detail

/// L2 norm of the sub-tensor obtained by fixing `axis` at `coord`.
template <typename T>
double slice_norm(const Tensor<T>& t, std::size_t axis, std::size_t coord)
{
    const auto s = detail::split_axis(t.shape(), axis);
    if (coord >= s.len)
        throw std::invalid_argument("coordinate " + std::to_string(coord) + " out of range for axis of length " +
                                    std::to_string(s.len));
    double acc = 0.0;
    for (std::size_t o = 0; o < s.outer; ++o) {
        const T* p = t.raw() + (o * s.len + coord) * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i)
            acc += static_cast<double>(p[i]) * static_cast<double>(p[i]);
    }
    return std::sqrt(acc);
}

/// All slice norms along `axis` in one pass.
template <typename T>
std::vector<double> slice_norms(const Tensor<T>& t, std::size_t axis)
{
    const auto s = detail::split_axis(t.shape(), axis);
    std::vector<double> sq(s.len, 0.0);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t j = 0; j < s.len; ++j) {
            const T* p = t.raw() + (o * s.len + j) * s.inner;
            double acc = 0.0;
            for (std::size_t i = 0; i < s.inner; ++i)
                acc += static_cast<double>(p[i]) * static_cast<double>(p[i]);
            sq[j] += acc;
        }
    for (auto& v : sq)
        v = std::sqrt(v);
    return sq;
}

/// Keeps the coordinates `indices` (strictly ascending) of `axis`.
template <typename T>
Tensor<T> take_along_axis(const Tensor<T>& t, std::size_t axis, std::span<const std::size_t> indices)
{
    const auto s = detail::split_axis(t.shape(), axis);
    if (indices.empty())
        throw std::invalid_argument("take_along_axis: empty index list");
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= s.len)
            throw std::invalid_argument("take_along_axis: index " + std::to_string(indices[k]) +
                                        " out of range for axis of length " + std::to_string(s.len));
        if (k > 0 && indices[k] <= indices[k - 1])
            throw std::invalid_argument("take_along_axis: indices must be strictly ascending");
    }
    Shape shape = t.shape();
    shape[axis] = indices.size();
    std::vector<T> out;
    out.reserve(shape_size(shape));
    for (std::size_t o = 0; o < s.outer; ++o)
        for (auto j : indices) {
            const T* p = t.raw() + (o * s.len + j) * s.inner;
            out.insert(out.end(), p, p + s.inner);
        }
    return Tensor<T>(std::move(shape), std::move(out));
}

template <typename T>
double frobenius_norm(const Tensor<T>& t)
{
    double acc = 0.0;
    for (auto v : t.data())
        acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

/// (m x k) * (k x n) -> (m x n).
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b)
{
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: non-conforming shapes " + shape_string(a.shape()) + " and " +
                                    shape_string(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> c({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                acc += static_cast<double>(a[i * k + p]) * static_cast<double>(b[p * n + j]);
            c[i * n + j] = static_cast<T>(acc);
        }
    return c;
}

template <typename T, typename Fn>
Tensor<T> map(const Tensor<T>& a, Fn fn)
{
    Tensor<T> out = a;
    for (auto& v : out.data())
        v = fn(v);
    return out;
}

template <typename T, typename Fn>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, Fn fn, const char* op)
{
    detail::require_same_shape(a, b, op);
    Tensor<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = fn(a[i], b[i]);
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b)
{
    return zip(a, b, [](T x, T y) { return x + y; }, "add");
}

template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b)
{
    return zip(a, b, [](T x, T y) { return x * y; }, "multiply");
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, T s)
{
    return map(a, [s](T x) { return x + s; });
}

template <typename T>
Tensor<T> multiply(const Tensor<T>& a, T s)
{
    return map(a, [s](T x) { return x * s; });
}

template <typename T>
inline T sigmoid(T x)
{
    return T{1} / (T{1} + std::exp(-x));
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a)
{
    return map(a, [](T x) { return sigmoid(x); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a)
{
    return map(a, [](T x) { return std::tanh(x); });
}

} // namespace prunebench
