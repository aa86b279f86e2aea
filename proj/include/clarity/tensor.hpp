#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <vector>

namespace clarity {

// Dense n-dimensional array, row-major. Shape is held as explicit dimensions;
// data length always equals the shape product.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<int> s) : shape(std::move(s)), data(count(shape), T(0)) {}
    TensorT(std::vector<int> s, T fill) : shape(std::move(s)), data(count(shape), fill) {}
    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (count(shape) != static_cast<std::int64_t>(data.size()))
            throw std::runtime_error("tensor: shape " + shape_str() + " does not match data length " +
                                     std::to_string(data.size()));
    }

    static std::int64_t count(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::runtime_error("tensor: non-positive dimension " + std::to_string(d));
            n *= d;
        }
        return n;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    int rank() const { return static_cast<int>(shape.size()); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void require_finite(const std::string& what) const {
        if (!all_finite()) throw std::runtime_error(what + ": non-finite values in tensor " + shape_str());
    }

    // reshape without copying; element count must not change
    TensorT reshaped(std::vector<int> s) const {
        if (count(s) != numel())
            throw std::runtime_error("tensor: cannot reshape " + shape_str() + " to new element count");
        TensorT out;
        out.shape = std::move(s);
        out.data = data;
        return out;
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
TensorT<T> widen_or_narrow(const TensorT<float>& a) {
    if constexpr (std::is_same_v<T, float>) return a;
    TensorT<T> out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = static_cast<T>(a.data[i]);
    return out;
}

}  // namespace clarity
