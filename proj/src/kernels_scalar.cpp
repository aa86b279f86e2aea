#include "clarity/kernels.hpp"

// Reference kernels. These define the numeric contract; the vector variants
// must match them bit for bit.

namespace clarity::kern {
namespace {

template <typename T>
double sum_ref(const T* x, std::size_t n) {
    double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) lane[i & 7] += static_cast<double>(x[i]);
    const double m0 = lane[0] + lane[4], m1 = lane[1] + lane[5];
    const double m2 = lane[2] + lane[6], m3 = lane[3] + lane[7];
    return (m0 + m1) + (m2 + m3);
}

template <typename T>
double dot_ref(const T* x, const T* y, std::size_t n) {
    double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i)
        lane[i & 7] += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    const double m0 = lane[0] + lane[4], m1 = lane[1] + lane[5];
    const double m2 = lane[2] + lane[6], m3 = lane[3] + lane[7];
    return (m0 + m1) + (m2 + m3);
}

template <typename T>
void dot4_ref(const T* x, const T* w, std::size_t stride, std::size_t n, double out[4]) {
    for (int k = 0; k < 4; ++k) out[k] = dot_ref(x, w + static_cast<std::size_t>(k) * stride, n);
}

template <typename T>
void add_ref(T* dst, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

template <typename T>
void sub_ref(T* dst, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

template <typename T>
void mul_ref(T* dst, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

template <typename T>
void scale_ref(T* dst, const T* a, T s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * s;
}

template <typename T>
void axpy_ref(T* y, const T* x, T a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

template <typename T>
void waxpy4_ref(T* y, const T* w, std::size_t stride, const T a[4], std::size_t n) {
    const T* w0 = w;
    const T* w1 = w + stride;
    const T* w2 = w + 2 * stride;
    const T* w3 = w + 3 * stride;
    for (std::size_t i = 0; i < n; ++i) {
        const T t01 = a[0] * w0[i] + a[1] * w1[i];
        const T t23 = a[2] * w2[i] + a[3] * w3[i];
        y[i] = (y[i] + t01) + t23;
    }
}

void axpy_f32_f64_ref(double* y, const float* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * static_cast<double>(x[i]);
}

void waxpy4_f32_f64_ref(double* y, const float* w, std::size_t stride, const double a[4], std::size_t n) {
    const float* w0 = w;
    const float* w1 = w + stride;
    const float* w2 = w + 2 * stride;
    const float* w3 = w + 3 * stride;
    for (std::size_t i = 0; i < n; ++i) {
        const double t01 = a[0] * static_cast<double>(w0[i]) + a[1] * static_cast<double>(w1[i]);
        const double t23 = a[2] * static_cast<double>(w2[i]) + a[3] * static_cast<double>(w3[i]);
        y[i] = (y[i] + t01) + t23;
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table t = {
        "scalar",
        &sum_ref<float>, &dot_ref<float>, &dot4_ref<float>,
        &sum_ref<double>, &dot_ref<double>, &dot4_ref<double>,
        &add_ref<float>, &sub_ref<float>, &mul_ref<float>,
        &scale_ref<float>, &axpy_ref<float>, &waxpy4_ref<float>,
        &add_ref<double>, &sub_ref<double>, &mul_ref<double>,
        &scale_ref<double>, &axpy_ref<double>, &waxpy4_ref<double>,
        &axpy_f32_f64_ref, &waxpy4_f32_f64_ref,
    };
    return t;
}

}  // namespace clarity::kern
