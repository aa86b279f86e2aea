#pragma once

#include <cstddef>
#include <string>

// Arithmetic inner-loop kernels: a scalar reference implementation and an
// AVX2 implementation selected at runtime, both conforming to one numeric
// contract so they produce bit-identical results:
//
//  - Elementwise kernels (add/sub/mul/scale/axpy/waxpy4) perform the same
//    single-rounded float operations per element in a fixed association
//    order; no fused multiply-add is ever emitted.
//  - Reduction kernels (sum/dot/dot4) accumulate in double over 8 strided
//    lanes: lane j accumulates elements with index == j (mod 8). Lanes are
//    combined as m[j] = lane[j] + lane[j+4], result = (m0+m1) + (m2+m3).
//
// Float inputs are widened to double before multiplication (exact), so the
// only rounding in a reduction is the double multiply and the ordered adds.

namespace clarity::kern {

struct Table {
    const char* name;

    // reductions, double accumulation
    double (*sum_f32)(const float* x, std::size_t n);
    double (*dot_f32)(const float* x, const float* y, std::size_t n);
    // four dot products sharing x: w rows at w + k*stride, k = 0..3
    void (*dot4_f32)(const float* x, const float* w, std::size_t stride,
                     std::size_t n, double out[4]);
    double (*sum_f64)(const double* x, std::size_t n);
    double (*dot_f64)(const double* x, const double* y, std::size_t n);
    void (*dot4_f64)(const double* x, const double* w, std::size_t stride,
                     std::size_t n, double out[4]);

    // elementwise
    void (*add_f32)(float* dst, const float* a, const float* b, std::size_t n);
    void (*sub_f32)(float* dst, const float* a, const float* b, std::size_t n);
    void (*mul_f32)(float* dst, const float* a, const float* b, std::size_t n);
    void (*scale_f32)(float* dst, const float* a, float s, std::size_t n);
    void (*axpy_f32)(float* y, const float* x, float a, std::size_t n);
    // y[i] += ((a0*w0[i] + a1*w1[i]) + (a2*w2[i] + a3*w3[i])), w rows strided
    void (*waxpy4_f32)(float* y, const float* w, std::size_t stride,
                       const float a[4], std::size_t n);
    void (*add_f64)(double* dst, const double* a, const double* b, std::size_t n);
    void (*sub_f64)(double* dst, const double* a, const double* b, std::size_t n);
    void (*mul_f64)(double* dst, const double* a, const double* b, std::size_t n);
    void (*scale_f64)(double* dst, const double* a, double s, std::size_t n);
    void (*axpy_f64)(double* y, const double* x, double a, std::size_t n);
    void (*waxpy4_f64)(double* y, const double* w, std::size_t stride,
                       const double a[4], std::size_t n);

    // mixed precision: float sources accumulated into double destinations,
    // used for gradient accumulation across batch elements
    void (*axpy_f32_f64)(double* y, const float* x, double a, std::size_t n);
    void (*waxpy4_f32_f64)(double* y, const float* w, std::size_t stride,
                           const double a[4], std::size_t n);
};

const Table& scalar_table();
const Table* avx2_table();   // nullptr when the CPU lacks AVX2

// Active table, chosen once: CLARITY_KERNELS=scalar|avx2 overrides the
// default of "best supported".
const Table& active();
std::string active_name();

// Typed convenience wrappers over the active table.
inline double sum(const float* x, std::size_t n) { return active().sum_f32(x, n); }
inline double sum(const double* x, std::size_t n) { return active().sum_f64(x, n); }
inline double dot(const float* x, const float* y, std::size_t n) { return active().dot_f32(x, y, n); }
inline double dot(const double* x, const double* y, std::size_t n) { return active().dot_f64(x, y, n); }
inline void dot4(const float* x, const float* w, std::size_t stride, std::size_t n, double out[4]) {
    active().dot4_f32(x, w, stride, n, out);
}
inline void dot4(const double* x, const double* w, std::size_t stride, std::size_t n, double out[4]) {
    active().dot4_f64(x, w, stride, n, out);
}
inline void add(float* d, const float* a, const float* b, std::size_t n) { active().add_f32(d, a, b, n); }
inline void add(double* d, const double* a, const double* b, std::size_t n) { active().add_f64(d, a, b, n); }
inline void sub(float* d, const float* a, const float* b, std::size_t n) { active().sub_f32(d, a, b, n); }
inline void sub(double* d, const double* a, const double* b, std::size_t n) { active().sub_f64(d, a, b, n); }
inline void mul(float* d, const float* a, const float* b, std::size_t n) { active().mul_f32(d, a, b, n); }
inline void mul(double* d, const double* a, const double* b, std::size_t n) { active().mul_f64(d, a, b, n); }
inline void scale(float* d, const float* a, float s, std::size_t n) { active().scale_f32(d, a, s, n); }
inline void scale(double* d, const double* a, double s, std::size_t n) { active().scale_f64(d, a, s, n); }
inline void axpy(float* y, const float* x, float a, std::size_t n) { active().axpy_f32(y, x, a, n); }
inline void axpy(double* y, const double* x, double a, std::size_t n) { active().axpy_f64(y, x, a, n); }
inline void waxpy4(float* y, const float* w, std::size_t stride, const float a[4], std::size_t n) {
    active().waxpy4_f32(y, w, stride, a, n);
}
inline void waxpy4(double* y, const double* w, std::size_t stride, const double a[4], std::size_t n) {
    active().waxpy4_f64(y, w, stride, a, n);
}
inline void axpy_f32_f64(double* y, const float* x, double a, std::size_t n) {
    active().axpy_f32_f64(y, x, a, n);
}
inline void waxpy4_f32_f64(double* y, const float* w, std::size_t stride, const double a[4], std::size_t n) {
    active().waxpy4_f32_f64(y, w, stride, a, n);
}

}  // namespace clarity::kern
