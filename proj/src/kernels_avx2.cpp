#include "clarity/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

// AVX2 kernels. Multiplies and adds are emitted as separate instructions
// (no FMA): the reference path rounds after every multiply, so fusing here
// would break bit-equality. Reductions keep the 8-lane layout from
// kernels.hpp: acc0 holds lanes 0..3, acc1 holds lanes 4..7, tails are
// folded into the extracted lane sums before the fixed final combine.

namespace clarity::kern {
namespace {

inline double combine8(const double lane[8]) {
    const double m0 = lane[0] + lane[4], m1 = lane[1] + lane[5];
    const double m2 = lane[2] + lane[6], m3 = lane[3] + lane[7];
    return (m0 + m1) + (m2 + m3);
}

double sum_f32_avx2(const float* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm_loadu_ps(x + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm_loadu_ps(x + i + 4)));
    }
    alignas(32) double lane[8];
    _mm256_store_pd(lane, acc0);
    _mm256_store_pd(lane + 4, acc1);
    for (; i < n; ++i) lane[i & 7] += static_cast<double>(x[i]);
    return combine8(lane);
}

double dot_f32_avx2(const float* x, const float* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d xa = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        const __m256d ya = _mm256_cvtps_pd(_mm_loadu_ps(y + i));
        const __m256d xb = _mm256_cvtps_pd(_mm_loadu_ps(x + i + 4));
        const __m256d yb = _mm256_cvtps_pd(_mm_loadu_ps(y + i + 4));
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(xa, ya));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(xb, yb));
    }
    alignas(32) double lane[8];
    _mm256_store_pd(lane, acc0);
    _mm256_store_pd(lane + 4, acc1);
    for (; i < n; ++i) lane[i & 7] += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return combine8(lane);
}

void dot4_f32_avx2(const float* x, const float* w, std::size_t stride,
                   std::size_t n, double out[4]) {
    const float* w0 = w;
    const float* w1 = w + stride;
    const float* w2 = w + 2 * stride;
    const float* w3 = w + 3 * stride;
    __m256d a0 = _mm256_setzero_pd(), b0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd(), b1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), b2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd(), b3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d xa = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        const __m256d xb = _mm256_cvtps_pd(_mm_loadu_ps(x + i + 4));
        a0 = _mm256_add_pd(a0, _mm256_mul_pd(xa, _mm256_cvtps_pd(_mm_loadu_ps(w0 + i))));
        b0 = _mm256_add_pd(b0, _mm256_mul_pd(xb, _mm256_cvtps_pd(_mm_loadu_ps(w0 + i + 4))));
        a1 = _mm256_add_pd(a1, _mm256_mul_pd(xa, _mm256_cvtps_pd(_mm_loadu_ps(w1 + i))));
        b1 = _mm256_add_pd(b1, _mm256_mul_pd(xb, _mm256_cvtps_pd(_mm_loadu_ps(w1 + i + 4))));
        a2 = _mm256_add_pd(a2, _mm256_mul_pd(xa, _mm256_cvtps_pd(_mm_loadu_ps(w2 + i))));
        b2 = _mm256_add_pd(b2, _mm256_mul_pd(xb, _mm256_cvtps_pd(_mm_loadu_ps(w2 + i + 4))));
        a3 = _mm256_add_pd(a3, _mm256_mul_pd(xa, _mm256_cvtps_pd(_mm_loadu_ps(w3 + i))));
        b3 = _mm256_add_pd(b3, _mm256_mul_pd(xb, _mm256_cvtps_pd(_mm_loadu_ps(w3 + i + 4))));
    }
    alignas(32) double lane[4][8];
    _mm256_store_pd(lane[0], a0); _mm256_store_pd(lane[0] + 4, b0);
    _mm256_store_pd(lane[1], a1); _mm256_store_pd(lane[1] + 4, b1);
    _mm256_store_pd(lane[2], a2); _mm256_store_pd(lane[2] + 4, b2);
    _mm256_store_pd(lane[3], a3); _mm256_store_pd(lane[3] + 4, b3);
    const float* ws[4] = {w0, w1, w2, w3};
    for (std::size_t j = i; j < n; ++j) {
        const double xv = static_cast<double>(x[j]);
        for (int k = 0; k < 4; ++k)
            lane[k][j & 7] += xv * static_cast<double>(ws[k][j]);
    }
    for (int k = 0; k < 4; ++k) out[k] = combine8(lane[k]);
}

double sum_f64_avx2(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    alignas(32) double lane[8];
    _mm256_store_pd(lane, acc0);
    _mm256_store_pd(lane + 4, acc1);
    for (; i < n; ++i) lane[i & 7] += x[i];
    return combine8(lane);
}

double dot_f64_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    alignas(32) double lane[8];
    _mm256_store_pd(lane, acc0);
    _mm256_store_pd(lane + 4, acc1);
    for (; i < n; ++i) lane[i & 7] += x[i] * y[i];
    return combine8(lane);
}

void dot4_f64_avx2(const double* x, const double* w, std::size_t stride,
                   std::size_t n, double out[4]) {
    for (int k = 0; k < 4; ++k)
        out[k] = dot_f64_avx2(x, w + static_cast<std::size_t>(k) * stride, n);
}

void add_f32_avx2(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_f32_avx2(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_f32_avx2(float* dst, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void scale_f32_avx2(float* dst, const float* a, float s, std::size_t n) {
    const __m256 vs = _mm256_set1_ps(s);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), vs));
    for (; i < n; ++i) dst[i] = a[i] * s;
}

void axpy_f32_avx2(float* y, const float* x, float a, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 t = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), t));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void waxpy4_f32_avx2(float* y, const float* w, std::size_t stride,
                     const float a[4], std::size_t n) {
    const float* w0 = w;
    const float* w1 = w + stride;
    const float* w2 = w + 2 * stride;
    const float* w3 = w + 3 * stride;
    const __m256 va0 = _mm256_set1_ps(a[0]);
    const __m256 va1 = _mm256_set1_ps(a[1]);
    const __m256 va2 = _mm256_set1_ps(a[2]);
    const __m256 va3 = _mm256_set1_ps(a[3]);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 t01 = _mm256_add_ps(_mm256_mul_ps(va0, _mm256_loadu_ps(w0 + i)),
                                         _mm256_mul_ps(va1, _mm256_loadu_ps(w1 + i)));
        const __m256 t23 = _mm256_add_ps(_mm256_mul_ps(va2, _mm256_loadu_ps(w2 + i)),
                                         _mm256_mul_ps(va3, _mm256_loadu_ps(w3 + i)));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_add_ps(_mm256_loadu_ps(y + i), t01), t23));
    }
    for (; i < n; ++i) {
        const float t01 = a[0] * w0[i] + a[1] * w1[i];
        const float t23 = a[2] * w2[i] + a[3] * w3[i];
        y[i] = (y[i] + t01) + t23;
    }
}

void add_f64_avx2(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_f64_avx2(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_f64_avx2(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void scale_f64_avx2(double* dst, const double* a, double s, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    for (; i < n; ++i) dst[i] = a[i] * s;
}

void axpy_f64_avx2(double* y, const double* x, double a, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void waxpy4_f64_avx2(double* y, const double* w, std::size_t stride,
                     const double a[4], std::size_t n) {
    const double* w0 = w;
    const double* w1 = w + stride;
    const double* w2 = w + 2 * stride;
    const double* w3 = w + 3 * stride;
    const __m256d va0 = _mm256_set1_pd(a[0]);
    const __m256d va1 = _mm256_set1_pd(a[1]);
    const __m256d va2 = _mm256_set1_pd(a[2]);
    const __m256d va3 = _mm256_set1_pd(a[3]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t01 = _mm256_add_pd(_mm256_mul_pd(va0, _mm256_loadu_pd(w0 + i)),
                                          _mm256_mul_pd(va1, _mm256_loadu_pd(w1 + i)));
        const __m256d t23 = _mm256_add_pd(_mm256_mul_pd(va2, _mm256_loadu_pd(w2 + i)),
                                          _mm256_mul_pd(va3, _mm256_loadu_pd(w3 + i)));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(y + i), t01), t23));
    }
    for (; i < n; ++i) {
        const double t01 = a[0] * w0[i] + a[1] * w1[i];
        const double t23 = a[2] * w2[i] + a[3] * w3[i];
        y[i] = (y[i] + t01) + t23;
    }
}

void axpy_f32_f64_avx2(double* y, const float* x, double a, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(va, _mm256_cvtps_pd(_mm_loadu_ps(x + i)));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
    }
    for (; i < n; ++i) y[i] = y[i] + a * static_cast<double>(x[i]);
}

void waxpy4_f32_f64_avx2(double* y, const float* w, std::size_t stride,
                         const double a[4], std::size_t n) {
    const float* w0 = w;
    const float* w1 = w + stride;
    const float* w2 = w + 2 * stride;
    const float* w3 = w + 3 * stride;
    const __m256d va0 = _mm256_set1_pd(a[0]);
    const __m256d va1 = _mm256_set1_pd(a[1]);
    const __m256d va2 = _mm256_set1_pd(a[2]);
    const __m256d va3 = _mm256_set1_pd(a[3]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t01 = _mm256_add_pd(_mm256_mul_pd(va0, _mm256_cvtps_pd(_mm_loadu_ps(w0 + i))),
                                          _mm256_mul_pd(va1, _mm256_cvtps_pd(_mm_loadu_ps(w1 + i))));
        const __m256d t23 = _mm256_add_pd(_mm256_mul_pd(va2, _mm256_cvtps_pd(_mm_loadu_ps(w2 + i))),
                                          _mm256_mul_pd(va3, _mm256_cvtps_pd(_mm_loadu_ps(w3 + i))));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(y + i), t01), t23));
    }
    for (; i < n; ++i) {
        const double t01 = a[0] * static_cast<double>(w0[i]) + a[1] * static_cast<double>(w1[i]);
        const double t23 = a[2] * static_cast<double>(w2[i]) + a[3] * static_cast<double>(w3[i]);
        y[i] = (y[i] + t01) + t23;
    }
}

}  // namespace

const Table* avx2_table() {
    if (!__builtin_cpu_supports("avx2")) return nullptr;
    static const Table t = {
        "avx2",
        &sum_f32_avx2, &dot_f32_avx2, &dot4_f32_avx2,
        &sum_f64_avx2, &dot_f64_avx2, &dot4_f64_avx2,
        &add_f32_avx2, &sub_f32_avx2, &mul_f32_avx2,
        &scale_f32_avx2, &axpy_f32_avx2, &waxpy4_f32_avx2,
        &add_f64_avx2, &sub_f64_avx2, &mul_f64_avx2,
        &scale_f64_avx2, &axpy_f64_avx2, &waxpy4_f64_avx2,
        &axpy_f32_f64_avx2, &waxpy4_f32_f64_avx2,
    };
    return &t;
}

}  // namespace clarity::kern

#else

namespace clarity::kern {
const Table* avx2_table() { return nullptr; }
}  // namespace clarity::kern

#endif
