#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "clarity/kernels.hpp"
#include "clarity/params.hpp"
#include "clarity/rng.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

enum class Mode { kTrain, kInfer };

// Per-layer forward state kept for the backward pass.
template <typename T>
struct Stash {
    TensorT<T> in;
    TensorT<T> a;
    TensorT<T> b;
    std::vector<int> in_shape;
};

template <typename T>
using Tape = std::vector<Stash<T>>;

template <typename T>
class LayerT {
  public:
    explicit LayerT(std::string name) : name_(std::move(name)) {}
    virtual ~LayerT() = default;
    const std::string& name() const { return name_; }

    virtual void register_params(ParamStoreT<T>&, Rng&) {}

    // `st` may be null when no backward pass will follow. Train mode uses and
    // updates batch statistics where applicable; infer mode must not mutate ps.
    virtual TensorT<T> forward(ParamStoreT<T>& ps, const TensorT<T>& x, Stash<T>* st,
                               Mode mode) const = 0;

    // `ga` may be null to skip parameter gradients (input gradient only).
    virtual TensorT<T> backward(const ParamStoreT<T>& ps, const Stash<T>& st, const TensorT<T>& dy,
                                Mode mode, GradAccum* ga) const = 0;

  protected:
    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error(name_ + ": " + msg);
    }
    void want_rank(const TensorT<T>& x, int r) const {
        if (x.rank() != r)
            fail("expected rank-" + std::to_string(r) + " input, got " + x.shape_str());
    }

  private:
    std::string name_;
};

namespace detail {

// square-kernel convolution geometry, stride and padding equal in both axes
struct ConvGeom {
    int cin = 0, cout = 0, k = 3, s = 1, p = 0;
    int out_size(int in) const { return (in + 2 * p - k) / s + 1; }
    int patch() const { return cin * k * k; }
};

// P has one row of length cin*k*k per output position, zero padded
template <typename T>
void im2col(const T* x, int C, int H, int W, const ConvGeom& g, T* P) {
    const int Ho = g.out_size(H), Wo = g.out_size(W);
    const int K = g.patch();
    for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
            T* row = P + (static_cast<std::size_t>(oy) * Wo + ox) * K;
            std::size_t idx = 0;
            for (int c = 0; c < C; ++c)
                for (int ky = 0; ky < g.k; ++ky) {
                    const int iy = oy * g.s - g.p + ky;
                    for (int kx = 0; kx < g.k; ++kx, ++idx) {
                        const int ix = ox * g.s - g.p + kx;
                        row[idx] = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                       ? x[(static_cast<std::size_t>(c) * H + iy) * W + ix]
                                       : T(0);
                    }
                }
        }
}

template <typename T>
void col2im_add(const T* P, int C, int H, int W, const ConvGeom& g, T* dx) {
    const int Ho = g.out_size(H), Wo = g.out_size(W);
    const int K = g.patch();
    for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
            const T* row = P + (static_cast<std::size_t>(oy) * Wo + ox) * K;
            std::size_t idx = 0;
            for (int c = 0; c < C; ++c)
                for (int ky = 0; ky < g.k; ++ky) {
                    const int iy = oy * g.s - g.p + ky;
                    for (int kx = 0; kx < g.k; ++kx, ++idx) {
                        const int ix = ox * g.s - g.p + kx;
                        if (iy >= 0 && iy < H && ix >= 0 && ix < W)
                            dx[(static_cast<std::size_t>(c) * H + iy) * W + ix] += row[idx];
                    }
                }
        }
}

// y[c, pos] = dot(P.row(pos), W.row(c)) + b[c]; W rows have length K
template <typename T>
void conv_rows_forward(const T* P, int positions, const T* W, const T* b, int cout, int K, T* y) {
    int c0 = 0;
    for (; c0 + 4 <= cout; c0 += 4) {
        for (int pos = 0; pos < positions; ++pos) {
            double o[4];
            kern::dot4(P + static_cast<std::size_t>(pos) * K, W + static_cast<std::size_t>(c0) * K,
                       static_cast<std::size_t>(K), static_cast<std::size_t>(K), o);
            for (int k = 0; k < 4; ++k)
                y[static_cast<std::size_t>(c0 + k) * positions + pos] =
                    static_cast<T>(o[k] + (b ? static_cast<double>(b[c0 + k]) : 0.0));
        }
    }
    for (; c0 < cout; ++c0)
        for (int pos = 0; pos < positions; ++pos)
            y[static_cast<std::size_t>(c0) * positions + pos] = static_cast<T>(
                kern::dot(P + static_cast<std::size_t>(pos) * K, W + static_cast<std::size_t>(c0) * K,
                          static_cast<std::size_t>(K)) +
                (b ? static_cast<double>(b[c0]) : 0.0));
}

// dP.row(pos) = sum_c dy[c, pos] * W.row(c)
template <typename T>
void conv_rows_backward_to_patches(const T* dy, int positions, const T* W, int cout, int K, T* dP) {
    std::fill(dP, dP + static_cast<std::size_t>(positions) * K, T(0));
    for (int pos = 0; pos < positions; ++pos) {
        T* row = dP + static_cast<std::size_t>(pos) * K;
        int c0 = 0;
        for (; c0 + 4 <= cout; c0 += 4) {
            T a[4];
            for (int k = 0; k < 4; ++k)
                a[k] = dy[static_cast<std::size_t>(c0 + k) * positions + pos];
            kern::waxpy4(row, W + static_cast<std::size_t>(c0) * K, static_cast<std::size_t>(K), a,
                         static_cast<std::size_t>(K));
        }
        for (; c0 < cout; ++c0)
            kern::axpy(row, W + static_cast<std::size_t>(c0) * K,
                       dy[static_cast<std::size_t>(c0) * positions + pos], static_cast<std::size_t>(K));
    }
}

// dW.row(c) += sum_pos dy[c, pos] * P.row(pos), accumulated in double
template <typename T>
void conv_rows_weight_grad(const T* P, int positions, const T* dy, int cout, int K, double* dW,
                           double* db) {
    for (int c = 0; c < cout; ++c) {
        double* wrow = dW + static_cast<std::size_t>(c) * K;
        const T* dyc = dy + static_cast<std::size_t>(c) * positions;
        int pos = 0;
        for (; pos + 4 <= positions; pos += 4) {
            const double a[4] = {static_cast<double>(dyc[pos]), static_cast<double>(dyc[pos + 1]),
                                 static_cast<double>(dyc[pos + 2]), static_cast<double>(dyc[pos + 3])};
            if constexpr (std::is_same_v<T, float>)
                kern::waxpy4_f32_f64(wrow, P + static_cast<std::size_t>(pos) * K,
                                     static_cast<std::size_t>(K), a, static_cast<std::size_t>(K));
            else
                kern::waxpy4(wrow, P + static_cast<std::size_t>(pos) * K, static_cast<std::size_t>(K),
                             a, static_cast<std::size_t>(K));
        }
        for (; pos < positions; ++pos) {
            if constexpr (std::is_same_v<T, float>)
                kern::axpy_f32_f64(wrow, P + static_cast<std::size_t>(pos) * K,
                                   static_cast<double>(dyc[pos]), static_cast<std::size_t>(K));
            else
                kern::axpy(wrow, P + static_cast<std::size_t>(pos) * K, static_cast<double>(dyc[pos]),
                           static_cast<std::size_t>(K));
        }
        if (db) db[c] += kern::sum(dyc, static_cast<std::size_t>(positions));
    }
}

inline double he_std(int fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

}  // namespace detail

template <typename T>
class DenseT final : public LayerT<T> {
  public:
    DenseT(std::string name, int in, int out) : LayerT<T>(std::move(name)), in_(in), out_(out) {}

    void register_params(ParamStoreT<T>& ps, Rng& rng) override {
        TensorT<T> w({out_, in_});
        fill_normal(w.data, rng, detail::he_std(in_));
        ps.add(this->name() + ".weight", std::move(w));
        ps.add(this->name() + ".bias", TensorT<T>({out_}));
    }

    TensorT<T> forward(ParamStoreT<T>& ps, const TensorT<T>& x, Stash<T>* st,
                       Mode) const override {
        this->want_rank(x, 2);
        if (x.dim(1) != in_)
            this->fail("expected input width " + std::to_string(in_) + ", got " + x.shape_str());
        const int N = x.dim(0);
        const TensorT<T>& W = ps.value(this->name() + ".weight");
        const TensorT<T>& b = ps.value(this->name() + ".bias");
        TensorT<T> y({N, out_});
        for (int n = 0; n < N; ++n)
            detail::conv_rows_forward(x.ptr() + static_cast<std::size_t>(n) * in_, 1, W.ptr(), b.ptr(),
                                      out_, in_, y.ptr() + static_cast<std::size_t>(n) * out_);
        if (st) st->in = x;
        return y;
    }

    TensorT<T> backward(const ParamStoreT<T>& ps, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum* ga) const override {
        const int N = st.in.dim(0);
        if (dy.rank() != 2 || dy.dim(0) != N || dy.dim(1) != out_)
            this->fail("gradient shape " + dy.shape_str() + " does not match output");
        const TensorT<T>& W = ps.value(this->name() + ".weight");
        TensorT<T> dx({N, in_});
        for (int n = 0; n < N; ++n) {
            T* dxn = dx.ptr() + static_cast<std::size_t>(n) * in_;
            const T* dyn = dy.ptr() + static_cast<std::size_t>(n) * out_;
            int o0 = 0;
            for (; o0 + 4 <= out_; o0 += 4)
                kern::waxpy4(dxn, W.ptr() + static_cast<std::size_t>(o0) * in_,
                             static_cast<std::size_t>(in_), dyn + o0, static_cast<std::size_t>(in_));
            for (; o0 < out_; ++o0)
                kern::axpy(dxn, W.ptr() + static_cast<std::size_t>(o0) * in_, dyn[o0],
                           static_cast<std::size_t>(in_));
        }
        if (ga) {
            double* dW = ga->at(ps.index_of(this->name() + ".weight"));
            double* db = ga->at(ps.index_of(this->name() + ".bias"));
            for (int n = 0; n < N; ++n) {
                const T* xn = st.in.ptr() + static_cast<std::size_t>(n) * in_;
                const T* dyn = dy.ptr() + static_cast<std::size_t>(n) * out_;
                for (int o = 0; o < out_; ++o) {
                    if constexpr (std::is_same_v<T, float>)
                        kern::axpy_f32_f64(dW + static_cast<std::size_t>(o) * in_, xn,
                                           static_cast<double>(dyn[o]), static_cast<std::size_t>(in_));
                    else
                        kern::axpy(dW + static_cast<std::size_t>(o) * in_, xn,
                                   static_cast<double>(dyn[o]), static_cast<std::size_t>(in_));
                    db[o] += static_cast<double>(dyn[o]);
                }
            }
        }
        return dx;
    }

  private:
    int in_, out_;
};

template <typename T>
class Conv2dT final : public LayerT<T> {
  public:
    Conv2dT(std::string name, int cin, int cout, int k, int s, int p)
        : LayerT<T>(std::move(name)) {
        g_.cin = cin;
        g_.cout = cout;
        g_.k = k;
        g_.s = s;
        g_.p = p;
    }

    void register_params(ParamStoreT<T>& ps, Rng& rng) override {
        TensorT<T> w({g_.cout, g_.patch()});
        fill_normal(w.data, rng, detail::he_std(g_.patch()));
        ps.add(this->name() + ".weight", std::move(w));
        ps.add(this->name() + ".bias", TensorT<T>({g_.cout}));
    }

    TensorT<T> forward(ParamStoreT<T>& ps, const TensorT<T>& x, Stash<T>* st,
                       Mode) const override {
        this->want_rank(x, 4);
        if (x.dim(1) != g_.cin)
            this->fail("expected " + std::to_string(g_.cin) + " channels, got " + x.shape_str());
        const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
        const int Ho = g_.out_size(H), Wo = g_.out_size(W);
        if (Ho <= 0 || Wo <= 0) this->fail("input " + x.shape_str() + " too small for kernel");
        const int K = g_.patch(), positions = Ho * Wo;
        const TensorT<T>& Wt = ps.value(this->name() + ".weight");
        const TensorT<T>& b = ps.value(this->name() + ".bias");
        TensorT<T> y({N, g_.cout, Ho, Wo});
        TensorT<T> patches({N, positions * K});
        const std::size_t in_stride = static_cast<std::size_t>(g_.cin) * H * W;
        for (int n = 0; n < N; ++n) {
            T* P = patches.ptr() + static_cast<std::size_t>(n) * positions * K;
            detail::im2col(x.ptr() + n * in_stride, g_.cin, H, W, g_, P);
            detail::conv_rows_forward(P, positions, Wt.ptr(), b.ptr(), g_.cout, K,
                                      y.ptr() + static_cast<std::size_t>(n) * g_.cout * positions);
        }
        if (st) {
            st->a = std::move(patches);
            st->in_shape = x.shape;
        }
        return y;
    }

    TensorT<T> backward(const ParamStoreT<T>& ps, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum* ga) const override {
        const int N = st.in_shape[0], H = st.in_shape[2], W = st.in_shape[3];
        const int Ho = g_.out_size(H), Wo = g_.out_size(W);
        const int K = g_.patch(), positions = Ho * Wo;
        if (dy.rank() != 4 || dy.dim(0) != N || dy.dim(1) != g_.cout || dy.dim(2) != Ho ||
            dy.dim(3) != Wo)
            this->fail("gradient shape " + dy.shape_str() + " does not match output");
        const TensorT<T>& Wt = ps.value(this->name() + ".weight");
        TensorT<T> dx(st.in_shape);
        TensorT<T> dP({positions, K});
        double* dW = ga ? ga->at(ps.index_of(this->name() + ".weight")) : nullptr;
        double* db = ga ? ga->at(ps.index_of(this->name() + ".bias")) : nullptr;
        const std::size_t in_stride = static_cast<std::size_t>(g_.cin) * H * W;
        for (int n = 0; n < N; ++n) {
            const T* dyn = dy.ptr() + static_cast<std::size_t>(n) * g_.cout * positions;
            detail::conv_rows_backward_to_patches(dyn, positions, Wt.ptr(), g_.cout, K, dP.ptr());
            detail::col2im_add(dP.ptr(), g_.cin, H, W, g_, dx.ptr() + n * in_stride);
            if (ga)
                detail::conv_rows_weight_grad(st.a.ptr() + static_cast<std::size_t>(n) * positions * K,
                                              positions, dyn, g_.cout, K, dW, db);
        }
        return dx;
    }

  private:
    detail::ConvGeom g_;
};

// Transposed convolution, expressed through the mirror convolution that maps
// output-shaped tensors back to input-shaped ones: forward here is the mirror's
// input-gradient, backward here is the mirror's forward.
template <typename T>
class ConvT2dT final : public LayerT<T> {
  public:
    ConvT2dT(std::string name, int cin, int cout, int k, int s, int p, int outpad)
        : LayerT<T>(std::move(name)), cin_(cin), cout_(cout), outpad_(outpad) {
        m_.cin = cout;
        m_.cout = cin;
        m_.k = k;
        m_.s = s;
        m_.p = p;
    }

    int out_size(int in) const { return (in - 1) * m_.s - 2 * m_.p + m_.k + outpad_; }

    void register_params(ParamStoreT<T>& ps, Rng& rng) override {
        TensorT<T> w({m_.cout, m_.patch()});
        fill_normal(w.data, rng, detail::he_std(m_.patch()));
        ps.add(this->name() + ".weight", std::move(w));
        ps.add(this->name() + ".bias", TensorT<T>({cout_}));
    }

    TensorT<T> forward(ParamStoreT<T>& ps, const TensorT<T>& x, Stash<T>* st,
                       Mode) const override {
        this->want_rank(x, 4);
        if (x.dim(1) != cin_)
            this->fail("expected " + std::to_string(cin_) + " channels, got " + x.shape_str());
        const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
        const int Hv = out_size(H), Wv = out_size(W);
        if (m_.out_size(Hv) != H || m_.out_size(Wv) != W)
            this->fail("inconsistent geometry for input " + x.shape_str());
        const int K = m_.patch(), positions = H * W;
        const TensorT<T>& Wt = ps.value(this->name() + ".weight");
        const TensorT<T>& b = ps.value(this->name() + ".bias");
        TensorT<T> y({N, cout_, Hv, Wv});
        TensorT<T> dP({positions, K});
        const std::size_t out_stride = static_cast<std::size_t>(cout_) * Hv * Wv;
        for (int n = 0; n < N; ++n) {
            const T* xn = x.ptr() + static_cast<std::size_t>(n) * cin_ * positions;
            detail::conv_rows_backward_to_patches(xn, positions, Wt.ptr(), m_.cout, K, dP.ptr());
            T* yn = y.ptr() + n * out_stride;
            detail::col2im_add(dP.ptr(), cout_, Hv, Wv, m_, yn);
            for (int c = 0; c < cout_; ++c) {
                T* yc = yn + static_cast<std::size_t>(c) * Hv * Wv;
                const T bc = b.data[static_cast<std::size_t>(c)];
                for (int i = 0; i < Hv * Wv; ++i) yc[i] += bc;
            }
        }
        if (st) {
            st->in = x;
            st->in_shape = x.shape;
        }
        return y;
    }

    TensorT<T> backward(const ParamStoreT<T>& ps, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum* ga) const override {
        const int N = st.in_shape[0], H = st.in_shape[2], W = st.in_shape[3];
        const int Hv = out_size(H), Wv = out_size(W);
        if (dy.rank() != 4 || dy.dim(0) != N || dy.dim(1) != cout_ || dy.dim(2) != Hv ||
            dy.dim(3) != Wv)
            this->fail("gradient shape " + dy.shape_str() + " does not match output");
        const int K = m_.patch(), positions = H * W;
        const TensorT<T>& Wt = ps.value(this->name() + ".weight");
        TensorT<T> dx(st.in_shape);
        TensorT<T> P({positions, K});
        double* dW = ga ? ga->at(ps.index_of(this->name() + ".weight")) : nullptr;
        double* db = ga ? ga->at(ps.index_of(this->name() + ".bias")) : nullptr;
        const std::size_t out_stride = static_cast<std::size_t>(cout_) * Hv * Wv;
        for (int n = 0; n < N; ++n) {
            const T* dyn = dy.ptr() + n * out_stride;
            detail::im2col(dyn, cout_, Hv, Wv, m_, P.ptr());
            detail::conv_rows_forward(P.ptr(), positions, Wt.ptr(), static_cast<const T*>(nullptr),
                                      m_.cout, K, dx.ptr() + static_cast<std::size_t>(n) * cin_ * positions);
            if (ga) {
                detail::conv_rows_weight_grad(P.ptr(), positions,
                                              st.in.ptr() + static_cast<std::size_t>(n) * cin_ * positions,
                                              m_.cout, K, dW, nullptr);
                for (int c = 0; c < cout_; ++c)
                    db[c] += kern::sum(dyn + static_cast<std::size_t>(c) * Hv * Wv,
                                       static_cast<std::size_t>(Hv) * Wv);
            }
        }
        return dx;
    }

  private:
    int cin_, cout_, outpad_;
    detail::ConvGeom m_;
};

template <typename T>
class BatchNorm2dT final : public LayerT<T> {
  public:
    BatchNorm2dT(std::string name, int c, double momentum = 0.9, double eps = 1e-5)
        : LayerT<T>(std::move(name)), c_(c), momentum_(momentum), eps_(eps) {}

    void register_params(ParamStoreT<T>& ps, Rng&) override {
        ps.add(this->name() + ".gamma", TensorT<T>({c_}, T(1)));
        ps.add(this->name() + ".beta", TensorT<T>({c_}));
        ps.add(this->name() + ".running_mean", TensorT<T>({c_}), false);
        ps.add(this->name() + ".running_var", TensorT<T>({c_}, T(1)), false);
    }

    TensorT<T> forward(ParamStoreT<T>& ps, const TensorT<T>& x, Stash<T>* st,
                       Mode mode) const override {
        this->want_rank(x, 4);
        if (x.dim(1) != c_) this->fail("expected " + std::to_string(c_) + " channels, got " + x.shape_str());
        const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
        const std::size_t hw = static_cast<std::size_t>(H) * W;
        const std::size_t cnt = static_cast<std::size_t>(N) * hw;
        const TensorT<T>& gamma = ps.value(this->name() + ".gamma");
        const TensorT<T>& beta = ps.value(this->name() + ".beta");
        TensorT<T> y(x.shape);

        if (mode == Mode::kTrain) {
            TensorT<T> xhat(x.shape);
            TensorT<T> invstd({c_});
            TensorT<T>& rm = ps.value(this->name() + ".running_mean");
            TensorT<T>& rv = ps.value(this->name() + ".running_var");
            for (int c = 0; c < c_; ++c) {
                double s = 0.0, s2 = 0.0;
                for (int n = 0; n < N; ++n) {
                    const T* blk = x.ptr() + (static_cast<std::size_t>(n) * c_ + c) * hw;
                    s += kern::sum(blk, hw);
                    s2 += kern::dot(blk, blk, hw);
                }
                const double mean = s / static_cast<double>(cnt);
                const double var = std::max(0.0, s2 / static_cast<double>(cnt) - mean * mean);
                const double istd = 1.0 / std::sqrt(var + eps_);
                invstd.data[static_cast<std::size_t>(c)] = static_cast<T>(istd);
                const double g = static_cast<double>(gamma.data[static_cast<std::size_t>(c)]);
                const double bt = static_cast<double>(beta.data[static_cast<std::size_t>(c)]);
                for (int n = 0; n < N; ++n) {
                    const std::size_t off = (static_cast<std::size_t>(n) * c_ + c) * hw;
                    for (std::size_t i = 0; i < hw; ++i) {
                        const double xh = (static_cast<double>(x.data[off + i]) - mean) * istd;
                        xhat.data[off + i] = static_cast<T>(xh);
                        y.data[off + i] = static_cast<T>(g * xh + bt);
                    }
                }
                rm.data[static_cast<std::size_t>(c)] = static_cast<T>(
                    momentum_ * static_cast<double>(rm.data[static_cast<std::size_t>(c)]) +
                    (1.0 - momentum_) * mean);
                rv.data[static_cast<std::size_t>(c)] = static_cast<T>(
                    momentum_ * static_cast<double>(rv.data[static_cast<std::size_t>(c)]) +
                    (1.0 - momentum_) * var);
            }
            if (st) {
                st->a = std::move(xhat);
                st->b = std::move(invstd);
                st->in_shape = x.shape;
            }
        } else {
            const TensorT<T>& rm = ps.value(this->name() + ".running_mean");
            const TensorT<T>& rv = ps.value(this->name() + ".running_var");
            for (int c = 0; c < c_; ++c) {
                const double mean = static_cast<double>(rm.data[static_cast<std::size_t>(c)]);
                const double istd = 1.0 / std::sqrt(static_cast<double>(rv.data[static_cast<std::size_t>(c)]) + eps_);
                const double g = static_cast<double>(gamma.data[static_cast<std::size_t>(c)]);
                const double bt = static_cast<double>(beta.data[static_cast<std::size_t>(c)]);
                for (int n = 0; n < N; ++n) {
                    const std::size_t off = (static_cast<std::size_t>(n) * c_ + c) * hw;
                    for (std::size_t i = 0; i < hw; ++i)
                        y.data[off + i] = static_cast<T>(
                            g * ((static_cast<double>(x.data[off + i]) - mean) * istd) + bt);
                }
            }
            if (st) {
                st->in = x;
                st->in_shape = x.shape;
            }
        }
        return y;
    }

    TensorT<T> backward(const ParamStoreT<T>& ps, const Stash<T>& st, const TensorT<T>& dy,
                        Mode mode, GradAccum* ga) const override {
        if (dy.shape != st.in_shape)
            this->fail("gradient shape " + dy.shape_str() + " does not match output");
        const int N = st.in_shape[0], H = st.in_shape[2], W = st.in_shape[3];
        const std::size_t hw = static_cast<std::size_t>(H) * W;
        const std::size_t cnt = static_cast<std::size_t>(N) * hw;
        const TensorT<T>& gamma = ps.value(this->name() + ".gamma");
        TensorT<T> dx(st.in_shape);
        double* dg = ga ? ga->at(ps.index_of(this->name() + ".gamma")) : nullptr;
        double* db = ga ? ga->at(ps.index_of(this->name() + ".beta")) : nullptr;

        if (mode == Mode::kTrain) {
            for (int c = 0; c < c_; ++c) {
                const double g = static_cast<double>(gamma.data[static_cast<std::size_t>(c)]);
                const double istd = static_cast<double>(st.b.data[static_cast<std::size_t>(c)]);
                double t1 = 0.0, t2 = 0.0;  // sum dy, sum dy*xhat
                for (int n = 0; n < N; ++n) {
                    const std::size_t off = (static_cast<std::size_t>(n) * c_ + c) * hw;
                    t1 += kern::sum(dy.ptr() + off, hw);
                    t2 += kern::dot(dy.ptr() + off, st.a.ptr() + off, hw);
                }
                const double m1 = g * t1 / static_cast<double>(cnt);
                const double m2 = g * t2 / static_cast<double>(cnt);
                for (int n = 0; n < N; ++n) {
                    const std::size_t off = (static_cast<std::size_t>(n) * c_ + c) * hw;
                    for (std::size_t i = 0; i < hw; ++i)
                        dx.data[off + i] = static_cast<T>(
                            istd * (g * static_cast<double>(dy.data[off + i]) - m1 -
                                    static_cast<double>(st.a.data[off + i]) * m2));
                }
                if (ga) {
                    dg[c] += t2;
                    db[c] += t1;
                }
            }
        } else {
            const TensorT<T>& rm = ps.value(this->name() + ".running_mean");
            const TensorT<T>& rv = ps.value(this->name() + ".running_var");
            for (int c = 0; c < c_; ++c) {
                const double mean = static_cast<double>(rm.data[static_cast<std::size_t>(c)]);
                const double istd = 1.0 / std::sqrt(static_cast<double>(rv.data[static_cast<std::size_t>(c)]) + eps_);
                const double g = static_cast<double>(gamma.data[static_cast<std::size_t>(c)]);
                const double slope = g * istd;
                for (int n = 0; n < N; ++n) {
                    const std::size_t off = (static_cast<std::size_t>(n) * c_ + c) * hw;
                    for (std::size_t i = 0; i < hw; ++i)
                        dx.data[off + i] = static_cast<T>(slope * static_cast<double>(dy.data[off + i]));
                    if (ga) {
                        db[c] += kern::sum(dy.ptr() + off, hw);
                        for (std::size_t i = 0; i < hw; ++i)
                            dg[c] += static_cast<double>(dy.data[off + i]) *
                                     ((static_cast<double>(st.in.data[off + i]) - mean) * istd);
                    }
                }
            }
        }
        return dx;
    }

  private:
    int c_;
    double momentum_, eps_;
};

template <typename T>
class ReluT final : public LayerT<T> {
  public:
    explicit ReluT(std::string name) : LayerT<T>(std::move(name)) {}

    TensorT<T> forward(ParamStoreT<T>&, const TensorT<T>& x, Stash<T>* st, Mode) const override {
        TensorT<T> y(x.shape);
        for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
        if (st) st->in = x;
        return y;
    }

    TensorT<T> backward(const ParamStoreT<T>&, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum*) const override {
        if (!dy.same_shape(st.in)) this->fail("gradient shape " + dy.shape_str() + " does not match");
        TensorT<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.data.size(); ++i)
            dx.data[i] = st.in.data[i] > T(0) ? dy.data[i] : T(0);
        return dx;
    }
};

// Channel-wise for rank-4 inputs, feature-wise for rank-2.
template <typename T>
class PReluT final : public LayerT<T> {
  public:
    PReluT(std::string name, int c) : LayerT<T>(std::move(name)), c_(c) {}

    void register_params(ParamStoreT<T>& ps, Rng&) override {
        ps.add(this->name() + ".alpha", TensorT<T>({c_}, T(0.25)));
    }

    TensorT<T> forward(ParamStoreT<T>& ps, const TensorT<T>& x, Stash<T>* st, Mode) const override {
        if (x.rank() != 4 && x.rank() != 2) this->fail("expected rank 2 or 4, got " + x.shape_str());
        if (x.dim(1) != c_) this->fail("expected " + std::to_string(c_) + " channels, got " + x.shape_str());
        const TensorT<T>& a = ps.value(this->name() + ".alpha");
        const std::size_t hw = x.rank() == 4 ? static_cast<std::size_t>(x.dim(2)) * x.dim(3) : 1;
        TensorT<T> y(x.shape);
        const int N = x.dim(0);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < c_; ++c) {
                const T ac = a.data[static_cast<std::size_t>(c)];
                const std::size_t off = (static_cast<std::size_t>(n) * c_ + c) * hw;
                for (std::size_t i = 0; i < hw; ++i) {
                    const T v = x.data[off + i];
                    y.data[off + i] = v > T(0) ? v : ac * v;
                }
            }
        if (st) st->in = x;
        return y;
    }

    TensorT<T> backward(const ParamStoreT<T>& ps, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum* ga) const override {
        if (!dy.same_shape(st.in)) this->fail("gradient shape " + dy.shape_str() + " does not match");
        const TensorT<T>& a = ps.value(this->name() + ".alpha");
        const std::size_t hw = st.in.rank() == 4 ? static_cast<std::size_t>(st.in.dim(2)) * st.in.dim(3) : 1;
        const int N = st.in.dim(0);
        TensorT<T> dx(dy.shape);
        double* da = ga ? ga->at(ps.index_of(this->name() + ".alpha")) : nullptr;
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < c_; ++c) {
                const T ac = a.data[static_cast<std::size_t>(c)];
                const std::size_t off = (static_cast<std::size_t>(n) * c_ + c) * hw;
                double acc = 0.0;
                for (std::size_t i = 0; i < hw; ++i) {
                    const T v = st.in.data[off + i];
                    if (v > T(0)) {
                        dx.data[off + i] = dy.data[off + i];
                    } else {
                        dx.data[off + i] = ac * dy.data[off + i];
                        acc += static_cast<double>(dy.data[off + i]) * static_cast<double>(v);
                    }
                }
                if (ga) da[c] += acc;
            }
        return dx;
    }

  private:
    int c_;
};

template <typename T>
class SigmoidT final : public LayerT<T> {
  public:
    explicit SigmoidT(std::string name) : LayerT<T>(std::move(name)) {}

    TensorT<T> forward(ParamStoreT<T>&, const TensorT<T>& x, Stash<T>* st, Mode) const override {
        TensorT<T> y(x.shape);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            y.data[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x.data[i]))));
        if (st) st->a = y;
        return y;
    }

    TensorT<T> backward(const ParamStoreT<T>&, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum*) const override {
        if (!dy.same_shape(st.a)) this->fail("gradient shape " + dy.shape_str() + " does not match");
        TensorT<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.data.size(); ++i) {
            const double s = static_cast<double>(st.a.data[i]);
            dx.data[i] = static_cast<T>(static_cast<double>(dy.data[i]) * s * (1.0 - s));
        }
        return dx;
    }
};

template <typename T>
class FlattenT final : public LayerT<T> {
  public:
    explicit FlattenT(std::string name) : LayerT<T>(std::move(name)) {}

    TensorT<T> forward(ParamStoreT<T>&, const TensorT<T>& x, Stash<T>* st, Mode) const override {
        this->want_rank(x, 4);
        if (st) st->in_shape = x.shape;
        return x.reshaped({x.dim(0), x.dim(1) * x.dim(2) * x.dim(3)});
    }

    TensorT<T> backward(const ParamStoreT<T>&, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum*) const override {
        return dy.reshaped(st.in_shape);
    }
};

// [N, C*H*W] -> [N, C, H, W]
template <typename T>
class ReshapeT final : public LayerT<T> {
  public:
    ReshapeT(std::string name, int c, int h, int w)
        : LayerT<T>(std::move(name)), c_(c), h_(h), w_(w) {}

    TensorT<T> forward(ParamStoreT<T>&, const TensorT<T>& x, Stash<T>* st, Mode) const override {
        this->want_rank(x, 2);
        if (x.dim(1) != c_ * h_ * w_)
            this->fail("expected width " + std::to_string(c_ * h_ * w_) + ", got " + x.shape_str());
        if (st) st->in_shape = x.shape;
        return x.reshaped({x.dim(0), c_, h_, w_});
    }

    TensorT<T> backward(const ParamStoreT<T>&, const Stash<T>& st, const TensorT<T>& dy, Mode,
                        GradAccum*) const override {
        return dy.reshaped(st.in_shape);
    }

  private:
    int c_, h_, w_;
};

template <typename T>
struct SequentialT {
    std::vector<std::unique_ptr<LayerT<T>>> layers;

    SequentialT() = default;
    SequentialT(SequentialT&&) noexcept = default;
    SequentialT& operator=(SequentialT&&) noexcept = default;

    template <typename L, typename... Args>
    void add(Args&&... args) {
        layers.push_back(std::make_unique<L>(std::forward<Args>(args)...));
    }

    void register_params(ParamStoreT<T>& ps, Rng& rng) {
        for (auto& l : layers) l->register_params(ps, rng);
    }

    TensorT<T> forward(ParamStoreT<T>& ps, TensorT<T> x, Tape<T>* tape, Mode mode) const {
        if (tape) tape->assign(layers.size(), Stash<T>{});
        for (std::size_t i = 0; i < layers.size(); ++i)
            x = layers[i]->forward(ps, x, tape ? &(*tape)[i] : nullptr, mode);
        return x;
    }

    TensorT<T> backward(const ParamStoreT<T>& ps, const Tape<T>& tape, TensorT<T> dy, Mode mode,
                        GradAccum* ga) const {
        if (tape.size() != layers.size()) throw std::runtime_error("net: tape does not match layers");
        for (std::size_t i = layers.size(); i-- > 0;)
            dy = layers[i]->backward(ps, tape[i], dy, mode, ga);
        return dy;
    }
};

using Sequential = SequentialT<float>;
using Dense = DenseT<float>;
using Conv2d = Conv2dT<float>;
using ConvT2d = ConvT2dT<float>;
using BatchNorm2d = BatchNorm2dT<float>;
using Relu = ReluT<float>;
using PRelu = PReluT<float>;
using Sigmoid = SigmoidT<float>;
using Flatten = FlattenT<float>;
using Reshape = ReshapeT<float>;

}  // namespace clarity
