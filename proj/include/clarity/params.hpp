#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "clarity/kernels.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

template <typename T>
struct ParamEntry {
    std::string name;
    TensorT<T> value;
    TensorT<T> grad;
    bool trainable = true;
};

// Named parameter registry. Entries keep insertion order, which fixes both the
// serialization layout and the optimizer update order.
template <typename T>
class ParamStoreT {
  public:
    int add(const std::string& name, TensorT<T> value, bool trainable = true) {
        if (index_.count(name)) throw std::runtime_error("params: duplicate name '" + name + "'");
        ParamEntry<T> e;
        e.name = name;
        e.grad = TensorT<T>(value.shape);
        e.value = std::move(value);
        e.trainable = trainable;
        entries_.push_back(std::move(e));
        int idx = static_cast<int>(entries_.size()) - 1;
        index_.emplace(name, idx);
        return idx;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    int index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::runtime_error("params: unknown name '" + name + "'");
        return it->second;
    }

    ParamEntry<T>& entry(int idx) { return entries_.at(static_cast<std::size_t>(idx)); }
    const ParamEntry<T>& entry(int idx) const { return entries_.at(static_cast<std::size_t>(idx)); }

    TensorT<T>& value(const std::string& name) { return entry(index_of(name)).value; }
    const TensorT<T>& value(const std::string& name) const { return entry(index_of(name)).value; }
    TensorT<T>& grad(const std::string& name) { return entry(index_of(name)).grad; }

    std::size_t size() const { return entries_.size(); }
    std::vector<ParamEntry<T>>& entries() { return entries_; }
    const std::vector<ParamEntry<T>>& entries() const { return entries_; }

    void zero_grads() {
        for (auto& e : entries_) e.grad.fill(T(0));
    }

    std::int64_t trainable_count() const {
        std::int64_t n = 0;
        for (const auto& e : entries_)
            if (e.trainable) n += e.value.numel();
        return n;
    }

  private:
    std::vector<ParamEntry<T>> entries_;
    std::unordered_map<std::string, int> index_;
};

using ParamStore = ParamStoreT<float>;

// Gradient accumulator: per-parameter double buffers that collect contributions
// across spatial positions and batch elements, flushed to the store's grads in
// one rounding at the end of a backward pass.
class GradAccum {
  public:
    template <typename T>
    void init(const ParamStoreT<T>& ps) {
        buf_.assign(ps.size(), {});
        for (std::size_t i = 0; i < ps.size(); ++i)
            buf_[i].assign(static_cast<std::size_t>(ps.entry(static_cast<int>(i)).value.numel()), 0.0);
    }

    double* at(int idx) { return buf_.at(static_cast<std::size_t>(idx)).data(); }

    void add(int idx, const float* g, std::size_t n, double scale = 1.0) {
        kern::axpy_f32_f64(at(idx), g, scale, n);
    }
    void add(int idx, const double* g, std::size_t n, double scale = 1.0) {
        kern::axpy(at(idx), g, scale, n);
    }

    template <typename T>
    void flush(ParamStoreT<T>& ps) const {
        if (buf_.size() != ps.size()) throw std::runtime_error("grad accum: store size mismatch");
        for (std::size_t i = 0; i < buf_.size(); ++i) {
            auto& g = ps.entry(static_cast<int>(i)).grad;
            if (static_cast<std::size_t>(g.numel()) != buf_[i].size())
                throw std::runtime_error("grad accum: shape mismatch for '" +
                                         ps.entry(static_cast<int>(i)).name + "'");
            for (std::size_t k = 0; k < buf_[i].size(); ++k) g.data[k] = static_cast<T>(buf_[i][k]);
        }
    }

  private:
    std::vector<std::vector<double>> buf_;
};

// Adam with bias correction. First and second moments start at zero; the step
// counter advances by exactly one per call.
template <typename T>
struct AdamStateT {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<TensorT<T>> m, v;

    template <typename PS>
    void bind(const PS& ps) {
        m.clear();
        v.clear();
        for (const auto& e : ps.entries()) {
            m.emplace_back(e.value.shape);
            v.emplace_back(e.value.shape);
        }
    }
};

using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(ParamStoreT<T>& ps, AdamStateT<T>& st) {
    if (st.m.size() != ps.size()) throw std::runtime_error("adam: state not bound to this store");
    st.t += 1;
    double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto& e = ps.entry(static_cast<int>(i));
        if (!e.trainable) continue;
        if (!st.m[i].same_shape(e.value)) throw std::runtime_error("adam: shape mismatch for '" + e.name + "'");
        T* w = e.value.ptr();
        const T* g = e.grad.ptr();
        T* m = st.m[i].ptr();
        T* v = st.v[i].ptr();
        std::int64_t n = e.value.numel();
        for (std::int64_t k = 0; k < n; ++k) {
            double gk = static_cast<double>(g[k]);
            double mk = st.beta1 * static_cast<double>(m[k]) + (1.0 - st.beta1) * gk;
            double vk = st.beta2 * static_cast<double>(v[k]) + (1.0 - st.beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            double mhat = mk / c1;
            double vhat = vk / c2;
            w[k] = static_cast<T>(static_cast<double>(w[k]) - st.lr * mhat / (std::sqrt(vhat) + st.eps));
        }
    }
}

// Adam over a bare vector; used for iterates that are not model parameters.
template <typename T>
struct AdamVecT {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<T> m, v;

    void step(std::vector<T>& w, const std::vector<T>& g) {
        if (m.empty()) {
            m.assign(w.size(), T(0));
            v.assign(w.size(), T(0));
        }
        if (g.size() != w.size() || m.size() != w.size())
            throw std::runtime_error("adam: gradient/iterate length mismatch");
        t += 1;
        double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t k = 0; k < w.size(); ++k) {
            double gk = static_cast<double>(g[k]);
            double mk = beta1 * static_cast<double>(m[k]) + (1.0 - beta1) * gk;
            double vk = beta2 * static_cast<double>(v[k]) + (1.0 - beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            w[k] = static_cast<T>(static_cast<double>(w[k]) - lr * (mk / c1) / (std::sqrt(vk / c2) + eps));
        }
    }
};

using AdamVec = AdamVecT<float>;

}  // namespace clarity
