#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "clarity/layers.hpp"

namespace clarity {

// numerically stable log(1 + e^x)
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// softmax with max subtraction, computed in double
inline std::vector<double> softmax_f64(const double* logits, int k) {
    double mx = logits[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
    std::vector<double> p(static_cast<std::size_t>(k));
    double z = 0.0;
    for (int i = 0; i < k; ++i) {
        p[static_cast<std::size_t>(i)] = std::exp(logits[i] - mx);
        z += p[static_cast<std::size_t>(i)];
    }
    for (auto& v : p) v /= z;
    return p;
}

template <typename T>
std::vector<double> softmax(const TensorT<T>& logits) {
    if (logits.rank() != 1) throw std::runtime_error("softmax: expected rank-1 logits, got " + logits.shape_str());
    std::vector<double> l(logits.data.begin(), logits.data.end());
    return softmax_f64(l.data(), static_cast<int>(l.size()));
}

// cross-entropy in nats; also returns dloss/dlogits = softmax - onehot
inline double softmax_ce_f64(const double* logits, int k, int label, double* dlogits) {
    if (label < 0 || label >= k)
        throw std::runtime_error("cross-entropy: label " + std::to_string(label) + " out of range for " +
                                 std::to_string(k) + " classes");
    auto p = softmax_f64(logits, k);
    if (dlogits)
        for (int i = 0; i < k; ++i) dlogits[i] = p[static_cast<std::size_t>(i)] - (i == label ? 1.0 : 0.0);
    return -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
}

template <typename T>
double softmax_cross_entropy(const TensorT<T>& logits, int label) {
    if (logits.rank() != 1)
        throw std::runtime_error("cross-entropy: expected rank-1 logits, got " + logits.shape_str());
    std::vector<double> l(logits.data.begin(), logits.data.end());
    return softmax_ce_f64(l.data(), static_cast<int>(l.size()), label, nullptr);
}

// Loss specifications understood by eval_backward. All reduce to a scalar.
struct SumOutputs {};
struct HalfSquaredNorm {};
struct SoftmaxCE {
    std::vector<int> labels;  // one per batch row; loss is the batch mean
};
template <typename T>
struct BceLogits {
    const TensorT<T>* target;  // same shape as the output; sum over elements, mean over batch
};

template <typename T>
using LossSpec = std::variant<SumOutputs, HalfSquaredNorm, SoftmaxCE, BceLogits<T>>;

template <typename T>
struct LossOut {
    double value = 0.0;
    TensorT<T> dy;
};

template <typename T>
LossOut<T> apply_loss(const TensorT<T>& y, const LossSpec<T>& spec) {
    LossOut<T> out;
    out.dy = TensorT<T>(y.shape);
    if (std::holds_alternative<SumOutputs>(spec)) {
        out.value = kern::sum(y.ptr(), y.data.size());
        out.dy.fill(T(1));
    } else if (std::holds_alternative<HalfSquaredNorm>(spec)) {
        out.value = 0.5 * kern::dot(y.ptr(), y.ptr(), y.data.size());
        out.dy = y;
    } else if (const auto* ce = std::get_if<SoftmaxCE>(&spec)) {
        if (y.rank() != 2) throw std::runtime_error("cross-entropy loss: expected rank-2 logits, got " + y.shape_str());
        const int N = y.dim(0), K = y.dim(1);
        if (static_cast<int>(ce->labels.size()) != N)
            throw std::runtime_error("cross-entropy loss: " + std::to_string(ce->labels.size()) +
                                     " labels for batch of " + std::to_string(N));
        std::vector<double> row(static_cast<std::size_t>(K)), drow(static_cast<std::size_t>(K));
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
            for (int i = 0; i < K; ++i) row[static_cast<std::size_t>(i)] = y.data[static_cast<std::size_t>(n) * K + i];
            acc += softmax_ce_f64(row.data(), K, ce->labels[static_cast<std::size_t>(n)], drow.data());
            for (int i = 0; i < K; ++i)
                out.dy.data[static_cast<std::size_t>(n) * K + i] = static_cast<T>(drow[static_cast<std::size_t>(i)] / N);
        }
        out.value = acc / N;
    } else {
        const auto& bce = std::get<BceLogits<T>>(spec);
        if (!bce.target || !bce.target->same_shape(y))
            throw std::runtime_error("bce loss: target shape does not match output " + y.shape_str());
        const int N = y.dim(0);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const double l = static_cast<double>(y.data[i]);
            const double t = static_cast<double>(bce.target->data[i]);
            acc += (1.0 - t) * l + softplus(-l);
            out.dy.data[i] = static_cast<T>((1.0 / (1.0 + std::exp(-l)) - t) / N);
        }
        out.value = acc / N;
    }
    if (!std::isfinite(out.value)) throw std::runtime_error("loss: non-finite value");
    return out;
}

template <typename T>
struct EvalResult {
    double loss = 0.0;
    TensorT<T> input_grad;
};

template <typename T>
TensorT<T> eval_forward(const SequentialT<T>& net, ParamStoreT<T>& ps, TensorT<T> x,
                        Mode mode = Mode::kInfer) {
    return net.forward(ps, std::move(x), nullptr, mode);
}

// Forward with tape, scalar loss, full backward. Parameter gradients in `ps`
// are replaced (not added to) when `want_param_grads` is set.
template <typename T>
EvalResult<T> eval_backward(const SequentialT<T>& net, ParamStoreT<T>& ps, TensorT<T> x,
                            const LossSpec<T>& spec, Mode mode = Mode::kTrain,
                            bool want_param_grads = true) {
    Tape<T> tape;
    TensorT<T> y = net.forward(ps, std::move(x), &tape, mode);
    LossOut<T> lo = apply_loss(y, spec);
    GradAccum ga;
    if (want_param_grads) ga.init(ps);
    EvalResult<T> r;
    r.loss = lo.value;
    r.input_grad = net.backward(ps, tape, std::move(lo.dy), mode, want_param_grads ? &ga : nullptr);
    if (want_param_grads) ga.flush(ps);
    return r;
}

}  // namespace clarity
