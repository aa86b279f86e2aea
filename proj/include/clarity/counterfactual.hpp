#pragma once

#include <string>
#include <vector>

#include "clarity/classifiers.hpp"

namespace clarity {

enum class CfMethod { kGradCe, kSchut, kRevise, kReviseEImage, kReviseELatent, kLatentSingle, kClarity };
enum class Norm { kL1, kL2 };

inline std::string method_name(CfMethod m) {
    switch (m) {
        case CfMethod::kGradCe: return "grad-ce";
        case CfMethod::kSchut: return "schut";
        case CfMethod::kRevise: return "revise";
        case CfMethod::kReviseEImage: return "revise-e-image";
        case CfMethod::kReviseELatent: return "revise-e-latent";
        case CfMethod::kLatentSingle: return "latent-single";
        case CfMethod::kClarity: return "clarity";
    }
    throw std::runtime_error("bad method enum");
}

inline CfMethod method_from(const std::string& s) {
    for (CfMethod m : {CfMethod::kGradCe, CfMethod::kSchut, CfMethod::kRevise, CfMethod::kReviseEImage,
                       CfMethod::kReviseELatent, CfMethod::kLatentSingle, CfMethod::kClarity})
        if (method_name(m) == s) return m;
    throw ConfigError("unknown counterfactual method '" + s +
                      "' (grad-ce, schut, revise, revise-e-image, revise-e-latent, latent-single, clarity)");
}

inline std::string norm_name(Norm n) { return n == Norm::kL1 ? "l1" : "l2"; }

inline Norm norm_from(const std::string& s) {
    if (s == "l1" || s == "L1") return Norm::kL1;
    if (s == "l2" || s == "L2") return Norm::kL2;
    throw ConfigError("unknown norm '" + s + "' (l1, l2)");
}

struct CfConfig {
    CfMethod method = CfMethod::kClarity;
    double lambda = 0.001;
    Norm norm = Norm::kL1;
    double gamma = 0.99;
    int max_steps = 500;  // N: maximum optimizer updates
    double delta = 0.2;   // Schut pixel step
    double lr_latent = 0.1;
    double lr_image = 0.01;
    std::uint64_t seed = 0;
    bool record_latent = false;      // z' snapshot per trace row
    bool record_trajectory = false;  // decoded/current image per trace row

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0))
            throw ConfigError("cf: gamma must be in (0,1), got " + std::to_string(gamma));
        if (max_steps < 1) throw ConfigError("cf: max steps must be >= 1");
        if (lambda < 0.0) throw ConfigError("cf: lambda must be >= 0");
        if (method == CfMethod::kSchut && !(delta > 0.0))
            throw ConfigError("cf: schut requires delta > 0");
    }
};

struct CfTraceStep {
    int step = 0;
    double mean_target_prob = 0.0;
    double loss = 0.0;
    double distance = 0.0;
    double epistemic = 0.0;
    double aleatoric = 0.0;
    std::vector<float> latent;  // optional snapshot
};

struct CfResult {
    Tensor x_prime;  // [28,28], in [0,1]
    Tensor delta;    // x_prime - x, exact: x + delta == x_prime elementwise
    bool converged = false;
    bool aborted = false;
    std::string abort_reason;
    int steps_used = 0;
    double final_target_prob = 0.0;
    std::vector<CfTraceStep> trace;
    std::vector<Tensor> trajectory;  // optional [28,28] images, one per trace row
};

template <typename T>
struct ObjectiveOut {
    double loss = 0.0;
    double ce = 0.0;
    double distance = 0.0;
    TensorT<T> grad;  // same shape as the iterate
};

// d(a,b) under the chosen norm; lambda * subgradient added into grad_acc.
// Zero differences contribute zero subgradient in both norms.
template <typename T>
double distance_and_grad(const T* a, const T* b, std::size_t n, Norm norm, double lambda, T* grad_acc) {
    if (norm == Norm::kL1) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            d += std::abs(diff);
            if (grad_acc && lambda != 0.0 && diff != 0.0)
                grad_acc[i] = static_cast<T>(static_cast<double>(grad_acc[i]) + (diff > 0 ? lambda : -lambda));
        }
        return d;
    }
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s2 += diff * diff;
    }
    const double d = std::sqrt(s2);
    if (grad_acc && lambda != 0.0 && d > 0.0)
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            grad_acc[i] = static_cast<T>(static_cast<double>(grad_acc[i]) + lambda * diff / d);
        }
    return d;
}

// single-example cross-entropy toward y and its input gradient, inference mode
template <typename T>
ObjectiveOut<T> ce_and_grad(ClassifierT<T>& clf, const TensorT<T>& input_batch, int y) {
    EvalResult<T> r = eval_backward(clf.net, clf.params, input_batch, LossSpec<T>(SoftmaxCE{{y}}),
                                    Mode::kInfer, false);
    ObjectiveOut<T> out;
    out.ce = r.loss;
    out.loss = r.loss;
    out.grad = std::move(r.input_grad);
    return out;
}

// ensemble-mean cross-entropy; gradients averaged in doubles
template <typename T>
ObjectiveOut<T> ensemble_ce_and_grad(EnsembleT<T>& ens, const TensorT<T>& input_batch, int y) {
    if (ens.members.empty()) throw std::runtime_error("cf: empty ensemble");
    TensorD acc(input_batch.shape);
    double loss = 0.0;
    for (auto& m : ens.members) {
        ObjectiveOut<T> o = ce_and_grad(m, input_batch, y);
        loss += o.ce;
        for (std::size_t i = 0; i < acc.data.size(); ++i)
            acc.data[i] += static_cast<double>(o.grad.data[i]);
    }
    const double M = static_cast<double>(ens.members.size());
    ObjectiveOut<T> out;
    out.ce = loss / M;
    out.loss = out.ce;
    out.grad = TensorT<T>(input_batch.shape);
    for (std::size_t i = 0; i < acc.data.size(); ++i) out.grad.data[i] = static_cast<T>(acc.data[i] / M);
    return out;
}

template <typename T>
TensorT<T> batched_image(const TensorT<T>& image) {
    if (image.rank() != 2) throw std::runtime_error("cf: expected a rank-2 image");
    TensorT<T> b({1, 1, image.dim(0), image.dim(1)});
    b.data = image.data;
    return b;
}

template <typename T>
TensorT<T> batched_latent(const TensorT<T>& z) {
    if (z.rank() != 1) throw std::runtime_error("cf: expected a rank-1 latent vector");
    TensorT<T> b({1, z.dim(0)});
    b.data = z.data;
    return b;
}

template <typename T>
ObjectiveOut<T> objective_grad_ce(ClassifierT<T>& clf, const TensorT<T>& X, const TensorT<T>& Xp,
                                  int y_prime, double lambda, Norm norm) {
    if (clf.space != Space::kImage) throw std::runtime_error("grad-ce needs an image-space classifier");
    if (!X.same_shape(Xp)) throw std::runtime_error("grad-ce: X and X' shapes differ");
    ObjectiveOut<T> out = ce_and_grad(clf, batched_image(Xp), y_prime);
    out.grad = out.grad.reshaped(Xp.shape);
    out.distance = distance_and_grad(Xp.ptr(), X.ptr(), Xp.data.size(), norm, lambda, out.grad.ptr());
    out.loss = out.ce + lambda * out.distance;
    return out;
}

template <typename T>
ObjectiveOut<T> objective_schut(EnsembleT<T>& ens, const TensorT<T>& Xp, int y_prime) {
    if (ens.space != Space::kImage) throw std::runtime_error("schut needs an image-space ensemble");
    ObjectiveOut<T> out = ensemble_ce_and_grad(ens, batched_image(Xp), y_prime);
    out.grad = out.grad.reshaped(Xp.shape);
    return out;
}

template <typename T>
ObjectiveOut<T> objective_revise(ClassifierT<T>& clf, VaeT<T>& vae, const TensorT<T>& z,
                                 const TensorT<T>& zp, const TensorT<T>& X, int y_prime, double lambda,
                                 Norm norm) {
    (void)z;  // REVISE penalizes in image space; z is carried for signature symmetry
    if (clf.space != Space::kImage) throw std::runtime_error("revise needs an image-space classifier");
    DecodeTapeT<T> dt = decode_with_tape(vae, batched_latent(zp));
    ObjectiveOut<T> ce = ce_and_grad(clf, dt.image, y_prime);
    ObjectiveOut<T> out;
    out.ce = ce.ce;
    out.distance = distance_and_grad(dt.image.ptr(), X.ptr(), dt.image.data.size(), norm, lambda,
                                     ce.grad.ptr());
    out.loss = out.ce + lambda * out.distance;
    out.grad = decode_backward(vae, dt, ce.grad).reshaped(zp.shape);
    return out;
}

template <typename T>
ObjectiveOut<T> objective_revise_e(EnsembleT<T>& ens, VaeT<T>& vae, const TensorT<T>& z,
                                   const TensorT<T>& zp, const TensorT<T>& X, int y_prime, double lambda,
                                   Norm norm, Space penalty_space) {
    if (ens.space != Space::kImage) throw std::runtime_error("revise-e needs an image-space ensemble");
    DecodeTapeT<T> dt = decode_with_tape(vae, batched_latent(zp));
    ObjectiveOut<T> ce = ensemble_ce_and_grad(ens, dt.image, y_prime);
    ObjectiveOut<T> out;
    out.ce = ce.ce;
    if (penalty_space == Space::kImage) {
        out.distance = distance_and_grad(dt.image.ptr(), X.ptr(), dt.image.data.size(), norm, lambda,
                                         ce.grad.ptr());
        out.grad = decode_backward(vae, dt, ce.grad).reshaped(zp.shape);
    } else {
        out.grad = decode_backward(vae, dt, ce.grad).reshaped(zp.shape);
        out.distance = distance_and_grad(zp.ptr(), z.ptr(), zp.data.size(), norm, lambda, out.grad.ptr());
    }
    out.loss = out.ce + lambda * out.distance;
    return out;
}

template <typename T>
ObjectiveOut<T> objective_latent_single(ClassifierT<T>& clf, const TensorT<T>& z, const TensorT<T>& zp,
                                        int y_prime, double lambda, Norm norm) {
    if (clf.space != Space::kLatent) throw std::runtime_error("latent-single needs a latent classifier");
    ObjectiveOut<T> out = ce_and_grad(clf, batched_latent(zp), y_prime);
    out.grad = out.grad.reshaped(zp.shape);
    out.distance = distance_and_grad(zp.ptr(), z.ptr(), zp.data.size(), norm, lambda, out.grad.ptr());
    out.loss = out.ce + lambda * out.distance;
    return out;
}

template <typename T>
ObjectiveOut<T> objective_clarity(EnsembleT<T>& ens, const TensorT<T>& z, const TensorT<T>& zp,
                                  int y_prime, double lambda, Norm norm) {
    if (ens.space != Space::kLatent) throw std::runtime_error("clarity needs a latent-space ensemble");
    ObjectiveOut<T> out = ensemble_ce_and_grad(ens, batched_latent(zp), y_prime);
    out.grad = out.grad.reshaped(zp.shape);
    out.distance = distance_and_grad(zp.ptr(), z.ptr(), zp.data.size(), norm, lambda, out.grad.ptr());
    out.loss = out.ce + lambda * out.distance;
    return out;
}

// one JSMA-style move: the admissible pixel with the largest |gradient| steps
// by delta against the gradient; ties break toward the lowest index.
// Returns the changed pixel's flat index.
template <typename T>
int schut_step(TensorT<T>& Xp, const TensorT<T>& grad, double delta) {
    if (!(delta > 0)) throw std::runtime_error("schut: delta must be > 0");
    if (!Xp.same_shape(grad)) throw std::runtime_error("schut: gradient shape mismatch");
    int best = -1;
    double best_mag = 0.0;
    for (std::size_t i = 0; i < Xp.data.size(); ++i) {
        const double g = static_cast<double>(grad.data[i]);
        const double x = static_cast<double>(Xp.data[i]);
        const bool admissible = (g > 0.0 && x > 0.0) || (g < 0.0 && x < 1.0);
        if (!admissible) continue;
        const double mag = std::abs(g);
        if (mag > best_mag) {
            best_mag = mag;
            best = static_cast<int>(i);
        }
    }
    if (best < 0) throw std::runtime_error("schut: no admissible move");
    const double g = static_cast<double>(grad.data[static_cast<std::size_t>(best)]);
    const double moved = static_cast<double>(Xp.data[static_cast<std::size_t>(best)]) +
                         (g > 0 ? -delta : delta);
    Xp.data[static_cast<std::size_t>(best)] = static_cast<T>(std::clamp(moved, 0.0, 1.0));
    return best;
}

struct CfModels {
    Vae* vae = nullptr;
    Classifier* image_clf = nullptr;
    Ensemble* image_ens = nullptr;
    Classifier* latent_clf = nullptr;
    Ensemble* latent_ens = nullptr;
};

CfResult generate(const Tensor& X, int y_prime, const CfConfig& cfg, const CfModels& models);

}  // namespace clarity
