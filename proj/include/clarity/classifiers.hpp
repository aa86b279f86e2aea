#pragma once

#include <string>
#include <vector>

#include "clarity/losses.hpp"
#include "clarity/vae.hpp"

namespace clarity {

enum class Space { kImage, kLatent };

inline std::string space_name(Space s) { return s == Space::kImage ? "image" : "latent"; }

inline Space space_from(const std::string& s) {
    if (s == "image") return Space::kImage;
    if (s == "latent") return Space::kLatent;
    throw std::runtime_error("unknown input space '" + s + "'");
}

constexpr int kClassCount = 10;

template <typename T>
struct ClassifierT {
    Space space = Space::kImage;
    int d = 0;  // latent input width; 0 in image space
    VaeArch arch;
    std::uint64_t seed = 0;
    bool trained = false;
    SequentialT<T> net;
    ParamStoreT<T> params;

    std::string arch_string() const {
        if (space == Space::kImage)
            return "imgclf:conv" + std::to_string(arch.c1) + "-" + std::to_string(arch.c2) + "-" +
                   std::to_string(arch.c3) + "k3s2p1,bn,prelu|dense16-16-16-10|hw" +
                   std::to_string(arch.input_hw);
        return "latclf:dense" + std::to_string(d) + "-16-16-10";
    }
    std::string fingerprint() const { return hex16(fnv1a(arch_string())); }
};
using Classifier = ClassifierT<float>;

template <typename T>
struct EnsembleT {
    Space space = Space::kImage;
    std::vector<ClassifierT<T>> members;
    std::vector<T> eps_latent;  // per-dimension crafting radius used in training

    int size() const { return static_cast<int>(members.size()); }
};
using Ensemble = EnsembleT<float>;

struct UncertaintyTriple {
    double predictive = 0.0;
    double aleatoric = 0.0;
    double epistemic = 0.0;
};

inline double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

// H(mean) = mean entropy + mutual information; everything in doubles
inline UncertaintyTriple decompose_probs(const std::vector<std::vector<double>>& member_probs) {
    if (member_probs.empty()) throw std::runtime_error("decompose: no members");
    const std::size_t k = member_probs[0].size();
    std::vector<double> mean(k, 0.0);
    double mean_h = 0.0;
    for (const auto& p : member_probs) {
        if (p.size() != k) throw std::runtime_error("decompose: member distributions differ in length");
        for (std::size_t i = 0; i < k; ++i) mean[i] += p[i];
        mean_h += entropy(p);
    }
    const double m = static_cast<double>(member_probs.size());
    for (auto& v : mean) v /= m;
    UncertaintyTriple u;
    u.predictive = entropy(mean);
    u.aleatoric = mean_h / m;
    u.epistemic = std::max(0.0, u.predictive - u.aleatoric);
    return u;
}

template <typename T>
ClassifierT<T> build_image_classifier(std::uint64_t seed, VaeArch arch = {}) {
    ClassifierT<T> c;
    c.space = Space::kImage;
    c.arch = arch;
    c.seed = seed;
    const int hw = arch.input_hw;
    const int h1 = (hw + 1) / 2, h2 = (h1 + 1) / 2, h3 = (h2 + 1) / 2;
    const int flat = arch.c3 * h3 * h3;
    c.net.template add<Conv2dT<T>>("c1", 1, arch.c1, 3, 2, 1);
    c.net.template add<BatchNorm2dT<T>>("bn1", arch.c1);
    c.net.template add<PReluT<T>>("p1", arch.c1);
    c.net.template add<Conv2dT<T>>("c2", arch.c1, arch.c2, 3, 2, 1);
    c.net.template add<BatchNorm2dT<T>>("bn2", arch.c2);
    c.net.template add<PReluT<T>>("p2", arch.c2);
    c.net.template add<Conv2dT<T>>("c3", arch.c2, arch.c3, 3, 2, 1);
    c.net.template add<BatchNorm2dT<T>>("bn3", arch.c3);
    c.net.template add<PReluT<T>>("p3", arch.c3);
    c.net.template add<FlattenT<T>>("flat");
    c.net.template add<DenseT<T>>("fc0", flat, 16);
    c.net.template add<DenseT<T>>("fc1", 16, 16);
    c.net.template add<ReluT<T>>("act1");
    c.net.template add<DenseT<T>>("fc2", 16, 16);
    c.net.template add<ReluT<T>>("act2");
    c.net.template add<DenseT<T>>("out", 16, kClassCount);
    Rng rng(seed);
    c.net.register_params(c.params, rng);
    return c;
}

template <typename T>
ClassifierT<T> build_latent_classifier(int d, std::uint64_t seed) {
    if (d < 1) throw std::runtime_error("latent classifier: dimension must be >= 1");
    ClassifierT<T> c;
    c.space = Space::kLatent;
    c.d = d;
    c.seed = seed;
    c.net.template add<DenseT<T>>("fc1", d, 16);
    c.net.template add<ReluT<T>>("act1");
    c.net.template add<DenseT<T>>("fc2", 16, 16);
    c.net.template add<ReluT<T>>("act2");
    c.net.template add<DenseT<T>>("out", 16, kClassCount);
    Rng rng(seed);
    c.net.register_params(c.params, rng);
    return c;
}

template <typename T>
TensorT<T> logits_batch(ClassifierT<T>& clf, const TensorT<T>& x) {
    return clf.net.forward(clf.params, x, nullptr, Mode::kInfer);
}

template <typename T>
std::vector<double> proba_rows(ClassifierT<T>& clf, const TensorT<T>& x) {
    TensorT<T> logits = logits_batch(clf, x);
    const int n = logits.dim(0), k = logits.dim(1);
    std::vector<double> out(static_cast<std::size_t>(n) * k);
    std::vector<double> row(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j)
            row[static_cast<std::size_t>(j)] = logits.data[static_cast<std::size_t>(i * k + j)];
        auto p = softmax_f64(row.data(), k);
        for (int j = 0; j < k; ++j) out[static_cast<std::size_t>(i * k + j)] = p[static_cast<std::size_t>(j)];
    }
    return out;
}

template <typename T>
TensorT<T> image_as_input(const ClassifierT<T>& clf, const TensorT<T>& image) {
    if (clf.space != Space::kImage)
        throw std::runtime_error("classifier expects latent input, got an image");
    if (image.rank() != 2 || image.dim(0) != clf.arch.input_hw || image.dim(1) != clf.arch.input_hw)
        throw std::runtime_error("classifier: expected a [" + std::to_string(clf.arch.input_hw) + "," +
                                 std::to_string(clf.arch.input_hw) + "] image, got " + image.shape_str());
    TensorT<T> b({1, 1, image.dim(0), image.dim(1)});
    b.data = image.data;
    return b;
}

template <typename T>
TensorT<T> latent_as_input(const ClassifierT<T>& clf, const std::vector<T>& z) {
    if (clf.space != Space::kLatent)
        throw std::runtime_error("classifier expects image input, got a latent vector");
    if (static_cast<int>(z.size()) != clf.d)
        throw std::runtime_error("classifier: latent input has length " + std::to_string(z.size()) +
                                 ", expected " + std::to_string(clf.d));
    TensorT<T> b({1, clf.d});
    b.data = z;
    return b;
}

template <typename T>
std::vector<double> predict_proba(ClassifierT<T>& clf, const TensorT<T>& image) {
    return proba_rows(clf, image_as_input(clf, image));
}

template <typename T>
std::vector<double> predict_proba(ClassifierT<T>& clf, const std::vector<T>& z) {
    return proba_rows(clf, latent_as_input(clf, z));
}

template <typename T>
int argmax_class(const std::vector<T>& scores) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(scores.size()); ++i)
        if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
    return best;
}

// test accuracy over [N,28,28] images, batched
template <typename T>
double accuracy_images(ClassifierT<T>& clf, const Tensor& images, const std::vector<int>& labels,
                       int batch = 256) {
    const int n = images.dim(0);
    if (static_cast<int>(labels.size()) != n) throw std::runtime_error("accuracy: label count mismatch");
    std::int64_t hits = 0;
    for (int start = 0; start < n; start += batch) {
        const int b = std::min(batch, n - start);
        std::vector<int> idx(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) idx[static_cast<std::size_t>(i)] = start + i;
        TensorT<T> xb = widen_or_narrow<T>(gather_images(images, idx));
        TensorT<T> logits = logits_batch(clf, xb);
        for (int i = 0; i < b; ++i) {
            const T* row = logits.ptr() + static_cast<std::size_t>(i) * kClassCount;
            int best = 0;
            for (int j = 1; j < kClassCount; ++j)
                if (row[j] > row[best]) best = j;
            hits += best == labels[static_cast<std::size_t>(start + i)];
        }
    }
    return static_cast<double>(hits) / n;
}

template <typename T>
TensorT<T> gather_rows(const TensorT<T>& m, const std::vector<int>& idx) {
    if (m.rank() != 2) throw std::runtime_error("gather_rows: expected a rank-2 tensor");
    const int d = m.dim(1);
    TensorT<T> out({static_cast<int>(idx.size()), d});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= m.dim(0))
            throw std::runtime_error("gather_rows: index " + std::to_string(idx[i]) + " out of range");
        std::copy_n(m.ptr() + static_cast<std::size_t>(idx[i]) * d, d,
                    out.ptr() + i * static_cast<std::size_t>(d));
    }
    return out;
}

template <typename T>
double accuracy_rows(ClassifierT<T>& clf, const TensorT<T>& rows, const std::vector<int>& labels,
                     int batch = 1024) {
    const int n = rows.dim(0);
    if (static_cast<int>(labels.size()) != n) throw std::runtime_error("accuracy: label count mismatch");
    std::int64_t hits = 0;
    for (int start = 0; start < n; start += batch) {
        const int b = std::min(batch, n - start);
        std::vector<int> idx(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) idx[static_cast<std::size_t>(i)] = start + i;
        TensorT<T> logits = logits_batch(clf, gather_rows(rows, idx));
        for (int i = 0; i < b; ++i) {
            const T* row = logits.ptr() + static_cast<std::size_t>(i) * kClassCount;
            int best = 0;
            for (int j = 1; j < kClassCount; ++j)
                if (row[j] > row[best]) best = j;
            hits += best == labels[static_cast<std::size_t>(start + i)];
        }
    }
    return static_cast<double>(hits) / n;
}

// cross-entropy input gradient in inference mode (crafting never touches
// batch-norm statistics)
template <typename T>
TensorT<T> ce_input_grad(ClassifierT<T>& clf, const TensorT<T>& x, const std::vector<int>& labels) {
    EvalResult<T> r = eval_backward(clf.net, clf.params, x, LossSpec<T>(SoftmaxCE{labels}), Mode::kInfer,
                                    false);
    return std::move(r.input_grad);
}

template <typename T>
TensorT<T> fgsm_batch_image(ClassifierT<T>& clf, const TensorT<T>& x, const std::vector<int>& labels,
                            double eps) {
    if (eps < 0) throw std::runtime_error("fgsm: epsilon must be >= 0");
    TensorT<T> g = ce_input_grad(clf, x, labels);
    TensorT<T> out = x;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double gi = static_cast<double>(g.data[i]);
        const double step = gi > 0 ? eps : (gi < 0 ? -eps : 0.0);
        out.data[i] = static_cast<T>(std::clamp(static_cast<double>(out.data[i]) + step, 0.0, 1.0));
    }
    return out;
}

template <typename T>
TensorT<T> fgsm_batch_latent(ClassifierT<T>& clf, const TensorT<T>& z, const std::vector<int>& labels,
                             const std::vector<T>& eps_per_dim) {
    const int d = z.dim(1);
    if (static_cast<int>(eps_per_dim.size()) != d)
        throw std::runtime_error("fgsm: epsilon vector length " + std::to_string(eps_per_dim.size()) +
                                 " does not match latent dim " + std::to_string(d));
    TensorT<T> g = ce_input_grad(clf, z, labels);
    TensorT<T> out = z;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double e = static_cast<double>(eps_per_dim[i % static_cast<std::size_t>(d)]);
        if (e < 0) throw std::runtime_error("fgsm: epsilon must be >= 0");
        const double gi = static_cast<double>(g.data[i]);
        out.data[i] = static_cast<T>(static_cast<double>(out.data[i]) + (gi > 0 ? e : (gi < 0 ? -e : 0.0)));
    }
    return out;
}

// single-input op; image results clamped to [0,1], latent results unclamped
template <typename T>
TensorT<T> fgsm_perturb(ClassifierT<T>& clf, const TensorT<T>& input, int label, double eps) {
    std::vector<int> labels = {label};
    if (clf.space == Space::kImage) {
        TensorT<T> b = image_as_input(clf, input);
        return fgsm_batch_image(clf, b, labels, eps).reshaped(input.shape);
    }
    if (input.rank() != 1) throw std::runtime_error("fgsm: latent input must be rank 1");
    TensorT<T> b = latent_as_input(clf, input.data);
    std::vector<T> eps_v(static_cast<std::size_t>(clf.d), static_cast<T>(eps));
    return fgsm_batch_latent(clf, b, labels, eps_v).reshaped(input.shape);
}

template <typename T>
TensorT<T> fgsm_perturb(EnsembleT<T>& ens, const TensorT<T>& input, int label, double eps) {
    if (ens.members.empty()) throw std::runtime_error("fgsm: empty ensemble");
    if (eps < 0) throw std::runtime_error("fgsm: epsilon must be >= 0");
    std::vector<int> labels = {label};
    TensorT<T> b = ens.space == Space::kImage ? image_as_input(ens.members[0], input)
                                              : latent_as_input(ens.members[0], input.data);
    TensorD g(b.shape);
    for (auto& m : ens.members) {
        TensorT<T> gm = ce_input_grad(m, b, labels);
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += static_cast<double>(gm.data[i]);
    }
    TensorT<T> out = b;
    const bool clamp = ens.space == Space::kImage;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double step = g.data[i] > 0 ? eps : (g.data[i] < 0 ? -eps : 0.0);
        double v = static_cast<double>(out.data[i]) + step;
        if (clamp) v = std::clamp(v, 0.0, 1.0);
        out.data[i] = static_cast<T>(v);
    }
    return out.reshaped(input.shape);
}

struct ClfTrainConfig {
    int epochs = 15;
    int batch = 128;
    double lr = 1e-3;
    double eps_image = 0.1;
    double eps_scale = 0.05;  // latent radius = eps_scale * per-dim std of training mu
    std::uint64_t seed = 1;
    int log_every = 0;
};

struct ClfEpochStat {
    int epoch = 0;
    double train_loss = 0.0;
};

struct ClfTrainLog {
    std::vector<ClfEpochStat> epochs;
};

namespace detail {

// shared minibatch loop: craft adversarial twins from the current model,
// train on [clean; adversarial]
template <typename T, typename GatherFn, typename CraftFn>
void adversarial_train(ClassifierT<T>& clf, int n, const std::vector<int>& labels,
                       const ClfTrainConfig& cfg, GatherFn gather, CraftFn craft, ClfTrainLog* log) {
    AdamStateT<T> adam;
    adam.lr = cfg.lr;
    adam.bind(clf.params);
    Rng order_rng(clf.seed + 1);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto plan = batches(n, cfg.batch, order_rng);
        double loss_sum = 0.0;
        std::int64_t seen = 0;
        for (std::size_t bi = 0; bi < plan.size(); ++bi) {
            const auto& idx = plan[bi];
            TensorT<T> xb = gather(idx);
            std::vector<int> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
                yb[i] = labels[static_cast<std::size_t>(idx[i])];
            TensorT<T> xa = craft(xb, yb);

            std::vector<int> shape2 = xb.shape;
            shape2[0] *= 2;
            TensorT<T> x2(shape2);
            std::copy(xb.data.begin(), xb.data.end(), x2.data.begin());
            std::copy(xa.data.begin(), xa.data.end(), x2.data.begin() + xb.data.size());
            std::vector<int> y2 = yb;
            y2.insert(y2.end(), yb.begin(), yb.end());

            EvalResult<T> r = eval_backward(clf.net, clf.params, x2, LossSpec<T>(SoftmaxCE{y2}),
                                            Mode::kTrain, true);
            if (!std::isfinite(r.loss))
                throw std::runtime_error("classifier training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch) + " step " + std::to_string(bi));
            adam_step(clf.params, adam);
            loss_sum += r.loss * static_cast<double>(y2.size());
            seen += static_cast<std::int64_t>(y2.size());
            if (cfg.log_every > 0 && (bi + 1) % static_cast<std::size_t>(cfg.log_every) == 0)
                std::fprintf(stderr, "clf epoch %d step %zu/%zu loss %.4f\n", epoch, bi + 1, plan.size(),
                             r.loss);
        }
        if (log) log->epochs.push_back({epoch, loss_sum / static_cast<double>(seen)});
        if (cfg.log_every > 0)
            std::fprintf(stderr, "clf epoch %d done: train loss %.4f\n", epoch,
                         loss_sum / static_cast<double>(seen));
    }
    clf.trained = cfg.epochs > 0;
}

}  // namespace detail

template <typename T>
ClassifierT<T> train_image_classifier(const ImageDataset& train, const ClfTrainConfig& cfg,
                                      VaeArch arch = {}, ClfTrainLog* log = nullptr) {
    ClassifierT<T> clf = build_image_classifier<T>(cfg.seed, arch);
    detail::adversarial_train(
        clf, train.size(), train.labels, cfg,
        [&](const std::vector<int>& idx) { return widen_or_narrow<T>(gather_images(train.images, idx)); },
        [&](const TensorT<T>& xb, const std::vector<int>& yb) {
            return fgsm_batch_image(clf, xb, yb, cfg.eps_image);
        },
        log);
    return clf;
}

template <typename T>
ClassifierT<T> train_latent_member(const TensorT<T>& mu, const std::vector<int>& labels,
                                   const std::vector<T>& eps_latent, const ClfTrainConfig& cfg,
                                   std::uint64_t member_seed, ClfTrainLog* log = nullptr) {
    ClassifierT<T> clf = build_latent_classifier<T>(mu.dim(1), member_seed);
    detail::adversarial_train(
        clf, mu.dim(0), labels, cfg, [&](const std::vector<int>& idx) { return gather_rows(mu, idx); },
        [&](const TensorT<T>& zb, const std::vector<int>& yb) {
            return fgsm_batch_latent(clf, zb, yb, eps_latent);
        },
        log);
    return clf;
}

// per-dimension std of the training posterior means (population form)
template <typename T>
std::vector<T> latent_dim_std(const TensorT<T>& mu) {
    const int n = mu.dim(0), d = mu.dim(1);
    std::vector<T> out(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = static_cast<double>(mu.data[static_cast<std::size_t>(i) * d + j]);
            s += v;
            s2 += v * v;
        }
        const double mean = s / n;
        out[static_cast<std::size_t>(j)] = static_cast<T>(std::sqrt(std::max(0.0, s2 / n - mean * mean)));
    }
    return out;
}

template <typename T>
EnsembleT<T> train_latent_ensemble(const TensorT<T>& mu, const std::vector<int>& labels, int M,
                                   const ClfTrainConfig& cfg) {
    if (M < 1) throw std::runtime_error("ensemble: M must be >= 1");
    EnsembleT<T> ens;
    ens.space = Space::kLatent;
    std::vector<T> sd = latent_dim_std(mu);
    ens.eps_latent.resize(sd.size());
    for (std::size_t i = 0; i < sd.size(); ++i)
        ens.eps_latent[i] = static_cast<T>(cfg.eps_scale * static_cast<double>(sd[i]));
    for (int m = 0; m < M; ++m)
        ens.members.push_back(train_latent_member(mu, labels, ens.eps_latent, cfg, cfg.seed + m));
    return ens;
}

template <typename T>
std::vector<std::vector<double>> member_probs_at(EnsembleT<T>& ens, const TensorT<T>& input_batch1) {
    std::vector<std::vector<double>> probs;
    probs.reserve(ens.members.size());
    for (auto& m : ens.members) {
        std::vector<double> p = proba_rows(m, input_batch1);
        probs.push_back(std::move(p));
    }
    return probs;
}

template <typename T>
TensorT<T> ensemble_input(EnsembleT<T>& ens, const TensorT<T>& image) {
    if (ens.members.empty()) throw std::runtime_error("ensemble: no members");
    return image_as_input(ens.members[0], image);
}

inline std::vector<double> mean_probs(const std::vector<std::vector<double>>& probs) {
    std::vector<double> mean(probs.at(0).size(), 0.0);
    for (const auto& p : probs)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
    for (auto& v : mean) v /= static_cast<double>(probs.size());
    return mean;
}

template <typename T>
std::vector<double> ensemble_mean_proba(EnsembleT<T>& ens, const TensorT<T>& image) {
    return mean_probs(member_probs_at(ens, ensemble_input(ens, image)));
}

template <typename T>
std::vector<double> ensemble_mean_proba(EnsembleT<T>& ens, const std::vector<T>& z) {
    if (ens.members.empty()) throw std::runtime_error("ensemble: no members");
    return mean_probs(member_probs_at(ens, latent_as_input(ens.members[0], z)));
}

template <typename T>
UncertaintyTriple uncertainty_decompose(EnsembleT<T>& ens, const TensorT<T>& image) {
    return decompose_probs(member_probs_at(ens, ensemble_input(ens, image)));
}

template <typename T>
UncertaintyTriple uncertainty_decompose(EnsembleT<T>& ens, const std::vector<T>& z) {
    if (ens.members.empty()) throw std::runtime_error("ensemble: no members");
    return decompose_probs(member_probs_at(ens, latent_as_input(ens.members[0], z)));
}

// decompose for every row of a [N,...] batch in one pass per member
template <typename T>
std::vector<UncertaintyTriple> uncertainty_batch(EnsembleT<T>& ens, const TensorT<T>& batch) {
    if (ens.members.empty()) throw std::runtime_error("ensemble: no members");
    const int n = batch.dim(0);
    std::vector<double> mean(static_cast<std::size_t>(n) * kClassCount, 0.0);
    std::vector<double> mean_h(static_cast<std::size_t>(n), 0.0);
    std::vector<double> row(kClassCount);
    for (auto& m : ens.members) {
        std::vector<double> p = proba_rows(m, batch);
        for (int i = 0; i < n; ++i) {
            double h = 0.0;
            for (int j = 0; j < kClassCount; ++j) {
                const double v = p[static_cast<std::size_t>(i * kClassCount + j)];
                mean[static_cast<std::size_t>(i * kClassCount + j)] += v;
                if (v > 0.0) h -= v * std::log(v);
            }
            mean_h[static_cast<std::size_t>(i)] += h;
        }
    }
    const double M = static_cast<double>(ens.members.size());
    std::vector<UncertaintyTriple> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < kClassCount; ++j)
            row[static_cast<std::size_t>(j)] = mean[static_cast<std::size_t>(i * kClassCount + j)] / M;
        UncertaintyTriple& u = out[static_cast<std::size_t>(i)];
        u.predictive = entropy(row);
        u.aleatoric = mean_h[static_cast<std::size_t>(i)] / M;
        u.epistemic = std::max(0.0, u.predictive - u.aleatoric);
    }
    return out;
}

// posterior means of a whole dataset (production path, float)
struct LatentSet {
    Tensor mu;  // [N, d]
    std::vector<int> labels;
};
LatentSet encode_dataset(Vae& vae, const ImageDataset& ds, int batch = 256);

void save_ensemble(const std::string& path, const Ensemble& ens);
Ensemble load_ensemble(const std::string& path);
void save_classifier(const std::string& path, const Classifier& clf);
Classifier load_classifier(const std::string& path);

}  // namespace clarity
