#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "clarity/config.hpp"
#include "clarity/data.hpp"
#include "clarity/losses.hpp"

namespace clarity {

template <typename T>
struct PosteriorStatsT {
    std::vector<T> mu, logvar;
};
using PosteriorStats = PosteriorStatsT<float>;

// test-size channel widths are configurable; the MNIST model always uses 32/64/128
struct VaeArch {
    int c1 = 32, c2 = 64, c3 = 128;
    int input_hw = 28;
};

template <typename T>
struct VaeT {
    int d = 16;
    double beta = 1.0;
    VaeArch arch;
    std::uint64_t seed = 0;
    bool trained = false;

    SequentialT<T> trunk;    // conv stack + flatten
    SequentialT<T> head_mu;  // dense -> d
    SequentialT<T> head_lv;  // dense -> d
    SequentialT<T> decoder;  // dense -> reshape -> deconv ladder, emits logits
    ParamStoreT<T> params;

    std::string arch_string() const {
        return "enc:conv" + std::to_string(arch.c1) + "-" + std::to_string(arch.c2) + "-" +
               std::to_string(arch.c3) + "k3s2p1,bn,prelu|heads:dense" + std::to_string(d) +
               "|dec:dense,deconv" + std::to_string(arch.c2) + "-" + std::to_string(arch.c1) +
               "-1k3s2p1,bn,prelu,sigmoid|hw" + std::to_string(arch.input_hw);
    }
    std::string fingerprint() const { return hex16(fnv1a(arch_string())); }
};

using Vae = VaeT<float>;

constexpr double kLogvarClamp = 10.0;

template <typename T>
VaeT<T> build_vae(int d, double beta, std::uint64_t seed, VaeArch arch = {}) {
    if (d < 1) throw ConfigError("vae: latent dimension must be >= 1");
    if (beta < 0) throw ConfigError("vae: beta must be >= 0");
    VaeT<T> v;
    v.d = d;
    v.beta = beta;
    v.arch = arch;
    v.seed = seed;
    const int hw = arch.input_hw;
    if (hw < 8) throw ConfigError("vae: input size must be >= 8");
    const int h1 = (hw + 1) / 2, h2 = (h1 + 1) / 2, h3 = (h2 + 1) / 2;
    const int flat = arch.c3 * h3 * h3;

    v.trunk.template add<Conv2dT<T>>("enc.c1", 1, arch.c1, 3, 2, 1);
    v.trunk.template add<BatchNorm2dT<T>>("enc.bn1", arch.c1);
    v.trunk.template add<PReluT<T>>("enc.p1", arch.c1);
    v.trunk.template add<Conv2dT<T>>("enc.c2", arch.c1, arch.c2, 3, 2, 1);
    v.trunk.template add<BatchNorm2dT<T>>("enc.bn2", arch.c2);
    v.trunk.template add<PReluT<T>>("enc.p2", arch.c2);
    v.trunk.template add<Conv2dT<T>>("enc.c3", arch.c2, arch.c3, 3, 2, 1);
    v.trunk.template add<BatchNorm2dT<T>>("enc.bn3", arch.c3);
    v.trunk.template add<PReluT<T>>("enc.p3", arch.c3);
    v.trunk.template add<FlattenT<T>>("enc.flat");
    v.head_mu.template add<DenseT<T>>("enc.mu", flat, d);
    v.head_lv.template add<DenseT<T>>("enc.lv", flat, d);

    v.decoder.template add<DenseT<T>>("dec.fc", d, flat);
    v.decoder.template add<ReshapeT<T>>("dec.rs", arch.c3, h3, h3);
    v.decoder.template add<ConvT2dT<T>>("dec.d1", arch.c3, arch.c2, 3, 2, 1, h2 - ((h3 - 1) * 2 - 2 + 3));
    v.decoder.template add<BatchNorm2dT<T>>("dec.bn1", arch.c2);
    v.decoder.template add<PReluT<T>>("dec.p1", arch.c2);
    v.decoder.template add<ConvT2dT<T>>("dec.d2", arch.c2, arch.c1, 3, 2, 1, h1 - ((h2 - 1) * 2 - 2 + 3));
    v.decoder.template add<BatchNorm2dT<T>>("dec.bn2", arch.c1);
    v.decoder.template add<PReluT<T>>("dec.p2", arch.c1);
    v.decoder.template add<ConvT2dT<T>>("dec.d3", arch.c1, 1, 3, 2, 1, hw - ((h1 - 1) * 2 - 2 + 3));

    Rng rng(seed);
    v.trunk.register_params(v.params, rng);
    v.head_mu.register_params(v.params, rng);
    v.head_lv.register_params(v.params, rng);
    v.decoder.register_params(v.params, rng);
    return v;
}

template <typename T>
struct EncodedBatchT {
    TensorT<T> mu, logvar;  // both [N, d]
};
using EncodedBatch = EncodedBatchT<float>;

template <typename T>
EncodedBatchT<T> encode_batch(VaeT<T>& vae, const TensorT<T>& x, Mode mode = Mode::kInfer) {
    TensorT<T> h = vae.trunk.forward(vae.params, x, nullptr, mode);
    EncodedBatchT<T> out;
    out.mu = vae.head_mu.forward(vae.params, h, nullptr, mode);
    out.logvar = vae.head_lv.forward(vae.params, std::move(h), nullptr, mode);
    for (auto& v : out.logvar.data)
        v = static_cast<T>(std::clamp(static_cast<double>(v), -kLogvarClamp, kLogvarClamp));
    return out;
}

template <typename T>
PosteriorStatsT<T> encode(VaeT<T>& vae, const TensorT<T>& image) {
    if (image.rank() != 2 || image.dim(0) != vae.arch.input_hw || image.dim(1) != vae.arch.input_hw)
        throw std::runtime_error("encode: expected a [" + std::to_string(vae.arch.input_hw) + "," +
                                 std::to_string(vae.arch.input_hw) + "] image, got " + image.shape_str());
    TensorT<T> b({1, 1, image.dim(0), image.dim(1)});
    b.data = image.data;
    EncodedBatchT<T> eb = encode_batch(vae, b);
    PosteriorStatsT<T> st;
    st.mu.assign(eb.mu.data.begin(), eb.mu.data.end());
    st.logvar.assign(eb.logvar.data.begin(), eb.logvar.data.end());
    return st;
}

template <typename T>
std::vector<T> sample_posterior(const PosteriorStatsT<T>& st, Rng& rng) {
    if (st.mu.size() != st.logvar.size())
        throw std::runtime_error("sample: mu and log-variance lengths differ");
    std::vector<T> z(st.mu.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = static_cast<T>(static_cast<double>(st.mu[i]) +
                              std::exp(0.5 * static_cast<double>(st.logvar[i])) * rng.normal());
    return z;
}

template <typename T>
TensorT<T> decode_logits_batch(VaeT<T>& vae, const TensorT<T>& z, Mode mode = Mode::kInfer) {
    return vae.decoder.forward(vae.params, z, nullptr, mode);
}

template <typename T>
TensorT<T> decode_batch(VaeT<T>& vae, const TensorT<T>& z, Mode mode = Mode::kInfer) {
    TensorT<T> logits = decode_logits_batch(vae, z, mode);
    for (auto& v : logits.data)
        v = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
    return logits;
}

template <typename T>
TensorT<T> decode(VaeT<T>& vae, const std::vector<T>& z) {
    if (static_cast<int>(z.size()) != vae.d)
        throw std::runtime_error("decode: z has length " + std::to_string(z.size()) + ", latent dim is " +
                                 std::to_string(vae.d));
    TensorT<T> zb({1, vae.d});
    zb.data = z;
    TensorT<T> img = decode_batch(vae, zb);
    return img.reshaped({vae.arch.input_hw, vae.arch.input_hw});
}

// d(decoded image)/dz pullback: forward through decoder + sigmoid with a tape,
// then backward of `dimage`. Inference mode, parameter gradients skipped.
template <typename T>
struct DecodeTapeT {
    Tape<T> tape;
    TensorT<T> image;  // sigmoid output [N,1,H,W]
};

template <typename T>
DecodeTapeT<T> decode_with_tape(VaeT<T>& vae, const TensorT<T>& z) {
    DecodeTapeT<T> out;
    TensorT<T> logits = vae.decoder.forward(vae.params, z, &out.tape, Mode::kInfer);
    out.image = TensorT<T>(logits.shape);
    for (std::size_t i = 0; i < logits.data.size(); ++i)
        out.image.data[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(logits.data[i]))));
    return out;
}

template <typename T>
TensorT<T> decode_backward(const VaeT<T>& vae, const DecodeTapeT<T>& dt, const TensorT<T>& dimage) {
    if (!dimage.same_shape(dt.image))
        throw std::runtime_error("decode backward: gradient shape " + dimage.shape_str() + " mismatch");
    TensorT<T> dlogits(dimage.shape);
    for (std::size_t i = 0; i < dimage.data.size(); ++i) {
        const double s = static_cast<double>(dt.image.data[i]);
        dlogits.data[i] = static_cast<T>(static_cast<double>(dimage.data[i]) * s * (1.0 - s));
    }
    return vae.decoder.backward(vae.params, dt.tape, std::move(dlogits), Mode::kInfer, nullptr);
}

template <typename T>
double kl_diag_gaussian(const PosteriorStatsT<T>& st) {
    if (st.mu.size() != st.logvar.size())
        throw std::runtime_error("kl: mu and log-variance lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < st.mu.size(); ++i) {
        const double m = static_cast<double>(st.mu[i]);
        const double lv = static_cast<double>(st.logvar[i]);
        acc += m * m + std::exp(lv) - lv - 1.0;
    }
    return 0.5 * acc;
}

template <typename T>
std::vector<T> interpolate_latent(const std::vector<T>& z1, const std::vector<T>& z2, double t) {
    if (z1.size() != z2.size()) throw std::runtime_error("interpolate: lengths differ");
    if (!(t >= 0.0 && t <= 1.0))
        throw std::runtime_error("interpolate: t = " + std::to_string(t) + " outside [0,1]");
    std::vector<T> z(z1.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = static_cast<T>((1.0 - t) * static_cast<double>(z1[i]) + t * static_cast<double>(z2[i]));
    return z;
}

struct VaeTrainConfig {
    int d = 16;
    double beta = 1.0;
    int epochs = 30;
    int batch = 128;
    std::uint64_t seed = 1;
    double lr = 1e-3;
    VaeArch arch = {};
    int log_every = 0;  // batches between progress lines; 0 = quiet
};

struct VaeEpochStat {
    int epoch = 0;
    double train_loss = 0.0;
    double test_recon = 0.0;
    double test_kl = 0.0;
    double test_loss = 0.0;  // recon + beta*kl; ELBO is its negative
};

struct VaeTrainLog {
    std::vector<VaeEpochStat> epochs;
};

// single-sample ELBO terms on a dataset with a fixed noise stream
template <typename T>
void vae_eval(VaeT<T>& vae, const ImageDataset& ds, std::uint64_t eps_seed, int batch,
              double* recon_out, double* kl_out);

template <typename T>
VaeT<T> train_vae(const ImageDataset& train, const ImageDataset* test, const VaeTrainConfig& cfg,
                  VaeTrainLog* log);

Vae train_vae_f32(const ImageDataset& train, const ImageDataset* test, const VaeTrainConfig& cfg,
                  VaeTrainLog* log);
Vae train_aux_2d_vae(const ImageDataset& train, const ImageDataset* test, VaeTrainConfig cfg,
                     VaeTrainLog* log);

void save_vae(const std::string& path, const Vae& vae);
Vae load_vae(const std::string& path);

// ---- template implementations ----

template <typename T>
void vae_eval(VaeT<T>& vae, const ImageDataset& ds, std::uint64_t eps_seed, int batch,
              double* recon_out, double* kl_out) {
    Rng eps(eps_seed);
    double recon = 0.0, kl = 0.0;
    const int n = ds.size();
    for (int start = 0; start < n; start += batch) {
        const int b = std::min(batch, n - start);
        std::vector<int> idx(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) idx[static_cast<std::size_t>(i)] = start + i;
        Tensor xb_f = gather_images(ds.images, idx);
        TensorT<T> xb = widen_or_narrow<T>(xb_f);
        EncodedBatchT<T> eb = encode_batch(vae, xb);
        TensorT<T> z({b, vae.d});
        for (int i = 0; i < b * vae.d; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            z.data[k] = static_cast<T>(static_cast<double>(eb.mu.data[k]) +
                                       std::exp(0.5 * static_cast<double>(eb.logvar.data[k])) * eps.normal());
            const double m = static_cast<double>(eb.mu.data[k]);
            const double lv = static_cast<double>(eb.logvar.data[k]);
            kl += 0.5 * (m * m + std::exp(lv) - lv - 1.0);
        }
        TensorT<T> logits = decode_logits_batch(vae, z);
        for (std::size_t i = 0; i < logits.data.size(); ++i) {
            const double l = static_cast<double>(logits.data[i]);
            const double t = static_cast<double>(xb.data[i]);
            recon += (1.0 - t) * l + softplus(-l);
        }
    }
    *recon_out = recon / n;
    *kl_out = kl / n;
}

template <typename T>
VaeT<T> train_vae(const ImageDataset& train, const ImageDataset* test, const VaeTrainConfig& cfg,
                  VaeTrainLog* log) {
    if (cfg.epochs < 0) throw ConfigError("vae: epochs must be >= 0");
    if (cfg.batch < 1) throw ConfigError("vae: batch size must be >= 1");
    VaeT<T> vae = build_vae<T>(cfg.d, cfg.beta, cfg.seed, cfg.arch);
    if (cfg.epochs == 0) return vae;  // untrained, flagged by the `trained` field

    AdamStateT<T> adam;
    adam.lr = cfg.lr;
    adam.bind(vae.params);
    Rng order_rng(cfg.seed + 1);
    Rng eps_rng(cfg.seed + 2);
    GradAccum ga;
    const int n = train.size();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto plan = batches(n, cfg.batch, order_rng);
        double loss_sum = 0.0;
        std::int64_t seen = 0;
        for (std::size_t bi = 0; bi < plan.size(); ++bi) {
            const auto& idx = plan[bi];
            const int B = static_cast<int>(idx.size());
            Tensor xb_f = gather_images(train.images, idx);
            TensorT<T> xb = widen_or_narrow<T>(xb_f);

            Tape<T> trunk_tape, mu_tape, lv_tape, dec_tape;
            TensorT<T> h = vae.trunk.forward(vae.params, xb, &trunk_tape, Mode::kTrain);
            TensorT<T> mu = vae.head_mu.forward(vae.params, h, &mu_tape, Mode::kTrain);
            TensorT<T> lv_raw = vae.head_lv.forward(vae.params, h, &lv_tape, Mode::kTrain);

            const std::size_t nd = static_cast<std::size_t>(B) * vae.d;
            TensorT<T> lv = lv_raw;
            std::vector<char> pass(nd);
            for (std::size_t i = 0; i < nd; ++i) {
                const double v = static_cast<double>(lv_raw.data[i]);
                pass[i] = (v > -kLogvarClamp && v < kLogvarClamp);
                lv.data[i] = static_cast<T>(std::clamp(v, -kLogvarClamp, kLogvarClamp));
            }

            TensorT<T> eps({B, vae.d}), z({B, vae.d}), sd({B, vae.d});
            for (std::size_t i = 0; i < nd; ++i) {
                eps.data[i] = static_cast<T>(eps_rng.normal());
                sd.data[i] = static_cast<T>(std::exp(0.5 * static_cast<double>(lv.data[i])));
                z.data[i] = static_cast<T>(static_cast<double>(mu.data[i]) +
                                           static_cast<double>(sd.data[i]) * static_cast<double>(eps.data[i]));
            }

            TensorT<T> logits = vae.decoder.forward(vae.params, z, &dec_tape, Mode::kTrain);

            double recon = 0.0, kl = 0.0;
            TensorT<T> dlogits(logits.shape);
            for (std::size_t i = 0; i < logits.data.size(); ++i) {
                const double l = static_cast<double>(logits.data[i]);
                const double t = static_cast<double>(xb.data[i]);
                recon += (1.0 - t) * l + softplus(-l);
                dlogits.data[i] = static_cast<T>((1.0 / (1.0 + std::exp(-l)) - t) / B);
            }
            for (std::size_t i = 0; i < nd; ++i) {
                const double m = static_cast<double>(mu.data[i]);
                const double lvv = static_cast<double>(lv.data[i]);
                kl += 0.5 * (m * m + std::exp(lvv) - lvv - 1.0);
            }
            const double loss = recon / B + cfg.beta * (kl / B);
            if (!std::isfinite(loss))
                throw std::runtime_error("vae training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch) + " step " + std::to_string(bi));
            loss_sum += loss * B;
            seen += B;

            ga.init(vae.params);
            TensorT<T> dz = vae.decoder.backward(vae.params, dec_tape, std::move(dlogits), Mode::kTrain, &ga);

            TensorT<T> dmu({B, vae.d}), dlv({B, vae.d});
            for (std::size_t i = 0; i < nd; ++i) {
                const double dzi = static_cast<double>(dz.data[i]);
                const double m = static_cast<double>(mu.data[i]);
                const double lvv = static_cast<double>(lv.data[i]);
                dmu.data[i] = static_cast<T>(dzi + cfg.beta * m / B);
                double g = dzi * static_cast<double>(eps.data[i]) * 0.5 * static_cast<double>(sd.data[i]) +
                           cfg.beta * (std::exp(lvv) - 1.0) / (2.0 * B);
                dlv.data[i] = pass[i] ? static_cast<T>(g) : T(0);
            }

            TensorT<T> dh1 = vae.head_mu.backward(vae.params, mu_tape, std::move(dmu), Mode::kTrain, &ga);
            TensorT<T> dh2 = vae.head_lv.backward(vae.params, lv_tape, std::move(dlv), Mode::kTrain, &ga);
            TensorT<T> dh(dh1.shape);
            kern::add(dh.ptr(), dh1.ptr(), dh2.ptr(), dh.data.size());
            vae.trunk.backward(vae.params, trunk_tape, std::move(dh), Mode::kTrain, &ga);

            ga.flush(vae.params);
            adam_step(vae.params, adam);

            if (cfg.log_every > 0 && (bi + 1) % static_cast<std::size_t>(cfg.log_every) == 0)
                std::fprintf(stderr, "vae epoch %d step %zu/%zu loss %.4f\n", epoch, bi + 1, plan.size(),
                             loss);
        }

        VaeEpochStat st;
        st.epoch = epoch;
        st.train_loss = loss_sum / static_cast<double>(seen);
        if (test) {
            vae_eval(vae, *test, cfg.seed ^ 0x9E3779B97F4A7C15ull, cfg.batch, &st.test_recon, &st.test_kl);
            st.test_loss = st.test_recon + cfg.beta * st.test_kl;
        }
        if (log) log->epochs.push_back(st);
        if (cfg.log_every > 0)
            std::fprintf(stderr, "vae epoch %d done: train %.4f test %.4f\n", epoch, st.train_loss,
                         st.test_loss);
    }
    vae.trained = true;
    return vae;
}

}  // namespace clarity
