#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "clarity/serialize.hpp"
#include "clarity/vae.hpp"

using namespace clarity;
namespace fs = std::filesystem;

namespace {

const VaeArch kTiny{4, 6, 8, 28};

ImageDataset synth_dataset(int n, std::uint64_t seed) {
    ImageDataset ds;
    ds.images = Tensor({n, 28, 28});
    Rng rng(seed);
    // soft blobs at random centers, so there is structure to reconstruct
    for (int i = 0; i < n; ++i) {
        const double cx = 4 + 20 * rng.uniform(), cy = 4 + 20 * rng.uniform();
        for (int r = 0; r < 28; ++r)
            for (int c = 0; c < 28; ++c) {
                const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
                ds.images.data[static_cast<std::size_t>((i * 28 + r) * 28 + c)] =
                    static_cast<float>(std::exp(-d2 / 18.0));
            }
        ds.labels.push_back(i % 10);
    }
    ds.split = "train";
    return ds;
}

}  // namespace

TEST_CASE("kl divergence oracles") {
    PosteriorStatsT<double> st;
    st.mu = {0, 0, 0};
    st.logvar = {0, 0, 0};
    CHECK(kl_diag_gaussian(st) == 0.0);  // N(0,1) vs N(0,1) exactly

    st.mu = {0.5};
    st.logvar = {0.0};
    CHECK(kl_diag_gaussian(st) == doctest::Approx(0.125).epsilon(1e-12));

    Rng rng(3);
    PosteriorStatsT<double> r;
    for (int i = 0; i < 16; ++i) {
        r.mu.push_back(rng.normal());
        r.logvar.push_back(0.5 * rng.normal());
    }
    double want = 0.0;
    for (int i = 0; i < 16; ++i) {
        const double s2 = std::exp(r.logvar[static_cast<std::size_t>(i)]);
        want += 0.5 * (r.mu[static_cast<std::size_t>(i)] * r.mu[static_cast<std::size_t>(i)] + s2 -
                       std::log(s2) - 1.0);
    }
    CHECK(kl_diag_gaussian(r) == doctest::Approx(want).epsilon(1e-10));

    PosteriorStatsT<double> bad;
    bad.mu = {0, 0};
    bad.logvar = {0};
    CHECK_THROWS_AS(kl_diag_gaussian(bad), std::runtime_error);
}

TEST_CASE("latent interpolation endpoints and convexity") {
    std::vector<float> a = {1, 2, 3}, b = {-1, 0, 5};
    CHECK(interpolate_latent(a, b, 0.0) == a);
    CHECK(interpolate_latent(a, b, 1.0) == b);
    auto mid = interpolate_latent(a, b, 0.5);
    CHECK(mid[0] == doctest::Approx(0.0));
    CHECK(mid[1] == doctest::Approx(1.0));
    CHECK(mid[2] == doctest::Approx(4.0));
    CHECK_THROWS_AS(interpolate_latent(a, b, 1.5), std::runtime_error);
    CHECK_THROWS_AS(interpolate_latent(a, b, -0.1), std::runtime_error);
    std::vector<float> c = {1, 2};
    CHECK_THROWS_AS(interpolate_latent(a, c, 0.5), std::runtime_error);
}

TEST_CASE("posterior sampling matches its moments") {
    PosteriorStats st;
    st.mu = {0.3f, -0.7f};
    st.logvar = {0.2f, -0.5f};
    Rng rng(17);
    const int n = 100000;
    double sum[2] = {}, sumsq[2] = {};
    for (int i = 0; i < n; ++i) {
        auto z = sample_posterior(st, rng);
        for (int k = 0; k < 2; ++k) {
            sum[k] += z[static_cast<std::size_t>(k)];
            sumsq[k] += static_cast<double>(z[static_cast<std::size_t>(k)]) * z[static_cast<std::size_t>(k)];
        }
    }
    for (int k = 0; k < 2; ++k) {
        const double mean = sum[k] / n;
        const double var = sumsq[k] / n - mean * mean;
        CHECK(std::abs(mean - st.mu[static_cast<std::size_t>(k)]) < 0.02);
        CHECK(var == doctest::Approx(std::exp(st.logvar[static_cast<std::size_t>(k)])).epsilon(0.05));
    }
}

TEST_CASE("reparameterized decode gradient passes finite differences") {
    VaeArch arch{2, 3, 4, 12};
    auto vae = build_vae<double>(3, 1.0, 5, arch);
    Rng rng(8);
    std::vector<double> mu(3), lv(3), eps(3);
    for (int i = 0; i < 3; ++i) {
        mu[static_cast<std::size_t>(i)] = 0.4 * rng.normal();
        lv[static_cast<std::size_t>(i)] = 0.3 * rng.normal();
        eps[static_cast<std::size_t>(i)] = rng.normal();
    }

    auto loss_of = [&](const std::vector<double>& m, const std::vector<double>& l) {
        TensorT<double> z({1, 3});
        for (int i = 0; i < 3; ++i)
            z.data[static_cast<std::size_t>(i)] =
                m[static_cast<std::size_t>(i)] +
                std::exp(0.5 * l[static_cast<std::size_t>(i)]) * eps[static_cast<std::size_t>(i)];
        TensorT<double> img = decode_batch(vae, z);
        double s = 0;
        for (double v : img.data) s += v;
        return s;
    };

    TensorT<double> z({1, 3});
    for (int i = 0; i < 3; ++i)
        z.data[static_cast<std::size_t>(i)] =
            mu[static_cast<std::size_t>(i)] +
            std::exp(0.5 * lv[static_cast<std::size_t>(i)]) * eps[static_cast<std::size_t>(i)];
    auto dt = decode_with_tape(vae, z);
    TensorT<double> ones(dt.image.shape, 1.0);
    TensorT<double> dz = decode_backward(vae, dt, ones);

    const double h = 1e-4;
    for (int i = 0; i < 3; ++i) {
        auto mp = mu, mm = mu;
        mp[static_cast<std::size_t>(i)] += h;
        mm[static_cast<std::size_t>(i)] -= h;
        const double fd_mu = (loss_of(mp, lv) - loss_of(mm, lv)) / (2 * h);
        CHECK(std::abs(dz.data[static_cast<std::size_t>(i)] - fd_mu) <
              1e-4 * std::abs(fd_mu) + 1e-6);

        auto lp = lv, lm = lv;
        lp[static_cast<std::size_t>(i)] += h;
        lm[static_cast<std::size_t>(i)] -= h;
        const double fd_lv = (loss_of(mu, lp) - loss_of(mu, lm)) / (2 * h);
        const double want = dz.data[static_cast<std::size_t>(i)] * eps[static_cast<std::size_t>(i)] * 0.5 *
                            std::exp(0.5 * lv[static_cast<std::size_t>(i)]);
        CHECK(std::abs(want - fd_lv) < 1e-4 * std::abs(fd_lv) + 1e-6);
    }
}

TEST_CASE("decode output stays inside the unit interval") {
    auto vae = build_vae<float>(4, 1.0, 21, kTiny);
    Rng rng(2);
    TensorT<float> z({5, 4});
    for (auto& v : z.data) v = static_cast<float>(2.0 * rng.normal());
    Tensor img = decode_batch(vae, z);
    CHECK(img.shape == std::vector<int>{5, 1, 28, 28});
    for (float v : img.data) {
        REQUIRE(v > 0.0f);
        REQUIRE(v < 1.0f);
    }
}

TEST_CASE("encode validates shape and clamps log-variance") {
    auto vae = build_vae<float>(4, 1.0, 21, kTiny);
    Tensor wrong({10, 10}, 0.5f);
    CHECK_THROWS_WITH_AS(encode(vae, wrong), doctest::Contains("[28,28]"), std::runtime_error);

    Tensor img({28, 28}, 0.5f);
    PosteriorStats st = encode(vae, img);
    REQUIRE(st.mu.size() == 4);
    for (float v : st.logvar) {
        CHECK(v >= -10.0f);
        CHECK(v <= 10.0f);
    }
}

TEST_CASE("training is reproducible and zero epochs means untrained") {
    ImageDataset data = synth_dataset(48, 4);
    VaeTrainConfig cfg;
    cfg.d = 4;
    cfg.epochs = 2;
    cfg.batch = 16;
    cfg.seed = 9;
    cfg.arch = kTiny;

    VaeTrainLog log_a, log_b;
    Vae a = train_vae<float>(data, &data, cfg, &log_a);
    Vae b = train_vae<float>(data, &data, cfg, &log_b);
    CHECK(a.trained);
    REQUIRE(a.params.size() == b.params.size());
    for (std::size_t i = 0; i < a.params.size(); ++i)
        CHECK(a.params.entries()[i].value.data == b.params.entries()[i].value.data);
    REQUIRE(log_a.epochs.size() == 2);
    CHECK(log_a.epochs[0].train_loss == log_b.epochs[0].train_loss);
    CHECK(log_a.epochs[1].test_loss == log_b.epochs[1].test_loss);

    cfg.seed = 10;
    Vae c = train_vae<float>(data, nullptr, cfg, nullptr);
    bool same = true;
    for (std::size_t i = 0; i < a.params.size() && same; ++i)
        same = a.params.entries()[i].value.data == c.params.entries()[i].value.data;
    CHECK_FALSE(same);

    cfg.epochs = 0;
    Vae u = train_vae<float>(data, nullptr, cfg, nullptr);
    CHECK_FALSE(u.trained);
}

TEST_CASE("training reduces the objective on held-in data") {
    ImageDataset data = synth_dataset(64, 12);
    VaeTrainConfig cfg;
    cfg.d = 4;
    cfg.epochs = 4;
    cfg.batch = 16;
    cfg.seed = 3;
    cfg.arch = kTiny;
    VaeTrainLog log;
    Vae vae = train_vae<float>(data, &data, cfg, &log);
    REQUIRE(log.epochs.size() == 4);
    CHECK(log.epochs.back().train_loss < log.epochs.front().train_loss);
    CHECK(log.epochs.back().test_loss < log.epochs.front().test_loss);
    CHECK(log.epochs.back().test_kl > 0.0);
}

TEST_CASE("model file round trip restores the vae exactly") {
    const std::string path =
        (fs::temp_directory_path() / ("clarity_vae_" + std::to_string(::getpid()) + ".clrm")).string();
    ImageDataset data = synth_dataset(32, 6);
    VaeTrainConfig cfg;
    cfg.d = 3;
    cfg.epochs = 1;
    cfg.batch = 16;
    cfg.seed = 31;
    cfg.arch = kTiny;
    Vae vae = train_vae<float>(data, nullptr, cfg, nullptr);
    save_vae(path, vae);
    Vae back = load_vae(path);
    CHECK(back.d == 3);
    CHECK(back.trained);
    CHECK(back.fingerprint() == vae.fingerprint());
    REQUIRE(back.params.size() == vae.params.size());
    for (std::size_t i = 0; i < vae.params.size(); ++i)
        CHECK(back.params.entries()[i].value.data == vae.params.entries()[i].value.data);

    // encode/decode agree bit for bit after the round trip
    Tensor img({28, 28});
    Rng rng(1);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    PosteriorStats s1 = encode(vae, img), s2 = encode(back, img);
    CHECK(s1.mu == s2.mu);
    CHECK(s1.logvar == s2.logvar);
    auto z = sample_posterior(s1, rng);
    CHECK(decode(vae, z).data == decode(back, z).data);

    fs::remove(path);
    save_vae(path, vae);
    Blob blob = read_blob(path);
    blob.set("module", "other");
    write_blob(path, blob);
    CHECK_THROWS_WITH_AS(load_vae(path), doctest::Contains("not a vae"), std::runtime_error);
    fs::remove(path);
}
