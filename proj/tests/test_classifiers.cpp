#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "clarity/classifiers.hpp"
#include "clarity/serialize.hpp"

using namespace clarity;
namespace fs = std::filesystem;

namespace {

const VaeArch kTiny{3, 4, 6, 28};

// two linearly separable latent clusters per class pair
TensorT<float> cluster_rows(int n, int d, const std::vector<int>& labels, std::uint64_t seed) {
    TensorT<float> m({n, d});
    Rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            m.data[static_cast<std::size_t>(i * d + j)] =
                static_cast<float>(0.3 * rng.normal() + (labels[static_cast<std::size_t>(i)] == j ? 2.0 : 0.0));
    return m;
}

std::vector<int> cyclic_labels(int n, int k) {
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % k;
    return y;
}

}  // namespace

TEST_CASE("zeroed output layer predicts exactly uniform") {
    auto clf = build_latent_classifier<float>(4, 7);
    clf.params.value("out.weight").fill(0.0f);
    clf.params.value("out.bias").fill(0.0f);
    std::vector<float> z = {0.3f, -1.0f, 0.5f, 2.0f};
    auto p = predict_proba(clf, z);
    REQUIRE(p.size() == 10);
    for (double v : p) CHECK(v == 0.1);
}

TEST_CASE("probabilities normalize and spaces are enforced") {
    auto img = build_image_classifier<float>(3, kTiny);
    Tensor x({28, 28});
    Rng rng(5);
    for (auto& v : x.data) v = static_cast<float>(rng.uniform());
    auto p = predict_proba(img, x);
    double s = 0;
    for (double v : p) {
        CHECK(v >= 0.0);
        s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-6);

    std::vector<float> z = {1.0f, 2.0f};
    CHECK_THROWS_WITH_AS(predict_proba(img, z), doctest::Contains("expects image"),
                         std::runtime_error);
    auto lat = build_latent_classifier<float>(2, 4);
    CHECK_THROWS_WITH_AS(predict_proba(lat, x), doctest::Contains("expects latent"),
                         std::runtime_error);
    Tensor bad({14, 14}, 0.1f);
    CHECK_THROWS_WITH_AS(predict_proba(img, bad), doctest::Contains("[28,28]"), std::runtime_error);
}

TEST_CASE("uncertainty decomposition oracles") {
    // identical members agree -> no epistemic
    std::vector<std::vector<double>> same = {{0.7, 0.2, 0.1}, {0.7, 0.2, 0.1}, {0.7, 0.2, 0.1}};
    auto u = decompose_probs(same);
    CHECK(u.epistemic < 1e-12);  // exact agreement up to the fp rounding of the mean
    CHECK(u.predictive == doctest::Approx(u.aleatoric).epsilon(1e-15));

    // disagreeing one-hot members: all uncertainty is epistemic
    std::vector<std::vector<double>> hot = {{1, 0, 0, 0}, {0, 1, 0, 0}};
    u = decompose_probs(hot);
    CHECK(u.aleatoric == 0.0);
    CHECK(u.predictive == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(u.epistemic == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // random ensembles: identity and invariances against a scratch computation
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const int M = 1 + static_cast<int>(rng.below(5));
        std::vector<std::vector<double>> probs(static_cast<std::size_t>(M),
                                               std::vector<double>(10));
        for (auto& p : probs) {
            double z = 0;
            for (auto& v : p) {
                v = -std::log(1.0 - rng.uniform());
                z += v;
            }
            for (auto& v : p) v /= z;
        }
        u = decompose_probs(probs);
        double want_pred = 0, want_alea = 0;
        std::vector<double> mean(10, 0.0);
        for (const auto& p : probs) {
            for (int i = 0; i < 10; ++i) mean[static_cast<std::size_t>(i)] += p[static_cast<std::size_t>(i)] / M;
            for (double v : p) want_alea -= v * std::log(v) / M;
        }
        for (double v : mean) want_pred -= v * std::log(v);
        REQUIRE(std::abs(u.predictive - want_pred) < 1e-10);
        REQUIRE(std::abs(u.aleatoric - want_alea) < 1e-10);
        REQUIRE(std::abs(u.predictive - (u.aleatoric + u.epistemic)) < 1e-9);
        REQUIRE(u.epistemic >= 0.0);
        REQUIRE(u.predictive <= std::log(10.0) + 1e-12);

        auto shuffled = probs;
        std::reverse(shuffled.begin(), shuffled.end());
        auto u2 = decompose_probs(shuffled);
        REQUIRE(std::abs(u.epistemic - u2.epistemic) < 1e-12);
    }
}

TEST_CASE("fgsm perturbation rules") {
    auto lat = build_latent_classifier<float>(3, 9);
    Tensor z({3});
    z.data = {0.5f, -0.2f, 1.0f};

    Tensor same = fgsm_perturb(lat, z, 2, 0.0);
    CHECK(same.data == z.data);

    auto img = build_image_classifier<float>(3, kTiny);
    Tensor x({28, 28});
    Rng rng(2);
    for (auto& v : x.data) v = static_cast<float>(rng.uniform());
    const double eps = 0.1;
    Tensor adv = fgsm_perturb(img, x, 5, eps);
    REQUIRE(adv.shape == x.shape);
    for (std::size_t i = 0; i < adv.data.size(); ++i) {
        CHECK(adv.data[i] >= 0.0f);
        CHECK(adv.data[i] <= 1.0f);
        CHECK(std::abs(adv.data[i] - x.data[i]) <= eps + 1e-6);
    }

    // w > 0 scalar toy: CE gradient for a non-target logit is positive
    auto toy = build_latent_classifier<float>(1, 1);
    for (const char* name : {"fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias", "out.weight", "out.bias"})
        toy.params.value(name).fill(0.0f);
    toy.params.value("fc1.weight").data[0] = 1.0f;   // z -> h
    toy.params.value("fc2.weight").data[0] = 1.0f;   // h -> h
    toy.params.value("out.weight").data[0] = 1.0f;   // class 0 logit = relu(z)
    Tensor z1({1});
    z1.data = {0.5f};
    Tensor up = fgsm_perturb(toy, z1, 1, 0.25);  // pushing loss up raises the class-0 logit
    CHECK(up.data[0] == doctest::Approx(0.75f));
}

TEST_CASE("latent members learn separable clusters and stay reproducible") {
    const int n = 600, d = 4;
    auto labels = cyclic_labels(n, 4);
    auto mu = cluster_rows(n, d, labels, 21);

    ClfTrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch = 64;
    cfg.lr = 0.01;
    cfg.seed = 5;
    std::vector<float> eps(static_cast<std::size_t>(d), 0.01f);

    auto a = train_latent_member(mu, labels, eps, cfg, cfg.seed);
    CHECK(a.trained);
    CHECK(accuracy_rows(a, mu, labels) > 0.95);

    auto b = train_latent_member(mu, labels, eps, cfg, cfg.seed);
    for (std::size_t i = 0; i < a.params.size(); ++i)
        CHECK(a.params.entries()[i].value.data == b.params.entries()[i].value.data);

    auto c = train_latent_member(mu, labels, eps, cfg, cfg.seed + 1);
    bool same = true;
    for (std::size_t i = 0; i < a.params.size() && same; ++i)
        same = a.params.entries()[i].value.data == c.params.entries()[i].value.data;
    CHECK_FALSE(same);
}

TEST_CASE("ensemble training, mean prediction, member diversity") {
    const int n = 400, d = 3;
    auto labels = cyclic_labels(n, 3);
    auto mu = cluster_rows(n, d, labels, 8);

    ClfTrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch = 64;
    cfg.lr = 0.01;
    cfg.seed = 40;
    auto ens = train_latent_ensemble(mu, labels, 3, cfg);
    REQUIRE(ens.size() == 3);
    CHECK(ens.eps_latent.size() == 3);
    for (float e : ens.eps_latent) CHECK(e > 0.0f);

    bool differ = false;
    for (std::size_t i = 0; i < ens.members[0].params.size() && !differ; ++i)
        differ = ens.members[0].params.entries()[i].value.data !=
                 ens.members[1].params.entries()[i].value.data;
    CHECK(differ);

    std::vector<float> z = {2.0f, 0.0f, 0.0f};
    auto mean = ensemble_mean_proba(ens, z);
    double s = 0;
    std::vector<double> scratch(10, 0.0);
    for (auto& m : ens.members) {
        auto p = predict_proba(m, z);
        for (int i = 0; i < 10; ++i) scratch[static_cast<std::size_t>(i)] += p[static_cast<std::size_t>(i)] / 3;
    }
    for (int i = 0; i < 10; ++i) {
        s += mean[static_cast<std::size_t>(i)];
        CHECK(std::abs(mean[static_cast<std::size_t>(i)] - scratch[static_cast<std::size_t>(i)]) < 1e-12);
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
    CHECK(argmax_class(mean) == 0);

    CHECK_THROWS_AS(train_latent_ensemble(mu, labels, 0, cfg), std::runtime_error);

    // one-member ensemble: no disagreement, so no epistemic uncertainty
    auto one = train_latent_ensemble(mu, labels, 1, cfg);
    auto u = uncertainty_decompose(one, z);
    CHECK(u.epistemic == 0.0);

    // batch decomposition agrees with the single-input path
    TensorT<float> zb({2, 3});
    zb.data = {2.0f, 0.0f, 0.0f, 0.0f, 2.0f, 0.0f};
    auto batch = uncertainty_batch(ens, zb);
    REQUIRE(batch.size() == 2);
    auto u0 = uncertainty_decompose(ens, z);
    CHECK(std::abs(batch[0].predictive - u0.predictive) < 1e-12);
    CHECK(std::abs(batch[0].epistemic - u0.epistemic) < 1e-12);
}

TEST_CASE("image classifier trains on a tiny synthetic problem") {
    // class = quadrant of a bright blob
    ImageDataset ds;
    const int n = 240;
    ds.images = Tensor({n, 28, 28});
    Rng rng(33);
    for (int i = 0; i < n; ++i) {
        const int q = i % 4;
        const int cy = (q / 2) ? 20 : 7, cx = (q % 2) ? 20 : 7;
        for (int r = 0; r < 28; ++r)
            for (int c = 0; c < 28; ++c) {
                const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
                ds.images.data[static_cast<std::size_t>((i * 28 + r) * 28 + c)] =
                    static_cast<float>(std::exp(-d2 / 14.0) + 0.05 * rng.uniform());
            }
        ds.labels.push_back(q);
    }
    ds.split = "train";

    ClfTrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch = 32;
    cfg.lr = 0.01;
    cfg.seed = 11;
    ClfTrainLog log;
    auto clf = train_image_classifier<float>(ds, cfg, kTiny, &log);
    CHECK(clf.trained);
    REQUIRE(log.epochs.size() == 4);
    CHECK(log.epochs.back().train_loss < log.epochs.front().train_loss);
    CHECK(accuracy_images(clf, ds.images, ds.labels) > 0.9);

    cfg.epochs = 0;
    auto untrained = train_image_classifier<float>(ds, cfg, kTiny);
    CHECK_FALSE(untrained.trained);
}

TEST_CASE("classifier and ensemble files round trip") {
    const std::string dir =
        (fs::temp_directory_path() / ("clarity_clf_" + std::to_string(::getpid()))).string();
    fs::create_directories(dir);

    const int n = 200, d = 3;
    auto labels = cyclic_labels(n, 3);
    auto mu = cluster_rows(n, d, labels, 50);
    ClfTrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch = 64;
    cfg.seed = 60;
    auto ens = train_latent_ensemble(mu, labels, 2, cfg);
    save_ensemble(dir + "/ens.clrm", ens);
    Ensemble back = load_ensemble(dir + "/ens.clrm");
    REQUIRE(back.size() == 2);
    CHECK(back.space == Space::kLatent);
    CHECK(back.eps_latent == ens.eps_latent);
    for (int m = 0; m < 2; ++m)
        for (std::size_t i = 0; i < ens.members[0].params.size(); ++i)
            CHECK(back.members[static_cast<std::size_t>(m)].params.entries()[i].value.data ==
                  ens.members[static_cast<std::size_t>(m)].params.entries()[i].value.data);

    std::vector<float> z = {1.0f, 0.5f, -0.5f};
    CHECK(ensemble_mean_proba(back, z) == ensemble_mean_proba(ens, z));

    auto img = build_image_classifier<float>(3, kTiny);
    save_classifier(dir + "/img.clrm", img);
    Classifier ic = load_classifier(dir + "/img.clrm");
    CHECK(ic.space == Space::kImage);
    Tensor x({28, 28}, 0.5f);
    CHECK(predict_proba(ic, x) == predict_proba(img, x));

    CHECK_THROWS_WITH_AS(load_ensemble(dir + "/img.clrm"), doctest::Contains("not an ensemble"),
                         std::runtime_error);
    fs::remove_all(dir);
}
