#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "clarity/losses.hpp"

// Gradient checks run the double instantiation of the layer stack so central
// differences at h = 1e-4 are meaningful against a 1e-4 relative tolerance.

using namespace clarity;

namespace {

constexpr double kH = 1e-4;
constexpr double kRtol = 1e-4;
constexpr double kAtol = 1e-6;

bool close(double a, double b) {
    return std::abs(a - b) <= kAtol + kRtol * std::max(std::abs(a), std::abs(b));
}

TensorD randn(Rng& rng, std::vector<int> shape, double scale = 1.0) {
    TensorD t(std::move(shape));
    fill_normal(t.data, rng, scale);
    return t;
}

// FD over every input element and every trainable parameter element
void check_gradients(const SequentialT<double>& net, ParamStoreT<double>& ps, const TensorD& x,
                     const LossSpec<double>& spec, Mode mode) {
    TensorD xv = x;
    auto loss_at = [&] { return apply_loss(net.forward(ps, xv, nullptr, mode), spec).value; };

    EvalResult<double> r = eval_backward(net, ps, xv, spec, mode, true);
    REQUIRE(r.input_grad.shape == x.shape);

    for (std::size_t i = 0; i < xv.data.size(); ++i) {
        const double x0 = xv.data[i];
        xv.data[i] = x0 + kH;
        const double fp = loss_at();
        xv.data[i] = x0 - kH;
        const double fm = loss_at();
        xv.data[i] = x0;
        const double fd = (fp - fm) / (2 * kH);
        CAPTURE(i);
        CHECK(close(r.input_grad.data[i], fd));
    }

    for (auto& e : ps.entries()) {
        if (!e.trainable) continue;
        CAPTURE(e.name);
        for (std::size_t i = 0; i < e.value.data.size(); ++i) {
            const double w0 = e.value.data[i];
            e.value.data[i] = w0 + kH;
            const double fp = loss_at();
            e.value.data[i] = w0 - kH;
            const double fm = loss_at();
            e.value.data[i] = w0;
            const double fd = (fp - fm) / (2 * kH);
            CAPTURE(i);
            CHECK(close(e.grad.data[i], fd));
        }
    }
}

struct Built {
    SequentialT<double> net;
    ParamStoreT<double> ps;
};

Built build(std::function<void(SequentialT<double>&)> fill, std::uint64_t seed) {
    Built b;
    fill(b.net);
    Rng rng(seed);
    b.net.register_params(b.ps, rng);
    return b;
}

}  // namespace

TEST_CASE("dense gradients match finite differences") {
    auto b = build([](SequentialT<double>& n) { n.add<DenseT<double>>("fc", 3, 5); }, 11);
    Rng rng(1);
    check_gradients(b.net, b.ps, randn(rng, {2, 3}), HalfSquaredNorm{}, Mode::kInfer);
}

TEST_CASE("conv gradients match finite differences") {
    auto b = build([](SequentialT<double>& n) { n.add<Conv2dT<double>>("c", 2, 4, 3, 2, 1); }, 12);
    Rng rng(2);
    check_gradients(b.net, b.ps, randn(rng, {2, 2, 5, 5}), HalfSquaredNorm{}, Mode::kInfer);
}

TEST_CASE("unpadded unit-stride conv gradients match finite differences") {
    auto b = build([](SequentialT<double>& n) { n.add<Conv2dT<double>>("c", 1, 3, 3, 1, 0); }, 13);
    Rng rng(3);
    check_gradients(b.net, b.ps, randn(rng, {1, 1, 4, 4}), SumOutputs{}, Mode::kInfer);
}

TEST_CASE("transposed conv gradients match finite differences") {
    auto b = build([](SequentialT<double>& n) { n.add<ConvT2dT<double>>("d", 3, 2, 3, 2, 1, 1); }, 14);
    Rng rng(4);
    check_gradients(b.net, b.ps, randn(rng, {2, 3, 4, 4}), HalfSquaredNorm{}, Mode::kInfer);
}

TEST_CASE("transposed conv output sizes cover the decoder ladder") {
    ConvT2dT<double> a("a", 8, 8, 3, 2, 1, 0), bb("b", 8, 8, 3, 2, 1, 1);
    CHECK(a.out_size(4) == 7);
    CHECK(bb.out_size(7) == 14);
    CHECK(bb.out_size(14) == 28);
}

TEST_CASE("batch-norm train-mode gradients go through the batch statistics") {
    auto b = build([](SequentialT<double>& n) { n.add<BatchNorm2dT<double>>("bn", 2); }, 15);
    // nudge gamma/beta off their init so gradients are generic
    Rng rng(5);
    fill_uniform(b.ps.value("bn.gamma").data, rng, 0.5, 1.5);
    fill_uniform(b.ps.value("bn.beta").data, rng, -0.5, 0.5);
    // HalfSquaredNorm of normalized output is near-constant under input shifts,
    // which starves FD; take a linear functional instead.
    check_gradients(b.net, b.ps, randn(rng, {3, 2, 4, 4}), SumOutputs{}, Mode::kTrain);
}

TEST_CASE("batch-norm inference-mode gradients use running statistics") {
    auto b = build([](SequentialT<double>& n) { n.add<BatchNorm2dT<double>>("bn", 3); }, 16);
    Rng rng(6);
    fill_uniform(b.ps.value("bn.running_mean").data, rng, -0.3, 0.3);
    fill_uniform(b.ps.value("bn.running_var").data, rng, 0.5, 2.0);
    fill_uniform(b.ps.value("bn.gamma").data, rng, 0.5, 1.5);
    check_gradients(b.net, b.ps, randn(rng, {2, 3, 3, 3}), HalfSquaredNorm{}, Mode::kInfer);
}

TEST_CASE("activation gradients match finite differences") {
    Rng rng(7);
    SUBCASE("relu") {
        auto b = build([](SequentialT<double>& n) { n.add<ReluT<double>>("r"); }, 17);
        // keep values away from the kink
        TensorD x = randn(rng, {2, 6});
        for (auto& v : x.data)
            if (std::abs(v) < 0.05) v += 0.2;
        check_gradients(b.net, b.ps, x, HalfSquaredNorm{}, Mode::kInfer);
    }
    SUBCASE("prelu per channel") {
        auto b = build([](SequentialT<double>& n) { n.add<PReluT<double>>("p", 3); }, 18);
        TensorD x = randn(rng, {2, 3, 3, 3});
        for (auto& v : x.data)
            if (std::abs(v) < 0.05) v += 0.2;
        check_gradients(b.net, b.ps, x, HalfSquaredNorm{}, Mode::kInfer);
    }
    SUBCASE("sigmoid") {
        auto b = build([](SequentialT<double>& n) { n.add<SigmoidT<double>>("s"); }, 19);
        check_gradients(b.net, b.ps, randn(rng, {3, 4}), HalfSquaredNorm{}, Mode::kInfer);
    }
}

TEST_CASE("encoder-style composite gradients match finite differences") {
    auto b = build(
        [](SequentialT<double>& n) {
            n.add<Conv2dT<double>>("c1", 1, 4, 3, 2, 1);
            n.add<BatchNorm2dT<double>>("bn1", 4);
            n.add<PReluT<double>>("p1", 4);
            n.add<FlattenT<double>>("flat");
            n.add<DenseT<double>>("fc", 4 * 4 * 4, 3);
        },
        20);
    Rng rng(8);
    check_gradients(b.net, b.ps, randn(rng, {2, 1, 7, 7}), SoftmaxCE{{1, 2}}, Mode::kTrain);
}

TEST_CASE("decoder-style composite with bce-on-logits matches finite differences") {
    auto b = build(
        [](SequentialT<double>& n) {
            n.add<DenseT<double>>("fc", 3, 2 * 3 * 3);
            n.add<ReshapeT<double>>("rs", 2, 3, 3);
            n.add<ConvT2dT<double>>("d1", 2, 1, 3, 2, 1, 1);
        },
        21);
    Rng rng(9);
    TensorD target({2, 1, 6, 6});
    fill_uniform(target.data, rng, 0.0, 1.0);
    check_gradients(b.net, b.ps, randn(rng, {2, 3}), LossSpec<double>(BceLogits<double>{&target}),
                    Mode::kInfer);
}

TEST_CASE("elementwise add and multiply gradients match finite differences") {
    // y = a*b + a, loss = 0.5*||y||^2; grads below are the chain used in closed form
    Rng rng(10);
    const std::size_t n = 32;
    std::vector<double> a(n), bb(n);
    fill_uniform(a, rng, -2.0, 2.0);
    fill_uniform(bb, rng, -2.0, 2.0);
    auto loss = [&] {
        std::vector<double> y(n), t(n);
        kern::mul(t.data(), a.data(), bb.data(), n);
        kern::add(y.data(), t.data(), a.data(), n);
        return 0.5 * kern::dot(y.data(), y.data(), n);
    };
    std::vector<double> y(n), t(n), ga(n), gb(n);
    kern::mul(t.data(), a.data(), bb.data(), n);
    kern::add(y.data(), t.data(), a.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
        ga[i] = y[i] * (bb[i] + 1.0);
        gb[i] = y[i] * a[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v0 = a[i];
        a[i] = v0 + kH;
        double fp = loss();
        a[i] = v0 - kH;
        double fm = loss();
        a[i] = v0;
        CHECK(close(ga[i], (fp - fm) / (2 * kH)));
        v0 = bb[i];
        bb[i] = v0 + kH;
        fp = loss();
        bb[i] = v0 - kH;
        fm = loss();
        bb[i] = v0;
        CHECK(close(gb[i], (fp - fm) / (2 * kH)));
    }
}

TEST_CASE("shape mismatches raise errors that name the layer") {
    auto b = build([](SequentialT<double>& n) { n.add<DenseT<double>>("fc3", 4, 2); }, 22);
    TensorD bad({2, 5});
    try {
        b.net.forward(b.ps, bad, nullptr, Mode::kInfer);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("fc3") != std::string::npos);
    }
    Conv2dT<double> c("convx", 3, 4, 3, 1, 1);
    ParamStoreT<double> ps;
    Rng rng(1);
    c.register_params(ps, rng);
    TensorD wrongc({1, 2, 5, 5});
    CHECK_THROWS_WITH_AS(c.forward(ps, wrongc, nullptr, Mode::kInfer),
                         doctest::Contains("convx"), std::runtime_error);
}

TEST_CASE("float gradients track the double instantiation") {
    // same architecture and seed in both precisions; float gradients should
    // match double ones to well inside 1e-3 relative
    auto bd = build(
        [](SequentialT<double>& n) {
            n.add<Conv2dT<double>>("c1", 1, 4, 3, 2, 1);
            n.add<BatchNorm2dT<double>>("bn1", 4);
            n.add<PReluT<double>>("p1", 4);
            n.add<FlattenT<double>>("flat");
            n.add<DenseT<double>>("fc", 64, 3);
        },
        23);
    SequentialT<float> nf;
    nf.add<Conv2dT<float>>("c1", 1, 4, 3, 2, 1);
    nf.add<BatchNorm2dT<float>>("bn1", 4);
    nf.add<PReluT<float>>("p1", 4);
    nf.add<FlattenT<float>>("flat");
    nf.add<DenseT<float>>("fc", 64, 3);
    ParamStoreT<float> pf;
    Rng rng(23);
    nf.register_params(pf, rng);

    Rng rx(30);
    TensorD xd = randn(rx, {2, 1, 8, 8});
    TensorT<float> xf(xd.shape);
    for (std::size_t i = 0; i < xd.data.size(); ++i) xf.data[i] = static_cast<float>(xd.data[i]);

    auto rd = eval_backward(bd.net, bd.ps, xd, LossSpec<double>(SoftmaxCE{{0, 2}}), Mode::kTrain);
    auto rf = eval_backward(nf, pf, xf, LossSpec<float>(SoftmaxCE{{0, 2}}), Mode::kTrain);
    CHECK(std::abs(rd.loss - rf.loss) < 1e-4 * (1.0 + std::abs(rd.loss)));
    for (std::size_t i = 0; i < rd.input_grad.data.size(); ++i)
        CHECK(std::abs(rd.input_grad.data[i] - static_cast<double>(rf.input_grad.data[i])) < 2e-4);
}

TEST_CASE("identity dense layer reproduces its input") {
    SequentialT<double> net;
    net.add<DenseT<double>>("fc", 4, 4);
    ParamStoreT<double> ps;
    Rng rng(1);
    net.register_params(ps, rng);
    auto& w = ps.value("fc.weight");
    w.fill(0.0);
    for (int i = 0; i < 4; ++i) w.data[static_cast<std::size_t>(i * 4 + i)] = 1.0;
    ps.value("fc.bias").fill(0.0);

    TensorD x({2, 4});
    x.data = {1, -2, 3.5, 0, 7, 0.25, -1, 4};
    TensorD y = eval_forward(net, ps, x);
    CHECK(y.data == x.data);

    w.fill(0.0);
    TensorD z = eval_forward(net, ps, x);
    for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("two layer forward agrees with a hand rolled oracle") {
    SequentialT<double> net;
    net.add<DenseT<double>>("fc1", 3, 2);
    net.add<ReluT<double>>("act");
    net.add<DenseT<double>>("fc2", 2, 2);
    ParamStoreT<double> ps;
    Rng rng(42);
    net.register_params(ps, rng);

    TensorD x({1, 3}, 1.0);
    TensorD y = eval_forward(net, ps, x);

    const auto& w1 = ps.value("fc1.weight");
    const auto& b1 = ps.value("fc1.bias");
    const auto& w2 = ps.value("fc2.weight");
    const auto& b2 = ps.value("fc2.bias");
    double h[2];
    for (int o = 0; o < 2; ++o) {
        double acc = b1.data[static_cast<std::size_t>(o)];
        for (int i = 0; i < 3; ++i) acc += w1.data[static_cast<std::size_t>(o * 3 + i)];
        h[o] = std::max(acc, 0.0);
    }
    for (int o = 0; o < 2; ++o) {
        double acc = b2.data[static_cast<std::size_t>(o)];
        for (int i = 0; i < 2; ++i) acc += w2.data[static_cast<std::size_t>(o * 2 + i)] * h[i];
        CHECK(std::abs(y.data[static_cast<std::size_t>(o)] - acc) < 1e-12);
    }
}
