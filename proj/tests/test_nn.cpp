#include <doctest.h>

#include <cmath>

#include "imfas/errors.hpp"
#include "imfas/nn.hpp"
#include "imfas/rng.hpp"
#include "oracles.hpp"

using namespace imfas;

namespace {

MlpParams random_mlp(const MlpSpec& spec, std::uint64_t seed, double weight_scale = 1.0) {
    MlpParams params = init_params(spec, seed);
    Rng rng(seed, 77);
    for (auto& layer : params) {
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
            layer.weights.data()[i] = rng.normal(0.0, weight_scale);
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            layer.bias[i] = rng.normal(0.0, 0.3);
        }
    }
    return params;
}

Vec random_vec(int n, Rng& rng, double sd = 1.0) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal(0.0, sd);
    return v;
}

}  // namespace

TEST_CASE("mlp_forward identity case") {
    DenseLayer layer;
    layer.weights = Mat::Identity(3, 3);
    layer.bias = Vec::Zero(3);
    layer.activation = Activation::Identity;
    Vec x(3);
    x << 1, 2, 3;
    const Vec y = mlp_forward(MlpParams{layer}, x);
    CHECK(y.isApprox(x, 0.0));
}

TEST_CASE("mlp_forward sigmoid at zero") {
    DenseLayer layer;
    layer.weights = Mat::Ones(1, 2);
    layer.bias = Vec::Zero(1);
    layer.activation = Activation::Sigmoid;
    const Vec y = mlp_forward(MlpParams{layer}, Vec::Zero(2));
    CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mlp_forward matches a straight-line duplicate implementation") {
    MlpSpec spec;
    spec.layer_dims = {3, 5, 2};
    spec.activations = {Activation::Tanh, Activation::Sigmoid};
    const MlpParams params = random_mlp(spec, 42);
    Rng rng(42, 1);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec x = random_vec(3, rng);
        const Vec got = mlp_forward(params, x);
        const Vec want = oracles::naive_mlp_forward(params, x);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("mlp_forward rejects a dimension mismatch") {
    MlpParams params = init_params(mlp_spec(3, {2}), 0);
    CHECK_THROWS_AS(mlp_forward(params, Vec::Zero(4)), ShapeError);
}

TEST_CASE("mlp_backward analytic forms for a linear layer") {
    DenseLayer layer;
    Rng rng(7);
    layer.weights = Mat::Zero(2, 3);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
        layer.weights.data()[i] = rng.normal();
    }
    layer.bias = Vec::Zero(2);
    layer.activation = Activation::Identity;
    const MlpParams params{layer};

    const Vec x = random_vec(3, rng);
    Vec g(2);
    g << 0.3, -1.2;

    MlpCache cache;
    mlp_forward(params, x, &cache);
    MlpGrads grads = zero_grads_like(params);
    const Mat grad_x = mlp_backward(params, cache, Mat(g), grads);

    const Mat want_dw = g * x.transpose();
    const Vec want_dx = layer.weights.transpose() * g;
    CHECK((grads.weights[0] - want_dw).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((grads.bias[0] - g).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((grad_x.col(0) - want_dx).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mlp_backward zero upstream gradient gives zero grads") {
    MlpSpec spec;
    spec.layer_dims = {4, 3, 2};
    spec.activations = {Activation::Relu, Activation::Identity};
    const MlpParams params = random_mlp(spec, 3);
    Rng rng(3, 2);
    MlpCache cache;
    mlp_forward(params, random_vec(4, rng), &cache);
    MlpGrads grads = zero_grads_like(params);
    const Mat grad_x = mlp_backward(params, cache, Mat(Vec(Vec::Zero(2))), grads);
    CHECK(grad_x.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& w : grads.weights) CHECK(w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp gradients match finite differences for every activation") {
    const Activation acts[] = {Activation::Identity, Activation::Relu, Activation::Tanh,
                               Activation::Sigmoid};
    for (Activation hidden : acts) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            MlpSpec spec;
            spec.layer_dims = {4, 6, 3};
            spec.activations = {hidden, Activation::Identity};
            const MlpParams params = random_mlp(spec, seed * 13 + 1);
            Rng rng(seed, 5);
            const Vec x = random_vec(4, rng);
            const Vec w = random_vec(3, rng);  // fixed readout of the output

            auto loss = [&](const MlpParams& p) { return w.dot(mlp_forward(p, x)); };

            MlpCache cache;
            mlp_forward(params, x, &cache);
            MlpGrads grads = zero_grads_like(params);
            mlp_backward(params, cache, Mat(w), grads);

            const MlpGrads fd = finite_diff_grad(loss, params, 1e-6);
            const Vec got = flatten(tensor_spans(std::as_const(grads)));
            const Vec want = flatten(tensor_spans(std::as_const(fd)));
            CHECK(oracles::max_rel_gap(got, want) < 1e-4);
        }
    }
}

TEST_CASE("mlp backward composes across layers") {
    MlpSpec spec;
    spec.layer_dims = {3, 4, 4, 2};
    spec.activations = {Activation::Tanh, Activation::Sigmoid, Activation::Identity};
    const MlpParams params = random_mlp(spec, 11);
    Rng rng(11, 3);
    const Vec x = random_vec(3, rng);
    const Vec g = random_vec(2, rng);

    MlpCache cache;
    mlp_forward(params, x, &cache);
    MlpGrads grads = zero_grads_like(params);
    const Mat grad_x = mlp_backward(params, cache, Mat(g), grads);

    // Chain single-layer backwards by hand.
    Mat upstream(g);
    MlpGrads chained = zero_grads_like(params);
    for (int k = 2; k >= 0; --k) {
        const MlpParams single{params[k]};
        MlpCache single_cache;
        const Mat layer_in = (k == 0) ? Mat(x) : cache.post[k - 1];
        mlp_forward(single, layer_in, &single_cache);
        MlpGrads single_grads = zero_grads_like(single);
        upstream = mlp_backward(single, single_cache, upstream, single_grads);
        chained.weights[k] = single_grads.weights[0];
        chained.bias[k] = single_grads.bias[0];
    }
    CHECK((grad_x - upstream).cwiseAbs().maxCoeff() < 1e-13);
    for (int k = 0; k < 3; ++k) {
        CHECK((grads.weights[k] - chained.weights[k]).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("init_params is deterministic and seed sensitive") {
    const MlpSpec spec = mlp_spec(5, {4, 3});
    const MlpParams a = init_params(spec, 9);
    const MlpParams b = init_params(spec, 9);
    const MlpParams c = init_params(spec, 10);
    const Vec fa = flatten(tensor_spans(a));
    const Vec fb = flatten(tensor_spans(b));
    const Vec fc = flatten(tensor_spans(c));
    CHECK(fa == fb);  // bitwise
    CHECK(fa != fc);
}

TEST_CASE("init_params respects the Glorot bound") {
    const MlpSpec spec = mlp_spec(300, {200});
    const MlpParams params = init_params(spec, 4);
    const double bound = std::sqrt(6.0 / (300 + 200));
    CHECK(bound == doctest::Approx(0.10954451150103321).epsilon(1e-12));
    const double max_abs = params[0].weights.cwiseAbs().maxCoeff();
    CHECK(max_abs <= bound);
    CHECK(max_abs > 0.8 * bound);  // the full range is actually used
    CHECK(params[0].bias.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("init_params rejects a zero-width layer") {
    MlpSpec spec;
    spec.layer_dims = {3, 0};
    spec.activations = {Activation::Identity};
    CHECK_THROWS_AS(init_params(spec, 0), SpecError);
}

TEST_CASE("finite_diff_grad on analytic functions") {
    Rng rng(21);
    const Vec at = random_vec(12, rng);

    const Vec grad_sum = finite_diff_grad(
        [](const Vec& v) { return v.sum(); }, at, 1e-6);
    CHECK((grad_sum.array() - 1.0).abs().maxCoeff() < 1e-9);

    const Vec grad_sq = finite_diff_grad(
        [](const Vec& v) { return 0.5 * v.squaredNorm(); }, at, 1e-6);
    CHECK((grad_sq - at).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("finite_diff_grad rejects non-finite evaluations") {
    CHECK_THROWS_AS(finite_diff_grad([](const Vec&) { return std::nan(""); },
                                     Vec::Zero(2), 1e-6),
                    NumericError);
}

TEST_CASE("forward is deterministic") {
    const MlpSpec spec = mlp_spec(6, {5, 4});
    const MlpParams params = init_params(spec, 2);
    Rng rng(2, 9);
    const Vec x = random_vec(6, rng);
    const Vec y1 = mlp_forward(params, x);
    const Vec y2 = mlp_forward(params, x);
    CHECK(y1 == y2);
}
