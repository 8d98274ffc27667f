#include <doctest.h>

#include <cmath>

#include "imfas/errors.hpp"
#include "imfas/lstm.hpp"
#include "imfas/rng.hpp"
#include "oracles.hpp"

using namespace imfas;

namespace {

LstmStack random_stack(int input, int hidden, int layers, std::uint64_t seed) {
    LstmStack stack = init_lstm(input, hidden, layers, seed);
    Rng rng(seed, 31);
    for (auto& layer : stack.layers) {
        for (Eigen::Index i = 0; i < layer.w_ih.size(); ++i) {
            layer.w_ih.data()[i] = rng.normal(0.0, 0.6);
        }
        for (Eigen::Index i = 0; i < layer.w_hh.size(); ++i) {
            layer.w_hh.data()[i] = rng.normal(0.0, 0.6);
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            layer.bias[i] = rng.normal(0.0, 0.3);
        }
    }
    return stack;
}

Vec random_vec(int n, Rng& rng) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

LstmLayerParams zero_cell(int input, int hidden) {
    LstmLayerParams p;
    p.w_ih = Mat::Zero(4 * hidden, input);
    p.w_hh = Mat::Zero(4 * hidden, hidden);
    p.bias = Vec::Zero(4 * hidden);
    return p;
}

}  // namespace

TEST_CASE("cell_forward all-zero parameters and state") {
    const LstmLayerParams p = zero_cell(3, 2);
    Rng rng(1);
    const CellOut out = cell_forward(p, random_vec(3, rng), Vec::Zero(2), Vec::Zero(2));
    CHECK(out.c.cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cell_forward zero params with unit cell state") {
    const LstmLayerParams p = zero_cell(3, 4);
    const CellOut out = cell_forward(p, Vec::Zero(3), Vec::Zero(4), Vec::Ones(4));
    // Gates sit at sigmoid(0) = 0.5: c' = 0.5, h' = 0.5 tanh(0.5).
    for (int i = 0; i < 4; ++i) {
        CHECK(out.c(i, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(out.h(i, 0) == doctest::Approx(0.23105857863000487).epsilon(1e-12));
    }
}

TEST_CASE("cell gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int input = 3, hidden = 4;
        LstmStack stack = random_stack(input, hidden, 1, seed * 7 + 2);
        LstmLayerParams& p = stack.layers[0];
        Rng rng(seed, 8);
        const Vec x = random_vec(input, rng);
        const Vec h0 = random_vec(hidden, rng);
        const Vec c0 = random_vec(hidden, rng);
        const Vec wh = random_vec(hidden, rng);
        const Vec wc = random_vec(hidden, rng);

        auto loss_from = [&](const LstmLayerParams& q, const Vec& xx, const Vec& hh,
                             const Vec& cc) {
            const CellOut out = cell_forward(q, xx, hh, cc);
            return wh.dot(out.h.col(0)) + wc.dot(out.c.col(0));
        };

        LstmCellCache cache;
        cell_forward(p, x, h0, c0, &cache);
        LstmGrads grads = zero_grads_like(stack);
        const CellBackOut back = cell_backward(p, cache, Mat(wh), Mat(wc), grads.layers[0]);

        // Parameters.
        LstmStack probe = stack;
        const auto spans = tensor_spans(probe);
        const Vec at = flatten(tensor_spans(std::as_const(probe)));
        const Vec fd = finite_diff_grad(
            [&](const Vec& flat) {
                unflatten(flat, spans);
                return loss_from(probe.layers[0], x, h0, c0);
            },
            at, 1e-6);
        const Vec got = flatten(tensor_spans(std::as_const(grads)));
        CHECK(oracles::max_rel_gap(got, fd) < 1e-4);

        // Inputs and state.
        const Vec fd_x = finite_diff_grad(
            [&](const Vec& v) { return loss_from(p, v, h0, c0); }, x, 1e-6);
        const Vec fd_h = finite_diff_grad(
            [&](const Vec& v) { return loss_from(p, x, v, c0); }, h0, 1e-6);
        const Vec fd_c = finite_diff_grad(
            [&](const Vec& v) { return loss_from(p, x, h0, v); }, c0, 1e-6);
        CHECK(oracles::max_rel_gap(back.x.col(0), fd_x) < 1e-4);
        CHECK(oracles::max_rel_gap(back.h.col(0), fd_h) < 1e-4);
        CHECK(oracles::max_rel_gap(back.c.col(0), fd_c) < 1e-4);
    }
}

TEST_CASE("cell_backward zero upstream gradients give zeros") {
    LstmStack stack = random_stack(3, 4, 1, 5);
    Rng rng(5, 4);
    LstmCellCache cache;
    cell_forward(stack.layers[0], random_vec(3, rng), random_vec(4, rng), random_vec(4, rng),
                 &cache);
    LstmGrads grads = zero_grads_like(stack);
    const CellBackOut back = cell_backward(stack.layers[0], cache, Mat(Vec(Vec::Zero(4))),
                                           Mat(Vec(Vec::Zero(4))), grads.layers[0]);
    CHECK(back.x.cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.h.cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.c.cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.layers[0].w_ih.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient flows through a saturated forget gate") {
    // With sigmoid(f) ~ 1 and no gradient on h', grad_c should pass through.
    LstmLayerParams p = zero_cell(2, 3);
    p.bias.segment(3, 3).setConstant(20.0);
    Rng rng(6);
    const Vec c0 = random_vec(3, rng);
    LstmCellCache cache;
    cell_forward(p, Vec::Zero(2), Vec::Zero(3), c0, &cache);

    LstmStack stack;
    stack.layers.push_back(p);
    LstmGrads grads = zero_grads_like(stack);
    const Vec g = random_vec(3, rng);
    const CellBackOut back =
        cell_backward(p, cache, Mat(Vec(Vec::Zero(3))), Mat(g), grads.layers[0]);
    CHECK(oracles::max_rel_gap(back.c.col(0), g) < 1e-6);
}

TEST_CASE("unroll of an empty sequence returns no states") {
    const LstmStack stack = random_stack(3, 4, 2, 1);
    const LstmState init = zero_state(stack, 1);
    UnrollCache cache;
    const auto states = unroll(stack, init, {}, &cache);
    CHECK(states.empty());
    CHECK(cache.steps.empty());
}

TEST_CASE("one-layer one-step unroll equals a single cell_forward") {
    LstmStack stack = random_stack(3, 4, 1, 9);
    Rng rng(9, 2);
    const Vec x = random_vec(3, rng);
    LstmState init;
    init.h.push_back(Mat(random_vec(4, rng)));
    init.c.push_back(Mat(random_vec(4, rng)));

    const auto states = unroll(stack, init, {Mat(x)});
    const CellOut direct = cell_forward(stack.layers[0], x, init.h[0], init.c[0]);
    CHECK(states.size() == 1);
    CHECK(states[0].h[0] == direct.h);
    CHECK(states[0].c[0] == direct.c);
}

TEST_CASE("unroll rejects ragged input dims") {
    const LstmStack stack = random_stack(3, 4, 1, 2);
    const LstmState init = zero_state(stack, 1);
    std::vector<Mat> inputs{Mat::Zero(3, 1), Mat::Zero(2, 1)};
    CHECK_THROWS_AS(unroll(stack, init, inputs), ShapeError);
}

TEST_CASE("BPTT matches finite differences end to end") {
    const int input = 3, hidden = 4, layers = 2, steps = 3;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        LstmStack stack = random_stack(input, hidden, layers, seed * 11 + 3);
        Rng rng(seed, 12);
        std::vector<Mat> inputs;
        for (int t = 0; t < steps; ++t) inputs.push_back(Mat(random_vec(input, rng)));
        LstmState init;
        for (int k = 0; k < layers; ++k) {
            init.h.push_back(Mat(random_vec(hidden, rng)));
            init.c.push_back(Mat(random_vec(hidden, rng)));
        }
        const Vec w = random_vec(hidden, rng);

        auto loss_of = [&](const LstmStack& s, const LstmState& ini,
                           const std::vector<Mat>& ins) {
            const auto states = unroll(s, ini, ins);
            return w.dot(states.back().h.back().col(0));
        };

        UnrollCache cache;
        const auto states = unroll(stack, init, inputs, &cache);
        LstmGrads grads = zero_grads_like(stack);
        std::vector<Mat> grad_inputs;
        const LstmState grad_init = unroll_backward(stack, cache, Mat(w), grads, &grad_inputs);

        // Parameters.
        LstmStack probe = stack;
        const auto spans = tensor_spans(probe);
        const Vec at = flatten(tensor_spans(std::as_const(probe)));
        const Vec fd = finite_diff_grad(
            [&](const Vec& flat) {
                unflatten(flat, spans);
                return loss_of(probe, init, inputs);
            },
            at, 1e-6);
        CHECK(oracles::max_rel_gap(flatten(tensor_spans(std::as_const(grads))), fd) < 1e-4);

        // Initial state of every layer.
        for (int k = 0; k < layers; ++k) {
            const Vec fd_h = finite_diff_grad(
                [&](const Vec& v) {
                    LstmState ini = init;
                    ini.h[k] = Mat(v);
                    return loss_of(stack, ini, inputs);
                },
                Vec(init.h[k].col(0)), 1e-6);
            const Vec fd_c = finite_diff_grad(
                [&](const Vec& v) {
                    LstmState ini = init;
                    ini.c[k] = Mat(v);
                    return loss_of(stack, ini, inputs);
                },
                Vec(init.c[k].col(0)), 1e-6);
            CHECK(oracles::max_rel_gap(grad_init.h[k].col(0), fd_h) < 1e-4);
            CHECK(oracles::max_rel_gap(grad_init.c[k].col(0), fd_c) < 1e-4);
        }

        // Inputs.
        for (int t = 0; t < steps; ++t) {
            const Vec fd_x = finite_diff_grad(
                [&](const Vec& v) {
                    std::vector<Mat> ins = inputs;
                    ins[t] = Mat(v);
                    return loss_of(stack, init, ins);
                },
                Vec(inputs[t].col(0)), 1e-6);
            CHECK(oracles::max_rel_gap(grad_inputs[t].col(0), fd_x) < 1e-4);
        }
    }
}

TEST_CASE("prefix consistency: shorter unrolls are prefixes of longer ones") {
    const LstmStack stack = random_stack(3, 5, 2, 14);
    Rng rng(14, 6);
    std::vector<Mat> inputs;
    for (int t = 0; t < 6; ++t) inputs.push_back(Mat(random_vec(3, rng)));
    LstmState init = zero_state(stack, 1);
    for (auto& h : init.h) h = Mat(random_vec(5, rng));

    const auto full = unroll(stack, init, inputs);
    for (int g = 1; g < 6; ++g) {
        const std::vector<Mat> prefix(inputs.begin(), inputs.begin() + g);
        const auto part = unroll(stack, init, prefix);
        for (int t = 0; t < g; ++t) {
            for (int k = 0; k < 2; ++k) {
                CHECK(part[t].h[k] == full[t].h[k]);  // bitwise
                CHECK(part[t].c[k] == full[t].c[k]);
            }
        }
    }
}

TEST_CASE("hidden dimension is conserved across the unroll") {
    const LstmStack stack = random_stack(3, 5, 2, 15);
    Rng rng(15, 1);
    std::vector<Mat> inputs;
    for (int t = 0; t < 4; ++t) inputs.push_back(Mat(random_vec(3, rng)));
    const auto states = unroll(stack, zero_state(stack, 1), inputs);
    for (const auto& st : states) {
        for (int k = 0; k < 2; ++k) {
            CHECK(st.h[k].rows() == 5);
            CHECK(st.c[k].rows() == 5);
        }
    }
}

TEST_CASE("init_lstm sets the forget-gate bias to one") {
    const LstmStack stack = init_lstm(3, 4, 2, 0);
    for (const auto& layer : stack.layers) {
        CHECK(layer.bias.segment(4, 4) == Vec::Ones(4));
        CHECK(layer.bias.head(4).cwiseAbs().maxCoeff() == 0.0);
        CHECK(layer.bias.tail(8).cwiseAbs().maxCoeff() == 0.0);
    }
}
