#include <doctest.h>

#include <cmath>
#include <sstream>

#include "test_support.hpp"
#include "vcgan/adam.hpp"
#include "vcgan/errors.hpp"
#include "vcgan/finite_diff.hpp"
#include "vcgan/kernels.hpp"
#include "vcgan/param_io.hpp"
#include "vcgan/vgan.hpp"

using namespace vcgan;
using vcgan::testing::max_abs;
using vcgan::testing::max_relative_error;
using vcgan::testing::randomize;
using vcgan::testing::uniform_matrix;

namespace {

DenseLayer identity_layer(LayerKind kind, std::size_t dim) {
    auto l = DenseLayer::fully_connected(kind, dim, dim);
    for (std::size_t i = 0; i < dim; ++i) l.weights(i, i) = 1.0;
    return l;
}

double sum_loss(const Matrix& out) {
    double s = 0.0;
    for (double v : out.flat()) s += v;
    return s;
}

// Fixed nonlinear scalar loss so output gradients are not constant.
double cubic_loss(const Matrix& out) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = out.data()[i];
        s += 0.5 * v * v + 0.1 * v * v * v + 0.3 * v * static_cast<double>(i % 3);
    }
    return s;
}

Matrix cubic_loss_grad(const Matrix& out) {
    Matrix g(out.rows(), out.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = out.data()[i];
        g.data()[i] = v + 0.3 * v * v + 0.3 * static_cast<double>(i % 3);
    }
    return g;
}

} // namespace

TEST_CASE("fc_forward basic cases") {
    CHECK(fc_forward(Matrix{{1, 2}}, identity_layer(LayerKind::FcLinear, 2)) == Matrix{{1, 2}});
    CHECK(fc_forward(Matrix{{-1, 2}}, identity_layer(LayerKind::FcRelu, 2)) == Matrix{{0, 2}});

    auto zero = DenseLayer::fully_connected(LayerKind::FcLinear, 2, 1);
    zero.bias(0, 0) = 3.0;
    CHECK(fc_forward(Matrix{{5, 5}}, zero) == Matrix{{3}});
}

TEST_CASE("fc_forward shape error names the layer") {
    auto l = DenseLayer::fully_connected(LayerKind::FcLinear, 3, 2);
    try {
        fc_forward(Matrix{{1, 2}}, l, 4);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("layer 4") != std::string::npos);
    }
    LayerStack stack({DenseLayer::fully_connected(LayerKind::FcLinear, 3, 2)});
    CHECK_THROWS_AS(stack.forward(Matrix{{1, 2}}), ShapeError);
}

TEST_CASE("sigmoid outputs stay strictly inside (0, 1) and do not overflow") {
    auto l = identity_layer(LayerKind::FcSigmoid, 1);
    const Matrix out = fc_forward(Matrix{{-700.0}, {-30.0}, {0.0}, {30.0}}, l);
    for (double v : out.flat()) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
    CHECK(out(0, 0) < 1e-300);
    CHECK(out(2, 0) == doctest::Approx(0.5));
    CHECK(out(3, 0) < 1.0);
}

TEST_CASE("layer stack validates the shape chain") {
    CHECK_THROWS_AS(LayerStack({DenseLayer::fully_connected(LayerKind::FcRelu, 2, 3),
                                DenseLayer::fully_connected(LayerKind::FcLinear, 4, 1)}),
                    ShapeError);
    CHECK_THROWS_AS(LayerStack({DenseLayer::fully_connected(LayerKind::FcLinear, 2, 5), DenseLayer::sampler(2)}),
                    ShapeError);
    CHECK_NOTHROW(LayerStack({DenseLayer::fully_connected(LayerKind::FcLinear, 2, 4), DenseLayer::sampler(2)}));
}

TEST_CASE("stack_forward") {
    SUBCASE("single identity layer") {
        LayerStack s({identity_layer(LayerKind::FcLinear, 1)});
        CHECK(s.forward(Matrix{{7}}) == Matrix{{7}});
    }
    SUBCASE("zero-weight relu stack is input independent") {
        auto l1 = DenseLayer::fully_connected(LayerKind::FcRelu, 2, 3);
        auto l2 = DenseLayer::fully_connected(LayerKind::FcRelu, 3, 2);
        l1.bias.fill(1.0);
        l2.bias.fill(1.0);
        LayerStack s({l1, l2});
        CHECK(s.forward(Matrix{{-5, 9}, {0.3, 0.1}}) == Matrix{{1, 1}, {1, 1}});
    }
    SUBCASE("noise must accompany a sampler and only a sampler") {
        LayerStack with({DenseLayer::fully_connected(LayerKind::FcLinear, 1, 2), DenseLayer::sampler(1)});
        CHECK_THROWS_AS(with.forward(Matrix{{1}}), ConfigError);
        LayerStack without({identity_layer(LayerKind::FcLinear, 1)});
        CHECK_THROWS_AS(without.forward(Matrix{{1}}, Matrix{{0.5}}), ConfigError);
        CHECK_THROWS_AS(with.forward(Matrix{{1}}, Matrix{{0.5, 0.5}}), ShapeError);
    }
    SUBCASE("table I generator is deterministic for fixed noise") {
        LayerStack gen = GeneratorSpec{2, 2, 16}.build();
        gen.init_params(5);
        Rng rng(3);
        const Matrix x = uniform_matrix(8, 2, -1, 1, rng);
        const Matrix noise = standard_normal(8, 16, rng);
        const Matrix a = gen.forward(x, noise);
        const Matrix b = gen.forward(x, noise);
        CHECK(a == b);
        CHECK(a.cols() == 2);
    }
}

TEST_CASE("stack_backward") {
    SUBCASE("identity linear chain rule base case") {
        LayerStack s({identity_layer(LayerKind::FcLinear, 1)});
        s.forward(Matrix{{2.5}});
        ParameterGrads g;
        const Matrix d_in = s.backward(Matrix{{1}}, g);
        CHECK(d_in == Matrix{{1}});
        CHECK(g.blocks[0] == Matrix{{2.5}});
        CHECK(g.blocks[1] == Matrix{{1}});
    }
    SUBCASE("backward before forward is a state error") {
        LayerStack s({identity_layer(LayerKind::FcLinear, 1)});
        ParameterGrads g;
        CHECK_THROWS_AS(s.backward(Matrix{{1}}, g), StateError);
        s.forward(Matrix{{1}});
        CHECK_NOTHROW(s.backward(Matrix{{1}}, g));
        CHECK_THROWS_AS(s.backward(Matrix{{1, 2}}, g), ShapeError);
    }
    SUBCASE("dead relu units give zero weight gradients") {
        auto l = DenseLayer::fully_connected(LayerKind::FcRelu, 2, 3);
        l.weights.fill(1.0);
        l.bias.fill(-10.0);
        LayerStack s({l});
        s.forward(Matrix{{1, 2}, {0.5, -1}});
        ParameterGrads g;
        const Matrix d_in = s.backward(Matrix(2, 3, 1.0), g);
        CHECK(max_abs(g) == 0.0);
        for (double v : d_in.flat()) CHECK(v == 0.0);
    }
    SUBCASE("relu subgradient at exactly zero is zero") {
        auto l = DenseLayer::fully_connected(LayerKind::FcRelu, 1, 1);
        l.weights(0, 0) = 1.0;
        LayerStack s({l});
        s.forward(Matrix{{0.0}});
        ParameterGrads g;
        const Matrix d_in = s.backward(Matrix{{1.0}}, g);
        CHECK(d_in(0, 0) == 0.0);
        CHECK(g.blocks[1](0, 0) == 0.0);
    }
}

TEST_CASE("backprop matches central finite differences for every layer kind") {
    Rng rng(2024);
    const LayerKind kinds[] = {LayerKind::FcRelu, LayerKind::FcLinear, LayerKind::FcSigmoid};
    for (int trial = 0; trial < 12; ++trial) {
        CAPTURE(trial);
        std::uniform_int_distribution<std::size_t> width(1, 8);
        const std::size_t in = width(rng), h1 = width(rng), out = width(rng);
        const LayerKind k0 = kinds[trial % 3], k1 = kinds[(trial / 3) % 3];
        const bool with_sampler = trial % 2 == 1;
        std::size_t latent = 0;
        std::vector<DenseLayer> layers;
        if (with_sampler) {
            latent = std::max<std::size_t>(1, h1 / 2);
            layers.push_back(DenseLayer::fully_connected(LayerKind::FcLinear, in, 2 * latent));
            layers.push_back(DenseLayer::sampler(latent));
            layers.push_back(DenseLayer::fully_connected(k1, latent, out));
        } else {
            layers.push_back(DenseLayer::fully_connected(k0, in, h1));
            layers.push_back(DenseLayer::fully_connected(k1, h1, 6));
            layers.push_back(DenseLayer::fully_connected(LayerKind::FcLinear, 6, out));
        }
        LayerStack stack(std::move(layers));
        randomize(stack, rng);
        const Matrix x = uniform_matrix(5, in, -2.0, 2.0, rng);
        const Matrix noise = with_sampler ? standard_normal(5, latent, rng) : Matrix();
        const Matrix* np = with_sampler ? &noise : nullptr;

        const Matrix out_m = stack.forward(x, np);
        ParameterGrads analytic;
        stack.backward(cubic_loss_grad(out_m), analytic);
        const auto numeric = finite_diff_grad(stack, x, np, cubic_loss);
        CHECK(max_relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("input gradient matches finite differences") {
    Rng rng(8);
    LayerStack stack({DenseLayer::fully_connected(LayerKind::FcSigmoid, 3, 5),
                      DenseLayer::fully_connected(LayerKind::FcLinear, 5, 2)});
    randomize(stack, rng);
    Matrix x = uniform_matrix(2, 3, -2.0, 2.0, rng);
    ParameterGrads g;
    const Matrix d_in = stack.backward(cubic_loss_grad(stack.forward(x)), g);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x.data()[i];
        x.data()[i] = saved + 1e-5;
        const double plus = cubic_loss(stack.forward(x));
        x.data()[i] = saved - 1e-5;
        const double minus = cubic_loss(stack.forward(x));
        x.data()[i] = saved;
        CHECK(d_in.data()[i] == doctest::Approx((plus - minus) / 2e-5).epsilon(1e-6));
    }
}

TEST_CASE("finite_diff_grad examples") {
    SUBCASE("identity stack output as loss") {
        LayerStack s({identity_layer(LayerKind::FcLinear, 1)});
        const Matrix x{{1.0}};
        const auto g = finite_diff_grad(s, x, nullptr, sum_loss);
        CHECK(std::abs(g.blocks[0](0, 0) - 1.0) < 1e-8);
    }
    SUBCASE("quadratic loss matches 2 w x^2") {
        auto l = DenseLayer::fully_connected(LayerKind::FcLinear, 1, 1);
        l.weights(0, 0) = 0.7;
        LayerStack s({l});
        const double x = 1.3;
        const auto g = finite_diff_grad(s, Matrix{{x}}, nullptr, [](const Matrix& o) { return o(0, 0) * o(0, 0); });
        CHECK(g.blocks[0](0, 0) == doctest::Approx(2.0 * 0.7 * x * x).epsilon(1e-8));
    }
    SUBCASE("zero input: weight grads vanish, bias grads are one") {
        Rng rng(1);
        LayerStack s({DenseLayer::fully_connected(LayerKind::FcLinear, 3, 2)});
        randomize(s, rng);
        const auto g = finite_diff_grad(s, Matrix(1, 3), nullptr, sum_loss);
        for (double v : g.blocks[0].flat()) CHECK(std::abs(v) < 1e-9);
        for (double v : g.blocks[1].flat()) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("non-finite objective is a numeric error") {
        LayerStack s({identity_layer(LayerKind::FcLinear, 1)});
        CHECK_THROWS_AS(finite_diff_grad(s, [] { return std::nan(""); }), NumericError);
    }
    SUBCASE("parameters are restored exactly") {
        Rng rng(4);
        LayerStack s({DenseLayer::fully_connected(LayerKind::FcRelu, 2, 3)});
        randomize(s, rng);
        const auto before = s.flat_parameters();
        finite_diff_grad(s, Matrix{{0.1, 0.2}}, nullptr, cubic_loss);
        CHECK(s.flat_parameters() == before);
    }
}

TEST_CASE("adam_step") {
    SUBCASE("first step moves by about -lr * sign(g)") {
        AdamState st(1, AdamConfig{1e-3});
        std::vector<double> w{0.0};
        const std::vector<double> g{0.5};
        adam_step(w, g, st);
        CHECK(st.step == 1);
        CHECK(std::abs(w[0] + 1e-3) < 1e-10);
    }
    SUBCASE("zero gradient is a fixed point") {
        AdamState st(3, AdamConfig{1e-3});
        std::vector<double> w{1.0, -2.0, 3.5};
        const auto start = w;
        const std::vector<double> zero(3, 0.0);
        for (int i = 0; i < 50; ++i) adam_step(w, zero, st);
        for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w[i] - start[i]) < 1e-12);
    }
    SUBCASE("converges on a scalar quadratic") {
        AdamState st(1, AdamConfig{0.1});
        std::vector<double> w{0.0};
        for (int i = 0; i < 200; ++i) {
            const std::vector<double> g{2.0 * (w[0] - 3.0)};
            adam_step(w, g, st);
        }
        CHECK(std::abs(w[0] - 3.0) < 0.1);
    }
    SUBCASE("moment shapes mirror the stack and v stays nonnegative") {
        LayerStack s = GeneratorSpec{1, 1, 4}.build();
        AdamState st(s, AdamConfig{});
        const auto blocks = s.parameter_blocks();
        REQUIRE(st.m.size() == blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) CHECK(st.v[b].size() == blocks[b].size());
        Rng rng(2);
        ParameterGrads g = s.zero_grads();
        for (auto& blk : g.blocks)
            for (double& v : blk.flat()) v = std::normal_distribution<double>(0, 1)(rng);
        adam_step(s, g, st);
        for (const auto& v : st.v)
            for (double x : v) CHECK(x >= 0.0);
    }
    SUBCASE("shape mismatch") {
        AdamState st(2, AdamConfig{});
        std::vector<double> w{0.0};
        const std::vector<double> g{1.0};
        CHECK_THROWS_AS(adam_step(w, g, st), ShapeError);
    }
}

TEST_CASE("init_params") {
    LayerStack a = GeneratorSpec{2, 2, 16}.build();
    LayerStack b = a, c = a;
    a.init_params(42);
    b.init_params(42);
    c.init_params(43);
    CHECK(a.flat_parameters() == b.flat_parameters());
    CHECK(a.flat_parameters() != c.flat_parameters());
    for (const auto& l : a.layers())
        for (double v : l.bias.flat()) CHECK(v == 0.0);

    LayerStack relu({DenseLayer::fully_connected(LayerKind::FcRelu, 20, 20)});
    relu.init_params(9);
    std::vector<double> w(relu.layers()[0].weights.flat().begin(), relu.layers()[0].weights.flat().end());
    CHECK(std::abs(vcgan::testing::stddev(w) / std::sqrt(2.0 / 20.0) - 1.0) < 0.2);

    LayerStack lin({DenseLayer::fully_connected(LayerKind::FcLinear, 50, 40)});
    lin.init_params(9);
    std::vector<double> wl(lin.layers()[0].weights.flat().begin(), lin.layers()[0].weights.flat().end());
    CHECK(std::abs(vcgan::testing::stddev(wl) / std::sqrt(1.0 / 50.0) - 1.0) < 0.2);
}

TEST_CASE("layer stack save/load round trip is bit exact") {
    for (auto stack : {GeneratorSpec{2, 2, 16}.build(), DiscriminatorSpec{1, 1, false}.build(),
                       DiscriminatorSpec{2, 2, true}.build()}) {
        Rng rng(77);
        randomize(stack, rng, 1.7);
        std::stringstream buf;
        save_stack(buf, stack, 0xfeedULL);
        const auto loaded = load_stack(buf);
        CHECK(loaded.seed == 0xfeedULL);
        CHECK(loaded.stack.layers() == stack.layers());
        CHECK(loaded.stack.flat_parameters() == stack.flat_parameters());
    }
    std::stringstream junk("not a model");
    CHECK_THROWS_AS(load_stack(junk), ConfigError);

    std::stringstream truncated;
    save_stack(truncated, GeneratorSpec{}.build(), 1);
    std::string bytes = truncated.str();
    bytes.resize(bytes.size() / 2);
    std::stringstream half(bytes);
    CHECK_THROWS_AS(load_stack(half), ConfigError);
}

TEST_CASE("forward is bit-identical across repeated calls under both kernel tables") {
    LayerStack gen = GeneratorSpec{1, 1, 16}.build();
    gen.init_params(3);
    Rng rng(5);
    const Matrix x = uniform_matrix(33, 1, -1, 1, rng);
    const Matrix noise = standard_normal(33, 16, rng);
    const Matrix a = gen.forward(x, noise);
    CHECK(gen.forward(x, noise) == a);

    const auto& prev = kernels::set_active(kernels::scalar());
    const Matrix s1 = gen.forward(x, noise);
    const Matrix s2 = gen.forward(x, noise);
    kernels::set_active(prev);
    CHECK(s1 == s2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == doctest::Approx(s1.data()[i]).epsilon(1e-12));
}
