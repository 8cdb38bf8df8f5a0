#include <cmath>
#include <numbers>

#include <doctest.h>

#include "oracles.hpp"
#include "fcdbn/deep_net.hpp"

using namespace fcdbn;
using namespace fcdbn::testing;

namespace {

MlpModel small_net(std::uint64_t seed, Activation hidden = Activation::sigmoid) {
    MlpTrainConfig cfg;
    cfg.hidden_activation = hidden;
    cfg.dropout_input = 0.0;
    cfg.dropout_hidden = 0.0;
    RngStream rng(seed);
    const std::size_t arch[] = {4, 3, 1};
    MlpModel m = init_mlp(arch, cfg, rng);
    for (DenseLayer& d : m.layers) {
        for (double& w : d.weights.flat()) w = rng.gaussian(0.0, 0.8);
        for (double& b : d.bias) b = rng.gaussian(0.0, 0.5);
    }
    return m;
}

}  // namespace

TEST_SUITE("deepnet") {

TEST_CASE("greedy_pretrain propagates constant data as constant activations") {
    const Mat data(10, 16, 0.7);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    const std::size_t dims[] = {16, 8, 4};
    const DbnStack s = greedy_pretrain(dims, data, cfg, FcOptions{});
    CHECK(s.dims() == std::vector<std::size_t>{16, 8, 4});
    const Mat h1 = hidden_probs(data, s.layers[0]);
    for (std::size_t r = 1; r < 10; ++r) CHECK(max_abs_diff(h1.row(r), h1.row(0)) == 0.0);
    const Mat out = encode_batch(s, data);
    for (std::size_t r = 1; r < 10; ++r) CHECK(max_abs_diff(out.row(r), out.row(0)) == 0.0);
}

TEST_CASE("greedy_pretrain accepts the stage widths") {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    const std::size_t stage1[] = {1024, 512, 512};
    FcOptions fc;
    fc.filters = 2;
    fc.image_rows = 32;
    fc.image_cols = 32;
    fc.first_layer_units = UnitKind::gaussian;
    fc.alpha = 0.1;
    fc.beta = 1e-4;
    const DbnStack s1 = greedy_pretrain(stage1, random_mat(4, 1024, 1), cfg, fc);
    CHECK(s1.dims() == std::vector<std::size_t>{1024, 512, 512});
    CHECK(s1.layers[0].filtered());
    CHECK_FALSE(s1.layers[1].filtered());
    CHECK_NOTHROW(s1.validate());
    const std::size_t stage2[] = {1536, 1024, 512};
    Mat codes = random_mat(4, 1536, 2);
    for (double& x : codes.flat()) x = sigmoid(x);
    const DbnStack s2 = greedy_pretrain(stage2, codes, cfg, FcOptions{});
    CHECK(s2.dims() == std::vector<std::size_t>{1536, 1024, 512});
    const std::size_t bad[] = {100, 10};
    CHECK_THROWS_AS(greedy_pretrain(bad, codes, cfg, FcOptions{}), Error);
}

TEST_CASE("encode of a zero stack is one half everywhere") {
    DbnStack s;
    s.layers = {zero_layer(6, 5), zero_layer(5, 3)};
    for (double x : encode(s, Vec{1, 0, 1, 0, 1, 1})) CHECK(x == 0.5);
}

TEST_CASE("encode is deterministic and matches the layer conditional") {
    DbnStack s;
    s.layers = {random_layer(6, 5, UnitKind::gaussian, 1)};
    const Vec v = random_vec(6, 2);
    const Vec a = encode(s, v);
    CHECK(a == encode(s, v));
    CHECK(max_abs_diff(a, hidden_given_visible(v, s.layers[0])) <= 1e-15);
    s.layers.push_back(random_layer(5, 4, UnitKind::bernoulli, 3));
    const Mat batch = random_mat(3, 6, 4);
    const Mat enc = encode_batch(s, batch);
    for (std::size_t r = 0; r < 3; ++r) CHECK(max_abs_diff(enc.row(r), encode(s, batch.row(r))) < 1e-14);
}

TEST_CASE("dropout at rate zero equals the plain pass") {
    const MlpModel m = small_net(1);
    RngStream rng(2);
    const Vec x = random_vec(4, 3);
    CHECK(dropout_forward(m, x, rng, true) == dropout_forward(m, x, rng, false));
}

TEST_CASE("an all-ones keep mask at rate one half doubles the input contribution") {
    MlpModel m = small_net(4);
    m.dropout_input = 0.5;
    const Mat x = random_mat(3, 4, 5);
    const std::vector<int> y{1, 0, 1};
    std::vector<DropoutMasks> masks(3, DropoutMasks{Vec(4, 1.0), Vec(3, 1.0)});
    const MlpGradient masked = mlp_loss_gradient(m, x, y, &masks);
    MlpModel doubled = m;
    doubled.dropout_input = 0.0;
    for (double& w : doubled.layers[0].weights.flat()) w *= 2.0;
    CHECK(masked.loss == doctest::Approx(mlp_loss_gradient(doubled, x, y).loss).epsilon(1e-14));
}

TEST_CASE("Monte-Carlo mean of dropout passes matches the eval pass") {
    DenseLayer layer;
    layer.activation = Activation::linear;
    layer.weights = Mat(20, 5);
    RngStream init(7);
    for (double& w : layer.weights.flat()) w = init.uniform();
    layer.bias = random_vec(5, 8, 0.1);
    Vec x(20);
    for (double& v : x) v = 0.5 + init.uniform();
    RngStream rng(9);
    const Vec eval = dropout_layer_forward(layer, x, 0.5, rng, false);
    Vec mean(5, 0.0);
    for (int n = 0; n < 20000; ++n) {
        const Vec y = dropout_layer_forward(layer, x, 0.5, rng, true);
        for (std::size_t j = 0; j < 5; ++j) mean[j] += y[j] / 20000.0;
    }
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(mean[j] - eval[j]) <= 0.02 * std::abs(eval[j]));
    CHECK_THROWS_AS(dropout_layer_forward(layer, x, 1.0, rng, true), Error);
    CHECK_THROWS_AS(dropout_layer_forward(layer, x, -0.1, rng, true), Error);
}

TEST_CASE("backprop matches finite differences on a 4-3-1 net") {
    for (Activation act : {Activation::sigmoid, Activation::relu}) {
        MlpModel m = small_net(11, act);
        const Mat x = random_mat(6, 4, 12);
        const std::vector<int> y{1, 0, 0, 1, 1, 0};
        const MlpGradient g = mlp_loss_gradient(m, x, y);
        auto loss = [&] { return mlp_loss_gradient(m, x, y).loss; };
        for (std::size_t l = 0; l < 2; ++l) {
            for (std::size_t i = 0; i < m.layers[l].weights.size(); ++i)
                CHECK(relative_error(g.weights[l].flat()[i],
                                     central_difference(loss, m.layers[l].weights.flat()[i], 1e-5)) < 1e-4);
            for (std::size_t i = 0; i < m.layers[l].bias.size(); ++i)
                CHECK(relative_error(g.biases[l][i], central_difference(loss, m.layers[l].bias[i], 1e-5)) < 1e-4);
        }
    }
}

TEST_CASE("backprop with fixed dropout masks matches finite differences") {
    MlpModel m = small_net(13);
    m.dropout_input = 0.25;
    m.dropout_hidden = 0.5;
    const Mat x = random_mat(4, 4, 14);
    const std::vector<int> y{1, 0, 1, 0};
    std::vector<DropoutMasks> masks;
    RngStream rng(15);
    for (int n = 0; n < 4; ++n) {
        DropoutMasks mk{Vec(4), Vec(3)};
        for (Vec& v : mk)
            for (double& k : v) k = rng.bernoulli(0.6) ? 1.0 : 0.0;
        masks.push_back(mk);
    }
    const MlpGradient g = mlp_loss_gradient(m, x, y, &masks);
    auto loss = [&] { return mlp_loss_gradient(m, x, y, &masks).loss; };
    for (std::size_t i = 0; i < m.layers[0].weights.size(); ++i)
        CHECK(relative_error(g.weights[0].flat()[i], central_difference(loss, m.layers[0].weights.flat()[i], 1e-5)) <
              1e-4);
}

TEST_CASE("mlp_train separates a linearly separable set") {
    RngStream rng(21);
    Mat x(200, 2);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
        // Points at least 0.2 away from the line x0 + x1 = 0.5, labelled by side.
        double a = 0.0;
        double b = 0.0;
        do {
            a = rng.uniform() * 4 - 2;
            b = rng.uniform() * 4 - 2;
        } while (std::abs(a + b - 0.5) < 0.2);
        x(i, 0) = a;
        x(i, 1) = b;
        y[i] = a + b > 0.5 ? 1 : 0;
    }
    // The separating line classifies every point.
    for (std::size_t i = 0; i < 200; ++i) REQUIRE((x(i, 0) + x(i, 1) > 0.5) == (y[i] == 1));

    MlpTrainConfig cfg;
    cfg.epochs = 500;
    cfg.learning_rate = 0.05;
    cfg.dropout_input = 0.0;
    cfg.dropout_hidden = 0.0;
    cfg.seed = 3;
    const std::size_t arch[] = {2, 8, 1};
    const MlpTrainResult r = mlp_train(x, y, arch, cfg);
    const Vec p = mlp_predict(r.model, x);
    CHECK(accuracy(p, y, 0.5) >= 0.99);
    CHECK(r.model.trained);
    CHECK(r.loss_history.size() == 500);
}

TEST_CASE("zero epochs leave an untrained-level loss") {
    const Mat x = random_mat(400, 10, 31);
    std::vector<int> y(400);
    for (std::size_t i = 0; i < 400; ++i) y[i] = static_cast<int>(i % 2);
    MlpTrainConfig cfg;
    cfg.epochs = 0;
    const std::size_t arch[] = {10, 16, 1};
    const MlpTrainResult r = mlp_train(x, y, arch, cfg);
    CHECK(std::abs(r.final_loss - std::numbers::ln2) < 0.1);
    CHECK(r.loss_history.empty());
}

TEST_CASE("mlp_train input validation") {
    const Mat x = random_mat(4, 2, 1);
    const std::size_t arch[] = {2, 3, 1};
    MlpTrainConfig cfg;
    CHECK_THROWS_AS(mlp_train(x, std::vector<int>{1, 1, 1, 1}, arch, cfg), Error);
    CHECK_THROWS_AS(mlp_train(x, std::vector<int>{1, 0, 2, 0}, arch, cfg), Error);
    CHECK_THROWS_AS(mlp_train(x, std::vector<int>{1, 0}, arch, cfg), Error);
    const std::size_t wrong[] = {3, 1};
    CHECK_THROWS_AS(mlp_train(x, std::vector<int>{1, 0, 1, 0}, wrong, cfg), Error);
}

TEST_CASE("binary cross-entropy of one half is ln 2") {
    CHECK(binary_cross_entropy(Vec{0.5, 0.5}, std::vector<int>{1, 0}) == doctest::Approx(std::numbers::ln2));
}

}  // TEST_SUITE
