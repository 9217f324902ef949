#include <doctest.h>

#include "core/mlp.hpp"

using namespace rsplat;

TEST_CASE("fourier encoding values and lengths") {
    FourierEncoding enc{2, true};
    double x[3] = {0.0, 0.0, 0.0};
    std::vector<double> out(enc.out_dim(3));
    fourier_encode(enc, x, 3, out.data());
    // Per coordinate: [x, sin(pi x), cos(pi x), sin(2 pi x), cos(2 pi x)].
    for (int i = 0; i < 3; ++i) {
        CHECK(out[5 * i + 0] == 0.0);
        CHECK(out[5 * i + 1] == 0.0);
        CHECK(out[5 * i + 2] == 1.0);
        CHECK(out[5 * i + 3] == 0.0);
        CHECK(out[5 * i + 4] == 1.0);
    }

    x[0] = 0.5;
    fourier_encode(enc, x, 3, out.data());
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-12));   // sin(pi/2)
    CHECK(std::abs(out[2]) < 1e-12);                        // cos(pi/2)

    FourierEncoding wide{6, true};
    CHECK(wide.out_dim(3) == 39);
    FourierEncoding no_input{6, false};
    CHECK(no_input.out_dim(3) == 36);
}

TEST_CASE("fourier encoding VJP matches finite differences") {
    FourierEncoding enc{4, true};
    Rng rng(9);
    double x[3] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const int dim = enc.out_dim(3);
    std::vector<double> bar(dim);
    for (double& b : bar) b = rng.uniform(-1.0, 1.0);
    double grad[3] = {0, 0, 0};
    fourier_encode_vjp(enc, x, 3, bar.data(), grad);
    std::vector<double> buf(dim);
    for (int i = 0; i < 3; ++i) {
        auto loss = [&]() {
            fourier_encode(enc, x, 3, buf.data());
            double total = 0.0;
            for (int k = 0; k < dim; ++k) total += bar[k] * buf[k];
            return total;
        };
        const double orig = x[i];
        x[i] = orig + 1e-7;
        const double up = loss();
        x[i] = orig - 1e-7;
        const double down = loss();
        x[i] = orig;
        const double numeric = (up - down) / 2e-7;
        CHECK(std::abs(numeric - grad[i]) < 1e-6 * std::max(1.0, std::abs(numeric)));
    }
}

TEST_CASE("MLP forward/backward matches finite differences") {
    Rng rng(33);
    Mlp<double> net = Mlp<double>::make(5, 16, 2, 4, rng);
    // Randomize the final layer so output gradients are informative.
    for (Eigen::Index r = 0; r < net.weights.back().rows(); ++r)
        for (Eigen::Index c = 0; c < net.weights.back().cols(); ++c)
            net.weights.back()(r, c) = 0.3 * rng.normal();

    MatX<double> input(5, 7);
    for (Eigen::Index i = 0; i < input.size(); ++i) input.data()[i] = rng.uniform(-1.0, 1.0);
    MatX<double> out_bar(4, 7);
    for (Eigen::Index i = 0; i < out_bar.size(); ++i) out_bar.data()[i] = rng.uniform(-1.0, 1.0);

    Mlp<double>::Cache cache;
    net.forward(input, &cache);
    Mlp<double>::Grads grads;
    grads.init_like(net);
    const MatX<double> input_bar = net.backward(cache, out_bar, grads);

    auto loss = [&]() { return (net.forward(input).array() * out_bar.array()).sum(); };

    // Input gradients.
    for (int probe = 0; probe < 10; ++probe) {
        const int64_t idx = rng.uniform_int(input.size());
        const double orig = input.data()[idx];
        input.data()[idx] = orig + 1e-6;
        const double up = loss();
        input.data()[idx] = orig - 1e-6;
        const double down = loss();
        input.data()[idx] = orig;
        const double numeric = (up - down) / 2e-6;
        const double analytic = input_bar.data()[idx];
        CHECK(std::abs(numeric - analytic) <
              1e-5 * std::max({1.0, std::abs(numeric), std::abs(analytic)}));
    }

    // Weight and bias gradients at every layer.
    for (int layer = 0; layer < net.num_layers(); ++layer) {
        for (int probe = 0; probe < 6; ++probe) {
            const int64_t idx = rng.uniform_int(net.weights[layer].size());
            double& w = net.weights[layer].data()[idx];
            const double orig = w;
            w = orig + 1e-6;
            const double up = loss();
            w = orig - 1e-6;
            const double down = loss();
            w = orig;
            const double numeric = (up - down) / 2e-6;
            const double analytic = grads.weights[layer].data()[idx];
            CHECK(std::abs(numeric - analytic) <
                  1e-5 * std::max({1.0, std::abs(numeric), std::abs(analytic)}));
        }
        const int64_t bidx = rng.uniform_int(net.biases[layer].size());
        double& b = net.biases[layer].data()[bidx];
        const double orig = b;
        b = orig + 1e-6;
        const double up = loss();
        b = orig - 1e-6;
        const double down = loss();
        b = orig;
        const double numeric = (up - down) / 2e-6;
        CHECK(std::abs(numeric - grads.biases[layer][bidx]) <
              1e-5 * std::max(1.0, std::abs(numeric)));
    }
}

TEST_CASE("zero-initialized final layer gives zero outputs") {
    Rng rng(44);
    Mlp<double> net = Mlp<double>::make(3, 8, 2, 5, rng);
    MatX<double> input(3, 4);
    for (Eigen::Index i = 0; i < input.size(); ++i) input.data()[i] = rng.normal();
    CHECK(net.forward(input).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("MLP rejects mismatched input width") {
    Rng rng(1);
    Mlp<double> net = Mlp<double>::make(3, 8, 1, 2, rng);
    try {
        net.forward(MatX<double>::Zero(4, 2));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}
