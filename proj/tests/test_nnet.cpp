#include <catch2/catch_amalgamated.hpp>

#include "cesched/nnet.hpp"

using namespace cesched;

namespace {

// Central finite differences of L(params) = sum(upstream .* output).
double fd_loss(const Mlp& net, const MatrixXd& x, const MatrixXd& upstream) {
    return (net.forward_batch(x).array() * upstream.array()).sum();
}

void check_gradients(Mlp& net, int batch, Rng& rng, double h = 1e-5, double tol = 1e-4) {
    MatrixXd x(net.in_dim(), batch), upstream(net.out_dim(), batch);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = 0; j < batch; ++j) {
        for (int i = 0; i < net.in_dim(); ++i) x(i, j) = normal(rng);
        for (int i = 0; i < net.out_dim(); ++i) upstream(i, j) = normal(rng);
    }
    Mlp::Cache cache;
    net.forward_batch(x, &cache);
    const Grads g = net.backward_batch(cache, upstream);

    for (int l = 0; l < net.layer_count(); ++l) {
        auto& w = net.weights()[l];
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) {
                const double keep = w(i, j);
                w(i, j) = keep + h;
                const double up = fd_loss(net, x, upstream);
                w(i, j) = keep - h;
                const double dn = fd_loss(net, x, upstream);
                w(i, j) = keep;
                const double num = (up - dn) / (2 * h);
                const double ana = g.w[l](i, j);
                const double rel = std::abs(num - ana) / std::max(1.0, std::abs(num));
                REQUIRE(rel < tol);
            }
        auto& b = net.biases()[l];
        for (int i = 0; i < b.size(); ++i) {
            const double keep = b[i];
            b[i] = keep + h;
            const double up = fd_loss(net, x, upstream);
            b[i] = keep - h;
            const double dn = fd_loss(net, x, upstream);
            b[i] = keep;
            const double num = (up - dn) / (2 * h);
            const double rel = std::abs(num - g.b[l][i]) / std::max(1.0, std::abs(num));
            REQUIRE(rel < tol);
        }
    }
}

} // namespace

TEST_CASE("zero network maps everything to zero") {
    Rng rng = make_rng(1);
    Mlp net({3, 4, 2}, rng);
    for (auto& w : net.weights()) w.setZero();
    for (auto& b : net.biases()) b.setZero();
    const VectorXd y = net.forward(VectorXd::Constant(3, 1.7));
    CHECK(y.norm() == 0.0);
}

TEST_CASE("single linear layer with identity weights passes input through") {
    Rng rng = make_rng(2);
    Mlp net({3, 3}, rng);
    net.weights()[0] = MatrixXd::Identity(3, 3);
    net.biases()[0].setZero();
    VectorXd x(3);
    x << 0.3, -1.2, 4.0;
    CHECK((net.forward(x) - x).norm() == 0.0);
}

TEST_CASE("forward is deterministic") {
    Rng rng = make_rng(3);
    Mlp net({5, 8, 8, 2}, rng);
    VectorXd x = VectorXd::Random(5);
    CHECK(net.forward(x) == net.forward(x));
    CHECK_THROWS_AS(net.forward(VectorXd::Zero(4)), ConfigError);
}

TEST_CASE("scalar linear gradient equals the input") {
    Rng rng = make_rng(4);
    Mlp net({3, 1}, rng);
    MatrixXd x(3, 1);
    x << 2.0, -1.0, 0.5;
    Mlp::Cache cache;
    net.forward_batch(x, &cache);
    const Grads g = net.backward_batch(cache, MatrixXd::Ones(1, 1));
    CHECK(g.w[0](0, 0) == 2.0);
    CHECK(g.w[0](0, 1) == -1.0);
    CHECK(g.w[0](0, 2) == 0.5);
    CHECK(g.b[0][0] == 1.0);
}

TEST_CASE("zero upstream gradient yields zero parameter gradients") {
    Rng rng = make_rng(5);
    Mlp net({4, 6, 3}, rng);
    MatrixXd x = MatrixXd::Random(4, 7);
    Mlp::Cache cache;
    net.forward_batch(x, &cache);
    const Grads g = net.backward_batch(cache, MatrixXd::Zero(3, 7));
    for (const auto& w : g.w) CHECK(w.norm() == 0.0);
    for (const auto& b : g.b) CHECK(b.norm() == 0.0);
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng = make_rng(6);
    SECTION("two hidden layers (policy/value shape)") {
        Mlp net({7, 6, 6, 4}, rng);
        check_gradients(net, 5, rng);
    }
    SECTION("three hidden layers (Q-network shape)") {
        Mlp net({7, 6, 6, 6, 4}, rng);
        check_gradients(net, 5, rng);
    }
    SECTION("scalar head") {
        Mlp net({9, 8, 8, 1}, rng);
        check_gradients(net, 4, rng);
    }
}

TEST_CASE("adam handles zero and constant gradients") {
    Rng rng = make_rng(7);
    Mlp net({2, 2}, rng);
    const MatrixXd w0 = net.weights()[0];
    Adam opt(net, 1e-3);

    Grads zero;
    zero.w = {MatrixXd::Zero(2, 2)};
    zero.b = {VectorXd::Zero(2)};
    opt.step(net, zero);
    CHECK((net.weights()[0] - w0).norm() == 0.0);

    Grads g;
    g.w = {MatrixXd::Constant(2, 2, 3.0)};
    g.b = {VectorXd::Constant(2, -2.0)};
    Adam opt2(net, 1e-3);
    opt2.step(net, g);
    // bias-corrected first step moves by about -lr * sign(g)
    CHECK((net.weights()[0] - w0)(0, 0) == Catch::Approx(-1e-3).epsilon(1e-4));
    CHECK((net.biases()[0][0]) == Catch::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("adam updates are deterministic") {
    Rng rng1 = make_rng(8), rng2 = make_rng(8);
    Mlp a({3, 4, 2}, rng1), b({3, 4, 2}, rng2);
    Adam oa(a, 3e-4), ob(b, 3e-4);
    Grads g;
    g.w = {MatrixXd::Constant(4, 3, 0.1), MatrixXd::Constant(2, 4, -0.2)};
    g.b = {VectorXd::Constant(4, 0.3), VectorXd::Constant(2, 0.4)};
    for (int i = 0; i < 5; ++i) {
        oa.step(a, g);
        ob.step(b, g);
    }
    for (int l = 0; l < 2; ++l) CHECK((a.weights()[l] - b.weights()[l]).norm() == 0.0);
}

TEST_CASE("orthogonal init produces orthonormal rows times gain") {
    Rng rng = make_rng(9);
    Mlp net({8, 4}, rng, 2.0);
    const MatrixXd& w = net.weights()[0];
    const MatrixXd prod = w * w.transpose() / 4.0; // gain^2 = 4
    CHECK((prod - MatrixXd::Identity(4, 4)).norm() < 1e-9);
}

TEST_CASE("mlp json round trip preserves behaviour") {
    Rng rng = make_rng(10);
    Mlp net({5, 6, 3}, rng);
    const Mlp back = Mlp::from_json(net.to_json());
    const VectorXd x = VectorXd::Random(5);
    CHECK((net.forward(x) - back.forward(x)).norm() == 0.0);
    CHECK_THROWS_AS(Mlp::from_json(nlohmann::json{{"widths", {3, 2}}}), nlohmann::json::exception);
}

TEST_CASE("gradient norm clipping caps the global norm") {
    Grads g;
    g.w = {MatrixXd::Constant(2, 2, 10.0)};
    g.b = {VectorXd::Constant(2, 10.0)};
    clip_grad_norm({&g}, 0.5);
    CHECK(std::sqrt(grad_sq_norm(g)) == Catch::Approx(0.5));
    Grads small;
    small.w = {MatrixXd::Constant(1, 1, 0.1)};
    small.b = {VectorXd::Zero(1)};
    clip_grad_norm({&small}, 0.5);
    CHECK(small.w[0](0, 0) == 0.1); // untouched below the cap
}

TEST_CASE("non-finite parameters raise a numeric error") {
    Rng rng = make_rng(11);
    Mlp net({2, 2}, rng);
    Adam opt(net, 1e-3);
    Grads g;
    g.w = {MatrixXd::Constant(2, 2, std::numeric_limits<double>::quiet_NaN())};
    g.b = {VectorXd::Zero(2)};
    CHECK_THROWS_AS(opt.step(net, g), NumericError);
}
