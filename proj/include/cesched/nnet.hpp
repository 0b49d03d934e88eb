#ifndef CESCHED_NNET_HPP
#define CESCHED_NNET_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cesched/errors.hpp"
#include "cesched/rng.hpp"

namespace cesched {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Grads {
    std::vector<MatrixXd> w;
    std::vector<VectorXd> b;
};

/// Fully connected network, tanh hidden activations, linear output.
/// Samples are matrix columns in the batch interfaces.
class Mlp {
public:
    Mlp() = default;

    // widths = {in, h1, ..., out}. Hidden layers use orthogonal init with
    // gain sqrt(2); the output layer gain is configurable so policy heads
    // can start near-uniform.
    Mlp(const std::vector<int>& widths, Rng& rng, double out_gain = 1.0) {
        if (widths.size() < 2) throw ConfigError("mlp: need at least in/out widths");
        widths_ = widths;
        for (size_t l = 0; l + 1 < widths.size(); ++l) {
            const bool last = (l + 2 == widths.size());
            const double gain = last ? out_gain : std::sqrt(2.0);
            w_.push_back(orthogonal(widths[l + 1], widths[l], gain, rng));
            b_.push_back(VectorXd::Zero(widths[l + 1]));
        }
    }

    int in_dim() const { return widths_.front(); }
    int out_dim() const { return widths_.back(); }
    int layer_count() const { return static_cast<int>(w_.size()); }
    const std::vector<int>& widths() const { return widths_; }
    std::vector<MatrixXd>& weights() { return w_; }
    std::vector<VectorXd>& biases() { return b_; }
    const std::vector<MatrixXd>& weights() const { return w_; }
    const std::vector<VectorXd>& biases() const { return b_; }

    VectorXd forward(const VectorXd& x) const {
        if (x.size() != in_dim()) throw ConfigError("mlp: input dimension mismatch");
        VectorXd a = x;
        for (size_t l = 0; l < w_.size(); ++l) {
            VectorXd z = w_[l] * a + b_[l];
            a = (l + 1 < w_.size()) ? z.array().tanh().matrix() : z;
        }
        return a;
    }

    // Batch forward; caches activations for backward. acts[0] is the input,
    // acts[l] the post-activation output of layer l-1.
    struct Cache {
        std::vector<MatrixXd> acts;
    };

    MatrixXd forward_batch(const MatrixXd& x, Cache* cache = nullptr) const {
        if (x.rows() != in_dim()) throw ConfigError("mlp: input dimension mismatch");
        if (cache) {
            cache->acts.clear();
            cache->acts.push_back(x);
        }
        MatrixXd a = x;
        for (size_t l = 0; l < w_.size(); ++l) {
            MatrixXd z = (w_[l] * a).colwise() + b_[l];
            a = (l + 1 < w_.size()) ? z.array().tanh().matrix() : z;
            if (cache) cache->acts.push_back(a);
        }
        return a;
    }

    // Exact analytic gradients of sum_b upstream(:,b) . y(:,b) w.r.t. all
    // parameters, given the cache of the matching forward pass.
    Grads backward_batch(const Cache& cache, const MatrixXd& upstream) const {
        if (cache.acts.size() != w_.size() + 1)
            throw ConfigError("mlp: cache does not match network");
        if (upstream.rows() != out_dim() || upstream.cols() != cache.acts[0].cols())
            throw ConfigError("mlp: upstream gradient shape mismatch");
        Grads g;
        g.w.resize(w_.size());
        g.b.resize(w_.size());
        MatrixXd delta = upstream; // dL/dz for the output (linear) layer
        for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
            g.w[l] = delta * cache.acts[l].transpose();
            g.b[l] = delta.rowwise().sum();
            if (l > 0) {
                MatrixXd da = w_[l].transpose() * delta;
                // through tanh: dz = da * (1 - a^2)
                delta = (da.array() * (1.0 - cache.acts[l].array().square())).matrix();
            }
        }
        return g;
    }

    bool finite() const {
        for (const auto& m : w_)
            if (!m.allFinite()) return false;
        for (const auto& v : b_)
            if (!v.allFinite()) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["widths"] = widths_;
        for (size_t l = 0; l < w_.size(); ++l) {
            std::vector<double> wf(w_[l].data(), w_[l].data() + w_[l].size());
            std::vector<double> bf(b_[l].data(), b_[l].data() + b_[l].size());
            j["layers"].push_back({{"w", wf}, {"b", bf}});
        }
        return j;
    }

    static Mlp from_json(const nlohmann::json& j) {
        Mlp net;
        net.widths_ = j.at("widths").get<std::vector<int>>();
        const auto& layers = j.at("layers");
        if (layers.size() + 1 != net.widths_.size())
            throw ConfigError("mlp: layer count does not match widths");
        for (size_t l = 0; l < layers.size(); ++l) {
            const int rows = net.widths_[l + 1], cols = net.widths_[l];
            auto wf = layers[l].at("w").get<std::vector<double>>();
            auto bf = layers[l].at("b").get<std::vector<double>>();
            if (static_cast<int>(wf.size()) != rows * cols ||
                static_cast<int>(bf.size()) != rows)
                throw ConfigError("mlp: parameter array size mismatch");
            net.w_.push_back(Eigen::Map<MatrixXd>(wf.data(), rows, cols));
            net.b_.push_back(Eigen::Map<VectorXd>(bf.data(), rows));
        }
        return net;
    }

private:
    static MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        const bool wide = cols > rows;
        const int n = wide ? cols : rows, k = wide ? rows : cols;
        MatrixXd m(n, k);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < n; ++i) m(i, j) = normal(rng);
        // modified Gram-Schmidt on the k columns
        for (int j = 0; j < k; ++j) {
            for (int i = 0; i < j; ++i) m.col(j) -= m.col(i).dot(m.col(j)) * m.col(i);
            const double norm = m.col(j).norm();
            m.col(j) /= (norm > 1e-12 ? norm : 1.0);
        }
        MatrixXd q = wide ? MatrixXd(m.transpose()) : m;
        return gain * q;
    }

    std::vector<int> widths_;
    std::vector<MatrixXd> w_;
    std::vector<VectorXd> b_;
};

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8). One
/// optimizer instance owns the moment state of one network.
class Adam {
public:
    explicit Adam(const Mlp& net, double lr) : lr_(lr) {
        for (const auto& w : net.weights()) {
            mw_.push_back(MatrixXd::Zero(w.rows(), w.cols()));
            vw_.push_back(MatrixXd::Zero(w.rows(), w.cols()));
        }
        for (const auto& b : net.biases()) {
            mb_.push_back(VectorXd::Zero(b.size()));
            vb_.push_back(VectorXd::Zero(b.size()));
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    long step_count() const { return t_; }

    void step(Mlp& net, const Grads& g) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t l = 0; l < mw_.size(); ++l) {
            mw_[l] = beta1_ * mw_[l] + (1 - beta1_) * g.w[l];
            vw_[l] = beta2_ * vw_[l].array().matrix() +
                     (1 - beta2_) * g.w[l].array().square().matrix();
            net.weights()[l].array() -=
                lr_ * (mw_[l].array() / c1) / ((vw_[l].array() / c2).sqrt() + eps_);
            mb_[l] = beta1_ * mb_[l] + (1 - beta1_) * g.b[l];
            vb_[l] = beta2_ * vb_[l].array().matrix() +
                     (1 - beta2_) * g.b[l].array().square().matrix();
            net.biases()[l].array() -=
                lr_ * (mb_[l].array() / c1) / ((vb_[l].array() / c2).sqrt() + eps_);
        }
        if (!net.finite()) throw NumericError("adam: parameters became non-finite");
    }

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<MatrixXd> mw_, vw_;
    std::vector<VectorXd> mb_, vb_;
};

inline double grad_sq_norm(const Grads& g) {
    double s = 0;
    for (const auto& m : g.w) s += m.squaredNorm();
    for (const auto& v : g.b) s += v.squaredNorm();
    return s;
}

// Global-norm clipping across several networks' gradients at once.
inline void clip_grad_norm(std::vector<Grads*> grads, double max_norm) {
    double sq = 0;
    for (const auto* g : grads) sq += grad_sq_norm(*g);
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0) return;
    const double scale = max_norm / norm;
    for (auto* g : grads) {
        for (auto& m : g->w) m *= scale;
        for (auto& v : g->b) v *= scale;
    }
}

} // namespace cesched

#endif // CESCHED_NNET_HPP
