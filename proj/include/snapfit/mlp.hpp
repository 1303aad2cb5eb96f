#pragma once
// Small dense networks with hand-written reverse-mode gradients. Hidden
// layers are tanh, the output layer is linear; anything squashed (actions,
// standard deviations) is shaped by the caller so the same block serves
// policies and critics. No graph framework: shapes are static per network
// and the backward pass mirrors forward() line by line, which keeps the
// finite-difference check meaningful.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "snapfit/random.hpp"

namespace snapfit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Layer {
    Mat W; // rows = outputs, cols = inputs
    Vec b;
};

struct Mlp {
    std::vector<Layer> layers;

    int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
    int output_dim() const { return static_cast<int>(layers.back().W.rows()); }

    std::vector<int> dims() const {
        std::vector<int> d{input_dim()};
        for (const auto& l : layers) d.push_back(static_cast<int>(l.W.rows()));
        return d;
    }
};

// Uniform fan-in/fan-out init. Biases start at zero so an untrained critic
// scores every state the same and early TD targets stay small.
inline Mlp make_mlp(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("mlp needs at least one layer");
    Mlp net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        l.W = Mat(dims[i + 1], dims[i]);
        l.b = Vec::Zero(dims[i + 1]);
        const double s = std::sqrt(6.0 / (dims[i] + dims[i + 1]));
        for (Eigen::Index r = 0; r < l.W.rows(); ++r)
            for (Eigen::Index c = 0; c < l.W.cols(); ++c)
                l.W(r, c) = rng.uniform(-s, s);
        net.layers.push_back(std::move(l));
    }
    return net;
}

struct MlpCache {
    std::vector<Vec> post; // post[0] = input, post[i] = activation after layer i
};

inline Vec mlp_forward(const Mlp& net, const Vec& x, MlpCache* cache = nullptr) {
    if (x.size() != net.input_dim()) throw std::invalid_argument("mlp input size");
    Vec h = x;
    if (cache) {
        cache->post.clear();
        cache->post.push_back(h);
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        h = net.layers[i].W * h + net.layers[i].b;
        if (i + 1 < net.layers.size()) h = h.array().tanh().matrix();
        if (cache) cache->post.push_back(h);
    }
    return h;
}

struct MlpGrads {
    std::vector<Mat> dW;
    std::vector<Vec> db;

    void init_like(const Mlp& net) {
        dW.clear();
        db.clear();
        for (const auto& l : net.layers) {
            dW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
            db.push_back(Vec::Zero(l.b.size()));
        }
    }

    void scale(double s) {
        for (auto& m : dW) m *= s;
        for (auto& v : db) v *= s;
    }
};

// Accumulates parameter gradients for one sample and returns the gradient
// with respect to the input (needed when a critic backpropagates into the
// action produced by the policy). cache must come from the forward pass of
// the same input.
inline Vec mlp_backward(const Mlp& net, const MlpCache& cache, const Vec& dy,
                        MlpGrads& grads) {
    if (cache.post.size() != net.layers.size() + 1)
        throw std::invalid_argument("mlp cache mismatch");
    Vec delta = dy;
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        // delta currently holds dL/d(post-activation of layer i)
        if (i + 1 < net.layers.size()) {
            const Vec& a = cache.post[i + 1];
            delta = delta.cwiseProduct((1.0 - a.array().square()).matrix());
        }
        grads.dW[i].noalias() += delta * cache.post[i].transpose();
        grads.db[i] += delta;
        delta = net.layers[i].W.transpose() * delta;
    }
    return delta;
}

// Adam with the usual bias correction. A zero learning rate must leave the
// weights bit-identical, so the update is a single fused scale at the end.
struct Adam {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<Mat> mW, vW;
    std::vector<Vec> mb, vb;

    void init_like(const Mlp& net) {
        t = 0;
        mW.clear();
        vW.clear();
        mb.clear();
        vb.clear();
        for (const auto& l : net.layers) {
            mW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
            vW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
            mb.push_back(Vec::Zero(l.b.size()));
            vb.push_back(Vec::Zero(l.b.size()));
        }
    }

    void step(Mlp& net, const MlpGrads& g) {
        if (mW.size() != net.layers.size()) throw std::invalid_argument("adam state mismatch");
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            mW[i] = beta1 * mW[i] + (1.0 - beta1) * g.dW[i];
            vW[i] = beta2 * vW[i] + (1.0 - beta2) * g.dW[i].cwiseProduct(g.dW[i]);
            mb[i] = beta1 * mb[i] + (1.0 - beta1) * g.db[i];
            vb[i] = beta2 * vb[i] + (1.0 - beta2) * g.db[i].cwiseProduct(g.db[i]);
            net.layers[i].W -=
                (lr / c1) * mW[i].cwiseQuotient(((vW[i] / c2).cwiseSqrt().array() + eps).matrix());
            net.layers[i].b -=
                (lr / c1) * mb[i].cwiseQuotient(((vb[i] / c2).cwiseSqrt().array() + eps).matrix());
        }
    }
};

// target <- (1 - tau) * target + tau * source, elementwise exact.
inline void soft_update(Mlp& target, const Mlp& source, double tau) {
    if (target.layers.size() != source.layers.size())
        throw std::invalid_argument("soft update shape mismatch");
    for (std::size_t i = 0; i < target.layers.size(); ++i) {
        target.layers[i].W = (1.0 - tau) * target.layers[i].W + tau * source.layers[i].W;
        target.layers[i].b = (1.0 - tau) * target.layers[i].b + tau * source.layers[i].b;
    }
}

// Max relative error between analytic and central-difference gradients of
// the scalar loss 0.5 * |f(x)|^2 over every weight and bias. The loss mixes
// all outputs so no parameter's gradient is structurally zero.
inline double gradient_check(Mlp net, const Vec& x, double h = 1e-5) {
    MlpCache cache;
    const Vec y = mlp_forward(net, x, &cache);
    MlpGrads grads;
    grads.init_like(net);
    mlp_backward(net, cache, y, grads);

    double worst = 0.0;
    auto probe = [&](double& w, double analytic) {
        const double saved = w;
        w = saved + h;
        const double lp = 0.5 * mlp_forward(net, x).squaredNorm();
        w = saved - h;
        const double lm = 0.5 * mlp_forward(net, x).squaredNorm();
        w = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
    };
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        for (Eigen::Index r = 0; r < net.layers[i].W.rows(); ++r)
            for (Eigen::Index c = 0; c < net.layers[i].W.cols(); ++c)
                probe(net.layers[i].W(r, c), grads.dW[i](r, c));
        for (Eigen::Index r = 0; r < net.layers[i].b.size(); ++r)
            probe(net.layers[i].b(r), grads.db[i](r));
    }
    return worst;
}

} // namespace snapfit
