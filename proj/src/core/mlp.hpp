#pragma once

#include "common.hpp"
#include "geometry.hpp"

namespace rsplat {

// Positional encoding: per coordinate [sin(2^k pi x), cos(2^k pi x)] for
// k = 0..bands-1, optionally with the raw coordinate prepended.
struct FourierEncoding {
    int bands = 6;
    bool include_input = true;

    int out_dim(int in_dim) const { return in_dim * (2 * bands + (include_input ? 1 : 0)); }
};

template <typename S>
void fourier_encode(const FourierEncoding& enc, const S* x, int in_dim, S* out) {
    int o = 0;
    for (int i = 0; i < in_dim; ++i) {
        if (enc.include_input) out[o++] = x[i];
        S freq = S(M_PI);
        for (int k = 0; k < enc.bands; ++k) {
            out[o++] = std::sin(freq * x[i]);
            out[o++] = std::cos(freq * x[i]);
            freq *= S(2);
        }
    }
}

// Accumulates dL/dx given dL/d(encoding).
template <typename S>
void fourier_encode_vjp(const FourierEncoding& enc, const S* x, int in_dim, const S* out_bar,
                        S* x_bar) {
    int o = 0;
    for (int i = 0; i < in_dim; ++i) {
        S g = S(0);
        if (enc.include_input) g += out_bar[o++];
        S freq = S(M_PI);
        for (int k = 0; k < enc.bands; ++k) {
            const S s = std::sin(freq * x[i]);
            const S c = std::cos(freq * x[i]);
            g += out_bar[o++] * freq * c;
            g -= out_bar[o++] * freq * s;
            freq *= S(2);
        }
        x_bar[i] += g;
    }
}

// Plain fully connected network, ReLU hidden activations, linear output.
// Batches are stored column-wise (one sample per column).
template <typename S>
struct Mlp {
    std::vector<MatX<S>> weights;  // layer l: out_l x in_l
    std::vector<VecX<S>> biases;

    int in_dim() const { return weights.empty() ? 0 : int(weights.front().cols()); }
    int out_dim() const { return weights.empty() ? 0 : int(weights.back().rows()); }
    int num_layers() const { return int(weights.size()); }

    // hidden_layers hidden layers of the given width; He-initialized hidden
    // weights, zero-initialized final layer so composition starts neutral.
    static Mlp make(int in, int hidden, int hidden_layers, int out, Rng& rng) {
        Mlp net;
        int prev = in;
        for (int l = 0; l < hidden_layers; ++l) {
            net.weights.emplace_back(hidden, prev);
            net.biases.emplace_back(VecX<S>::Zero(hidden));
            const double std_dev = std::sqrt(2.0 / double(prev));
            for (int r = 0; r < hidden; ++r)
                for (int c = 0; c < prev; ++c)
                    net.weights.back()(r, c) = S(rng.normal() * std_dev);
            prev = hidden;
        }
        net.weights.emplace_back(MatX<S>::Zero(out, prev));
        net.biases.emplace_back(VecX<S>::Zero(out));
        return net;
    }

    struct Cache {
        std::vector<MatX<S>> activations;  // input plus post-activation of each layer
    };

    MatX<S> forward(const MatX<S>& input, Cache* cache = nullptr) const {
        require(input.rows() == in_dim(), ErrorCode::ShapeMismatch, "MLP input width mismatch");
        if (cache) {
            cache->activations.clear();
            cache->activations.push_back(input);
        }
        MatX<S> h = input;
        for (int l = 0; l < num_layers(); ++l) {
            MatX<S> z = (weights[l] * h).colwise() + biases[l];
            if (l + 1 < num_layers()) z = z.cwiseMax(S(0));
            h = std::move(z);
            if (cache && l + 1 < num_layers()) cache->activations.push_back(h);
        }
        return h;
    }

    struct Grads {
        std::vector<MatX<S>> weights;
        std::vector<VecX<S>> biases;

        void init_like(const Mlp& net) {
            weights.clear();
            biases.clear();
            for (int l = 0; l < net.num_layers(); ++l) {
                weights.emplace_back(MatX<S>::Zero(net.weights[l].rows(), net.weights[l].cols()));
                biases.emplace_back(VecX<S>::Zero(net.biases[l].size()));
            }
        }
    };

    // Backprop: accumulates parameter gradients and returns dL/d(input).
    MatX<S> backward(const Cache& cache, const MatX<S>& out_bar, Grads& grads) const {
        MatX<S> delta = out_bar;
        for (int l = num_layers() - 1; l >= 0; --l) {
            const MatX<S>& act = cache.activations[l];
            grads.weights[l].noalias() += delta * act.transpose();
            grads.biases[l].noalias() += delta.rowwise().sum();
            if (l > 0) {
                MatX<S> prev = weights[l].transpose() * delta;
                // ReLU mask from the cached post-activation.
                delta = (cache.activations[l].array() > S(0)).template cast<S>() * prev.array();
            } else {
                delta = weights[l].transpose() * delta;
            }
        }
        return delta;
    }

    // dL/d(input) only, for frozen networks at test time.
    MatX<S> backward_input(const Cache& cache, const MatX<S>& out_bar) const {
        MatX<S> delta = out_bar;
        for (int l = num_layers() - 1; l >= 0; --l) {
            if (l > 0) {
                MatX<S> prev = weights[l].transpose() * delta;
                delta = (cache.activations[l].array() > S(0)).template cast<S>() * prev.array();
            } else {
                delta = weights[l].transpose() * delta;
            }
        }
        return delta;
    }
};

}  // namespace rsplat
