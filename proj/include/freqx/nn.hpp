#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqx/dataset.hpp"
#include "freqx/linalg.hpp"
#include "freqx/rng.hpp"

namespace freqx {

enum class Activation { ReLU, Sigmoid, Softmax, Identity };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
        case Activation::Identity: return "identity";
    }
    throw std::logic_error("unreachable");
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softmax") return Activation::Softmax;
    if (s == "identity") return Activation::Identity;
    throw std::runtime_error("unknown activation: " + s);
}

inline Vec softmax(const Vec& z) {
    double m = *std::max_element(z.begin(), z.end());
    Vec out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

inline Vec apply_activation(Activation a, const Vec& z) {
    switch (a) {
        case Activation::ReLU: {
            Vec out(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::max(0.0, z[i]);
            return out;
        }
        case Activation::Sigmoid: {
            Vec out(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-z[i]));
            return out;
        }
        case Activation::Softmax: return softmax(z);
        case Activation::Identity: return z;
    }
    throw std::logic_error("unreachable");
}

// scalar activation, used per-neuron by the explainer; Softmax has no scalar
// form and falls back to Identity there
inline double scalar_activation(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return std::max(0.0, z);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Softmax: return z;
        case Activation::Identity: return z;
    }
    throw std::logic_error("unreachable");
}

struct DenseLayer {
    Mat weights;  // out_dim x in_dim
    Vec bias;     // out_dim
    Activation activation = Activation::ReLU;

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }

    void validate() const {
        if (!all_finite(weights) || !all_finite(bias)) throw std::invalid_argument("layer: non-finite parameter");
        if (bias.size() != weights.rows) throw std::invalid_argument("layer: bias length != row count");
    }
};

struct DenseNet {
    std::vector<DenseLayer> layers;
    std::size_t input_dim = 0;

    std::size_t output_dim() const { return layers.back().out_dim(); }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("net: no layers");
        std::size_t prev = input_dim;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            layers[i].validate();
            if (layers[i].in_dim() != prev)
                throw std::invalid_argument("net: layer " + std::to_string(i) + " input dim " +
                                            std::to_string(layers[i].in_dim()) + " != expected " + std::to_string(prev));
            if (layers[i].activation == Activation::Softmax && i + 1 != layers.size())
                throw std::invalid_argument("net: softmax allowed only on the final layer");
            prev = layers[i].out_dim();
        }
    }
};

struct ActivationTrace {
    std::vector<Vec> per_layer_inputs;
    std::vector<Vec> per_layer_outputs;
    Vec logits;
    std::size_t predicted_class = 0;
};

inline ActivationTrace forward_traced(const DenseNet& net, const Vec& x) {
    if (x.size() != net.input_dim) throw std::invalid_argument("forward: input dim mismatch");
    if (!all_finite(x)) throw std::invalid_argument("forward: non-finite input");
    ActivationTrace trace;
    Vec cur = x;
    for (const auto& layer : net.layers) {
        trace.per_layer_inputs.push_back(cur);
        Vec z = matvec(layer.weights, cur);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
        cur = apply_activation(layer.activation, z);
        trace.per_layer_outputs.push_back(cur);
    }
    trace.logits = cur;
    trace.predicted_class = argmax(cur);
    return trace;
}

inline std::size_t predict(const DenseNet& net, const Vec& x) { return forward_traced(net, x).predicted_class; }

// class probabilities: softmax applied unless the final layer already is one
inline Vec class_probabilities(const DenseNet& net, const Vec& x) {
    auto trace = forward_traced(net, x);
    if (net.layers.back().activation == Activation::Softmax) return trace.logits;
    return softmax(trace.logits);
}

inline double accuracy(const DenseNet& net, const LabeledDataset& data) {
    if (data.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (predict(net, data.sample(i)) == data.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Training: plain mini-batch SGD on cross-entropy.

struct TrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 0.1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;  // L2 penalty on weights, not biases
};

struct NetGradients {
    std::vector<Mat> d_weights;
    std::vector<Vec> d_bias;
};

// uniform(-a, a), a = sqrt(6/(in+out))
inline DenseNet init_net(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t class_count, Activation hidden_act, std::uint64_t seed) {
    auto rng = make_rng(seed, "init");
    DenseNet net;
    net.input_dim = input_dim;
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(class_count);
    for (std::size_t l = 1; l < dims.size(); ++l) {
        DenseLayer layer;
        layer.weights = Mat(dims[l], dims[l - 1]);
        layer.bias = Vec(dims[l], 0.0);
        double a = std::sqrt(6.0 / static_cast<double>(dims[l - 1] + dims[l]));
        std::uniform_real_distribution<double> dist(-a, a);
        for (auto& w : layer.weights.data) w = dist(rng);
        layer.activation = (l + 1 == dims.size()) ? Activation::Softmax : hidden_act;
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

namespace detail {

inline double activation_derivative(Activation a, double pre, double post) {
    switch (a) {
        case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return post * (1.0 - post);
        case Activation::Identity: return 1.0;
        case Activation::Softmax: throw std::logic_error("softmax handled jointly with the loss");
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

// Cross-entropy of one sample; softmax is applied to the final output unless
// the final layer already ends in one.
inline double cross_entropy(const DenseNet& net, const Vec& x, std::size_t label) {
    auto trace = forward_traced(net, x);
    Vec p = (net.layers.back().activation == Activation::Softmax) ? trace.logits : softmax(trace.logits);
    return -std::log(std::max(p[label], 1e-300));
}

// Backprop for mean cross-entropy over a batch.
inline NetGradients gradients(const DenseNet& net, const Mat& batch_x, const std::vector<std::size_t>& batch_y) {
    NetGradients g;
    for (const auto& layer : net.layers) {
        g.d_weights.emplace_back(layer.out_dim(), layer.in_dim());
        g.d_bias.emplace_back(layer.out_dim(), 0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(batch_x.rows);
    for (std::size_t s = 0; s < batch_x.rows; ++s) {
        Vec x = batch_x.row_vec(s);
        // forward, keeping pre-activations
        std::vector<Vec> inputs, pres, outs;
        Vec cur = x;
        for (const auto& layer : net.layers) {
            inputs.push_back(cur);
            Vec z = matvec(layer.weights, cur);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
            pres.push_back(z);
            cur = apply_activation(layer.activation, z);
            outs.push_back(cur);
        }
        // delta at final pre-activation
        const auto& final_layer = net.layers.back();
        Vec p = (final_layer.activation == Activation::Softmax) ? outs.back() : softmax(outs.back());
        Vec delta(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) delta[i] = p[i] - (i == batch_y[s] ? 1.0 : 0.0);
        if (final_layer.activation != Activation::Softmax)
            for (std::size_t i = 0; i < delta.size(); ++i)
                delta[i] *= detail::activation_derivative(final_layer.activation, pres.back()[i], outs.back()[i]);

        for (std::size_t l = net.layers.size(); l-- > 0;) {
            const auto& layer = net.layers[l];
            for (std::size_t i = 0; i < layer.out_dim(); ++i) {
                g.d_bias[l][i] += inv_n * delta[i];
                for (std::size_t j = 0; j < layer.in_dim(); ++j)
                    g.d_weights[l](i, j) += inv_n * delta[i] * inputs[l][j];
            }
            if (l == 0) break;
            Vec prev_delta(layer.in_dim(), 0.0);
            for (std::size_t j = 0; j < layer.in_dim(); ++j)
                for (std::size_t i = 0; i < layer.out_dim(); ++i)
                    prev_delta[j] += layer.weights(i, j) * delta[i];
            const auto& below = net.layers[l - 1];
            for (std::size_t j = 0; j < below.out_dim(); ++j)
                prev_delta[j] *= detail::activation_derivative(below.activation, pres[l - 1][j], outs[l - 1][j]);
            delta = std::move(prev_delta);
        }
    }
    return g;
}

inline DenseNet train(DenseNet net, const LabeledDataset& data, const TrainConfig& config,
                      const std::function<void(std::size_t, const DenseNet&)>& on_epoch = {}) {
    net.validate();
    data.validate();
    auto rng = make_rng(config.seed, "train-shuffle");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t end = std::min(start + config.batch_size, order.size());
            Mat bx(end - start, data.dim());
            std::vector<std::size_t> by(end - start);
            for (std::size_t i = start; i < end; ++i) {
                for (std::size_t j = 0; j < data.dim(); ++j) bx(i - start, j) = data.samples(order[i], j);
                by[i - start] = data.labels[order[i]];
            }
            auto g = gradients(net, bx, by);
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                for (std::size_t k = 0; k < net.layers[l].weights.data.size(); ++k)
                    net.layers[l].weights.data[k] -=
                        config.learning_rate *
                        (g.d_weights[l].data[k] + config.weight_decay * net.layers[l].weights.data[k]);
                for (std::size_t k = 0; k < net.layers[l].bias.size(); ++k)
                    net.layers[l].bias[k] -= config.learning_rate * g.d_bias[l][k];
            }
        }
        double loss = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) loss += cross_entropy(net, data.sample(i), data.labels[i]);
        loss /= static_cast<double>(data.size());
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        if (on_epoch) on_epoch(epoch, net);
    }
    return net;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON with flat row-major weights.

inline nlohmann::json net_to_json(const DenseNet& net) {
    nlohmann::json j;
    j["input_dim"] = net.input_dim;
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json lj;
        lj["rows"] = layer.weights.rows;
        lj["cols"] = layer.weights.cols;
        lj["activation"] = to_string(layer.activation);
        lj["weights"] = layer.weights.data;
        lj["bias"] = layer.bias;
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

inline DenseNet net_from_json(const nlohmann::json& j) {
    DenseNet net;
    try {
        net.input_dim = j.at("input_dim").get<std::size_t>();
        for (const auto& lj : j.at("layers")) {
            DenseLayer layer;
            std::size_t rows = lj.at("rows").get<std::size_t>();
            std::size_t cols = lj.at("cols").get<std::size_t>();
            layer.weights = Mat(rows, cols);
            auto flat = lj.at("weights").get<std::vector<double>>();
            if (flat.size() != rows * cols)
                throw std::runtime_error("checkpoint: weights length " + std::to_string(flat.size()) +
                                         " != declared shape " + std::to_string(rows) + "x" + std::to_string(cols));
            layer.weights.data = std::move(flat);
            layer.bias = lj.at("bias").get<std::vector<double>>();
            layer.activation = activation_from_string(lj.at("activation").get<std::string>());
            net.layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: malformed field: ") + e.what());
    }
    net.validate();
    return net;
}

inline void save_checkpoint(const DenseNet& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << net_to_json(net).dump(2) << '\n';
}

inline DenseNet load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("checkpoint parse error in " + path + ": " + e.what());
    }
    return net_from_json(j);
}

// FNV-1a over the canonical JSON serialization; used in run manifests
inline std::string model_hash(const DenseNet& net) {
    std::string s = net_to_json(net).dump();
    std::uint64_t h = 14695981039346656037ull;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace freqx
