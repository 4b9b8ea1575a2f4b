#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqx/linalg.hpp"
#include "freqx/nn.hpp"

namespace freqx {

// Row-unit-normalized augmented weight matrix [W | b]; the explainer's
// reference transformation.
struct BenchmarkLayer {
    Mat unit_weights;  // out_dim x (in_dim + 1), each row unit norm
    Vec row_norms;     // original augmented-row norms
    std::vector<bool> degenerate;  // rows with zero original norm

    static BenchmarkLayer from(const DenseLayer& layer) {
        BenchmarkLayer b;
        b.unit_weights = Mat(layer.out_dim(), layer.in_dim() + 1);
        b.row_norms.resize(layer.out_dim());
        b.degenerate.resize(layer.out_dim());
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            double ss = layer.bias[i] * layer.bias[i];
            for (std::size_t j = 0; j < layer.in_dim(); ++j) ss += layer.weights(i, j) * layer.weights(i, j);
            double nrm = std::sqrt(ss);
            b.row_norms[i] = nrm;
            b.degenerate[i] = nrm == 0.0;
            if (b.degenerate[i]) continue;
            for (std::size_t j = 0; j < layer.in_dim(); ++j) b.unit_weights(i, j) = layer.weights(i, j) / nrm;
            b.unit_weights(i, layer.in_dim()) = layer.bias[i] / nrm;
        }
        return b;
    }
};

// deg = sigma(x~ . w~) - x~ . (w~ / ||w~||), bias folded as a feature of
// value 1 on both terms.
inline double neuron_degree(const Vec& x, const Vec& w, double b, Activation activation) {
    if (x.size() != w.size()) throw std::invalid_argument("neuron_degree: dimension mismatch");
    double raw = dot(x, w) + b;
    double ss = b * b;
    for (double v : w) ss += v * v;
    double nrm = std::sqrt(ss);
    if (nrm == 0.0) throw std::invalid_argument("neuron_degree: zero-norm augmented weight");
    return scalar_activation(activation, raw) - raw / nrm;
}

// x' = x + (eps/n) * sum_i deg_i * w_i over non-degenerate neurons; the mean
// of the per-neuron x'_i = x + eps * deg_i * w_i.
struct LayerTransformResult {
    Vec x_prime;
    Vec degrees;   // NaN for degenerate rows
    Vec movement;  // (1/n) sum_i c_i w_i; x_prime = x + epsilon * movement
};

inline LayerTransformResult layer_transform_with_delta(const Vec& x, const DenseLayer& layer, double epsilon,
                                                       const Vec& delta) {
    if (x.size() != layer.in_dim()) throw std::invalid_argument("layer_transform: input dim mismatch");
    if (!delta.empty() && delta.size() != layer.out_dim())
        throw std::invalid_argument("layer_transform: delta dim mismatch");
    LayerTransformResult r;
    r.degrees.assign(layer.out_dim(), std::nan(""));
    r.x_prime = x;
    std::size_t live = 0;
    Vec move(x.size(), 0.0);
    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
        double ss = layer.bias[i] * layer.bias[i];
        for (std::size_t j = 0; j < layer.in_dim(); ++j) ss += layer.weights(i, j) * layer.weights(i, j);
        if (ss == 0.0) continue;  // degenerate: excluded from the mean
        ++live;
        double raw = layer.bias[i];
        for (std::size_t j = 0; j < layer.in_dim(); ++j) raw += layer.weights(i, j) * x[j];
        double deg = scalar_activation(layer.activation, raw) - raw / std::sqrt(ss);
        r.degrees[i] = deg;
        double coeff = deg + (delta.empty() ? 0.0 : delta[i]);
        for (std::size_t j = 0; j < layer.in_dim(); ++j) move[j] += coeff * layer.weights(i, j);
    }
    if (live == 0) throw std::runtime_error("layer_transform: all neurons degenerate");
    r.movement.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        r.movement[j] = move[j] / static_cast<double>(live);
        r.x_prime[j] = x[j] + epsilon * r.movement[j];
    }
    return r;
}

inline LayerTransformResult layer_transform(const Vec& x, const DenseLayer& layer, double epsilon) {
    return layer_transform_with_delta(x, layer, epsilon, {});
}

struct TransformationRecord {
    struct LayerRecord {
        std::size_t layer_index;
        Vec x;        // layer input
        Vec degrees;  // per neuron
        Vec x_prime;  // same dim as x
    };
    std::vector<LayerRecord> per_layer;  // ordered output layer -> input layer
    Vec input_space_x_prime;
    double epsilon = 0.0;
};

// Runs the transformation from the output layer back to the input layer. Each
// layer combines its own degrees with the output-space delta handed down from
// the layer above, and hands its input-space movement further down. The delta
// is the unit (epsilon-independent) movement, so the overall displacement is
// linear in epsilon and attribution rankings are invariant to rescaling it.
inline TransformationRecord explain(const DenseNet& net, const ActivationTrace& trace, double epsilon) {
    if (trace.per_layer_inputs.size() != net.layers.size())
        throw std::invalid_argument("explain: trace does not match net");
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        if (trace.per_layer_inputs[l].size() != net.layers[l].in_dim())
            throw std::invalid_argument("explain: trace dim mismatch at layer " + std::to_string(l));
    TransformationRecord record;
    record.epsilon = epsilon;
    Vec delta;  // empty = zero delta above the output layer
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const Vec& a = trace.per_layer_inputs[l];
        auto r = layer_transform_with_delta(a, net.layers[l], epsilon, delta);
        record.per_layer.push_back({l, a, r.degrees, r.x_prime});
        delta = r.movement;
    }
    record.input_space_x_prime = record.per_layer.back().x_prime;
    return record;
}

inline TransformationRecord explain_sample(const DenseNet& net, const Vec& x, double epsilon) {
    return explain(net, forward_traced(net, x), epsilon);
}

struct AttributionMap {
    Vec scores;                        // >= 0, one per input feature
    std::vector<std::size_t> ranking;  // descending score, ties by index
};

// Transformation magnitude as importance: score_j = |x'_j - x_j| in the
// original sample space.
inline AttributionMap attribution_from_transform(const TransformationRecord& record) {
    const Vec& x = record.per_layer.back().x;
    AttributionMap map;
    map.scores.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) map.scores[j] = std::abs(record.input_space_x_prime[j] - x[j]);
    map.ranking = rank_descending(map.scores);
    return map;
}

inline nlohmann::json record_to_json(const TransformationRecord& record, const std::string& model_hash,
                                     const std::string& sample_id) {
    nlohmann::json j;
    j["epsilon"] = record.epsilon;
    j["model_hash"] = model_hash;
    j["sample_id"] = sample_id;
    j["input_space_x_prime"] = record.input_space_x_prime;
    j["per_layer"] = nlohmann::json::array();
    for (const auto& lr : record.per_layer) {
        nlohmann::json lj;
        lj["layer_index"] = lr.layer_index;
        lj["x"] = lr.x;
        lj["degrees"] = lr.degrees;
        lj["x_prime"] = lr.x_prime;
        j["per_layer"].push_back(std::move(lj));
    }
    return j;
}

}  // namespace freqx
