#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "champ/attack/prox.hpp"
#include "champ/nn/layers.hpp"
#include "champ/rng.hpp"
#include "champ/types.hpp"
#include "champ/vecmath.hpp"

namespace champ::nn {

enum class Arch { logistic, mlp, fmnist_cnn, cifar_alexnet, custom };

inline std::string arch_name(Arch a) {
    switch (a) {
        case Arch::logistic: return "logistic";
        case Arch::mlp: return "mlp";
        case Arch::fmnist_cnn: return "fmnist_cnn";
        case Arch::cifar_alexnet: return "cifar_alexnet";
        case Arch::custom: return "custom";
    }
    return "?";
}

struct ModelSpec {
    Arch arch = Arch::custom;
    Shape input_shape;
    int classes = 0;
    std::vector<int> hidden;  // mlp only
    std::vector<LayerSpec> layers;

    static ModelSpec logistic(int d_in, int classes) {
        ModelSpec s;
        s.arch = Arch::logistic;
        s.input_shape = {1, 1, d_in};
        s.classes = classes;
        s.layers = {Flatten{}, Linear{d_in, classes}};
        return s;
    }

    static ModelSpec mlp(int d_in, std::vector<int> hidden, int classes) {
        ModelSpec s;
        s.arch = Arch::mlp;
        s.input_shape = {1, 1, d_in};
        s.classes = classes;
        s.hidden = hidden;
        s.layers.push_back(Flatten{});
        int prev = d_in;
        for (int h : hidden) {
            s.layers.push_back(Linear{prev, h});
            s.layers.push_back(Relu{});
            prev = h;
        }
        s.layers.push_back(Linear{prev, classes});
        return s;
    }

    static ModelSpec fmnist_cnn() {
        ModelSpec s;
        s.arch = Arch::fmnist_cnn;
        s.input_shape = {1, 28, 28};
        s.classes = 10;
        s.layers = {
            Conv2d{1, 30, 3, 1, 1}, Relu{}, MaxPool2d{2, 2},
            Conv2d{30, 50, 3, 1, 1}, Relu{}, MaxPool2d{2, 2},
            Flatten{},
            Linear{2450, 100}, Relu{},
            Linear{100, 10},
        };
        return s;
    }

    static ModelSpec cifar_alexnet() {
        ModelSpec s;
        s.arch = Arch::cifar_alexnet;
        s.input_shape = {3, 32, 32};
        s.classes = 10;
        s.layers = {
            Conv2d{3, 64, 11, 4, 5}, Relu{}, MaxPool2d{2, 2},
            Conv2d{64, 192, 5, 1, 2}, Relu{}, MaxPool2d{2, 2},
            Conv2d{192, 384, 3, 1, 1}, Relu{},
            Conv2d{384, 256, 3, 1, 1}, Relu{},
            Conv2d{256, 256, 3, 1, 1}, Relu{}, MaxPool2d{2, 2},
            Flatten{},
            Linear{256, 10},
        };
        return s;
    }

    // Arbitrary layer stacks, used for reduced-width test variants.
    static ModelSpec custom(Shape input, std::vector<LayerSpec> layers, int classes) {
        ModelSpec s;
        s.arch = Arch::custom;
        s.input_shape = input;
        s.classes = classes;
        s.layers = std::move(layers);
        return s;
    }

    // Shape after each layer; validates layer compatibility.
    std::vector<Shape> output_shapes() const {
        std::vector<Shape> shapes;
        Shape cur = input_shape;
        for (const auto& l : layers) {
            cur = output_shape(l, cur);
            shapes.push_back(cur);
        }
        if (shapes.empty() || shapes.back().size() != classes)
            throw std::invalid_argument("model spec: final layer does not produce " +
                                        std::to_string(classes) + " outputs");
        return shapes;
    }

    std::int64_t param_count() const {
        std::int64_t n = 0;
        for (const auto& l : layers) n += champ::nn::param_count(l);
        return n;
    }

    // Flat-parameter offset of each layer, in layer order.
    std::vector<std::int64_t> layer_offsets() const {
        std::vector<std::int64_t> off;
        std::int64_t n = 0;
        for (const auto& l : layers) {
            off.push_back(n);
            n += champ::nn::param_count(l);
        }
        return off;
    }

    bool operator==(const ModelSpec&) const = default;
};

struct Model {
    ModelSpec spec;
    ParamVector params;

    static Model zeros(const ModelSpec& spec) {
        spec.output_shapes();  // validate
        return {spec, ParamVector(static_cast<std::size_t>(spec.param_count()), 0.0)};
    }
};

// Kaiming-uniform-style fan-in init; biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline Model init_model(const ModelSpec& spec, std::uint64_t seed) {
    Model m = Model::zeros(spec);
    Rng rng(derive_seed(seed, "init"));
    const auto offsets = spec.layer_offsets();
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& layer = spec.layers[li];
        std::int64_t fan_in = 0, wcount = 0, bcount = 0;
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            fan_in = static_cast<std::int64_t>(c->in_channels) * c->kernel * c->kernel;
            wcount = static_cast<std::int64_t>(c->out_channels) * fan_in;
            bcount = c->out_channels;
        } else if (const auto* l = std::get_if<Linear>(&layer)) {
            fan_in = l->in_features;
            wcount = static_cast<std::int64_t>(l->out_features) * l->in_features;
            bcount = l->out_features;
        } else {
            continue;
        }
        const double wbound = std::sqrt(6.0 / static_cast<double>(fan_in));
        const double bbound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        double* p = m.params.data() + offsets[li];
        for (std::int64_t i = 0; i < wcount; ++i) p[i] = rng.uniform(-wbound, wbound);
        for (std::int64_t i = 0; i < bcount; ++i) p[wcount + i] = rng.uniform(-bbound, bbound);
    }
    return m;
}

inline ParamVector flatten(const Model& m) { return m.params; }

inline Model unflatten(const ModelSpec& spec, ParamVector params) {
    if (static_cast<std::int64_t>(params.size()) != spec.param_count())
        throw std::invalid_argument("unflatten: expected " +
                                    std::to_string(spec.param_count()) + " values, got " +
                                    std::to_string(params.size()));
    return {spec, std::move(params)};
}

namespace detail {

// Activation buffers for one sample: input plus every layer output,
// with maxpool argmax indices for the backward pass.
struct Trace {
    std::vector<std::vector<double>> acts;      // acts[0] = input, acts[i+1] = layer i out
    std::vector<std::vector<int>> pool_argmax;  // per layer; empty if not a pool
};

inline void forward_sample(const Model& m, const std::vector<Shape>& shapes,
                           const std::vector<std::int64_t>& offsets,
                           std::span<const double> input, Trace* trace,
                           std::vector<double>& out) {
    const auto& spec = m.spec;
    std::vector<double> cur(input.begin(), input.end());
    if (trace) {
        trace->acts.assign(1, cur);
        trace->pool_argmax.assign(spec.layers.size(), {});
    }
    Shape cur_shape = spec.input_shape;
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& layer = spec.layers[li];
        const Shape& os = shapes[li];
        std::vector<double> next(static_cast<std::size_t>(os.size()));
        std::span<const double> w(m.params.data() + offsets[li],
                                  static_cast<std::size_t>(param_count(layer)));
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            conv2d_forward(*c, cur_shape, cur, w, os, next);
        } else if (const auto* p = std::get_if<MaxPool2d>(&layer)) {
            std::vector<int> argmax;
            maxpool_forward(*p, cur_shape, cur, os, next, argmax);
            if (trace) trace->pool_argmax[li] = std::move(argmax);
        } else if (std::holds_alternative<Relu>(layer)) {
            for (std::size_t i = 0; i < cur.size(); ++i) next[i] = cur[i] > 0.0 ? cur[i] : 0.0;
        } else if (std::holds_alternative<Flatten>(layer)) {
            next = cur;
        } else if (const auto* l = std::get_if<Linear>(&layer)) {
            linear_forward(*l, cur, w, next);
        }
        cur = std::move(next);
        cur_shape = os;
        if (trace) trace->acts.push_back(cur);
    }
    out = std::move(cur);
}

inline void backward_sample(const Model& m, const std::vector<Shape>& shapes,
                            const std::vector<std::int64_t>& offsets, const Trace& trace,
                            std::vector<double> grad_out, ParamVector& grad_params) {
    const auto& spec = m.spec;
    for (std::size_t li = spec.layers.size(); li-- > 0;) {
        const auto& layer = spec.layers[li];
        const auto& in_act = trace.acts[li];
        const Shape in_shape = li == 0 ? spec.input_shape : shapes[li - 1];
        const Shape& os = shapes[li];
        std::vector<double> grad_in(in_act.size());
        std::span<const double> w(m.params.data() + offsets[li],
                                  static_cast<std::size_t>(param_count(layer)));
        std::span<double> gw(grad_params.data() + offsets[li],
                             static_cast<std::size_t>(param_count(layer)));
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            conv2d_backward(*c, in_shape, in_act, w, os, grad_out, grad_in, gw);
        } else if (std::holds_alternative<MaxPool2d>(layer)) {
            maxpool_backward(grad_out, trace.pool_argmax[li], grad_in);
        } else if (std::holds_alternative<Relu>(layer)) {
            for (std::size_t i = 0; i < in_act.size(); ++i)
                grad_in[i] = in_act[i] > 0.0 ? grad_out[i] : 0.0;
        } else if (std::holds_alternative<Flatten>(layer)) {
            grad_in = grad_out;
        } else if (const auto* l = std::get_if<Linear>(&layer)) {
            linear_backward(*l, in_act, w, grad_out, grad_in, gw);
        }
        grad_out = std::move(grad_in);
    }
}

}  // namespace detail

// Logits for a batch of images; one row per sample.
inline std::vector<std::vector<double>> forward(const Model& m,
                                                const std::vector<Image>& batch) {
    const auto shapes = m.spec.output_shapes();
    const auto offsets = m.spec.layer_offsets();
    std::vector<std::vector<double>> logits(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (!(batch[b].shape == m.spec.input_shape))
            throw std::invalid_argument("forward: image shape " + batch[b].shape.str() +
                                        " does not match model input " +
                                        m.spec.input_shape.str());
        detail::forward_sample(m, shapes, offsets, batch[b].pixels, nullptr, logits[b]);
    }
    return logits;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

inline int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Optional composite objective: cross-entropy + alpha * prox(params, reference).
struct CompositeLoss {
    double alpha = 0.0;
    attack::ProxMetric metric;
    ParamVector reference;
};

// Mean cross-entropy (+ composite term) and its gradient over a batch.
inline std::pair<double, ParamVector> loss_and_grad(
    const Model& m, const std::vector<const Image*>& batch, const std::vector<int>& labels,
    const std::optional<CompositeLoss>& composite = std::nullopt) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    if (batch.size() != labels.size())
        throw std::invalid_argument("loss_and_grad: batch/label count mismatch");
    const auto shapes = m.spec.output_shapes();
    const auto offsets = m.spec.layer_offsets();
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    double loss = 0.0;
    ParamVector grad(m.params.size(), 0.0);
    detail::Trace trace;
    std::vector<double> logits;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (labels[b] < 0 || labels[b] >= m.spec.classes)
            throw std::invalid_argument("loss_and_grad: label out of range");
        if (!(batch[b]->shape == m.spec.input_shape))
            throw std::invalid_argument("loss_and_grad: image shape " +
                                        batch[b]->shape.str() +
                                        " does not match model input " +
                                        m.spec.input_shape.str());
        detail::forward_sample(m, shapes, offsets, batch[b]->pixels, &trace, logits);
        auto probs = softmax(logits);
        loss -= std::log(std::max(probs[labels[b]], 1e-300)) * inv_b;
        std::vector<double> grad_logits(probs.size());
        for (std::size_t c = 0; c < probs.size(); ++c)
            grad_logits[c] = (probs[c] - (static_cast<int>(c) == labels[b] ? 1.0 : 0.0)) * inv_b;
        detail::backward_sample(m, shapes, offsets, trace, std::move(grad_logits), grad);
    }

    if (composite && composite->alpha != 0.0) {
        if (composite->reference.size() != m.params.size())
            throw std::invalid_argument("composite loss: reference K mismatch");
        auto [pv, pg] = attack::prox_value_and_grad(composite->metric, m.params,
                                                    composite->reference);
        loss += composite->alpha * pv;
        axpy(composite->alpha, pg, grad);
    }
    return {loss, std::move(grad)};
}

inline Model sgd_step(Model m, const ParamVector& grad, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: lr must be > 0");
    require_same_size(m.params, grad, "sgd_step");
    for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i] -= lr * grad[i];
    return m;
}

// Mini-batch SGD with a seeded shuffle stream; pure in (inputs, seed).
//
// The euclidean composite is applied as a forward-backward split: each batch
// takes a plain cross-entropy step and then the exact minimizer of
// (1/2)||p - p_hat||^2 + lr * alpha * (lambda/2)||p - r||^2, i.e. the pull
// p <- (p + k*r) / (1 + k) with k = lr * alpha * lambda.  Unlike an explicit
// gradient on the penalty this contracts toward the reference for any
// stiffness, so large alpha pins the update to the reference instead of
// diverging.  Cosine and huber penalties keep the explicit combined gradient.
inline Model train_local(const Model& start, const Dataset& data, int epochs, double lr,
                         int batch_size, const std::optional<CompositeLoss>& composite,
                         std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("train_local: empty dataset");
    if (epochs < 1) throw std::invalid_argument("train_local: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train_local: batch must be >= 1");

    const bool split_prox = composite && composite->alpha != 0.0 &&
                            composite->metric.kind == attack::ProxMetric::Kind::euclidean;
    if (split_prox && composite->reference.size() != start.params.size())
        throw std::invalid_argument("composite loss: reference K mismatch");

    Model m = start;
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<const Image*> batch;
    std::vector<int> labels;
    for (int e = 0; e < epochs; ++e) {
        Rng rng(derive_seed(seed, "epoch", static_cast<std::uint64_t>(e)));
        rng.shuffle(order);
        for (std::size_t pos = 0; pos < order.size(); pos += batch_size) {
            const std::size_t end = std::min(order.size(), pos + batch_size);
            batch.clear();
            labels.clear();
            for (std::size_t i = pos; i < end; ++i) {
                batch.push_back(&data.items[order[i]].image);
                labels.push_back(data.items[order[i]].label);
            }
            auto [loss, grad] =
                loss_and_grad(m, batch, labels, split_prox ? std::nullopt : composite);
            if (!std::isfinite(loss))
                throw std::runtime_error("train_local: non-finite loss at epoch " +
                                         std::to_string(e) + " batch " +
                                         std::to_string(pos / batch_size));
            if (lr > 0.0) {
                m = sgd_step(std::move(m), grad, lr);
                if (split_prox) {
                    const double k = lr * composite->alpha * composite->metric.lambda;
                    const double shrink = 1.0 / (1.0 + k);
                    for (std::size_t i = 0; i < m.params.size(); ++i)
                        m.params[i] = (m.params[i] + k * composite->reference[i]) * shrink;
                }
            }
        }
    }
    return m;
}

}  // namespace champ::nn
