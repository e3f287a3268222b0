#pragma once

#include <json.hpp>

#include "champ/nn/model.hpp"

namespace champ::nn {

inline void to_json(nlohmann::json& j, const LayerSpec& layer) {
    std::visit(
        [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2d>) {
                j = {{"type", "conv2d"},     {"in", l.in_channels}, {"out", l.out_channels},
                     {"kernel", l.kernel},   {"stride", l.stride},  {"padding", l.padding}};
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                j = {{"type", "maxpool2d"}, {"kernel", l.kernel}, {"stride", l.stride}};
            } else if constexpr (std::is_same_v<T, Relu>) {
                j = {{"type", "relu"}};
            } else if constexpr (std::is_same_v<T, Flatten>) {
                j = {{"type", "flatten"}};
            } else {
                j = {{"type", "linear"}, {"in", l.in_features}, {"out", l.out_features}};
            }
        },
        layer);
}

inline void from_json(const nlohmann::json& j, LayerSpec& layer) {
    const std::string type = j.at("type");
    if (type == "conv2d")
        layer = Conv2d{j.at("in"), j.at("out"), j.at("kernel"), j.at("stride"),
                       j.at("padding")};
    else if (type == "maxpool2d")
        layer = MaxPool2d{j.at("kernel"), j.at("stride")};
    else if (type == "relu")
        layer = Relu{};
    else if (type == "flatten")
        layer = Flatten{};
    else if (type == "linear")
        layer = Linear{j.at("in"), j.at("out")};
    else
        throw std::invalid_argument("unknown layer type: " + type);
}

inline nlohmann::json shape_to_json(const Shape& s) {
    return {s.channels, s.height, s.width};
}

inline Shape shape_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<int>>();
    if (v.size() != 3) throw std::invalid_argument("input_shape must be [c,h,w]");
    return {v[0], v[1], v[2]};
}

inline void to_json(nlohmann::json& j, const ModelSpec& spec) {
    // Flatten-first archs adopt the data's geometry as their input shape, so
    // it has to travel with the spec rather than be rebuilt by the factory.
    switch (spec.arch) {
        case Arch::logistic:
            j = {{"arch", "logistic"},
                 {"input_shape", shape_to_json(spec.input_shape)},
                 {"classes", spec.classes}};
            return;
        case Arch::mlp:
            j = {{"arch", "mlp"},
                 {"input_shape", shape_to_json(spec.input_shape)},
                 {"hidden", spec.hidden},
                 {"classes", spec.classes}};
            return;
        case Arch::fmnist_cnn:
            j = {{"arch", "fmnist_cnn"}};
            return;
        case Arch::cifar_alexnet:
            j = {{"arch", "cifar_alexnet"}};
            return;
        case Arch::custom:
            j = {{"arch", "custom"},
                 {"input_shape", shape_to_json(spec.input_shape)},
                 {"classes", spec.classes},
                 {"layers", spec.layers}};
            return;
    }
}

inline void from_json(const nlohmann::json& j, ModelSpec& spec) {
    const std::string arch = j.at("arch");
    if (arch == "logistic") {
        const Shape shape = shape_from_json(j.at("input_shape"));
        spec = ModelSpec::logistic(static_cast<int>(shape.size()), j.at("classes"));
        spec.input_shape = shape;
    } else if (arch == "mlp") {
        const Shape shape = shape_from_json(j.at("input_shape"));
        spec = ModelSpec::mlp(static_cast<int>(shape.size()),
                              j.at("hidden").get<std::vector<int>>(), j.at("classes"));
        spec.input_shape = shape;
    } else if (arch == "fmnist_cnn") {
        spec = ModelSpec::fmnist_cnn();
    } else if (arch == "cifar_alexnet") {
        spec = ModelSpec::cifar_alexnet();
    } else if (arch == "custom") {
        spec = ModelSpec::custom(shape_from_json(j.at("input_shape")),
                                 j.at("layers").get<std::vector<LayerSpec>>(),
                                 j.at("classes"));
    } else {
        throw std::invalid_argument("unknown architecture: " + arch);
    }
}

}  // namespace champ::nn
