#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "champ/types.hpp"

namespace champ::nn {

struct Conv2d {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    bool operator==(const Conv2d&) const = default;
};

struct MaxPool2d {
    int kernel = 2;
    int stride = 2;
    bool operator==(const MaxPool2d&) const = default;
};

struct Relu {
    bool operator==(const Relu&) const = default;
};

struct Flatten {
    bool operator==(const Flatten&) const = default;
};

struct Linear {
    int in_features = 0;
    int out_features = 0;
    bool operator==(const Linear&) const = default;
};

using LayerSpec = std::variant<Conv2d, MaxPool2d, Relu, Flatten, Linear>;

inline Shape output_shape(const LayerSpec& layer, const Shape& in) {
    return std::visit(
        [&](const auto& l) -> Shape {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2d>) {
                if (in.channels != l.in_channels)
                    throw std::invalid_argument("conv2d: expected " +
                                                std::to_string(l.in_channels) +
                                                " input channels, got " +
                                                std::to_string(in.channels));
                // Test the numerators before dividing: integer division
                // truncates toward zero, so a negative extent divided by a
                // stride >= 2 can masquerade as a valid size.
                const int eh = in.height + 2 * l.padding - l.kernel;
                const int ew = in.width + 2 * l.padding - l.kernel;
                if (eh < 0 || ew < 0)
                    throw std::invalid_argument("conv2d: kernel larger than padded input");
                return {l.out_channels, eh / l.stride + 1, ew / l.stride + 1};
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                const int eh = in.height - l.kernel;
                const int ew = in.width - l.kernel;
                if (eh < 0 || ew < 0)
                    throw std::invalid_argument("maxpool2d: window larger than input");
                return {in.channels, eh / l.stride + 1, ew / l.stride + 1};
            } else if constexpr (std::is_same_v<T, Flatten>) {
                return {static_cast<int>(in.size()), 1, 1};
            } else if constexpr (std::is_same_v<T, Linear>) {
                if (in.size() != l.in_features)
                    throw std::invalid_argument("linear: expected " +
                                                std::to_string(l.in_features) +
                                                " inputs, got " + std::to_string(in.size()));
                return {l.out_features, 1, 1};
            } else {  // Relu
                return in;
            }
        },
        layer);
}

inline std::int64_t param_count(const LayerSpec& layer) {
    return std::visit(
        [](const auto& l) -> std::int64_t {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2d>) {
                return static_cast<std::int64_t>(l.out_channels) * l.in_channels *
                           l.kernel * l.kernel +
                       l.out_channels;
            } else if constexpr (std::is_same_v<T, Linear>) {
                return static_cast<std::int64_t>(l.out_features) * l.in_features +
                       l.out_features;
            } else {
                return 0;
            }
        },
        layer);
}

// ---------------------------------------------------------------------------
// Per-layer forward/backward over flat (C,H,W) activations.
// Weight layout: conv [oc][ic][ky][kx] then bias [oc];
//                linear [out][in] then bias [out].
// ---------------------------------------------------------------------------

inline void conv2d_forward(const Conv2d& l, const Shape& in_shape,
                           std::span<const double> in, std::span<const double> weights,
                           const Shape& out_shape, std::span<double> out) {
    const int H = in_shape.height, W = in_shape.width;
    const int OH = out_shape.height, OW = out_shape.width;
    const double* bias = weights.data() +
                         static_cast<std::size_t>(l.out_channels) * l.in_channels *
                             l.kernel * l.kernel;
    for (int oc = 0; oc < l.out_channels; ++oc) {
        const double* wc = weights.data() +
                           static_cast<std::size_t>(oc) * l.in_channels * l.kernel * l.kernel;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                double acc = bias[oc];
                for (int ic = 0; ic < l.in_channels; ++ic) {
                    const double* wic = wc + static_cast<std::size_t>(ic) * l.kernel * l.kernel;
                    const double* xin = in.data() + static_cast<std::size_t>(ic) * H * W;
                    for (int ky = 0; ky < l.kernel; ++ky) {
                        const int iy = oy * l.stride - l.padding + ky;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < l.kernel; ++kx) {
                            const int ix = ox * l.stride - l.padding + kx;
                            if (ix < 0 || ix >= W) continue;
                            acc += wic[ky * l.kernel + kx] * xin[iy * W + ix];
                        }
                    }
                }
                out[(static_cast<std::size_t>(oc) * OH + oy) * OW + ox] = acc;
            }
        }
    }
}

// Accumulates into grad_weights and writes grad_in.
inline void conv2d_backward(const Conv2d& l, const Shape& in_shape,
                            std::span<const double> in, std::span<const double> weights,
                            const Shape& out_shape, std::span<const double> grad_out,
                            std::span<double> grad_in, std::span<double> grad_weights) {
    const int H = in_shape.height, W = in_shape.width;
    const int OH = out_shape.height, OW = out_shape.width;
    const std::size_t wsz =
        static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel * l.kernel;
    std::fill(grad_in.begin(), grad_in.end(), 0.0);
    for (int oc = 0; oc < l.out_channels; ++oc) {
        const double* wc = weights.data() + static_cast<std::size_t>(oc) * l.in_channels *
                                                l.kernel * l.kernel;
        double* gwc = grad_weights.data() + static_cast<std::size_t>(oc) * l.in_channels *
                                                l.kernel * l.kernel;
        double gbias = 0.0;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                const double go = grad_out[(static_cast<std::size_t>(oc) * OH + oy) * OW + ox];
                if (go == 0.0) continue;
                gbias += go;
                for (int ic = 0; ic < l.in_channels; ++ic) {
                    const double* wic = wc + static_cast<std::size_t>(ic) * l.kernel * l.kernel;
                    double* gwic = gwc + static_cast<std::size_t>(ic) * l.kernel * l.kernel;
                    const double* xin = in.data() + static_cast<std::size_t>(ic) * H * W;
                    double* gin = grad_in.data() + static_cast<std::size_t>(ic) * H * W;
                    for (int ky = 0; ky < l.kernel; ++ky) {
                        const int iy = oy * l.stride - l.padding + ky;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < l.kernel; ++kx) {
                            const int ix = ox * l.stride - l.padding + kx;
                            if (ix < 0 || ix >= W) continue;
                            gwic[ky * l.kernel + kx] += go * xin[iy * W + ix];
                            gin[iy * W + ix] += go * wic[ky * l.kernel + kx];
                        }
                    }
                }
            }
        }
        grad_weights[wsz + oc] += gbias;
    }
}

// Forward records the flat input index of each selected maximum.
inline void maxpool_forward(const MaxPool2d& l, const Shape& in_shape,
                            std::span<const double> in, const Shape& out_shape,
                            std::span<double> out, std::vector<int>& argmax) {
    const int H = in_shape.height, W = in_shape.width;
    const int OH = out_shape.height, OW = out_shape.width;
    argmax.resize(out_shape.size());
    for (int c = 0; c < in_shape.channels; ++c) {
        const double* xin = in.data() + static_cast<std::size_t>(c) * H * W;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                int best_idx = -1;
                double best = 0.0;
                for (int ky = 0; ky < l.kernel; ++ky) {
                    const int iy = oy * l.stride + ky;
                    if (iy >= H) continue;
                    for (int kx = 0; kx < l.kernel; ++kx) {
                        const int ix = ox * l.stride + kx;
                        if (ix >= W) continue;
                        const double v = xin[iy * W + ix];
                        if (best_idx < 0 || v > best) {
                            best = v;
                            best_idx = iy * W + ix;
                        }
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(c) * OH + oy) * OW + ox;
                out[o] = best;
                argmax[o] = c * H * W + best_idx;
            }
        }
    }
}

inline void maxpool_backward(std::span<const double> grad_out,
                             const std::vector<int>& argmax, std::span<double> grad_in) {
    std::fill(grad_in.begin(), grad_in.end(), 0.0);
    for (std::size_t o = 0; o < grad_out.size(); ++o)
        grad_in[argmax[o]] += grad_out[o];
}

inline void linear_forward(const Linear& l, std::span<const double> in,
                           std::span<const double> weights, std::span<double> out) {
    const double* bias =
        weights.data() + static_cast<std::size_t>(l.out_features) * l.in_features;
    for (int o = 0; o < l.out_features; ++o) {
        const double* row = weights.data() + static_cast<std::size_t>(o) * l.in_features;
        double acc = bias[o];
        for (int i = 0; i < l.in_features; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

inline void linear_backward(const Linear& l, std::span<const double> in,
                            std::span<const double> weights,
                            std::span<const double> grad_out, std::span<double> grad_in,
                            std::span<double> grad_weights) {
    const std::size_t wsz = static_cast<std::size_t>(l.out_features) * l.in_features;
    std::fill(grad_in.begin(), grad_in.end(), 0.0);
    for (int o = 0; o < l.out_features; ++o) {
        const double go = grad_out[o];
        const double* row = weights.data() + static_cast<std::size_t>(o) * l.in_features;
        double* grow = grad_weights.data() + static_cast<std::size_t>(o) * l.in_features;
        for (int i = 0; i < l.in_features; ++i) {
            grow[i] += go * in[i];
            grad_in[i] += go * row[i];
        }
        grad_weights[wsz + o] += go;
    }
}

}  // namespace champ::nn
