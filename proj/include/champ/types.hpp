#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace champ {

// Flat vector of all model parameters; the unit of aggregation.
using ParamVector = std::vector<double>;

struct Shape {
    int channels = 1;
    int height = 1;
    int width = 1;

    std::int64_t size() const {
        return static_cast<std::int64_t>(channels) * height * width;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const {
        return std::to_string(channels) + "x" + std::to_string(height) + "x" +
               std::to_string(width);
    }
};

// Pixel tensor in channel-major (C,H,W) order, values in [0,1].
struct Image {
    Shape shape;
    std::vector<double> pixels;

    double at(int c, int y, int x) const {
        return pixels[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
    }
    double& at(int c, int y, int x) {
        return pixels[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
    }
};

struct LabeledImage {
    Image image;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledImage> items;
    int class_count = 0;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

// Checks the dataset invariants: labels in range, pixels in [0,1].
inline void validate_dataset(const Dataset& ds) {
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        const auto& it = ds.items[i];
        if (it.label < 0 || it.label >= ds.class_count)
            throw std::invalid_argument("dataset item " + std::to_string(i) +
                                        ": label " + std::to_string(it.label) +
                                        " outside class range");
        if (static_cast<std::int64_t>(it.image.pixels.size()) != it.image.shape.size())
            throw std::invalid_argument("dataset item " + std::to_string(i) +
                                        ": pixel count does not match shape");
        for (double p : it.image.pixels)
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("dataset item " + std::to_string(i) +
                                            ": pixel outside [0,1]");
    }
}

}  // namespace champ
