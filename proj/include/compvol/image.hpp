// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace compvol {

/// Interleaved image with real-valued channels, row-major.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * channels; }
    double at(int x, int y, int c) const { return data[offset(x, y) + c]; }
    double& at(int x, int y, int c) { return data[offset(x, y) + c]; }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

}  // namespace compvol
