// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary PGM (P5) / PPM (P6), 8-bit, plus the frame visualizations the CLI
// writes.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "compvol/error.hpp"
#include "compvol/frame.hpp"
#include "compvol/image.hpp"

namespace compvol {

struct Raster8 {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 -> P5, 3 -> P6
    int maxval = 255;
    std::vector<std::uint8_t> data;

    bool operator==(const Raster8&) const = default;
};

inline void write_pnm(const std::filesystem::path& path, const Raster8& r) {
    if (r.channels != 1 && r.channels != 3) throw UsageError("PNM output needs 1 or 3 channels");
    if (r.data.size() != static_cast<std::size_t>(r.width) * r.height * r.channels)
        throw UsageError("raster size does not match its dimensions");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << (r.channels == 3 ? "P6" : "P5") << '\n' << r.width << ' ' << r.height << '\n' << r.maxval << '\n';
    out.write(reinterpret_cast<const char*>(r.data.data()), static_cast<std::streamsize>(r.data.size()));
    if (!out) throw FormatError("write failed: " + path.string());
}

inline Raster8 read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    const std::string who = path.filename().string();

    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> int {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
            throw FormatError(who + ": malformed PNM header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos++] - '0');
            if (v > 1 << 24) throw FormatError(who + ": header value too large");
        }
        return static_cast<int>(v);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError(who + ": not a binary PGM/PPM file");
    Raster8 r;
    r.channels = bytes[1] == '6' ? 3 : 1;
    pos = 2;
    r.width = read_int();
    r.height = read_int();
    r.maxval = read_int();
    if (r.width < 1 || r.height < 1) throw FormatError(who + ": invalid dimensions");
    if (r.maxval < 1 || r.maxval > 255) throw FormatError(who + ": only 8-bit PNM is supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw FormatError(who + ": malformed PNM header");
    ++pos;  // single whitespace before the raster
    const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
    if (bytes.size() - pos < n) throw FormatError(who + ": truncated raster");
    r.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return r;
}

/// Channel values divided by maxval, i.e. in [0, 1].
inline Image to_unit_image(const Raster8& r) {
    Image img(r.width, r.height, r.channels);
    for (std::size_t i = 0; i < r.data.size(); ++i) img.data[i] = r.data[i] / static_cast<double>(r.maxval);
    return img;
}

inline Image load_image(const std::filesystem::path& path) { return to_unit_image(read_pnm(path)); }

inline std::uint8_t to_byte(double unit) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0));
}

// ---------------------------------------------------------------------------
// Frame visualizations

enum class FeatureVis { First3, Norm };

/// first3: channels 0..2 (repeated when C < 3) affinely rescaled to [0, 1]
/// over the covered pixels of the frame; norm: L2 norm over its frame max.
inline Raster8 feature_to_raster(const RenderedFrame& f, FeatureVis vis) {
    const std::size_t pixels = static_cast<std::size_t>(f.width) * f.height;
    if (vis == FeatureVis::First3) {
        Raster8 r{f.width, f.height, 3, 255, std::vector<std::uint8_t>(pixels * 3, 0)};
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t p = 0; p < pixels; ++p) {
            if (!f.coverage[p]) continue;
            for (int c = 0; c < 3; ++c) {
                const double v = f.feature[p * f.channels + c % f.channels];
                lo = any ? std::min(lo, v) : v;
                hi = any ? std::max(hi, v) : v;
                any = true;
            }
        }
        const double range = hi > lo ? hi - lo : 1.0;
        for (std::size_t p = 0; p < pixels; ++p) {
            if (!f.coverage[p]) continue;
            for (int c = 0; c < 3; ++c)
                r.data[p * 3 + c] = to_byte((f.feature[p * f.channels + c % f.channels] - lo) / range);
        }
        return r;
    }
    Raster8 r{f.width, f.height, 1, 255, std::vector<std::uint8_t>(pixels, 0)};
    std::vector<double> norms(pixels, 0.0);
    double top = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
        double s = 0.0;
        for (int c = 0; c < f.channels; ++c) s += f.feature[p * f.channels + c] * f.feature[p * f.channels + c];
        norms[p] = std::sqrt(s);
        top = std::max(top, norms[p]);
    }
    for (std::size_t p = 0; p < pixels; ++p) r.data[p] = to_byte(top > 0.0 ? norms[p] / top : 0.0);
    return r;
}

/// Norm visualization expanded to gray RGB, so every feature image is a PPM.
inline Raster8 gray_to_rgb(const Raster8& g) {
    Raster8 r{g.width, g.height, 3, g.maxval, std::vector<std::uint8_t>(g.data.size() * 3)};
    for (std::size_t i = 0; i < g.data.size(); ++i) r.data[i * 3] = r.data[i * 3 + 1] = r.data[i * 3 + 2] = g.data[i];
    return r;
}

inline Raster8 mask_channel_raster(const MaskGrid& m, int k) {
    Raster8 r{m.width, m.height, 1, 255, std::vector<std::uint8_t>(static_cast<std::size_t>(m.width) * m.height)};
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) r.data[static_cast<std::size_t>(y) * m.width + x] = to_byte(m.at(x, y, k));
    return r;
}

/// Label map with part indices stored directly as gray levels.
inline Raster8 label_raster(const std::vector<int>& labels, int width, int height) {
    Raster8 r{width, height, 1, 255, std::vector<std::uint8_t>(labels.size())};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 255) throw UsageError("label out of 8-bit range");
        r.data[i] = static_cast<std::uint8_t>(labels[i]);
    }
    return r;
}

}  // namespace compvol
