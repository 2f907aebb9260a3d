#ifndef SFKIT_GRID_HPP
#define SFKIT_GRID_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace sfkit {

/// Dense H x W x C grid of 32-bit floats, row-major, channel-last.
/// Channel counts used here: 1 (depth), 2 (optical flow), 3 (pointmaps,
/// scene flow).
struct FieldGrid {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> data;

    FieldGrid() = default;
    FieldGrid(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * w * c, fill) {}

    size_t size() const { return data.size(); }

    float& at(int y, int x, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const FieldGrid& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

/// Per-pixel validity, one byte per pixel, 0 or 1.
struct ValidityMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> bits;

    ValidityMask() = default;
    ValidityMask(int h, int w, uint8_t fill = 1)
        : height(h), width(w), bits(static_cast<size_t>(h) * w, fill) {}

    uint8_t& at(int y, int x) { return bits[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return bits[static_cast<size_t>(y) * width + x]; }

    bool valid(int y, int x) const { return at(y, x) != 0; }

    size_t count_valid() const {
        size_t n = 0;
        for (uint8_t b : bits) n += (b != 0);
        return n;
    }

    bool same_shape(const ValidityMask& o) const {
        return height == o.height && width == o.width;
    }
};

/// Throws std::invalid_argument naming `name` if the grid shape is
/// inconsistent, the channel count is unsupported, or any value is
/// non-finite.
void validate_grid(const FieldGrid& g, const std::string& name);

/// Throws if mask dimensions are off or any byte is not 0/1.
void validate_mask(const ValidityMask& m, const std::string& name);

/// Elementwise logical AND of masks with identical shape.
ValidityMask mask_and(const ValidityMask& a, const ValidityMask& b);

} // namespace sfkit

#endif
