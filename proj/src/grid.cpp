#include "sfkit/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace sfkit {

void validate_grid(const FieldGrid& g, const std::string& name) {
    if (g.height <= 0 || g.width <= 0)
        throw std::invalid_argument(name + ": non-positive dimensions");
    if (g.channels != 1 && g.channels != 2 && g.channels != 3)
        throw std::invalid_argument(name + ": unsupported channel count " +
                                    std::to_string(g.channels));
    const size_t expect =
        static_cast<size_t>(g.height) * g.width * g.channels;
    if (g.data.size() != expect)
        throw std::invalid_argument(name + ": data length " +
                                    std::to_string(g.data.size()) +
                                    " does not match shape (expected " +
                                    std::to_string(expect) + ")");
    for (float v : g.data)
        if (!std::isfinite(v))
            throw std::invalid_argument(name + ": non-finite value");
}

void validate_mask(const ValidityMask& m, const std::string& name) {
    if (m.height <= 0 || m.width <= 0)
        throw std::invalid_argument(name + ": non-positive dimensions");
    if (m.bits.size() != static_cast<size_t>(m.height) * m.width)
        throw std::invalid_argument(name + ": bit count does not match shape");
    for (uint8_t b : m.bits)
        if (b > 1)
            throw std::invalid_argument(name + ": mask byte not 0 or 1");
}

ValidityMask mask_and(const ValidityMask& a, const ValidityMask& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("mask_and: shape mismatch");
    ValidityMask out(a.height, a.width, 0);
    for (size_t i = 0; i < a.bits.size(); ++i)
        out.bits[i] = (a.bits[i] && b.bits[i]) ? 1 : 0;
    return out;
}

} // namespace sfkit
