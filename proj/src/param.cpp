#include "sfkit/param.hpp"

#include <stdexcept>

namespace sfkit {

namespace {

void require_shape(const FieldGrid& a, const FieldGrid& b, const char* what) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

} // namespace

FieldGrid cso_to_ep(const FieldGrid& sf, const FieldGrid& x1) {
    require_shape(sf, x1, "cso_to_ep");
    FieldGrid ep(sf.height, sf.width, 3);
    for (size_t i = 0; i < ep.data.size(); ++i)
        ep.data[i] = x1.data[i] + sf.data[i];
    return ep;
}

FieldGrid ep_to_cso(const FieldGrid& ep, const FieldGrid& x1) {
    require_shape(ep, x1, "ep_to_cso");
    FieldGrid sf(ep.height, ep.width, 3);
    for (size_t i = 0; i < sf.data.size(); ++i)
        sf.data[i] = ep.data[i] - x1.data[i];
    return sf;
}

DdofFields cso_to_ddof(const FieldGrid& sf, const FieldGrid& x1,
                       const CameraIntrinsics& k, const ValidityMask& valid) {
    require_shape(sf, x1, "cso_to_ddof");
    const int h = sf.height, w = sf.width;
    DdofFields out;
    out.mu = FieldGrid(h, w, 2);
    out.dd = FieldGrid(h, w, 1);
    out.valid = ValidityMask(h, w, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!valid.valid(y, x)) continue;
            const double sx = x1.at(y, x, 0), sy = x1.at(y, x, 1),
                         sz = x1.at(y, x, 2);
            const double ex = sx + sf.at(y, x, 0), ey = sy + sf.at(y, x, 1),
                         ez = sz + sf.at(y, x, 2);
            if (!(sz > 0.0) || !(ez > 0.0)) continue;
            out.mu.at(y, x, 0) = static_cast<float>(
                (k.fx * ex / ez + k.cx) - (k.fx * sx / sz + k.cx));
            out.mu.at(y, x, 1) = static_cast<float>(
                (k.fy * ey / ez + k.cy) - (k.fy * sy / sz + k.cy));
            out.dd.at(y, x) = static_cast<float>(ez - sz);
            out.valid.at(y, x) = 1;
        }
    }
    return out;
}

std::pair<FieldGrid, ValidityMask> ddof_to_cso(const FieldGrid& mu,
                                               const FieldGrid& dd,
                                               const FieldGrid& x1,
                                               const CameraIntrinsics& k,
                                               const ValidityMask& valid) {
    require_shape(mu, x1, "ddof_to_cso");
    require_shape(dd, x1, "ddof_to_cso");
    if (mu.channels != 2 || dd.channels != 1 || x1.channels != 3)
        throw std::invalid_argument("ddof_to_cso: bad channel counts");
    const int h = x1.height, w = x1.width;

    // Depth after motion on the source lattice, then its pointmap.
    FieldGrid d2(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            d2.at(y, x) = x1.at(y, x, 2) + dd.at(y, x);
    const FieldGrid moved = unproject(d2, k);

    FieldGrid sf(h, w, 3);
    ValidityMask mout(h, w, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!valid.valid(y, x)) continue;
            const SampleResult s =
                sample_bilinear(moved, valid, x + mu.at(y, x, 0),
                                y + mu.at(y, x, 1));
            if (!s.valid) continue;
            sf.at(y, x, 0) = static_cast<float>(s.value[0] - x1.at(y, x, 0));
            sf.at(y, x, 1) = static_cast<float>(s.value[1] - x1.at(y, x, 1));
            sf.at(y, x, 2) = static_cast<float>(s.value[2] - x1.at(y, x, 2));
            mout.at(y, x) = 1;
        }
    }
    return {std::move(sf), std::move(mout)};
}

} // namespace sfkit
