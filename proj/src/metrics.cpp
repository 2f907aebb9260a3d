#include "sfkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sfkit {

namespace {

double norm3(const FieldGrid& g, int y, int x) {
    const double a = g.at(y, x, 0), b = g.at(y, x, 1), c = g.at(y, x, 2);
    return std::sqrt(a * a + b * b + c * c);
}

void collect_ratios(const FieldGrid& pred, const FieldGrid& gt,
                    const ValidityMask& mask, std::vector<double>& ratios) {
    for (int y = 0; y < pred.height; ++y) {
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.valid(y, x)) continue;
            const double pn = norm3(pred, y, x);
            if (!(pn > 0.0)) continue;
            ratios.push_back(norm3(gt, y, x) / pn);
        }
    }
}

double median_of(std::vector<double>& v) {
    if (v.empty())
        throw std::domain_error("align_scale: no valid pixel with nonzero "
                                "predicted norm");
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

SceneFlowMetrics sceneflow_metrics(const FieldGrid& pred_sf,
                                   const FieldGrid& gt_sf,
                                   const ValidityMask& m_sf) {
    if (!pred_sf.same_shape(gt_sf))
        throw std::invalid_argument("sceneflow_metrics: shape mismatch");
    SceneFlowMetrics m;
    double epe_sum = 0.0;
    size_t n = 0, n_s = 0, n_r = 0, n_o = 0;
    for (int y = 0; y < pred_sf.height; ++y) {
        for (int x = 0; x < pred_sf.width; ++x) {
            if (!m_sf.valid(y, x)) continue;
            const double dx = pred_sf.at(y, x, 0) - gt_sf.at(y, x, 0);
            const double dy = pred_sf.at(y, x, 1) - gt_sf.at(y, x, 1);
            const double dz = pred_sf.at(y, x, 2) - gt_sf.at(y, x, 2);
            const double e = std::sqrt(dx * dx + dy * dy + dz * dz);
            const double gn = norm3(gt_sf, y, x);
            const bool has_rel = gn > 0.0;
            const double rel = has_rel ? e / gn : 0.0;
            epe_sum += e;
            ++n;
            if (e < 0.05 || (has_rel && rel < 0.05)) ++n_s;
            if (e < 0.1 || (has_rel && rel < 0.1)) ++n_r;
            if (e > 0.3 || (has_rel && rel > 0.1)) ++n_o;
        }
    }
    if (n == 0)
        throw std::domain_error("sceneflow_metrics: no valid pixels");
    m.epe = epe_sum / static_cast<double>(n);
    m.acc_s = static_cast<double>(n_s) / static_cast<double>(n);
    m.acc_r = static_cast<double>(n_r) / static_cast<double>(n);
    m.out = static_cast<double>(n_o) / static_cast<double>(n);
    m.valid_count = n;
    if (m.acc_s > m.acc_r)
        throw std::logic_error("sceneflow_metrics: AccS exceeded AccR");
    return m;
}

DepthMetrics depth_metrics(const FieldGrid& pred_z, const FieldGrid& gt_z,
                           const ValidityMask& mask, bool aligned,
                           double alignment_scale) {
    if (!pred_z.same_shape(gt_z))
        throw std::invalid_argument("depth_metrics: shape mismatch");
    DepthMetrics m;
    double absrel_sum = 0.0;
    size_t n = 0, n_d1 = 0;
    for (int y = 0; y < pred_z.height; ++y) {
        for (int x = 0; x < pred_z.width; ++x) {
            if (!mask.valid(y, x)) continue;
            const double d = gt_z.at(y, x);
            if (!(d > 0.0))
                throw std::domain_error(
                    "depth_metrics: nonpositive ground-truth depth at a "
                    "valid pixel");
            const double dp =
                (aligned ? alignment_scale : 1.0) * pred_z.at(y, x);
            absrel_sum += std::fabs(dp - d) / d;
            if (dp > 0.0 && std::max(dp / d, d / dp) < 1.25) ++n_d1;
            ++n;
        }
    }
    if (n == 0) throw std::domain_error("depth_metrics: no valid pixels");
    m.absrel = absrel_sum / static_cast<double>(n);
    m.delta1 = static_cast<double>(n_d1) / static_cast<double>(n);
    m.valid_count = n;
    return m;
}

double align_scale(const FieldGrid& pred_points, const FieldGrid& gt_points,
                   const ValidityMask& mask) {
    std::vector<double> ratios;
    collect_ratios(pred_points, gt_points, mask, ratios);
    return median_of(ratios);
}

double align_scale_pooled(const FieldGrid& pred1, const FieldGrid& pred2,
                          const FieldGrid& gt1, const FieldGrid& gt2,
                          const ValidityMask& m1, const ValidityMask& m2) {
    std::vector<double> ratios;
    collect_ratios(pred1, gt1, m1, ratios);
    collect_ratios(pred2, gt2, m2, ratios);
    return median_of(ratios);
}

FieldGrid z_channel(const FieldGrid& points) {
    if (points.channels != 3)
        throw std::invalid_argument("z_channel: expected 3 channels");
    FieldGrid z(points.height, points.width, 1);
    for (int y = 0; y < points.height; ++y)
        for (int x = 0; x < points.width; ++x)
            z.at(y, x) = points.at(y, x, 2);
    return z;
}

} // namespace sfkit
