#include "sfkit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfkit {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double pixel_norm(const FieldGrid& g, int y, int x) {
    const double a = g.at(y, x, 0), b = g.at(y, x, 1), c = g.at(y, x, 2);
    return std::sqrt(a * a + b * b + c * c);
}

void require_pointmap(const FieldGrid& g, const char* name) {
    if (g.channels != 3)
        throw std::invalid_argument(std::string(name) + ": expected 3 channels");
}

struct MedianInfo {
    double scale = 1.0;
    // Pixels whose ratio forms the median, with their weights (one pixel
    // with weight 1 for odd counts, two with 1/2 for even counts).
    struct Entry {
        int view; // 0 or 1
        int idx;  // y * width + x
        double weight;
        double gt_norm;
        double pred_norm;
    };
    std::vector<Entry> median_pixels;
};

MedianInfo median_ratio(const FieldGrid& pred1, const FieldGrid& pred2,
                        const FieldGrid& gt1, const FieldGrid& gt2,
                        const ValidityMask& m1, const ValidityMask& m2) {
    struct R {
        double ratio;
        MedianInfo::Entry e;
    };
    std::vector<R> rs;
    const FieldGrid* preds[2] = {&pred1, &pred2};
    const FieldGrid* gts[2] = {&gt1, &gt2};
    const ValidityMask* ms[2] = {&m1, &m2};
    for (int v = 0; v < 2; ++v) {
        for (int y = 0; y < pred1.height; ++y) {
            for (int x = 0; x < pred1.width; ++x) {
                if (!ms[v]->valid(y, x)) continue;
                const double pn = pixel_norm(*preds[v], y, x);
                if (!(pn > 0.0)) continue;
                const double gn = pixel_norm(*gts[v], y, x);
                rs.push_back({gn / pn, {v, y * pred1.width + x, 1.0, gn, pn}});
            }
        }
    }
    if (rs.empty())
        throw std::domain_error(
            "align scale: no valid pixel with nonzero prediction");
    std::sort(rs.begin(), rs.end(),
              [](const R& a, const R& b) { return a.ratio < b.ratio; });
    MedianInfo out;
    const size_t n = rs.size();
    if (n % 2 == 1) {
        out.scale = rs[n / 2].ratio;
        out.median_pixels.push_back(rs[n / 2].e);
    } else {
        out.scale = 0.5 * (rs[n / 2 - 1].ratio + rs[n / 2].ratio);
        auto lo = rs[n / 2 - 1].e;
        auto hi = rs[n / 2].e;
        lo.weight = hi.weight = 0.5;
        out.median_pixels.push_back(lo);
        out.median_pixels.push_back(hi);
    }
    return out;
}

struct ScaleDetail {
    ScaleContext ctx;
    MedianInfo median; // filled only under Align
};

ScaleDetail make_scale_detail(const FieldGrid& pred1, const FieldGrid& pred2,
                              const FieldGrid& gt1, const FieldGrid& gt2,
                              const ValidityMask& m1, const ValidityMask& m2,
                              bool metric, ScaleStrategy strategy) {
    ScaleDetail d;
    ScaleContext& ctx = d.ctx;
    ctx.normalize = strategy == ScaleStrategy::Always ||
                    (strategy == ScaleStrategy::Xor && !metric);
    ctx.align = strategy == ScaleStrategy::Align;

    const size_t n = m1.count_valid() + m2.count_valid();
    if (n > 0) {
        ctx.z_gt = scale_factor(gt1, gt2, m1, m2);
        ctx.z_pred = scale_factor(pred1, pred2, m1, m2);
    }
    if (ctx.normalize) {
        if (n == 0)
            throw std::domain_error("scale factor undefined: no valid points");
        if (!(ctx.z_gt > 0.0) || !(ctx.z_pred > 0.0))
            throw std::domain_error("scale factor undefined: zero mean distance");
    }
    if (ctx.align) {
        d.median = median_ratio(pred1, pred2, gt1, gt2, m1, m2);
        ctx.align_scale = d.median.scale;
    }
    return d;
}

} // namespace

ScaleStrategy strategy_from_string(const std::string& s) {
    if (s == "align") return ScaleStrategy::Align;
    if (s == "always") return ScaleStrategy::Always;
    if (s == "never") return ScaleStrategy::Never;
    if (s == "xor") return ScaleStrategy::Xor;
    throw std::invalid_argument("unknown scale strategy: " + s);
}

std::string strategy_to_string(ScaleStrategy s) {
    switch (s) {
        case ScaleStrategy::Align: return "align";
        case ScaleStrategy::Always: return "always";
        case ScaleStrategy::Never: return "never";
        case ScaleStrategy::Xor: return "xor";
    }
    return "?";
}

LossSample make_loss_sample(const SampleRecord& s, const UpliftResult& u) {
    LossSample out;
    out.x1 = u.x1;
    out.x2 = u.x2;
    out.m1 = s.m_d1;
    out.m2 = s.m_d2;
    out.sf = u.sf;
    out.m_sf = u.mask_sf;
    out.flow = s.flow_fwd;
    out.k = s.intrinsics;
    out.metric = s.metric;
    // Where scene flow is valid, the recipe guarantees its projection
    // equals the sample flow; recomputing that projection from the stored
    // grids gives a supervision flow the ground truth matches exactly.
    out.flow_hi.assign(out.flow.data.begin(), out.flow.data.end());
    for (int y = 0; y < out.flow.height; ++y) {
        for (int x = 0; x < out.flow.width; ++x) {
            if (!out.m_sf.valid(y, x)) continue;
            const double ax = out.x1.at(y, x, 0), ay = out.x1.at(y, x, 1),
                         az = out.x1.at(y, x, 2);
            const double ex = ax + out.sf.at(y, x, 0),
                         ey = ay + out.sf.at(y, x, 1),
                         ez = az + out.sf.at(y, x, 2);
            if (!(az > 0.0) || !(ez > 0.0)) continue;
            const size_t base = (static_cast<size_t>(y) * out.flow.width + x) * 2;
            out.flow_hi[base] = s.intrinsics.fx * (ex / ez - ax / az);
            out.flow_hi[base + 1] = s.intrinsics.fy * (ey / ez - ay / az);
            out.flow.at(y, x, 0) = static_cast<float>(out.flow_hi[base]);
            out.flow.at(y, x, 1) = static_cast<float>(out.flow_hi[base + 1]);
        }
    }
    return out;
}

Prediction prediction_from_gt(const LossSample& gt) {
    return {gt.x1, gt.x2, gt.sf};
}

double scale_factor(const FieldGrid& x1, const FieldGrid& x2,
                    const ValidityMask& m1, const ValidityMask& m2) {
    require_pointmap(x1, "scale_factor/x1");
    require_pointmap(x2, "scale_factor/x2");
    double sum = 0.0;
    size_t n = 0;
    const FieldGrid* gs[2] = {&x1, &x2};
    const ValidityMask* ms[2] = {&m1, &m2};
    for (int v = 0; v < 2; ++v) {
        for (int y = 0; y < gs[v]->height; ++y) {
            for (int x = 0; x < gs[v]->width; ++x) {
                if (!ms[v]->valid(y, x)) continue;
                sum += pixel_norm(*gs[v], y, x);
                ++n;
            }
        }
    }
    if (n == 0)
        throw std::domain_error("scale_factor: no valid points");
    return sum / static_cast<double>(n);
}

ScaleContext make_scale_context(const FieldGrid& pred1, const FieldGrid& pred2,
                                const FieldGrid& gt1, const FieldGrid& gt2,
                                const ValidityMask& m1, const ValidityMask& m2,
                                bool metric, ScaleStrategy strategy) {
    return make_scale_detail(pred1, pred2, gt1, gt2, m1, m2, metric, strategy)
        .ctx;
}

double loss_pointmaps_with(const FieldGrid& pred1, const FieldGrid& pred2,
                           const FieldGrid& gt1, const FieldGrid& gt2,
                           const ValidityMask& m1, const ValidityMask& m2,
                           const ScaleContext& ctx) {
    const FieldGrid* preds[2] = {&pred1, &pred2};
    const FieldGrid* gts[2] = {&gt1, &gt2};
    const ValidityMask* ms[2] = {&m1, &m2};
    double total = 0.0;
    for (int v = 0; v < 2; ++v) {
        for (int y = 0; y < pred1.height; ++y) {
            for (int x = 0; x < pred1.width; ++x) {
                if (!ms[v]->valid(y, x)) continue;
                for (int c = 0; c < 3; ++c) {
                    const double p = preds[v]->at(y, x, c);
                    const double g = gts[v]->at(y, x, c);
                    if (ctx.normalize)
                        total += std::fabs(p / ctx.z_pred - g / ctx.z_gt);
                    else if (ctx.align)
                        total += std::fabs(ctx.align_scale * p - g);
                    else
                        total += std::fabs(p - g);
                }
            }
        }
    }
    return total;
}

double loss_pointmaps(const FieldGrid& pred1, const FieldGrid& pred2,
                      const FieldGrid& gt1, const FieldGrid& gt2,
                      const ValidityMask& m1, const ValidityMask& m2,
                      bool metric, ScaleStrategy strategy) {
    const ScaleContext ctx = make_scale_context(pred1, pred2, gt1, gt2, m1, m2,
                                                metric, strategy);
    return loss_pointmaps_with(pred1, pred2, gt1, gt2, m1, m2, ctx);
}

double loss_sceneflow(const FieldGrid& pred_sf, const FieldGrid& gt_sf,
                      const ValidityMask& m_sf, const ScaleContext& ctx) {
    double total = 0.0;
    for (int y = 0; y < pred_sf.height; ++y) {
        for (int x = 0; x < pred_sf.width; ++x) {
            if (!m_sf.valid(y, x)) continue;
            for (int c = 0; c < 3; ++c) {
                const double p = pred_sf.at(y, x, c);
                const double g = gt_sf.at(y, x, c);
                if (ctx.normalize)
                    total += std::fabs(p / ctx.z_pred - g / ctx.z_gt);
                else if (ctx.align)
                    total += std::fabs(ctx.align_scale * p - g);
                else
                    total += std::fabs(p - g);
            }
        }
    }
    return total;
}

namespace {

template <typename FlowAt>
double loss_flow_impl(const FieldGrid& pred_x1, const FieldGrid& pred_sf,
                      const FlowAt& gt_flow_at, const ValidityMask& m_sf,
                      const CameraIntrinsics& k, size_t* skipped) {
    double total = 0.0;
    size_t skip = 0;
    for (int y = 0; y < pred_x1.height; ++y) {
        for (int x = 0; x < pred_x1.width; ++x) {
            if (!m_sf.valid(y, x)) continue;
            const double ax = pred_x1.at(y, x, 0), ay = pred_x1.at(y, x, 1),
                         az = pred_x1.at(y, x, 2);
            const double ex = ax + pred_sf.at(y, x, 0),
                         ey = ay + pred_sf.at(y, x, 1),
                         ez = az + pred_sf.at(y, x, 2);
            if (!(az > 0.0) || !(ez > 0.0)) {
                ++skip;
                continue;
            }
            const double mu_u = k.fx * (ex / ez - ax / az);
            const double mu_v = k.fy * (ey / ez - ay / az);
            total += std::fabs(mu_u - gt_flow_at(y, x, 0)) +
                     std::fabs(mu_v - gt_flow_at(y, x, 1));
        }
    }
    if (skipped) *skipped = skip;
    return total;
}

} // namespace

double loss_flow(const FieldGrid& pred_x1, const FieldGrid& pred_sf,
                 const FieldGrid& gt_flow, const ValidityMask& m_sf,
                 const CameraIntrinsics& k, size_t* skipped) {
    return loss_flow_impl(
        pred_x1, pred_sf,
        [&gt_flow](int y, int x, int c) {
            return static_cast<double>(gt_flow.at(y, x, c));
        },
        m_sf, k, skipped);
}

double loss_flow(const LossSample& gt, const Prediction& pred,
                 size_t* skipped) {
    return loss_flow_impl(
        pred.x1, pred.sf,
        [&gt](int y, int x, int c) { return gt.flow_at(y, x, c); }, gt.m_sf,
        gt.k, skipped);
}

LossReport total_loss(const LossSample& gt, const Prediction& pred,
                      ScaleStrategy strategy, double mu_weight) {
    const ScaleContext ctx =
        make_scale_context(pred.x1, pred.x2, gt.x1, gt.x2, gt.m1, gt.m2,
                           gt.metric, strategy);
    LossReport r;
    r.strategy = strategy;
    r.mu_weight = mu_weight;
    r.z_gt = ctx.z_gt;
    r.z_pred = ctx.z_pred;
    r.align_scale = ctx.align_scale;
    r.l_x = loss_pointmaps_with(pred.x1, pred.x2, gt.x1, gt.x2, gt.m1, gt.m2,
                                ctx);
    r.l_s = loss_sceneflow(pred.sf, gt.sf, gt.m_sf, ctx);
    r.l_mu = loss_flow(gt, pred, &r.flow_skipped);
    r.total = r.l_x + r.l_s + mu_weight * r.l_mu;

    const size_t n_x = gt.m1.count_valid() + gt.m2.count_valid();
    const size_t n_s = gt.m_sf.count_valid();
    const size_t n_mu = n_s - r.flow_skipped;
    r.mean_l_x = n_x ? r.l_x / static_cast<double>(n_x) : 0.0;
    r.mean_l_s = n_s ? r.l_s / static_cast<double>(n_s) : 0.0;
    r.mean_l_mu = n_mu ? r.l_mu / static_cast<double>(n_mu) : 0.0;
    return r;
}

LossGradient loss_gradient(const LossSample& gt, const Prediction& pred,
                           ScaleStrategy strategy, double mu_weight) {
    const int h = pred.x1.height, w = pred.x1.width;
    const ScaleDetail detail =
        make_scale_detail(pred.x1, pred.x2, gt.x1, gt.x2, gt.m1, gt.m2,
                          gt.metric, strategy);
    const ScaleContext& ctx = detail.ctx;

    LossGradient g;
    g.height = h;
    g.width = w;
    g.x1.assign(static_cast<size_t>(h) * w * 3, 0.0);
    g.x2.assign(static_cast<size_t>(h) * w * 3, 0.0);
    g.sf.assign(static_cast<size_t>(h) * w * 3, 0.0);

    const FieldGrid* preds[2] = {&pred.x1, &pred.x2};
    const FieldGrid* gts[2] = {&gt.x1, &gt.x2};
    const ValidityMask* ms[2] = {&gt.m1, &gt.m2};
    std::vector<double>* gx[2] = {&g.x1, &g.x2};

    const size_t n_valid = gt.m1.count_valid() + gt.m2.count_valid();

    // Direct L1 paths, plus the accumulators the scale-coupled paths need:
    //   scale_dot = sum of sign(residual) * pred over every residual that
    //   is divided by z_pred (normalize) or multiplied by the align scale.
    double scale_dot = 0.0;
    for (int v = 0; v < 2; ++v) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!ms[v]->valid(y, x)) continue;
                const size_t base = (static_cast<size_t>(y) * w + x) * 3;
                for (int c = 0; c < 3; ++c) {
                    const double p = preds[v]->at(y, x, c);
                    const double t = gts[v]->at(y, x, c);
                    if (ctx.normalize) {
                        const double s = sgn(p / ctx.z_pred - t / ctx.z_gt);
                        (*gx[v])[base + c] += s / ctx.z_pred;
                        scale_dot += s * p;
                    } else if (ctx.align) {
                        const double s = sgn(ctx.align_scale * p - t);
                        (*gx[v])[base + c] += s * ctx.align_scale;
                        scale_dot += s * p;
                    } else {
                        (*gx[v])[base + c] += sgn(p - t);
                    }
                }
            }
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!gt.m_sf.valid(y, x)) continue;
            const size_t base = (static_cast<size_t>(y) * w + x) * 3;
            for (int c = 0; c < 3; ++c) {
                const double p = pred.sf.at(y, x, c);
                const double t = gt.sf.at(y, x, c);
                if (ctx.normalize) {
                    const double s = sgn(p / ctx.z_pred - t / ctx.z_gt);
                    g.sf[base + c] += s / ctx.z_pred;
                    scale_dot += s * p;
                } else if (ctx.align) {
                    const double s = sgn(ctx.align_scale * p - t);
                    g.sf[base + c] += s * ctx.align_scale;
                    scale_dot += s * p;
                } else {
                    g.sf[base + c] += sgn(p - t);
                }
            }
        }
    }

    if (ctx.normalize) {
        // Quotient rule: d z_pred / d pred_v[i,c] = M * p / (|P_i| * N),
        // and every normalized residual carries -p/z^2 of that.
        const double coef = -scale_dot / (ctx.z_pred * ctx.z_pred);
        for (int v = 0; v < 2; ++v) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!ms[v]->valid(y, x)) continue;
                    const double pn = pixel_norm(*preds[v], y, x);
                    if (!(pn > 0.0)) continue;
                    const size_t base = (static_cast<size_t>(y) * w + x) * 3;
                    const double f =
                        coef / (pn * static_cast<double>(n_valid));
                    for (int c = 0; c < 3; ++c)
                        (*gx[v])[base + c] += f * preds[v]->at(y, x, c);
                }
            }
        }
    } else if (ctx.align) {
        // The fitted scale moves with the median pixel(s):
        // d s* / d pred = -|gt| * p / |pred|^3, weighted.
        for (const auto& e : detail.median.median_pixels) {
            const size_t base = static_cast<size_t>(e.idx) * 3;
            const double f = e.weight * (-e.gt_norm) /
                             (e.pred_norm * e.pred_norm * e.pred_norm);
            for (int c = 0; c < 3; ++c)
                (*gx[e.view])[base + c] +=
                    scale_dot * f * preds[e.view]->data[base + c];
        }
    }

    // Flow term: chain rule through both projections, weighted.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!gt.m_sf.valid(y, x)) continue;
            const size_t base = (static_cast<size_t>(y) * w + x) * 3;
            const double ax = pred.x1.at(y, x, 0), ay = pred.x1.at(y, x, 1),
                         az = pred.x1.at(y, x, 2);
            const double ex = ax + pred.sf.at(y, x, 0),
                         ey = ay + pred.sf.at(y, x, 1),
                         ez = az + pred.sf.at(y, x, 2);
            if (!(az > 0.0) || !(ez > 0.0)) continue;
            const double su =
                sgn(gt.k.fx * (ex / ez - ax / az) - gt.flow_at(y, x, 0)) *
                mu_weight;
            const double sv =
                sgn(gt.k.fy * (ey / ez - ay / az) - gt.flow_at(y, x, 1)) *
                mu_weight;
            // d mu_u / d end = fx * (1/ez, 0, -ex/ez^2); d mu_u / d start
            // likewise with a minus sign, and the same pattern for mu_v.
            const double de[3] = {su * gt.k.fx / ez, sv * gt.k.fy / ez,
                                  -su * gt.k.fx * ex / (ez * ez) -
                                      sv * gt.k.fy * ey / (ez * ez)};
            const double da[3] = {-su * gt.k.fx / az, -sv * gt.k.fy / az,
                                  su * gt.k.fx * ax / (az * az) +
                                      sv * gt.k.fy * ay / (az * az)};
            for (int c = 0; c < 3; ++c) {
                g.sf[base + c] += de[c];
                g.x1[base + c] += de[c] + da[c];
            }
        }
    }
    return g;
}

} // namespace sfkit
