#include "sfkit/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

namespace sfkit {

PredictorOutput baseline_dof(const FieldGrid& d1, const FieldGrid& d2,
                             const ValidityMask& m_d1, const ValidityMask& m_d2,
                             const FieldGrid& flow, const ValidityMask& m_flow,
                             const CameraIntrinsics& k,
                             const std::optional<RelativePose>& pose,
                             Interp interp) {
    if (flow.channels != 2)
        throw std::invalid_argument("baseline_dof: flow must have 2 channels");
    if (!d1.same_shape(d2))
        throw std::invalid_argument("baseline_dof: depth shape mismatch");

    const int h = d1.height, w = d1.width;
    PredictorOutput out;
    out.x1_hat = unproject(d1, k);
    const FieldGrid x2_native = unproject(d2, k);
    out.x2_hat = pose ? transform(x2_native, *pose, /*inverse=*/true)
                      : x2_native;
    out.sf_hat = FieldGrid(h, w, 3);
    out.valid = ValidityMask(h, w, 0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m_flow.valid(y, x) || !m_d1.valid(y, x)) continue;
            const double p2u = x + flow.at(y, x, 0);
            const double p2v = y + flow.at(y, x, 1);
            const SampleResult s = sample_bilinear(d2, m_d2, p2u, p2v, interp);
            if (!s.valid) continue;
            const Vec3 start = point_on_ray(x, y, d1.at(y, x), k);
            const Vec3 end = point_on_ray(p2u, p2v, s.value[0], k);
            out.sf_hat.at(y, x, 0) = static_cast<float>(end.x - start.x);
            out.sf_hat.at(y, x, 1) = static_cast<float>(end.y - start.y);
            out.sf_hat.at(y, x, 2) = static_cast<float>(end.z - start.z);
            out.valid->at(y, x) = 1;
        }
    }
    return out;
}

MetricsReport compute_metrics(const LossSample& gt,
                              const PredictorOutput& pred) {
    MetricsReport r;
    const ValidityMask m_sf =
        pred.valid ? mask_and(gt.m_sf, *pred.valid) : gt.m_sf;
    const SceneFlowMetrics sfm =
        sceneflow_metrics(pred.sf_hat, gt.sf, m_sf);
    r.epe = sfm.epe;
    r.acc_s = sfm.acc_s;
    r.acc_r = sfm.acc_r;
    r.out = sfm.out;
    r.valid_count = sfm.valid_count;

    r.alignment_scale = align_scale_pooled(pred.x1_hat, pred.x2_hat, gt.x1,
                                           gt.x2, gt.m1, gt.m2);

    const FieldGrid pz1 = z_channel(pred.x1_hat), pz2 = z_channel(pred.x2_hat);
    const FieldGrid gz1 = z_channel(gt.x1), gz2 = z_channel(gt.x2);

    // Pool both views: weighted combination of the per-view means.
    auto pooled = [](const DepthMetrics& a, const DepthMetrics& b) {
        DepthMetrics m;
        m.valid_count = a.valid_count + b.valid_count;
        const double n = static_cast<double>(m.valid_count);
        m.absrel = (a.absrel * a.valid_count + b.absrel * b.valid_count) / n;
        m.delta1 = (a.delta1 * a.valid_count + b.delta1 * b.valid_count) / n;
        return m;
    };
    const DepthMetrics raw =
        pooled(depth_metrics(pz1, gz1, gt.m1, false),
               depth_metrics(pz2, gz2, gt.m2, false));
    const DepthMetrics aligned =
        pooled(depth_metrics(pz1, gz1, gt.m1, true, r.alignment_scale),
               depth_metrics(pz2, gz2, gt.m2, true, r.alignment_scale));
    r.absrel_m = raw.absrel;
    r.delta1_m = raw.delta1;
    r.absrel_r = aligned.absrel;
    r.delta1_r = aligned.delta1;
    r.depth_count = raw.valid_count;
    return r;
}

EvalResult evaluate(std::vector<EvalItem> items,
                    const std::function<PredictorOutput(const EvalItem&)>&
                        predictor,
                    const EvalConfig& cfg) {
    std::sort(items.begin(), items.end(),
              [](const EvalItem& a, const EvalItem& b) { return a.id < b.id; });

    EvalResult res;
    res.samples.resize(items.size());

    const int jobs = std::max(1, cfg.jobs);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            SampleEval& se = res.samples[i];
            se.id = items[i].id;
            try {
                se.metrics = compute_metrics(items[i].gt, predictor(items[i]));
            } catch (const std::exception& e) {
                se.failed = true;
                se.error = e.what();
            }
        }
    };
    if (jobs == 1 || items.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Deterministic reduction over the id-sorted sample list.
    MetricsReport agg;
    size_t ok = 0;
    double sf_px = 0.0, depth_px = 0.0;
    for (const SampleEval& se : res.samples) {
        if (se.failed) {
            ++res.failed_count;
            continue;
        }
        ++ok;
        const MetricsReport& m = se.metrics;
        const double wsf = cfg.pixel_pooled
                               ? static_cast<double>(m.valid_count)
                               : 1.0;
        const double wd = cfg.pixel_pooled
                              ? static_cast<double>(m.depth_count)
                              : 1.0;
        agg.epe += m.epe * wsf;
        agg.acc_s += m.acc_s * wsf;
        agg.acc_r += m.acc_r * wsf;
        agg.out += m.out * wsf;
        agg.absrel_r += m.absrel_r * wd;
        agg.delta1_r += m.delta1_r * wd;
        agg.absrel_m += m.absrel_m * wd;
        agg.delta1_m += m.delta1_m * wd;
        agg.alignment_scale += m.alignment_scale;
        agg.valid_count += m.valid_count;
        agg.depth_count += m.depth_count;
        sf_px += wsf;
        depth_px += wd;
    }
    if (ok > 0) {
        agg.epe /= sf_px;
        agg.acc_s /= sf_px;
        agg.acc_r /= sf_px;
        agg.out /= sf_px;
        agg.absrel_r /= depth_px;
        agg.delta1_r /= depth_px;
        agg.absrel_m /= depth_px;
        agg.delta1_m /= depth_px;
        agg.alignment_scale /= static_cast<double>(ok);
    }
    res.aggregate = agg;
    return res;
}

} // namespace sfkit
