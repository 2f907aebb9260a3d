#include "sfkit/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <json.hpp>

#include "sfkit/evaluate.hpp"
#include "sfkit/fit.hpp"
#include "sfkit/gradcheck.hpp"
#include "sfkit/metrics.hpp"
#include "sfkit/param.hpp"
#include "sfkit/synthworld.hpp"

namespace sfkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string frame_name(ReferenceFrame f) {
    switch (f) {
        case ReferenceFrame::Camera1: return "camera1";
        case ReferenceFrame::Camera2: return "camera2";
        case ReferenceFrame::World: return "world";
    }
    return "?";
}

json report_to_json(const LossReport& r) {
    return {{"l_x", r.l_x},
            {"l_s", r.l_s},
            {"l_mu", r.l_mu},
            {"total", r.total},
            {"z_gt", r.z_gt},
            {"z_pred", r.z_pred},
            {"align_scale", r.align_scale},
            {"strategy", strategy_to_string(r.strategy)},
            {"mu_weight", r.mu_weight},
            {"flow_skipped", r.flow_skipped},
            {"mean_l_x", r.mean_l_x},
            {"mean_l_s", r.mean_l_s},
            {"mean_l_mu", r.mean_l_mu}};
}

json metrics_to_json(const MetricsReport& m) {
    return {{"epe", m.epe},
            {"acc_s", m.acc_s},
            {"acc_r", m.acc_r},
            {"out", m.out},
            {"absrel_r", m.absrel_r},
            {"delta1_r", m.delta1_r},
            {"absrel_m", m.absrel_m},
            {"delta1_m", m.delta1_m},
            {"valid_count", m.valid_count},
            {"depth_count", m.depth_count},
            {"alignment_scale", m.alignment_scale}};
}

void write_text(const fs::path& file, const std::string& text) {
    if (!file.parent_path().empty()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
}

void write_gt_files(const fs::path& dir, const UpliftResult& gt) {
    write_f32(dir / "gt_sf.f32", gt.sf);
    write_u8(dir / "m_gt_sf.u8", gt.mask_sf);
    write_f32(dir / "gt_x1.f32", gt.x1);
    write_f32(dir / "gt_x2.f32", gt.x2);
    write_u8(dir / "gt_occ.u8", gt.occlusion);
}

int cmd_synth(const RunConfig& cfg) {
    if (!cfg.spec_file.empty()) {
        std::ifstream in(cfg.spec_file);
        if (!in)
            throw std::runtime_error("cannot read scene spec " +
                                     cfg.spec_file.string());
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        const SceneSpec spec = scene_from_json(text);
        const RenderResult r = render(spec);
        write_sample(r.sample, cfg.output);
        write_gt_files(cfg.output, r.gt);
        write_text(cfg.output / "scene.json", scene_to_json(spec));
        std::cout << "wrote " << cfg.output.string() << "\n";
        return kExitOk;
    }
    RandomSceneOptions opt;
    opt.height = cfg.height;
    opt.width = cfg.width;
    opt.allow_spheres = cfg.spheres;
    for (int i = 0; i < cfg.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%04d", i);
        const fs::path dir = cfg.output / name;
        const SceneSpec spec = random_scene(cfg.seed + static_cast<uint64_t>(i),
                                            opt);
        const RenderResult r = render(spec);
        write_sample(r.sample, dir);
        write_gt_files(dir, r.gt);
        write_text(dir / "scene.json", scene_to_json(spec));
    }
    std::cout << "wrote " << cfg.count << " sample(s) under "
              << cfg.output.string() << "\n";
    return kExitOk;
}

void uplift_one(const fs::path& dir, const RunConfig& cfg) {
    SampleRecord sample = read_sample(dir);
    RecipeOptions opt{cfg.alpha1, cfg.alpha2, cfg.interp};
    UpliftResult up = uplift(sample, opt);

    FieldGrid sf_out = up.sf;
    if (cfg.frame != ReferenceFrame::Camera2) {
        // Containers carry no world pose; world means camera 1 at t1.
        sf_out = reframe_sceneflow(up, sample.pose_1_to_2, cfg.frame,
                                   RelativePose::identity());
    }
    sample.sf = sf_out;
    sample.m_sf = up.mask_sf;
    write_sample(sample, dir);
    write_f32(dir / "x1.f32", up.x1);
    write_f32(dir / "x2.f32", up.x2);

    json prov;
    prov["alpha1"] = cfg.alpha1;
    prov["alpha2"] = cfg.alpha2;
    prov["interp"] = cfg.interp == Interp::Bilinear ? "bilinear" : "nearest";
    prov["frame"] = frame_name(cfg.frame);
    prov["cyc_skipped"] = up.cyc_skipped;
    write_text(dir / "recipe.json", prov.dump(2) + "\n");
}

int for_each_sample(const RunConfig& cfg,
                    const std::function<void(const fs::path&)>& fn) {
    const auto dirs = discover_sample_dirs(cfg.input);
    if (dirs.empty()) {
        std::cerr << "no sample directories under " << cfg.input.string()
                  << "\n";
        return kExitHardError;
    }
    std::atomic<size_t> next{0};
    std::atomic<size_t> failures{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= dirs.size()) return;
            try {
                fn(dirs[i]);
            } catch (const std::exception& e) {
                ++failures;
                std::cerr << dirs[i].string() << ": " << e.what() << "\n";
            }
        }
    };
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failures == dirs.size()) return kExitHardError;
    return failures > 0 ? kExitPartialFailure : kExitOk;
}

int cmd_uplift(const RunConfig& cfg) {
    return for_each_sample(cfg, [&cfg](const fs::path& d) {
        uplift_one(d, cfg);
    });
}

SFKind kind_from_string(const std::string& s) {
    if (s == "cso") return SFKind::CSO;
    if (s == "ddof") return SFKind::DDOF;
    if (s == "ep") return SFKind::EP;
    throw std::invalid_argument("unknown scene-flow kind: " + s);
}

std::string kind_to_string(SFKind k) {
    switch (k) {
        case SFKind::CSO: return "cso";
        case SFKind::DDOF: return "ddof";
        case SFKind::EP: return "ep";
    }
    return "?";
}

void convert_one(const fs::path& dir, SFKind target) {
    SampleRecord sample = read_sample(dir);
    if (!sample.sf)
        throw std::runtime_error("no scene flow in container (run uplift "
                                 "first)");
    SFKind current = SFKind::CSO;
    const fs::path pj = dir / "param.json";
    if (fs::exists(pj)) {
        std::ifstream in(pj);
        json j;
        in >> j;
        current = kind_from_string(j.at("kind").get<std::string>());
    }
    if (current == target) return;

    const int h = sample.height(), w = sample.width();
    const FieldGrid x1 = read_f32(dir / "x1.f32", h, w, 3, "x1");
    ValidityMask mask = *sample.m_sf;

    // Through the offset form as the hub.
    FieldGrid cso(h, w, 3);
    if (current == SFKind::CSO) {
        cso = *sample.sf;
    } else if (current == SFKind::EP) {
        cso = ep_to_cso(*sample.sf, x1);
    } else {
        FieldGrid mu(h, w, 2), dd(h, w, 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                mu.at(y, x, 0) = sample.sf->at(y, x, 0);
                mu.at(y, x, 1) = sample.sf->at(y, x, 1);
                dd.at(y, x) = sample.sf->at(y, x, 2);
            }
        auto [sf, valid] = ddof_to_cso(mu, dd, x1, sample.intrinsics, mask);
        cso = sf;
        mask = valid;
    }

    FieldGrid out(h, w, 3);
    if (target == SFKind::CSO) {
        out = cso;
    } else if (target == SFKind::EP) {
        out = cso_to_ep(cso, x1);
    } else {
        const DdofFields f = cso_to_ddof(cso, x1, sample.intrinsics, mask);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                out.at(y, x, 0) = f.mu.at(y, x, 0);
                out.at(y, x, 1) = f.mu.at(y, x, 1);
                out.at(y, x, 2) = f.dd.at(y, x);
            }
        mask = f.valid;
    }

    sample.sf = out;
    sample.m_sf = mask;
    write_sample(sample, dir);
    json j;
    j["kind"] = kind_to_string(target);
    write_text(pj, j.dump(2) + "\n");
}

int cmd_convert(const RunConfig& cfg) {
    const SFKind target = kind_from_string(cfg.to_kind);
    return for_each_sample(cfg, [target](const fs::path& d) {
        convert_one(d, target);
    });
}

PredictorOutput predictor_dir(const fs::path& root, const std::string& id,
                              int h, int w) {
    const fs::path dir = root / id;
    PredictorOutput p;
    p.x1_hat = read_f32(dir / "x1.f32", h, w, 3, "pred x1");
    p.x2_hat = read_f32(dir / "x2.f32", h, w, 3, "pred x2");
    p.sf_hat = read_f32(dir / "sf.f32", h, w, 3, "pred sf");
    if (fs::exists(dir / "valid.u8"))
        p.valid = read_u8(dir / "valid.u8", h, w, "pred valid");
    return p;
}

int cmd_eval(const RunConfig& cfg) {
    const auto dirs = discover_sample_dirs(cfg.input);
    if (dirs.empty()) {
        std::cerr << "no sample directories under " << cfg.input.string()
                  << "\n";
        return kExitHardError;
    }
    RecipeOptions ropt{cfg.alpha1, cfg.alpha2, cfg.interp};

    if (cfg.predictor != "oracle" && cfg.predictor != "dof" &&
        cfg.predictor != "dir")
        throw std::invalid_argument("unknown predictor: " + cfg.predictor);

    std::vector<EvalItem> items;
    std::map<std::string, SampleRecord> records; // dof needs the raw tensors
    items.reserve(dirs.size());
    for (const auto& d : dirs) {
        EvalItem item;
        item.id = d.filename().string();
        item.gt = load_ground_truth(d, ropt);
        items.push_back(std::move(item));
        if (cfg.predictor == "dof") records[d.filename().string()] = read_sample(d);
    }

    auto predictor = [&](const EvalItem& item) -> PredictorOutput {
        if (cfg.predictor == "oracle") {
            const Prediction p = prediction_from_gt(item.gt);
            return {p.x1, p.x2, p.sf, std::nullopt};
        }
        if (cfg.predictor == "dof") {
            const SampleRecord& rec = records.at(item.id);
            return baseline_dof(rec.d1, rec.d2, rec.m_d1, rec.m_d2,
                                rec.flow_fwd, rec.m_flow_fwd, rec.intrinsics,
                                rec.pose_1_to_2, cfg.interp);
        }
        return predictor_dir(cfg.pred_root, item.id, item.gt.x1.height,
                             item.gt.x1.width);
    };

    EvalConfig ecfg;
    ecfg.jobs = cfg.jobs;
    ecfg.pixel_pooled = cfg.pixel_pooled;
    const EvalResult res = evaluate(std::move(items), predictor, ecfg);

    json out;
    out["aggregate"] = metrics_to_json(res.aggregate);
    out["aggregation"] = cfg.pixel_pooled ? "pixel_pooled" : "mean_of_means";
    out["predictor"] = cfg.predictor;
    out["failed"] = res.failed_count;
    json per = json::array();
    for (const auto& se : res.samples) {
        json js;
        js["id"] = se.id;
        if (se.failed)
            js["error"] = se.error;
        else
            js["metrics"] = metrics_to_json(se.metrics);
        per.push_back(js);
    }
    out["samples"] = per;
    const std::string text = out.dump(2) + "\n";
    if (cfg.output.empty())
        std::cout << text;
    else
        write_text(cfg.output, text);

    if (res.failed_count == res.samples.size()) return kExitHardError;
    return res.failed_count > 0 ? kExitPartialFailure : kExitOk;
}

int cmd_fit(const RunConfig& cfg) {
    RecipeOptions ropt{cfg.alpha1, cfg.alpha2, cfg.interp};
    const LossSample gt = load_ground_truth(cfg.input, ropt);
    const Prediction init = make_noisy_prediction(gt, cfg.seed, cfg.noise);

    FitOptions fopt;
    fopt.steps = cfg.steps;
    fopt.step_size = cfg.step_size;
    fopt.mu_weight = cfg.mu_weight;
    fopt.strategy = cfg.strategy;
    const FitResult res = fit_free_parameters(gt, init, fopt);

    const SceneFlowMetrics sfm =
        sceneflow_metrics(res.prediction.sf, gt.sf, gt.m_sf);
    json out;
    out["strategy"] = strategy_to_string(cfg.strategy);
    out["noise"] = cfg.noise;
    out["seed"] = cfg.seed;
    out["initial_total"] = res.trajectory.front().total;
    out["final_total"] = res.trajectory.back().total;
    out["steps_accepted"] = res.trajectory.size() - 1;
    out["converged"] = res.converged;
    out["final_epe"] = sfm.epe;
    json traj = json::array();
    for (const auto& r : res.trajectory) traj.push_back(report_to_json(r));
    out["trajectory"] = traj;
    const std::string text = out.dump(2) + "\n";
    if (cfg.output.empty())
        std::cout << text;
    else
        write_text(cfg.output, text);
    std::cout << "fit: total " << res.trajectory.front().total << " -> "
              << res.trajectory.back().total << ", epe " << sfm.epe << "\n";
    return kExitOk;
}

int cmd_losscheck(const RunConfig& cfg) {
    RandomSceneOptions opt;
    opt.height = cfg.height;
    opt.width = cfg.width;
    double worst = 0.0;
    size_t checked = 0, skipped = 0;
    // Exercise both scale modes: the metric copy hits the raw L1 paths,
    // the relative copy the normalized quotient paths.
    for (const bool metric : {true, false}) {
        opt.metric = metric;
        const RenderResult r = render(random_scene(cfg.seed, opt));
        const LossSample gt = make_loss_sample(r.sample, r.gt);
        const Prediction pred =
            make_noisy_prediction(gt, cfg.seed + 17, 0.1);
        GradientAuditOptions aopt;
        aopt.strategy = cfg.strategy;
        aopt.mu_weight = cfg.mu_weight;
        const GradientAuditResult res = gradient_audit(gt, pred, aopt);
        worst = std::max(worst, res.max_rel_error);
        checked += res.checked;
        skipped += res.skipped_kink;
    }
    std::cout << "losscheck: strategy " << strategy_to_string(cfg.strategy)
              << ", max relative gradient error " << worst << " over "
              << checked << " coordinates (" << skipped
              << " skipped at kinks)\n";
    if (!cfg.output.empty()) {
        json j;
        j["max_rel_error"] = worst;
        j["checked"] = checked;
        j["skipped_kink"] = skipped;
        j["tolerance"] = cfg.tol;
        j["strategy"] = strategy_to_string(cfg.strategy);
        write_text(cfg.output, j.dump(2) + "\n");
    }
    return worst <= cfg.tol ? kExitOk : kExitToleranceExceeded;
}

} // namespace

std::vector<fs::path> discover_sample_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    if (is_sample_dir(root)) {
        dirs.push_back(root);
        return dirs;
    }
    if (!fs::is_directory(root)) return dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && is_sample_dir(e.path()))
            dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

LossSample load_ground_truth(const fs::path& dir, const RecipeOptions& opt) {
    const SampleRecord sample = read_sample(dir);
    const int h = sample.height(), w = sample.width();
    if (sample.sf && fs::exists(dir / "x1.f32") && fs::exists(dir / "x2.f32")) {
        LossSample gt;
        gt.x1 = read_f32(dir / "x1.f32", h, w, 3, "x1");
        gt.x2 = read_f32(dir / "x2.f32", h, w, 3, "x2");
        gt.m1 = sample.m_d1;
        gt.m2 = sample.m_d2;
        gt.sf = *sample.sf;
        gt.m_sf = *sample.m_sf;
        gt.flow = sample.flow_fwd;
        gt.k = sample.intrinsics;
        gt.metric = sample.metric;
        return gt;
    }
    return make_loss_sample(sample, uplift(sample, opt));
}

int run(const RunConfig& cfg) {
    try {
        switch (cfg.command) {
            case RunConfig::Command::Synth: return cmd_synth(cfg);
            case RunConfig::Command::Uplift: return cmd_uplift(cfg);
            case RunConfig::Command::Convert: return cmd_convert(cfg);
            case RunConfig::Command::Eval: return cmd_eval(cfg);
            case RunConfig::Command::Fit: return cmd_fit(cfg);
            case RunConfig::Command::LossCheck: return cmd_losscheck(cfg);
        }
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitHardError;
    }
}

} // namespace sfkit
