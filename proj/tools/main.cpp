#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sfkit/cli.hpp"

namespace {

sfkit::ReferenceFrame frame_from_string(const std::string& s) {
    if (s == "camera1") return sfkit::ReferenceFrame::Camera1;
    if (s == "camera2") return sfkit::ReferenceFrame::Camera2;
    if (s == "world") return sfkit::ReferenceFrame::World;
    throw CLI::ValidationError("--frame", "must be camera1, camera2 or world");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene-flow toolkit: synthetic scenes, depth+flow uplift, "
                 "parameterization conversion, losses and evaluation"};
    app.require_subcommand(1);

    sfkit::RunConfig cfg;
    std::string strategy = "xor", frame = "camera2", interp = "bilinear";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--alpha1", cfg.alpha1,
                        "consistency check quadratic term");
        sub->add_option("--alpha2", cfg.alpha2,
                        "consistency check constant term");
        sub->add_option("--mu-weight", cfg.mu_weight, "flow loss weight");
        sub->add_option("--interp", interp, "bilinear | nearest");
        sub->add_option("--jobs", cfg.jobs, "worker threads");
    };

    CLI::App* synth = app.add_subcommand("synth", "render analytic scenes");
    synth->add_option("--out", cfg.output, "output directory")->required();
    synth->add_option("--count", cfg.count, "number of random scenes");
    synth->add_option("--seed", cfg.seed, "base seed");
    synth->add_option("--height", cfg.height, "image height");
    synth->add_option("--width", cfg.width, "image width");
    synth->add_option("--spec", cfg.spec_file, "scene spec JSON file");
    synth->add_flag("--spheres", cfg.spheres, "allow sphere primitives");

    CLI::App* up = app.add_subcommand(
        "uplift", "compute scene flow from depth + flow + pose");
    up->add_option("--dir", cfg.input, "sample or batch directory")->required();
    up->add_option("--frame", frame, "camera1 | camera2 | world");
    add_common(up);

    CLI::App* conv = app.add_subcommand(
        "convert", "rewrite scene flow between parameterizations");
    conv->add_option("--dir", cfg.input, "sample or batch directory")
        ->required();
    conv->add_option("--to", cfg.to_kind, "cso | ddof | ep")->required();
    add_common(conv);

    CLI::App* ev = app.add_subcommand("eval", "evaluate a predictor");
    ev->add_option("--dir", cfg.input, "sample or batch directory")->required();
    ev->add_option("--predictor", cfg.predictor, "oracle | dof | dir");
    ev->add_option("--pred-root", cfg.pred_root,
                   "prediction directories (predictor=dir)");
    ev->add_option("--report", cfg.output, "report JSON path (default stdout)");
    ev->add_flag("--pixel-pooled", cfg.pixel_pooled,
                 "pool pixels across samples instead of per-sample means");
    add_common(ev);

    CLI::App* fit = app.add_subcommand(
        "fit", "gradient-descent demonstrator from noisy ground truth");
    fit->add_option("--dir", cfg.input, "sample directory")->required();
    fit->add_option("--strategy", strategy, "align | always | never | xor");
    fit->add_option("--steps", cfg.steps, "max descent steps");
    fit->add_option("--step-size", cfg.step_size, "initial trial step");
    fit->add_option("--noise", cfg.noise, "init noise amplitude");
    fit->add_option("--seed", cfg.seed, "noise seed");
    fit->add_option("--out", cfg.output, "trajectory JSON path");
    add_common(fit);

    CLI::App* lc = app.add_subcommand(
        "losscheck", "finite-difference audit of the loss gradients");
    lc->add_option("--seed", cfg.seed, "scene + noise seed");
    lc->add_option("--height", cfg.height, "image height");
    lc->add_option("--width", cfg.width, "image width");
    lc->add_option("--strategy", strategy, "align | always | never | xor");
    lc->add_option("--tol", cfg.tol, "max relative error tolerance");
    lc->add_option("--out", cfg.output, "report JSON path");
    add_common(lc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return sfkit::kExitUsage;
    }

    try {
        cfg.strategy = sfkit::strategy_from_string(strategy);
        cfg.frame = frame_from_string(frame);
        if (interp == "bilinear")
            cfg.interp = sfkit::Interp::Bilinear;
        else if (interp == "nearest")
            cfg.interp = sfkit::Interp::Nearest;
        else
            throw std::invalid_argument("--interp must be bilinear or nearest");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sfkit::kExitUsage;
    }

    if (synth->parsed()) cfg.command = sfkit::RunConfig::Command::Synth;
    if (up->parsed()) cfg.command = sfkit::RunConfig::Command::Uplift;
    if (conv->parsed()) cfg.command = sfkit::RunConfig::Command::Convert;
    if (ev->parsed()) cfg.command = sfkit::RunConfig::Command::Eval;
    if (fit->parsed()) cfg.command = sfkit::RunConfig::Command::Fit;
    if (lc->parsed()) cfg.command = sfkit::RunConfig::Command::LossCheck;

    return sfkit::run(cfg);
}
