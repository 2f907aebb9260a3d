#ifndef SFKIT_CLI_HPP
#define SFKIT_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfkit/loss.hpp"
#include "sfkit/recipe.hpp"

namespace sfkit {

/// Exit codes shared by every subcommand.
///   0 success, 1 hard error, 2 partial per-sample failure,
///   3 tolerance exceeded (losscheck), 64 usage error.
enum ExitCode : int {
    kExitOk = 0,
    kExitHardError = 1,
    kExitPartialFailure = 2,
    kExitToleranceExceeded = 3,
    kExitUsage = 64,
};

struct RunConfig {
    enum class Command { Synth, Uplift, Convert, Eval, Fit, LossCheck };
    Command command = Command::Synth;

    std::filesystem::path input;     // sample dir or batch dir
    std::filesystem::path output;    // output dir or report file
    std::filesystem::path pred_root; // eval --predictor dir
    std::filesystem::path spec_file; // synth from a scene JSON

    std::string predictor = "oracle"; // oracle | dof | dir
    std::string to_kind = "cso";      // convert target: cso | ddof | ep

    ScaleStrategy strategy = ScaleStrategy::Xor;
    ReferenceFrame frame = ReferenceFrame::Camera2;
    double alpha1 = 0.01;
    double alpha2 = 0.5;
    double mu_weight = 0.1;
    Interp interp = Interp::Bilinear;
    int jobs = 1;
    bool pixel_pooled = false;

    int count = 1;         // synth corpus size
    uint64_t seed = 0;
    int height = 64, width = 64;
    bool spheres = false;

    int steps = 2000;      // fit
    double step_size = 0.1;
    double noise = 0.1;
    double tol = 1e-4;     // losscheck
};

/// Executes one subcommand; never throws, reports errors on stderr and
/// through the exit code.
int run(const RunConfig& cfg);

/// Lexicographically sorted sample directories under `root`; `root`
/// itself when it is a single sample.
std::vector<std::filesystem::path> discover_sample_dirs(
    const std::filesystem::path& root);

/// Ground-truth bundle for a sample directory: reads the uplift outputs
/// when present, otherwise runs the uplift in memory.
LossSample load_ground_truth(const std::filesystem::path& dir,
                             const RecipeOptions& opt = {});

} // namespace sfkit

#endif
