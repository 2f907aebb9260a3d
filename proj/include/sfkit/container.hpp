#ifndef SFKIT_CONTAINER_HPP
#define SFKIT_CONTAINER_HPP

#include <filesystem>
#include <optional>

#include "sfkit/camera.hpp"
#include "sfkit/grid.hpp"

namespace sfkit {

/// One training/evaluation sample: depth maps, forward (and optionally
/// backward) optical flow, optional scene flow, validity masks for each,
/// pinhole intrinsics, relative camera pose, and the metric-scale flag.
struct SampleRecord {
    FieldGrid d1, d2;       // C=1, meters when metric, else relative units
    FieldGrid flow_fwd;     // C=2, pixels
    std::optional<FieldGrid> flow_bwd; // C=2, pixels
    std::optional<FieldGrid> sf;       // C=3, same units as depth

    ValidityMask m_d1, m_d2, m_flow_fwd;
    std::optional<ValidityMask> m_flow_bwd;
    std::optional<ValidityMask> m_sf;

    CameraIntrinsics intrinsics;
    RelativePose pose_1_to_2;
    bool metric = false;

    int height() const { return d1.height; }
    int width() const { return d1.width; }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Writes `meta.json` plus one raw little-endian tensor file per field
/// (d1.f32, d2.f32, flow_fwd.f32, optional flow_bwd.f32 / sf.f32, masks
/// as m_d1.u8 etc). Shape metadata lives only in meta.json; a subsequent
/// read round-trips bit-exactly.
void write_sample(const SampleRecord& sample,
                  const std::filesystem::path& directory);

/// Reads and fully validates a sample directory. Throws on missing files,
/// byte-length/shape mismatches, non-finite values, or bad mask bytes.
SampleRecord read_sample(const std::filesystem::path& directory);

/// True if the directory looks like a sample container (has meta.json).
bool is_sample_dir(const std::filesystem::path& directory);

// Raw tensor helpers shared with the recipe/CLI layers.
void write_f32(const std::filesystem::path& file, const FieldGrid& g);
void write_u8(const std::filesystem::path& file, const ValidityMask& m);
FieldGrid read_f32(const std::filesystem::path& file, int h, int w, int c,
                   const std::string& name);
ValidityMask read_u8(const std::filesystem::path& file, int h, int w,
                     const std::string& name);

} // namespace sfkit

#endif
