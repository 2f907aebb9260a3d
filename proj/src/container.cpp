#include "sfkit/container.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

namespace sfkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
    // 17 significant digits round-trip an IEEE double exactly.
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_number(const json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            return std::stod(j.get<std::string>());
        } catch (const std::exception&) {
        }
    }
    throw std::invalid_argument("meta.json: bad number in " + what);
}

void check_grid_field(const FieldGrid& g, int h, int w, int c,
                      const std::string& name) {
    validate_grid(g, name);
    if (g.height != h || g.width != w)
        throw std::invalid_argument(name + ": grid shape differs from sample");
    if (g.channels != c)
        throw std::invalid_argument(name + ": expected " + std::to_string(c) +
                                    " channels");
}

void check_mask_field(const ValidityMask& m, int h, int w,
                      const std::string& name) {
    validate_mask(m, name);
    if (m.height != h || m.width != w)
        throw std::invalid_argument(name + ": mask shape differs from sample");
}

} // namespace

void SampleRecord::validate() const {
    const int h = d1.height, w = d1.width;
    check_grid_field(d1, h, w, 1, "d1");
    check_grid_field(d2, h, w, 1, "d2");
    check_grid_field(flow_fwd, h, w, 2, "flow_fwd");
    check_mask_field(m_d1, h, w, "m_d1");
    check_mask_field(m_d2, h, w, "m_d2");
    check_mask_field(m_flow_fwd, h, w, "m_flow_fwd");
    if (flow_bwd) {
        check_grid_field(*flow_bwd, h, w, 2, "flow_bwd");
        if (!m_flow_bwd)
            throw std::invalid_argument("m_flow_bwd: missing for flow_bwd");
        check_mask_field(*m_flow_bwd, h, w, "m_flow_bwd");
    }
    if (sf) {
        check_grid_field(*sf, h, w, 3, "sf");
        if (!m_sf) throw std::invalid_argument("m_sf: missing for sf");
        check_mask_field(*m_sf, h, w, "m_sf");
    }
    intrinsics.validate();
    pose_1_to_2.validate();
}

void write_f32(const fs::path& file, const FieldGrid& g) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + file.string());
    out.write(reinterpret_cast<const char*>(g.data.data()),
              static_cast<std::streamsize>(g.data.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write failed: " + file.string());
}

void write_u8(const fs::path& file, const ValidityMask& m) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + file.string());
    out.write(reinterpret_cast<const char*>(m.bits.data()),
              static_cast<std::streamsize>(m.bits.size()));
    if (!out) throw std::runtime_error("write failed: " + file.string());
}

FieldGrid read_f32(const fs::path& file, int h, int w, int c,
                   const std::string& name) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error(name + ": missing tensor file " +
                                      file.string());
    const auto bytes = static_cast<size_t>(in.tellg());
    const size_t expect = static_cast<size_t>(h) * w * c * sizeof(float);
    if (bytes != expect)
        throw std::invalid_argument(
            name + ": byte length " + std::to_string(bytes) +
            " does not match meta shape (expected " + std::to_string(expect) +
            ")");
    FieldGrid g(h, w, c);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(g.data.data()),
            static_cast<std::streamsize>(expect));
    if (!in) throw std::runtime_error(name + ": short read");
    validate_grid(g, name);
    return g;
}

ValidityMask read_u8(const fs::path& file, int h, int w,
                     const std::string& name) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error(name + ": missing mask file " +
                                      file.string());
    const auto bytes = static_cast<size_t>(in.tellg());
    const size_t expect = static_cast<size_t>(h) * w;
    if (bytes != expect)
        throw std::invalid_argument(
            name + ": byte length " + std::to_string(bytes) +
            " does not match meta shape (expected " + std::to_string(expect) +
            ")");
    ValidityMask m(h, w, 0);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(m.bits.data()),
            static_cast<std::streamsize>(expect));
    if (!in) throw std::runtime_error(name + ": short read");
    validate_mask(m, name);
    return m;
}

void write_sample(const SampleRecord& sample, const fs::path& directory) {
    sample.validate();
    fs::create_directories(directory);

    std::vector<std::string> fields = {"d1",   "d2",   "flow_fwd",
                                       "m_d1", "m_d2", "m_flow_fwd"};
    if (sample.flow_bwd) {
        fields.push_back("flow_bwd");
        fields.push_back("m_flow_bwd");
    }
    if (sample.sf) {
        fields.push_back("sf");
        fields.push_back("m_sf");
    }

    json meta;
    meta["height"] = sample.height();
    meta["width"] = sample.width();
    const auto& k = sample.intrinsics;
    meta["intrinsics"] = {fmt_double(k.fx), "0", fmt_double(k.cx),
                          "0", fmt_double(k.fy), fmt_double(k.cy),
                          "0", "0", "1"};
    json pose = json::array();
    const auto& p = sample.pose_1_to_2;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.push_back(fmt_double(p.rotation(r, c)));
        const double t = r == 0 ? p.translation.x
                       : r == 1 ? p.translation.y
                                : p.translation.z;
        pose.push_back(fmt_double(t));
    }
    for (const char* v : {"0", "0", "0", "1"}) pose.push_back(v);
    meta["pose_1_to_2"] = pose;
    meta["metric"] = sample.metric;
    meta["fields"] = fields;

    {
        std::ofstream out(directory / "meta.json", std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write meta.json in " +
                                     directory.string());
        out << meta.dump(2) << "\n";
    }

    write_f32(directory / "d1.f32", sample.d1);
    write_f32(directory / "d2.f32", sample.d2);
    write_f32(directory / "flow_fwd.f32", sample.flow_fwd);
    write_u8(directory / "m_d1.u8", sample.m_d1);
    write_u8(directory / "m_d2.u8", sample.m_d2);
    write_u8(directory / "m_flow_fwd.u8", sample.m_flow_fwd);
    if (sample.flow_bwd) {
        write_f32(directory / "flow_bwd.f32", *sample.flow_bwd);
        write_u8(directory / "m_flow_bwd.u8", *sample.m_flow_bwd);
    }
    if (sample.sf) {
        write_f32(directory / "sf.f32", *sample.sf);
        write_u8(directory / "m_sf.u8", *sample.m_sf);
    }
}

SampleRecord read_sample(const fs::path& directory) {
    const fs::path meta_path = directory / "meta.json";
    std::ifstream in(meta_path);
    if (!in)
        throw std::runtime_error("missing meta.json in " + directory.string());
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw std::invalid_argument("meta.json: parse error: " +
                                    std::string(e.what()));
    }

    SampleRecord s;
    const int h = meta.at("height").get<int>();
    const int w = meta.at("width").get<int>();
    if (h <= 0 || w <= 0)
        throw std::invalid_argument("meta.json: non-positive dimensions");

    const auto& kj = meta.at("intrinsics");
    if (!kj.is_array() || kj.size() != 9)
        throw std::invalid_argument("meta.json: intrinsics must have 9 entries");
    s.intrinsics.fx = parse_number(kj[0], "intrinsics");
    s.intrinsics.cx = parse_number(kj[2], "intrinsics");
    s.intrinsics.fy = parse_number(kj[4], "intrinsics");
    s.intrinsics.cy = parse_number(kj[5], "intrinsics");

    const auto& pj = meta.at("pose_1_to_2");
    if (!pj.is_array() || pj.size() != 16)
        throw std::invalid_argument("meta.json: pose must have 16 entries");
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
            s.pose_1_to_2.rotation(r, c) = parse_number(pj[r * 4 + c], "pose");
        const double t = parse_number(pj[r * 4 + 3], "pose");
        (r == 0 ? s.pose_1_to_2.translation.x
         : r == 1 ? s.pose_1_to_2.translation.y
                  : s.pose_1_to_2.translation.z) = t;
    }
    s.metric = meta.at("metric").get<bool>();

    std::vector<std::string> fields =
        meta.at("fields").get<std::vector<std::string>>();
    auto has = [&fields](const std::string& f) {
        for (const auto& x : fields)
            if (x == f) return true;
        return false;
    };

    s.d1 = read_f32(directory / "d1.f32", h, w, 1, "d1");
    s.d2 = read_f32(directory / "d2.f32", h, w, 1, "d2");
    s.flow_fwd = read_f32(directory / "flow_fwd.f32", h, w, 2, "flow_fwd");
    s.m_d1 = read_u8(directory / "m_d1.u8", h, w, "m_d1");
    s.m_d2 = read_u8(directory / "m_d2.u8", h, w, "m_d2");
    s.m_flow_fwd = read_u8(directory / "m_flow_fwd.u8", h, w, "m_flow_fwd");
    if (has("flow_bwd")) {
        s.flow_bwd = read_f32(directory / "flow_bwd.f32", h, w, 2, "flow_bwd");
        s.m_flow_bwd = read_u8(directory / "m_flow_bwd.u8", h, w, "m_flow_bwd");
    }
    if (has("sf")) {
        s.sf = read_f32(directory / "sf.f32", h, w, 3, "sf");
        s.m_sf = read_u8(directory / "m_sf.u8", h, w, "m_sf");
    }

    s.validate();
    return s;
}

bool is_sample_dir(const fs::path& directory) {
    return fs::exists(directory / "meta.json");
}

} // namespace sfkit
