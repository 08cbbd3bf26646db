#include "fitngp/init.hpp"

#include "binary_io.hpp"
#include "fitngp/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace fitngp {

std::size_t InstanceMask::count() const
{
    return static_cast<std::size_t>(std::count_if(member.begin(), member.end(), [](std::uint8_t m) { return m != 0; }));
}

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string pgm_token(std::span<const std::uint8_t> bytes, std::size_t& pos)
{
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) {
        tok.push_back(static_cast<char>(bytes[pos++]));
    }
    if (tok.empty()) {
        throw FormatError("truncated PGM header", static_cast<std::int64_t>(pos));
    }
    return tok;
}

std::uint32_t pgm_number(std::span<const std::uint8_t> bytes, std::size_t& pos)
{
    const std::size_t at = pos;
    const std::string tok = pgm_token(bytes, pos);
    try {
        const unsigned long v = std::stoul(tok);
        if (v == 0 || v > 0xffffffffUL) {
            throw std::out_of_range("pgm");
        }
        return static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
        throw FormatError("invalid PGM header value '" + tok + "'", static_cast<std::int64_t>(at));
    }
}

}  // namespace

InstanceMask load_mask_pgm(const std::filesystem::path& path, std::string label)
{
    const auto bytes = io::read_file(path);
    std::size_t pos = 0;
    if (pgm_token(bytes, pos) != "P5") {
        throw FormatError(path.string() + ": expected binary PGM (P5)", 0);
    }
    InstanceMask mask;
    mask.label = std::move(label);
    mask.width = pgm_number(bytes, pos);
    mask.height = pgm_number(bytes, pos);
    const std::uint32_t maxval = pgm_number(bytes, pos);
    if (maxval > 255) {
        throw FormatError(path.string() + ": masks must be 8-bit PGM", static_cast<std::int64_t>(pos));
    }
    ++pos;  // single whitespace before the raster
    const std::size_t count = std::size_t{mask.width} * mask.height;
    if (pos > bytes.size() || bytes.size() - pos < count) {
        throw FormatError(path.string() + ": truncated PGM raster", static_cast<std::int64_t>(bytes.size()));
    }
    mask.member.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        mask.member[i] = bytes[pos + i] == 255 ? 1 : 0;
    }
    return mask;
}

void save_mask_pgm(const InstanceMask& mask, const std::filesystem::path& path)
{
    io::Writer w;
    w.text("P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n");
    for (auto m : mask.member) {
        w.bytes().push_back(m != 0 ? 255 : 0);
    }
    io::write_file(path, w.bytes());
}

PartialCloud backproject_mask(const DepthMap& depth, const InstanceMask& mask, const Camera& camera)
{
    camera.validate();
    if (depth.width != camera.width || depth.height != camera.height) {
        throw InvalidArgument("depth map size does not match the camera");
    }
    if (mask.width != camera.width || mask.height != camera.height) {
        throw InvalidArgument("mask '" + mask.label + "' size does not match the camera");
    }
    PartialCloud cloud;
    Vec3 sum = Vec3::Zero();
    for (std::uint32_t v = 0; v < camera.height; ++v) {
        for (std::uint32_t u = 0; u < camera.width; ++u) {
            if (!mask.at(u, v)) {
                continue;
            }
            const float d = depth.at(u, v);
            if (!std::isfinite(d) || d <= 0.0f) {
                continue;
            }
            const Vec3 world = pose_apply(camera.pose, static_cast<double>(d) * camera.pixel_direction(u, v));
            cloud.points.push_back(world);
            sum += world;
        }
    }
    if (cloud.points.empty()) {
        throw EmptyMaskError("mask '" + mask.label + "' has no pixel with valid depth");
    }
    cloud.centroid = sum / static_cast<double>(cloud.points.size());
    cloud.weak = cloud.points.size() < kWeakMaskPixels;
    return cloud;
}

HypothesisSet make_hypotheses(const Vec3& centroid, std::size_t n_h, std::uint64_t seed, std::string label)
{
    HypothesisSet set;
    set.label = std::move(label);
    set.centroid = centroid;
    for (const auto& r : rotation_grid(n_h, seed)) {
        set.poses.push_back(Pose{r, centroid});
    }
    return set;
}

std::size_t select_reference_view(const std::vector<Camera>& cameras)
{
    if (cameras.empty()) {
        throw InvalidArgument("no camera to select a reference view from");
    }
    std::size_t best = 0;
    double best_z = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const double z = cameras[i].pose.rotation.apply(Vec3::UnitZ()).z();
        if (z < best_z) {
            best_z = z;
            best = i;
        }
    }
    return best;
}

}  // namespace fitngp
