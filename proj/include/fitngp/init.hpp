#pragma once

#include "fitngp/density_field.hpp"
#include "fitngp/geometry.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fitngp {

/// Binary per-pixel membership for one object instance in the reference view.
struct InstanceMask {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> member;  // 0 or 1, row-major
    std::string label;

    bool at(std::uint32_t u, std::uint32_t v) const { return member[std::size_t{v} * width + u] != 0; }
    std::size_t count() const;
};

/// Binary PGM (P5, maxval 255); pixels equal to 255 are members.
InstanceMask load_mask_pgm(const std::filesystem::path& path, std::string label = {});
void save_mask_pgm(const InstanceMask& mask, const std::filesystem::path& path);

struct PartialCloud {
    std::vector<Vec3> points;  // world frame
    Vec3 centroid = Vec3::Zero();
    bool weak = false;  // fewer than kWeakMaskPixels valid pixels
};

inline constexpr std::size_t kWeakMaskPixels = 10;

/// Unprojects masked pixels with valid depth into the world frame. Throws
/// InvalidArgument on a size mismatch and EmptyMaskError when no pixel is usable.
PartialCloud backproject_mask(const DepthMap& depth, const InstanceMask& mask, const Camera& camera);

struct HypothesisSet {
    std::string label;
    std::vector<Pose> poses;
    Vec3 centroid = Vec3::Zero();
};

/// n_h poses sharing the centroid as translation, rotations from rotation_grid(n_h, seed).
HypothesisSet make_hypotheses(const Vec3& centroid, std::size_t n_h, std::uint64_t seed, std::string label = {});

/// Index of the camera whose optical axis points most nearly along world -z.
std::size_t select_reference_view(const std::vector<Camera>& cameras);

}  // namespace fitngp
