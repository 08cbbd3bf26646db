#include "fitngp/geometry.hpp"

#include "fitngp/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>

namespace fitngp {

namespace {

constexpr double kSmallAngle = 1e-8;

Eigen::Quaterniond canonical(Eigen::Quaterniond q)
{
    if (std::abs(q.squaredNorm() - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
        q.normalize();
    }
    bool flip = q.w() < 0.0;
    if (q.w() == 0.0) {
        // Tie on the double cover: first non-zero vector component positive.
        const double lead = q.x() != 0.0 ? q.x() : (q.y() != 0.0 ? q.y() : q.z());
        flip = lead < 0.0;
    }
    if (flip) {
        q.coeffs() = -q.coeffs();
    }
    return q;
}

}  // namespace

double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng)
{
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(canonical(q)) {}

Rotation Rotation::from_quaternion(double w, double x, double y, double z)
{
    const Eigen::Quaterniond q(w, x, y, z);
    const double n = q.norm();
    if (!std::isfinite(n) || n == 0.0) {
        throw InvalidArgument("quaternion must be finite and non-zero");
    }
    return Rotation(q);
}

Rotation Rotation::from_matrix(const Mat3& m)
{
    if (!m.allFinite()) {
        throw InvalidArgument("rotation matrix must be finite");
    }
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
    return Rotation(Eigen::Quaterniond(r));
}

Rotation Rotation::about_axis(const Vec3& axis, double angle)
{
    const double n = axis.norm();
    if (!std::isfinite(n) || n == 0.0 || !std::isfinite(angle)) {
        throw InvalidArgument("rotation axis must be finite and non-zero");
    }
    return rotation_exp(axis / n * angle);
}

Rotation Rotation::inverse() const { return Rotation(q_.conjugate()); }

Rotation operator*(const Rotation& a, const Rotation& b) { return Rotation(a.q_ * b.q_); }

Pose Pose::from_matrix(const Mat4& m)
{
    Pose pose;
    pose.rotation = Rotation::from_matrix(m.topLeftCorner<3, 3>());
    pose.translation = m.topRightCorner<3, 1>();
    if (!pose.translation.allFinite()) {
        throw InvalidArgument("pose translation must be finite");
    }
    return pose;
}

Mat4 Pose::matrix() const
{
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
}

Rotation rotation_exp(const Vec3& omega)
{
    if (!omega.allFinite()) {
        throw InvalidArgument("rotation_exp: non-finite input");
    }
    const double theta = omega.norm();
    if (theta < kSmallAngle) {
        const double t2 = theta * theta;
        const Vec3 v = 0.5 * (1.0 - t2 / 24.0) * omega;
        return Rotation::from_quaternion(1.0 - t2 / 8.0, v.x(), v.y(), v.z());
    }
    const double half = 0.5 * theta;
    const Vec3 v = (std::sin(half) / theta) * omega;
    return Rotation::from_quaternion(std::cos(half), v.x(), v.y(), v.z());
}

Vec3 rotation_log(const Rotation& r)
{
    const Vec3 v(r.x(), r.y(), r.z());
    const double s = v.norm();
    const double w = r.w();  // >= 0 by canonicalization
    if (s < kSmallAngle) {
        // atan2(s, w) / s ~ (1 - s^2 / (3 w^2)) / w
        return (2.0 / w) * (1.0 - s * s / (3.0 * w * w)) * v;
    }
    return (2.0 * std::atan2(s, w) / s) * v;
}

double geodesic_distance(const Rotation& a, const Rotation& b)
{
    const Eigen::Quaterniond d = a.quaternion().conjugate() * b.quaternion();
    return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

Vec3 pose_apply(const Pose& pose, const Vec3& x) { return pose.rotation.apply(x) + pose.translation; }

Pose compose(const Pose& a, const Pose& b)
{
    return Pose{a.rotation * b.rotation, a.rotation.apply(b.translation) + a.translation};
}

Pose inverse(const Pose& pose)
{
    const Rotation inv = pose.rotation.inverse();
    return Pose{inv, -inv.apply(pose.translation)};
}

Rotation random_rotation(Rng& rng)
{
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    const double u3 = uniform01(rng);
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    const double t1 = 2.0 * std::numbers::pi * u2;
    const double t2 = 2.0 * std::numbers::pi * u3;
    return Rotation::from_quaternion(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2));
}

std::vector<Rotation> rotation_grid(std::size_t n, std::uint64_t seed, RotationGridMethod method)
{
    if (n == 0) {
        throw InvalidArgument("rotation_grid: n must be >= 1");
    }
    Rng rng(seed);
    std::vector<Rotation> raw;
    raw.reserve(n);
    if (method == RotationGridMethod::SuperFibonacci) {
        // Super-Fibonacci spiral on S^3 (Alexa, CVPR 2022).
        constexpr double phi = std::numbers::sqrt2;
        constexpr double psi = 1.533751168755204288118041;
        const auto count = static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = static_cast<double>(i) + 0.5;
            const double r = std::sqrt(s / count);
            const double big_r = std::sqrt(1.0 - s / count);
            const double alpha = 2.0 * std::numbers::pi * s / phi;
            const double beta = 2.0 * std::numbers::pi * s / psi;
            raw.push_back(Rotation::from_quaternion(r * std::sin(alpha), r * std::cos(alpha),
                                                    big_r * std::sin(beta), big_r * std::cos(beta)));
        }
        const Rotation twist = random_rotation(rng);
        for (auto& r : raw) {
            r = r * twist;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            raw.push_back(random_rotation(rng));
        }
    }

    // Re-anchor so the first element is exactly the identity.
    const Rotation anchor = raw.front().inverse();
    std::vector<Rotation> out;
    out.reserve(n);
    out.emplace_back();
    for (std::size_t i = 1; i < n; ++i) {
        out.push_back(anchor * raw[i]);
    }
    return out;
}

nlohmann::json to_json(const Pose& pose)
{
    const auto& q = pose.rotation;
    const auto& p = pose.translation;
    return nlohmann::json::array({q.w(), q.x(), q.y(), q.z(), p.x(), p.y(), p.z()});
}

Pose pose_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) {
        throw ConfigError("pose must be a JSON array");
    }
    std::vector<double> flat;
    if (j.size() == 4 && j[0].is_array()) {
        for (const auto& row : j) {
            if (!row.is_array() || row.size() != 4) {
                throw ConfigError("pose matrix rows must have 4 numbers");
            }
            for (const auto& v : row) {
                flat.push_back(v.get<double>());
            }
        }
    } else {
        for (const auto& v : j) {
            if (!v.is_number()) {
                throw ConfigError("pose entries must be numbers");
            }
            flat.push_back(v.get<double>());
        }
    }
    try {
        if (flat.size() == 7) {
            Pose pose;
            pose.rotation = Rotation::from_quaternion(flat[0], flat[1], flat[2], flat[3]);
            pose.translation = Vec3(flat[4], flat[5], flat[6]);
            if (!pose.translation.allFinite()) {
                throw InvalidArgument("pose translation must be finite");
            }
            return pose;
        }
        if (flat.size() == 16) {
            Mat4 m;
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    m(r, c) = flat[static_cast<std::size_t>(4 * r + c)];
                }
            }
            return Pose::from_matrix(m);
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("invalid pose: ") + e.what());
    }
    throw ConfigError("pose must have 7 numbers or be a 4x4 matrix");
}

nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
        throw ConfigError("expected an array of 3 numbers");
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace fitngp
