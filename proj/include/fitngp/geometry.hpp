#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

namespace fitngp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of the generator, so
/// sequences are identical across standard library implementations.
double uniform01(Rng& rng);

/// Standard normal draw (Box-Muller on uniform01).
double standard_normal(Rng& rng);

/// Unit quaternion rotation, stored scalar-first and canonicalized so w >= 0.
class Rotation {
public:
    Rotation() = default;

    /// Normalizes its input. Throws InvalidArgument for zero-length or non-finite input.
    static Rotation from_quaternion(double w, double x, double y, double z);
    /// Nearest rotation to an (approximately) orthonormal matrix.
    static Rotation from_matrix(const Mat3& m);
    static Rotation about_axis(const Vec3& axis, double angle);

    double w() const { return q_.w(); }
    double x() const { return q_.x(); }
    double y() const { return q_.y(); }
    double z() const { return q_.z(); }
    const Eigen::Quaterniond& quaternion() const { return q_; }

    Mat3 matrix() const { return q_.toRotationMatrix(); }
    Vec3 apply(const Vec3& v) const { return q_ * v; }
    Rotation inverse() const;

    friend Rotation operator*(const Rotation& a, const Rotation& b);
    friend bool operator==(const Rotation& a, const Rotation& b)
    {
        return a.q_.coeffs() == b.q_.coeffs();
    }

private:
    explicit Rotation(const Eigen::Quaterniond& q);

    Eigen::Quaterniond q_{1.0, 0.0, 0.0, 0.0};
};

/// Rigid transform x -> R x + p (object frame to world frame).
struct Pose {
    Rotation rotation;
    Vec3 translation = Vec3::Zero();

    static Pose from_matrix(const Mat4& m);
    Mat4 matrix() const;

    friend bool operator==(const Pose& a, const Pose& b)
    {
        return a.rotation == b.rotation && a.translation == b.translation;
    }
};

/// Left-multiplicative tangent coordinates on SO(3) x R^3.
struct TangentDelta {
    Vec3 omega = Vec3::Zero();
    Vec3 v = Vec3::Zero();
};

Rotation rotation_exp(const Vec3& omega);
Vec3 rotation_log(const Rotation& r);

/// Rotation angle of a^-1 b, in [0, pi].
double geodesic_distance(const Rotation& a, const Rotation& b);

Vec3 pose_apply(const Pose& pose, const Vec3& x);
/// (a o b)(x) = a(b(x)).
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& pose);

/// Haar-uniform random rotation (Shoemake's method).
Rotation random_rotation(Rng& rng);

enum class RotationGridMethod { SuperFibonacci, UniformRandom };

/// Deterministic set of n rotations spread over SO(3). The first element is
/// always the identity; the seed selects a conjugation of the whole set (or
/// the random draws, for UniformRandom).
std::vector<Rotation> rotation_grid(std::size_t n, std::uint64_t seed,
                                    RotationGridMethod method = RotationGridMethod::SuperFibonacci);

// JSON: poses are [qw, qx, qy, qz, px, py, pz]; a 4x4 row-major matrix
// (nested or flat 16 numbers) is also accepted on input.
nlohmann::json to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j);

}  // namespace fitngp
