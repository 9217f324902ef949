#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace rsplat {

// Visual geometry primitives supported by the URDF subset. Mesh geometry is
// deliberately rejected; desk-scale robots are described with primitives.
struct Primitive {
    enum class Kind { Box, Cylinder, Sphere };
    Kind kind = Kind::Box;
    Vec3d half_extents = Vec3d::Zero();  // Box
    double radius = 0.0;                 // Cylinder, Sphere
    double length = 0.0;                 // Cylinder (along local z)

    double surface_area() const;
};

struct Visual {
    Primitive primitive;
    Rigidd local = Rigidd::identity();
    Vec3d color = Vec3d(0.5, 0.5, 0.5);
};

struct Link {
    std::string name;
    std::vector<Visual> visuals;
};

enum class JointKind { Revolute, Continuous, Prismatic, Fixed };

const char* joint_kind_name(JointKind kind);

struct Joint {
    std::string name;
    JointKind kind = JointKind::Fixed;
    int parent_link = -1;
    int child_link = -1;
    Rigidd origin = Rigidd::identity();
    Vec3d rpy = Vec3d::Zero();  // origin rotation as roll-pitch-yaw (kept for round trips)
    Vec3d axis = Vec3d(1, 0, 0);
    double lower = 0.0;
    double upper = 0.0;
    bool has_limits = false;

    bool actuated() const { return kind != JointKind::Fixed; }
};

// Parsed kinematic tree. Joints are stored in topological order from the
// root, so walking them in sequence always visits a parent link before any
// of its children.
struct RobotModel {
    std::string name;
    std::vector<Link> links;
    std::vector<Joint> joints;
    int root_link = 0;
    int dof = 0;

    std::vector<int> actuated_joints;       // joint index per pose coordinate
    std::vector<int> parent_joint_of_link;  // -1 for the root

    int num_links() const { return static_cast<int>(links.size()); }

    // Checks the type invariants (tree structure, index ranges, unit axes).
    void validate() const;
};

struct UrdfParseResult {
    RobotModel model;
    std::vector<std::string> warnings;
};

UrdfParseResult parse_urdf(std::string_view source);
UrdfParseResult parse_urdf_file(const std::string& path);

// Emits the supported subset; parse(serialize(parse(x))) is field-identical
// to parse(x).
std::string serialize_urdf(const RobotModel& robot);

struct SurfacePoint {
    Vec3d position;  // link-local frame
    int link = 0;
    Vec3d color = Vec3d::Zero();
};

// Uniform-by-area sampling across every visual primitive of the robot.
// Deterministic for a fixed seed.
std::vector<SurfacePoint> sample_surface_points(const RobotModel& robot, int64_t n, uint64_t seed);

}  // namespace rsplat
