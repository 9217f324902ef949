#pragma once

#include <optional>

#include "robot.hpp"

namespace rsplat {

using Pose = Eigen::VectorXd;

// World-from-child transform contributed by one joint at coordinate q.
Rigidd joint_motion(const Joint& joint, double q);

// Intermediates saved for the backward pass.
struct FkTape {
    Pose pose;
    // Per joint: the local transform A_j(q_j) and the parent's world transform
    // at forward time.
    std::vector<Rigidd> local;
    std::vector<Rigidd> parent_world;
};

struct FkResult {
    std::vector<Rigidd> link_world;  // world-from-link, one per link
    std::optional<FkTape> tape;
    int num_links = 0;
    int dof = 0;
};

FkResult forward_kinematics(const RobotModel& robot, const Pose& pose, bool with_tape = false);

// Chain rule through the transform product: given per-link cotangents of the
// world transforms, assembles dL/dpose. Matches central finite differences.
Pose fk_backward(const RobotModel& robot, const FkResult& result,
                 const std::vector<RigidCot>& link_cotangents);

// Clamps a pose to the robot's joint limits (explicit, never implicit).
Pose clamp_to_limits(const RobotModel& robot, const Pose& pose);

// Per-coordinate sampling range: joint limits, or [-pi, pi] for continuous.
void pose_bounds(const RobotModel& robot, Pose& lower, Pose& upper);

}  // namespace rsplat
