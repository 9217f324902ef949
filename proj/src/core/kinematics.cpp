#include "kinematics.hpp"

#include <cmath>

#include "common.hpp"

namespace rsplat {

Rigidd joint_motion(const Joint& joint, double q) {
    switch (joint.kind) {
        case JointKind::Revolute:
        case JointKind::Continuous:
            return joint.origin.compose(Rigidd(axis_rotation(joint.axis, q), Vec3d::Zero()));
        case JointKind::Prismatic:
            return joint.origin.compose(Rigidd(Mat3d::Identity(), joint.axis * q));
        case JointKind::Fixed:
            return joint.origin;
    }
    return joint.origin;
}

FkResult forward_kinematics(const RobotModel& robot, const Pose& pose, bool with_tape) {
    require(pose.size() == robot.dof, ErrorCode::PoseLengthMismatch,
            "pose has " + std::to_string(pose.size()) + " values, robot dof is " +
                std::to_string(robot.dof));
    for (int i = 0; i < pose.size(); ++i)
        require(std::isfinite(pose[i]), ErrorCode::DivergedNonFinite, "pose has non-finite value");

    FkResult result;
    result.num_links = robot.num_links();
    result.dof = robot.dof;
    result.link_world.assign(robot.links.size(), Rigidd::identity());
    if (with_tape) {
        result.tape.emplace();
        result.tape->pose = pose;
        result.tape->local.resize(robot.joints.size());
        result.tape->parent_world.resize(robot.joints.size());
    }

    std::vector<double> q_of_joint(robot.joints.size(), 0.0);
    for (int d = 0; d < robot.dof; ++d) q_of_joint[robot.actuated_joints[d]] = pose[d];

    for (size_t j = 0; j < robot.joints.size(); ++j) {
        const Joint& joint = robot.joints[j];
        const Rigidd local = joint_motion(joint, q_of_joint[j]);
        const Rigidd& parent = result.link_world[joint.parent_link];
        result.link_world[joint.child_link] = parent.compose(local);
        if (with_tape) {
            result.tape->local[j] = local;
            result.tape->parent_world[j] = parent;
        }
    }
    return result;
}

Pose fk_backward(const RobotModel& robot, const FkResult& result,
                 const std::vector<RigidCot>& link_cotangents) {
    require(result.tape.has_value(), ErrorCode::NoTape, "forward_kinematics ran without a tape");
    require(link_cotangents.size() == robot.links.size(), ErrorCode::ShapeMismatch,
            "cotangent count does not match link count");

    const FkTape& tape = *result.tape;
    std::vector<RigidCot> world_bar(robot.links.size());
    for (size_t i = 0; i < link_cotangents.size(); ++i) world_bar[i] = link_cotangents[i];

    std::vector<double> q_of_joint(robot.joints.size(), 0.0);
    for (int d = 0; d < robot.dof; ++d) q_of_joint[robot.actuated_joints[d]] = tape.pose[d];

    Pose grad = Pose::Zero(robot.dof);
    std::vector<int> dof_of_joint(robot.joints.size(), -1);
    for (int d = 0; d < robot.dof; ++d) dof_of_joint[robot.actuated_joints[d]] = d;

    // Reverse topological order: child world cotangents flow into the parent
    // world transform and into the joint coordinate.
    for (size_t jj = robot.joints.size(); jj-- > 0;) {
        const Joint& joint = robot.joints[jj];
        const RigidCot& cbar = world_bar[joint.child_link];
        const Rigidd& parent = tape.parent_world[jj];
        const Rigidd& local = tape.local[jj];

        // child.R = parent.R * local.R ; child.t = parent.R * local.t + parent.t
        RigidCot& pbar = world_bar[joint.parent_link];
        pbar.R += cbar.R * local.R.transpose() + cbar.t * local.t.transpose();
        pbar.t += cbar.t;

        Mat3d local_R_bar = parent.R.transpose() * cbar.R;
        Vec3d local_t_bar = parent.R.transpose() * cbar.t;

        const int d = dof_of_joint[jj];
        if (d < 0) continue;
        const double q = q_of_joint[jj];
        if (joint.kind == JointKind::Prismatic) {
            // local.t = origin.R * axis * q + origin.t
            grad[d] += local_t_bar.dot(joint.origin.R * joint.axis);
        } else {
            // local.R = origin.R * Rot(axis, q); dRot/dq = [axis]x Rot(axis, q)
            const Mat3d rot = axis_rotation(joint.axis, q);
            const Mat3d dR = joint.origin.R * (skew(joint.axis) * rot);
            grad[d] += (local_R_bar.array() * dR.array()).sum();
        }
    }
    return grad;
}

Pose clamp_to_limits(const RobotModel& robot, const Pose& pose) {
    require(pose.size() == robot.dof, ErrorCode::PoseLengthMismatch, "pose length != dof");
    Pose out = pose;
    for (int d = 0; d < robot.dof; ++d) {
        const Joint& joint = robot.joints[robot.actuated_joints[d]];
        if (joint.has_limits) out[d] = std::min(joint.upper, std::max(joint.lower, out[d]));
    }
    return out;
}

void pose_bounds(const RobotModel& robot, Pose& lower, Pose& upper) {
    lower = Pose::Zero(robot.dof);
    upper = Pose::Zero(robot.dof);
    for (int d = 0; d < robot.dof; ++d) {
        const Joint& joint = robot.joints[robot.actuated_joints[d]];
        if (joint.has_limits) {
            lower[d] = joint.lower;
            upper[d] = joint.upper;
        } else {
            lower[d] = -M_PI;
            upper[d] = M_PI;
        }
    }
}

}  // namespace rsplat
