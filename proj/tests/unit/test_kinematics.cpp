#include <doctest.h>

#include <sstream>

#include "core/common.hpp"
#include "core/kinematics.hpp"

using namespace rsplat;

namespace {

RobotModel planar_two_link() {
    const char* text = R"(
<robot name="planar">
  <link name="base"/><link name="l1"/><link name="l2"/>
  <joint name="j1" type="revolute">
    <parent link="base"/><child link="l1"/>
    <origin xyz="0 0 0"/><axis xyz="0 0 1"/><limit lower="-3.14" upper="3.14"/>
  </joint>
  <joint name="j2" type="revolute">
    <parent link="l1"/><child link="l2"/>
    <origin xyz="1 0 0"/><axis xyz="0 0 1"/><limit lower="-3.14" upper="3.14"/>
  </joint>
</robot>)";
    return parse_urdf(text).model;
}

// Random kinematic tree with up to max_joints actuated joints.
RobotModel random_robot(Rng& rng, int max_joints) {
    std::ostringstream urdf;
    const int joints = 1 + int(rng.uniform_int(max_joints));
    urdf << "<robot name=\"rand\"><link name=\"L0\"/>";
    for (int j = 0; j < joints; ++j) urdf << "<link name=\"L" << (j + 1) << "\"/>";
    for (int j = 0; j < joints; ++j) {
        const int parent = int(rng.uniform_int(j + 1));  // attach anywhere upstream
        const char* kind = rng.uniform() < 0.25 ? "prismatic" : "revolute";
        Vec3d axis(rng.normal(), rng.normal(), rng.normal());
        if (axis.norm() < 1e-6) axis = Vec3d(1, 0, 0);
        axis.normalize();
        urdf << "<joint name=\"j" << j << "\" type=\"" << kind << "\">"
             << "<parent link=\"L" << parent << "\"/><child link=\"L" << (j + 1) << "\"/>"
             << "<origin xyz=\"" << rng.uniform(-0.5, 0.5) << " " << rng.uniform(-0.5, 0.5) << " "
             << rng.uniform(-0.5, 0.5) << "\" rpy=\"" << rng.uniform(-1.0, 1.0) << " "
             << rng.uniform(-1.0, 1.0) << " " << rng.uniform(-1.0, 1.0) << "\"/>"
             << "<axis xyz=\"" << axis.x() << " " << axis.y() << " " << axis.z() << "\"/>"
             << "<limit lower=\"-3\" upper=\"3\"/></joint>";
    }
    urdf << "</robot>";
    return parse_urdf(urdf.str()).model;
}

}  // namespace

TEST_CASE("joint_motion closed forms") {
    Joint joint;
    joint.kind = JointKind::Revolute;
    joint.axis = Vec3d(0, 0, 1);
    CHECK((joint_motion(joint, 0.0).R - Mat3d::Identity()).norm() == 0.0);
    const Rigidd quarter = joint_motion(joint, M_PI / 2.0);
    CHECK((quarter.apply(Vec3d(1, 0, 0)) - Vec3d(0, 1, 0)).norm() < 1e-12);

    Joint slider;
    slider.kind = JointKind::Prismatic;
    slider.axis = Vec3d(0, 1, 0);
    const Rigidd slid = joint_motion(slider, 0.3);
    CHECK((slid.t - Vec3d(0, 0.3, 0)).norm() < 1e-15);
    CHECK((slid.R - Mat3d::Identity()).norm() == 0.0);

    Joint fixed;
    fixed.kind = JointKind::Fixed;
    fixed.origin.t = Vec3d(1, 2, 3);
    CHECK(joint_motion(fixed, 123.0).t == Vec3d(1, 2, 3));
}

TEST_CASE("zero pose with identity origins gives identity transforms") {
    const RobotModel robot = planar_two_link();
    const FkResult fk = forward_kinematics(robot, Pose::Zero(2));
    CHECK((fk.link_world[1].R - Mat3d::Identity()).norm() == 0.0);
}

TEST_CASE("planar two-link arm closed form") {
    const RobotModel robot = planar_two_link();
    Pose pose(2);
    pose << M_PI / 2.0, 0.0;
    const FkResult fk = forward_kinematics(robot, pose);
    const Rigidd& l2 = fk.link_world[2];
    CHECK((l2.t - Vec3d(0, 1, 0)).norm() < 1e-12);
    // Frame rotated 90 degrees; the link-2 end point lands at (0, 2, 0).
    CHECK((l2.apply(Vec3d(1, 0, 0)) - Vec3d(0, 2, 0)).norm() < 1e-12);
}

TEST_CASE("pose length mismatch raises") {
    const RobotModel robot = planar_two_link();
    try {
        forward_kinematics(robot, Pose::Zero(3));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PoseLengthMismatch);
    }
}

TEST_CASE("fk_backward single revolute joint derivative") {
    const char* text = R"(
<robot name="one">
  <link name="base"/><link name="tip"/>
  <joint name="j" type="revolute">
    <parent link="base"/><child link="tip"/><axis xyz="0 0 1"/>
  </joint>
</robot>)";
    const RobotModel robot = parse_urdf(text).model;
    // Loss = coordinate of the point at local (1,0,0): world = (cos q, sin q, 0).
    const FkResult fk = forward_kinematics(robot, Pose::Zero(1), true);
    std::vector<RigidCot> cots(2);
    // d/dT of x-coordinate of T * (1,0,0): R_bar = e_x * (1,0,0)^T, t_bar = e_x.
    cots[1].R(0, 0) = 1.0;
    cots[1].t = Vec3d(1, 0, 0);
    Pose grad = fk_backward(robot, fk, cots);
    CHECK(grad[0] == doctest::Approx(0.0).epsilon(1e-12));  // top of cosine

    std::vector<RigidCot> cots_y(2);
    cots_y[1].R(1, 0) = 1.0;
    cots_y[1].t = Vec3d(0, 1, 0);
    grad = fk_backward(robot, fk, cots_y);
    CHECK(grad[0] == doctest::Approx(1.0).epsilon(1e-12));  // derivative of sine at 0

    // Zero cotangents give a zero gradient.
    std::vector<RigidCot> zeros(2);
    CHECK(fk_backward(robot, fk, zeros).norm() == 0.0);
}

TEST_CASE("fk_backward requires a tape") {
    const RobotModel robot = planar_two_link();
    const FkResult fk = forward_kinematics(robot, Pose::Zero(2), false);
    try {
        fk_backward(robot, fk, std::vector<RigidCot>(3));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoTape);
    }
}

TEST_CASE("gradient check: random robots vs central finite differences") {
    Rng rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 12 && checked < 100; ++trial) {
        const RobotModel robot = random_robot(rng, 6);
        Pose pose(robot.dof);
        for (int d = 0; d < robot.dof; ++d) pose[d] = rng.uniform(-1.5, 1.5);

        // Random linear loss over all link transforms.
        std::vector<RigidCot> cots(robot.links.size());
        for (auto& c : cots) {
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) c.R(i, j) = rng.uniform(-1.0, 1.0);
                c.t[i] = rng.uniform(-1.0, 1.0);
            }
        }
        auto loss = [&](const Pose& p) {
            const FkResult fk = forward_kinematics(robot, p);
            double total = 0.0;
            for (size_t l = 0; l < fk.link_world.size(); ++l) {
                total += (cots[l].R.array() * fk.link_world[l].R.array()).sum();
                total += cots[l].t.dot(fk.link_world[l].t);
            }
            return total;
        };
        const FkResult fk = forward_kinematics(robot, pose, true);
        const Pose analytic = fk_backward(robot, fk, cots);
        for (int d = 0; d < robot.dof; ++d) {
            Pose up = pose, down = pose;
            up[d] += 1e-5;
            down[d] -= 1e-5;
            const double numeric = (loss(up) - loss(down)) / 2e-5;
            const double scale = std::max({std::abs(numeric), std::abs(analytic[d]), 1e-6});
            CHECK(std::abs(numeric - analytic[d]) / scale < 1e-6);
            ++checked;
        }
    }
    CHECK(checked >= 30);
}

TEST_CASE("orthonormality preserved over a 30-joint chain") {
    std::ostringstream urdf;
    urdf << "<robot name=\"deep\"><link name=\"L0\"/>";
    for (int j = 0; j < 30; ++j) urdf << "<link name=\"L" << (j + 1) << "\"/>";
    Rng rng(31);
    for (int j = 0; j < 30; ++j) {
        Vec3d axis(rng.normal(), rng.normal(), rng.normal());
        axis.normalize();
        urdf << "<joint name=\"j" << j << "\" type=\"continuous\">"
             << "<parent link=\"L" << j << "\"/><child link=\"L" << (j + 1) << "\"/>"
             << "<origin xyz=\"0.1 0 0\" rpy=\"0.3 -0.2 0.5\"/>"
             << "<axis xyz=\"" << axis.x() << " " << axis.y() << " " << axis.z() << "\"/></joint>";
    }
    urdf << "</robot>";
    const RobotModel robot = parse_urdf(urdf.str()).model;
    Pose pose(30);
    for (int d = 0; d < 30; ++d) pose[d] = rng.uniform(-3.0, 3.0);
    const FkResult fk = forward_kinematics(robot, pose);
    double worst = 0.0;
    for (const Rigidd& T : fk.link_world)
        worst = std::max(worst,
                         (T.R.transpose() * T.R - Mat3d::Identity()).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-8);
}

TEST_CASE("subtree consistency under re-rooting") {
    // FK of the chain, re-expressed in link-1's frame, matches FK of the
    // subtree robot rooted at link 1.
    const char* text = R"(
<robot name="chain3">
  <link name="a"/><link name="b"/><link name="c"/>
  <joint name="j1" type="revolute">
    <parent link="a"/><child link="b"/>
    <origin xyz="0.2 0.1 0" rpy="0 0.4 0"/><axis xyz="0 0 1"/>
  </joint>
  <joint name="j2" type="revolute">
    <parent link="b"/><child link="c"/>
    <origin xyz="0 0.3 0.1" rpy="0.2 0 0"/><axis xyz="0 1 0"/>
  </joint>
</robot>)";
    const char* subtree = R"(
<robot name="sub">
  <link name="b"/><link name="c"/>
  <joint name="j2" type="revolute">
    <parent link="b"/><child link="c"/>
    <origin xyz="0 0.3 0.1" rpy="0.2 0 0"/><axis xyz="0 1 0"/>
  </joint>
</robot>)";
    const RobotModel full = parse_urdf(text).model;
    const RobotModel sub = parse_urdf(subtree).model;
    Pose pose(2);
    pose << 0.7, -0.4;
    Pose sub_pose(1);
    sub_pose << -0.4;
    const FkResult fk = forward_kinematics(full, pose);
    const FkResult fk_sub = forward_kinematics(sub, sub_pose);
    const Rigidd rerooted = fk.link_world[1].inverse().compose(fk.link_world[2]);
    CHECK((rerooted.R - fk_sub.link_world[1].R).norm() < 1e-12);
    CHECK((rerooted.t - fk_sub.link_world[1].t).norm() < 1e-12);
}

TEST_CASE("clamp_to_limits is explicit") {
    const RobotModel robot = planar_two_link();
    Pose pose(2);
    pose << 10.0, -10.0;
    const Pose clamped = clamp_to_limits(robot, pose);
    CHECK(clamped[0] == 3.14);
    CHECK(clamped[1] == -3.14);
}
