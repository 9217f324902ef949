#pragma once

#include "geometry.hpp"

namespace rsplat {

// Pinhole camera. Extrinsics (the optimizable parameters) are the
// world-to-camera map as an axis-angle rotation plus translation, OpenCV
// axes: x right, y down, z forward.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Vec3d axis_angle = Vec3d::Zero();
    Vec3d translation = Vec3d::Zero();

    Rigidd world_to_camera() const { return {rodrigues(axis_angle), translation}; }

    Vec3d center() const {
        const Mat3d R = rodrigues(axis_angle);
        return -(R.transpose() * translation);
    }

    static Camera look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double fx,
                          double fy, int width, int height);
};

// Cotangent of camera extrinsics.
struct CameraCot {
    Vec3d axis_angle = Vec3d::Zero();
    Vec3d translation = Vec3d::Zero();

    CameraCot& operator+=(const CameraCot& o) {
        axis_angle += o.axis_angle;
        translation += o.translation;
        return *this;
    }
};

inline Camera Camera::look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double fx,
                              double fy, int width, int height) {
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    cam.width = width;
    cam.height = height;
    Vec3d forward = (target - eye).normalized();
    Vec3d x_cam = forward.cross(up);  // camera right
    if (x_cam.norm() < 1e-9) x_cam = forward.cross(Vec3d(1, 0, 0));
    x_cam.normalize();
    const Vec3d y_cam = forward.cross(x_cam).normalized();  // camera down
    Mat3d R;
    R.row(0) = x_cam.transpose();
    R.row(1) = y_cam.transpose();
    R.row(2) = forward.transpose();
    cam.axis_angle = rotation_log(R);
    cam.translation = -(R * eye);
    return cam;
}

}  // namespace rsplat
