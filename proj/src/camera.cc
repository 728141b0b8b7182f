// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/camera.h"

#include <string>

#include "primvol/error.h"

namespace primvol {

void Camera::validate() const
{
    if (!(focal > 0.0) || !std::isfinite(focal))
        throw ArgumentError("camera focal length must be positive, got " + std::to_string(focal));
    if (width < 1 || height < 1)
        throw ArgumentError("camera resolution must be at least 1x1");
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
               int height)
{
    const Vec3 forward = normalize(target - eye);
    Vec3 right = cross(forward, up);
    if (norm(right) < 1e-12) right = cross(forward, Vec3{1.0, 0.0, 0.0});
    right = normalize(right);
    const Vec3 down = cross(forward, right);

    Camera cam;
    cam.pose.rotation = Rotation::from_matrix(Mat3::from_columns(right, down, forward));
    cam.pose.translation = eye;
    cam.focal = focal;
    cam.width = width;
    cam.height = height;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.validate();
    return cam;
}

Ray camera_ray(const Camera& camera, int px, int py, double near, double far)
{
    if (px < 0 || py < 0 || px >= camera.width || py >= camera.height)
        throw ArgumentError("pixel (" + std::to_string(px) + ", " + std::to_string(py) +
                            ") outside " + std::to_string(camera.width) + "x" +
                            std::to_string(camera.height) + " camera");
    if (!(near >= 0.0) || !(near < far)) throw ArgumentError("camera_ray requires 0 <= near < far");

    const Vec3 d_cam{(px + 0.5 - camera.cx) / camera.focal, (py + 0.5 - camera.cy) / camera.focal,
                     1.0};
    Ray ray;
    ray.origin = camera.pose.translation;
    ray.direction = normalize(camera.pose.rotation.rotate(d_cam));
    ray.t_min = near;
    ray.t_max = far;
    return ray;
}

nlohmann::json camera_to_json(const Camera& camera)
{
    const Mat3 r = camera.pose.rotation.matrix();
    const Vec3& t = camera.pose.translation;
    nlohmann::json pose = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) pose.push_back(r.m[i][j]);
        pose.push_back(t[i]);
    }
    for (double v : {0.0, 0.0, 0.0, 1.0}) pose.push_back(v);
    return {{"pose", pose},
            {"focal", camera.focal},
            {"principal_point", {camera.cx, camera.cy}},
            {"width", camera.width},
            {"height", camera.height}};
}

Camera camera_from_json(const nlohmann::json& j)
{
    try {
        const auto& pose = j.at("pose");
        if (!pose.is_array() || pose.size() != 16)
            throw ArgumentError("camera pose must be a 16-element row-major 4x4 matrix");
        Mat3 r;
        Vec3 t;
        for (int i = 0; i < 3; ++i) {
            for (int k = 0; k < 3; ++k) r.m[i][k] = pose[i * 4 + k].get<double>();
            t[i] = pose[i * 4 + 3].get<double>();
        }
        Camera cam;
        cam.pose.rotation = Rotation::from_matrix(r);
        cam.pose.translation = t;
        cam.focal = j.at("focal").get<double>();
        cam.cx = j.at("principal_point").at(0).get<double>();
        cam.cy = j.at("principal_point").at(1).get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        cam.validate();
        return cam;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed camera record: ") + e.what());
    }
}

}  // namespace primvol
