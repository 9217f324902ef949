#include "rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace rsplat {

namespace {

template <typename S>
struct CameraScalars {
    Mat3<S> R;  // world to camera rotation
    Vec3<S> t;
    Vec3<S> center;
    S fx, fy, cx, cy;

    static CameraScalars from(const Camera& cam) {
        CameraScalars c;
        const Rigidd wc = cam.world_to_camera();
        c.R = wc.R.template cast<S>();
        c.t = wc.t.template cast<S>();
        c.center = cam.center().template cast<S>();
        c.fx = S(cam.fx);
        c.fy = S(cam.fy);
        c.cx = S(cam.cx);
        c.cy = S(cam.cy);
        return c;
    }
};

template <typename S>
Mat3<S> cov3d_from_arrays(const SplatView<S>& splats, int64_t i) {
    Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> R(splats.rot_mats + 9 * i);
    Vec3<S> d;
    for (int k = 0; k < 3; ++k) d[k] = std::exp(S(2) * splats.log_scales[3 * i + k]);
    return R * d.asDiagonal() * R.transpose();
}

}  // namespace

std::optional<ProjectedGaussian> project_gaussian(const Camera& camera, const Vec3d& mean3d,
                                                  const Mat3d& cov3d, const RasterConfig& config) {
    const Rigidd wc = camera.world_to_camera();
    const Vec3d xc = wc.apply(mean3d);
    if (xc.z() <= config.near) return std::nullopt;
    ProjectedGaussian out;
    out.depth = xc.z();
    out.mean2d =
        Vec2<double>(camera.fx * xc.x() / xc.z() + camera.cx, camera.fy * xc.y() / xc.z() + camera.cy);
    Eigen::Matrix<double, 2, 3> J;
    J << camera.fx / xc.z(), 0, -camera.fx * xc.x() / (xc.z() * xc.z()), 0, camera.fy / xc.z(),
        -camera.fy * xc.y() / (xc.z() * xc.z());
    const Eigen::Matrix<double, 2, 3> T = J * wc.R;
    out.cov2d = T * cov3d * T.transpose() + config.cov2d_floor * Mat2<double>::Identity();
    return out;
}

template <typename S>
uint64_t splat_input_hash(const Camera& camera, const SplatView<S>& splats) {
    uint64_t h = hash_bytes(0x5f5e1u, &camera.fx, sizeof(double) * 4);
    h = hash_bytes(h, camera.axis_angle.data(), sizeof(double) * 3);
    h = hash_bytes(h, camera.translation.data(), sizeof(double) * 3);
    h = hash_bytes(h, &camera.width, sizeof(int) * 2);
    h = hash_bytes(h, splats.means, sizeof(S) * 3 * splats.n);
    h = hash_bytes(h, splats.rot_mats, sizeof(S) * 9 * splats.n);
    h = hash_bytes(h, splats.log_scales, sizeof(S) * 3 * splats.n);
    h = hash_bytes(h, splats.opacity_logits, sizeof(S) * splats.n);
    h = hash_bytes(h, splats.sh, sizeof(S) * kShCoeffs * splats.n);
    return h;
}

template <typename S>
Image<S> render(const Camera& camera, const SplatView<S>& splats,
                const std::type_identity_t<Vec3<S>>& background,
                const RasterConfig& config, RenderAux<S>* aux_out) {
    require(splats.n >= 1, ErrorCode::EmptySet, "cannot render an empty Gaussian set");
    const int64_t n = splats.n;
    const int W = camera.width, H = camera.height;
    const CameraScalars<S> cam = CameraScalars<S>::from(camera);

    RenderAux<S> local;
    RenderAux<S>& aux = aux_out ? *aux_out : local;
    aux.visible.assign(n, 0);
    aux.cam_space.assign(3 * n, S(0));
    aux.mean2d.assign(2 * n, S(0));
    aux.conic.assign(3 * n, S(0));
    aux.color.assign(3 * n, S(0));
    aux.opacity.assign(n, S(0));
    aux.radius.assign(n, S(0));
    aux.contrib_count.assign(n, 0);

    // Projection, parallel over Gaussians (each writes its own slots).
    std::vector<S> depth(n, S(0));
    parallel_for(n, [&](int64_t i) {
        Vec3<S> mean(splats.means[3 * i], splats.means[3 * i + 1], splats.means[3 * i + 2]);
        const Vec3<S> xc = cam.R * mean + cam.t;
        if (!(xc.z() > S(config.near))) return;
        const S inv_z = S(1) / xc.z();
        const Vec2<S> mean2d(cam.fx * xc.x() * inv_z + cam.cx, cam.fy * xc.y() * inv_z + cam.cy);

        const Mat3<S> cov3d = cov3d_from_arrays(splats, i);
        Eigen::Matrix<S, 2, 3> J;
        J << cam.fx * inv_z, S(0), -cam.fx * xc.x() * inv_z * inv_z, S(0), cam.fy * inv_z,
            -cam.fy * xc.y() * inv_z * inv_z;
        const Eigen::Matrix<S, 2, 3> T = J * cam.R;
        Mat2<S> cov2d = T * cov3d * T.transpose();
        cov2d(0, 0) += S(config.cov2d_floor);
        cov2d(1, 1) += S(config.cov2d_floor);
        const S det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(0, 1);
        if (!(det > S(0))) return;

        const S mid = S(0.5) * (cov2d(0, 0) + cov2d(1, 1));
        const S eig_max =
            mid + std::sqrt(std::max(S(1e-12), mid * mid - det + cov2d(0, 1) * cov2d(0, 1)));
        const S radius = S(config.sigma_cull) * std::sqrt(eig_max);
        if (mean2d.x() + radius < S(0) || mean2d.x() - radius > S(W) || mean2d.y() + radius < S(0) ||
            mean2d.y() - radius > S(H))
            return;

        Vec3<S> view = mean - cam.center;
        const S view_len = view.norm();
        if (!(view_len > S(0))) return;
        const Vec3<S> color =
            eval_sh(std::span<const S>(splats.sh + kShCoeffs * i, kShCoeffs), Vec3<S>(view / view_len));

        aux.visible[i] = 1;
        depth[i] = xc.z();
        for (int k = 0; k < 3; ++k) aux.cam_space[3 * i + k] = xc[k];
        aux.mean2d[2 * i] = mean2d.x();
        aux.mean2d[2 * i + 1] = mean2d.y();
        const S inv_det = S(1) / det;
        aux.conic[3 * i] = cov2d(1, 1) * inv_det;
        aux.conic[3 * i + 1] = -cov2d(0, 1) * inv_det;
        aux.conic[3 * i + 2] = cov2d(0, 0) * inv_det;
        for (int k = 0; k < 3; ++k) aux.color[3 * i + k] = color[k];
        aux.opacity[i] = sigmoid(splats.opacity_logits[i]);
        aux.radius[i] = radius;
    });

    // Global depth sort, ascending, ties broken by index.
    aux.order.clear();
    for (int64_t i = 0; i < n; ++i)
        if (aux.visible[i]) aux.order.push_back(int32_t(i));
    std::sort(aux.order.begin(), aux.order.end(), [&](int32_t a, int32_t b) {
        if (depth[a] != depth[b]) return depth[a] < depth[b];
        return a < b;
    });

    // Bin candidates into tiles by conservative pixel radius.
    aux.tiles_x = (W + config.tile - 1) / config.tile;
    aux.tiles_y = (H + config.tile - 1) / config.tile;
    aux.tile_lists.assign(size_t(aux.tiles_x) * aux.tiles_y, {});
    for (int32_t g : aux.order) {
        const S r = aux.radius[g];
        const S mx = aux.mean2d[2 * g], my = aux.mean2d[2 * g + 1];
        int tx0 = std::max(0, int(std::floor((mx - r) / S(config.tile))));
        int tx1 = std::min(aux.tiles_x - 1, int(std::floor((mx + r) / S(config.tile))));
        int ty0 = std::max(0, int(std::floor((my - r) / S(config.tile))));
        int ty1 = std::min(aux.tiles_y - 1, int(std::floor((my + r) / S(config.tile))));
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                aux.tile_lists[size_t(ty) * aux.tiles_x + tx].push_back(g);
    }

    aux.image = Image<S>(W, H);
    aux.final_transmittance.assign(size_t(W) * H, S(1));
    aux.n_contrib.assign(size_t(W) * H, 0);

    const S alpha_min = S(config.alpha_min);
    const S alpha_max = S(config.alpha_max);
    const S t_min = S(config.transmittance_min);

    std::vector<std::vector<int64_t>> per_tile_counts(size_t(aux.tiles_x) * aux.tiles_y);

    parallel_for(int64_t(aux.tile_lists.size()), [&](int64_t tile_id) {
        const auto& list = aux.tile_lists[tile_id];
        auto& counts = per_tile_counts[tile_id];
        counts.assign(list.size(), 0);
        const int tx = int(tile_id % aux.tiles_x), ty = int(tile_id / aux.tiles_x);
        const int x0 = tx * config.tile, y0 = ty * config.tile;
        const int x1 = std::min(W, x0 + config.tile), y1 = std::min(H, y0 + config.tile);
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                const S px = S(x) + S(0.5), py = S(y) + S(0.5);
                S T = S(1);
                Vec3<S> col = Vec3<S>::Zero();
                int32_t composited = 0;
                for (size_t li = 0; li < list.size(); ++li) {
                    const int32_t g = list[li];
                    const S dx = px - aux.mean2d[2 * g];
                    const S dy = py - aux.mean2d[2 * g + 1];
                    const S a = aux.conic[3 * g], b = aux.conic[3 * g + 1], c = aux.conic[3 * g + 2];
                    const S q = a * dx * dx + S(2) * b * dx * dy + c * dy * dy;
                    if (q < S(0)) continue;
                    const S alpha = std::min(alpha_max, aux.opacity[g] * std::exp(S(-0.5) * q));
                    if (alpha < alpha_min) continue;
                    for (int ch = 0; ch < 3; ++ch) col[ch] += T * alpha * aux.color[3 * g + ch];
                    T *= S(1) - alpha;
                    ++composited;
                    ++counts[li];
                    if (T < t_min) break;
                }
                for (int ch = 0; ch < 3; ++ch)
                    aux.image.px(y, x)[ch] = col[ch] + T * background[ch];
                aux.final_transmittance[size_t(y) * W + x] = T;
                aux.n_contrib[size_t(y) * W + x] = composited;
            }
        }
    });
    // Merge per-Gaussian contribution counts in tile order.
    for (size_t tile_id = 0; tile_id < aux.tile_lists.size(); ++tile_id) {
        const auto& list = aux.tile_lists[tile_id];
        for (size_t li = 0; li < list.size(); ++li)
            aux.contrib_count[list[li]] += per_tile_counts[tile_id][li];
    }

    aux.input_hash = splat_input_hash(camera, splats);
    return aux.image;
}

template <typename S>
RasterGrads<S> render_backward(const Camera& camera, const SplatView<S>& splats,
                               const RenderAux<S>& aux, const Image<S>& image_cotangent,
                               const RasterConfig& config) {
    require(aux.input_hash == splat_input_hash(camera, splats), ErrorCode::StaleAux,
            "splats or camera changed since the forward render");
    require(image_cotangent.width == aux.image.width && image_cotangent.height == aux.image.height,
            ErrorCode::ShapeMismatch, "image cotangent shape mismatch");
    const int64_t n = splats.n;
    const int W = aux.image.width;
    const CameraScalars<S> cam = CameraScalars<S>::from(camera);

    RasterGrads<S> grads;
    grads.init(n);

    const S alpha_min = S(config.alpha_min);
    const S alpha_max = S(config.alpha_max);

    // Phase 1: per-tile pixel walks. Each tile accumulates gradients for its
    // own candidate list; tiles merge in index order afterwards so results
    // are identical at any thread count.
    struct TileGrads {
        std::vector<S> mean2d, conic, color, opacity;
    };
    std::vector<TileGrads> tile_grads(aux.tile_lists.size());

    parallel_for(int64_t(aux.tile_lists.size()), [&](int64_t tile_id) {
        const auto& list = aux.tile_lists[tile_id];
        TileGrads& tg = tile_grads[tile_id];
        tg.mean2d.assign(2 * list.size(), S(0));
        tg.conic.assign(3 * list.size(), S(0));
        tg.color.assign(3 * list.size(), S(0));
        tg.opacity.assign(list.size(), S(0));
        const int tx = int(tile_id % aux.tiles_x), ty = int(tile_id / aux.tiles_x);
        const int x0 = tx * config.tile, y0 = ty * config.tile;
        const int x1 = std::min(W, x0 + config.tile), y1 = std::min(aux.image.height, y0 + config.tile);
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                const int32_t target = aux.n_contrib[size_t(y) * W + x];
                if (target == 0) continue;
                const S* ibar = image_cotangent.px(y, x);
                if (ibar[0] == S(0) && ibar[1] == S(0) && ibar[2] == S(0)) continue;
                const S* cpx = aux.image.px(y, x);
                const S px = S(x) + S(0.5), py = S(y) + S(0.5);
                S T = S(1);
                Vec3<S> front = Vec3<S>::Zero();
                int32_t composited = 0;
                for (size_t li = 0; li < list.size() && composited < target; ++li) {
                    const int32_t g = list[li];
                    const S dx = px - aux.mean2d[2 * g];
                    const S dy = py - aux.mean2d[2 * g + 1];
                    const S a = aux.conic[3 * g], b = aux.conic[3 * g + 1],
                            c = aux.conic[3 * g + 2];
                    const S q = a * dx * dx + S(2) * b * dx * dy + c * dy * dy;
                    if (q < S(0)) continue;
                    const S gaussian = std::exp(S(-0.5) * q);
                    const S alpha_raw = aux.opacity[g] * gaussian;
                    const S alpha = std::min(alpha_max, alpha_raw);
                    if (alpha < alpha_min) continue;
                    ++composited;

                    // d(pixel)/d(alpha): own contribution minus everything behind.
                    S alpha_bar = S(0);
                    for (int ch = 0; ch < 3; ++ch) {
                        const S behind =
                            cpx[ch] - front[ch] - T * alpha * aux.color[3 * g + ch];
                        alpha_bar +=
                            ibar[ch] * (aux.color[3 * g + ch] * T - behind / (S(1) - alpha));
                        tg.color[3 * li + ch] += ibar[ch] * T * alpha;
                    }
                    if (alpha_raw < alpha_max) {
                        tg.opacity[li] += alpha_bar * gaussian;
                        const S q_bar = alpha_bar * aux.opacity[g] * gaussian * S(-0.5);
                        tg.mean2d[2 * li] -= q_bar * (S(2) * a * dx + S(2) * b * dy);
                        tg.mean2d[2 * li + 1] -= q_bar * (S(2) * b * dx + S(2) * c * dy);
                        tg.conic[3 * li] += q_bar * dx * dx;
                        tg.conic[3 * li + 1] += q_bar * S(2) * dx * dy;
                        tg.conic[3 * li + 2] += q_bar * dy * dy;
                    }
                    for (int ch = 0; ch < 3; ++ch) front[ch] += T * alpha * aux.color[3 * g + ch];
                    T *= S(1) - alpha;
                }
            }
        }
    });

    // Deterministic merge: tile order, then list order within each tile.
    std::vector<S> g_color(3 * n, S(0)), g_opacity(n, S(0)), g_conic(3 * n, S(0));
    for (size_t tile_id = 0; tile_id < aux.tile_lists.size(); ++tile_id) {
        const auto& list = aux.tile_lists[tile_id];
        const TileGrads& tg = tile_grads[tile_id];
        for (size_t li = 0; li < list.size(); ++li) {
            const int32_t g = list[li];
            grads.mean2d[2 * g] += tg.mean2d[2 * li];
            grads.mean2d[2 * g + 1] += tg.mean2d[2 * li + 1];
            for (int k = 0; k < 3; ++k) {
                g_conic[3 * g + k] += tg.conic[3 * li + k];
                g_color[3 * g + k] += tg.color[3 * li + k];
            }
            g_opacity[g] += tg.opacity[li];
        }
    }

    // Phase 2: chain per-Gaussian screen gradients through projection, SH and
    // covariance. Serial in index order (cheap next to phase 1).
    Mat3<S> R_wc_bar = Mat3<S>::Zero();
    Vec3<S> t_wc_bar = Vec3<S>::Zero();
    Vec3<S> center_bar_total = Vec3<S>::Zero();

    for (int64_t i = 0; i < n; ++i) {
        if (!aux.visible[i]) continue;
        const Vec3<S> mean(splats.means[3 * i], splats.means[3 * i + 1], splats.means[3 * i + 2]);
        const Vec3<S> xc(aux.cam_space[3 * i], aux.cam_space[3 * i + 1], aux.cam_space[3 * i + 2]);
        const S inv_z = S(1) / xc.z();

        // Opacity logit through the sigmoid.
        const S op = aux.opacity[i];
        grads.opacity_logits[i] += g_opacity[i] * op * (S(1) - op);

        // Color through spherical harmonics and the view direction.
        Vec3<S> view = mean - cam.center;
        const S view_len = view.norm();
        const Vec3<S> dir = view / view_len;
        const Vec3<S> color_bar(g_color[3 * i], g_color[3 * i + 1], g_color[3 * i + 2]);
        Vec3<S> dir_bar = eval_sh_vjp(std::span<const S>(splats.sh + kShCoeffs * i, kShCoeffs), dir,
                                      color_bar, grads.sh.data() + kShCoeffs * i);
        Vec3<S> view_bar = (dir_bar - dir * dir.dot(dir_bar)) / view_len;
        Vec3<S> mean_bar = view_bar;
        center_bar_total -= view_bar;

        // Conic -> 2D covariance (inverse VJP).
        Mat2<S> K;
        K << aux.conic[3 * i], aux.conic[3 * i + 1], aux.conic[3 * i + 1], aux.conic[3 * i + 2];
        Mat2<S> K_bar;
        K_bar << g_conic[3 * i], S(0.5) * g_conic[3 * i + 1], S(0.5) * g_conic[3 * i + 1],
            g_conic[3 * i + 2];
        const Mat2<S> cov2d_bar = -(K * K_bar * K);

        // 2D covariance -> world covariance and projection Jacobian.
        const Mat3<S> cov3d = cov3d_from_arrays(splats, i);
        Eigen::Matrix<S, 2, 3> J;
        J << cam.fx * inv_z, S(0), -cam.fx * xc.x() * inv_z * inv_z, S(0), cam.fy * inv_z,
            -cam.fy * xc.y() * inv_z * inv_z;
        const Eigen::Matrix<S, 2, 3> Tm = J * cam.R;
        const Eigen::Matrix<S, 2, 3> Tm_bar = (cov2d_bar + cov2d_bar.transpose()) * Tm * cov3d;
        const Mat3<S> cov3d_bar = Tm.transpose() * cov2d_bar * Tm;
        const Eigen::Matrix<S, 2, 3> J_bar = Tm_bar * cam.R.transpose();
        R_wc_bar += J.transpose() * Tm_bar;

        // Projection Jacobian entries depend on the camera-space mean.
        Vec3<S> xc_bar = Vec3<S>::Zero();
        const S inv_z2 = inv_z * inv_z;
        xc_bar.z() += J_bar(0, 0) * (-cam.fx * inv_z2);
        xc_bar.z() += J_bar(1, 1) * (-cam.fy * inv_z2);
        xc_bar.x() += J_bar(0, 2) * (-cam.fx * inv_z2);
        xc_bar.z() += J_bar(0, 2) * (S(2) * cam.fx * xc.x() * inv_z2 * inv_z);
        xc_bar.y() += J_bar(1, 2) * (-cam.fy * inv_z2);
        xc_bar.z() += J_bar(1, 2) * (S(2) * cam.fy * xc.y() * inv_z2 * inv_z);

        // Screen position.
        const S mx_bar = grads.mean2d[2 * i], my_bar = grads.mean2d[2 * i + 1];
        xc_bar.x() += mx_bar * cam.fx * inv_z;
        xc_bar.z() -= mx_bar * cam.fx * xc.x() * inv_z2;
        xc_bar.y() += my_bar * cam.fy * inv_z;
        xc_bar.z() -= my_bar * cam.fy * xc.y() * inv_z2;

        // Camera-space mean.
        mean_bar += cam.R.transpose() * xc_bar;
        R_wc_bar += xc_bar * mean.transpose();
        t_wc_bar += xc_bar;

        for (int k = 0; k < 3; ++k) grads.means[3 * i + k] += mean_bar[k];

        // World covariance -> rotation matrix and log scales.
        Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> R(splats.rot_mats + 9 * i);
        Vec3<S> d;
        for (int k = 0; k < 3; ++k) d[k] = std::exp(S(2) * splats.log_scales[3 * i + k]);
        const Mat3<S> R_bar = (cov3d_bar + cov3d_bar.transpose()) * R * d.asDiagonal();
        const Mat3<S> D_bar = R.transpose() * cov3d_bar * R;
        Eigen::Map<Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> R_grad(grads.rot_mats.data() + 9 * i);
        R_grad += R_bar;
        for (int k = 0; k < 3; ++k)
            grads.log_scales[3 * i + k] += D_bar(k, k) * S(2) * d[k];
    }

    // Camera center path: center = -R^T t.
    R_wc_bar += -(cam.t * center_bar_total.transpose());
    t_wc_bar += -(cam.R * center_bar_total);

    // Axis-angle through Rodrigues (double precision).
    const Mat3d R_wc_bar_d = R_wc_bar.template cast<double>();
    grads.camera.axis_angle = rodrigues_vjp(camera.axis_angle, R_wc_bar_d);
    grads.camera.translation = t_wc_bar.template cast<double>();
    return grads;
}

template <typename S>
std::vector<S> rotation_matrices(const GaussianSet<S>& set) {
    std::vector<S> mats(9 * set.size());
    for (int64_t i = 0; i < set.size(); ++i) {
        const Mat3<S> R = rotation_from_quat(set.rotation(i));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) mats[9 * i + 3 * r + c] = R(r, c);
    }
    return mats;
}

template <typename S>
static SplatView<S> view_of(const GaussianSet<S>& set, const std::vector<S>& mats) {
    SplatView<S> v;
    v.means = set.means.data();
    v.rot_mats = mats.data();
    v.log_scales = set.log_scales.data();
    v.opacity_logits = set.opacity_logits.data();
    v.sh = set.sh.data();
    v.n = set.size();
    return v;
}

template <typename S>
Image<S> rasterize(const Camera& camera, const GaussianSet<S>& set,
                   const std::type_identity_t<Vec3<S>>& background,
                   const RasterConfig& config, RenderAux<S>* aux) {
    const std::vector<S> mats = rotation_matrices(set);
    return render(camera, view_of(set, mats), background, config, aux);
}

template <typename S>
GaussianSetGrads<S> rasterize_backward(const Camera& camera, const GaussianSet<S>& set,
                                       const RenderAux<S>& aux, const Image<S>& image_cotangent,
                                       const RasterConfig& config) {
    const std::vector<S> mats = rotation_matrices(set);
    RasterGrads<S> raw =
        render_backward(camera, view_of(set, mats), aux, image_cotangent, config);
    GaussianSetGrads<S> out;
    out.means = std::move(raw.means);
    out.log_scales = std::move(raw.log_scales);
    out.opacity_logits = std::move(raw.opacity_logits);
    out.sh = std::move(raw.sh);
    out.mean2d = std::move(raw.mean2d);
    out.camera = raw.camera;
    out.rotations.assign(4 * set.size(), S(0));
    for (int64_t i = 0; i < set.size(); ++i) {
        Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> Rb(raw.rot_mats.data() + 9 * i);
        const Vec4<S> qb = rotation_from_quat_vjp(set.rotation(i), Mat3<S>(Rb));
        for (int k = 0; k < 4; ++k) out.rotations[4 * i + k] = qb[k];
    }
    return out;
}

template Image<float> render<float>(const Camera&, const SplatView<float>&,
                                    const Vec3<float>&, const RasterConfig&, RenderAux<float>*);
template Image<double> render<double>(const Camera&, const SplatView<double>&, const Vec3<double>&,
                                      const RasterConfig&, RenderAux<double>*);
template RasterGrads<float> render_backward<float>(const Camera&, const SplatView<float>&,
                                                   const RenderAux<float>&, const Image<float>&,
                                                   const RasterConfig&);
template RasterGrads<double> render_backward<double>(const Camera&, const SplatView<double>&,
                                                     const RenderAux<double>&, const Image<double>&,
                                                     const RasterConfig&);
template std::vector<float> rotation_matrices<float>(const GaussianSet<float>&);
template std::vector<double> rotation_matrices<double>(const GaussianSet<double>&);
template Image<float> rasterize<float>(const Camera&, const GaussianSet<float>&,
                                       const Vec3<float>&, const RasterConfig&,
                                       RenderAux<float>*);
template Image<double> rasterize<double>(const Camera&, const GaussianSet<double>&,
                                         const Vec3<double>&, const RasterConfig&,
                                         RenderAux<double>*);
template GaussianSetGrads<float> rasterize_backward<float>(const Camera&, const GaussianSet<float>&,
                                                           const RenderAux<float>&,
                                                           const Image<float>&,
                                                           const RasterConfig&);
template GaussianSetGrads<double> rasterize_backward<double>(const Camera&,
                                                             const GaussianSet<double>&,
                                                             const RenderAux<double>&,
                                                             const Image<double>&,
                                                             const RasterConfig&);
template uint64_t splat_input_hash<float>(const Camera&, const SplatView<float>&);
template uint64_t splat_input_hash<double>(const Camera&, const SplatView<double>&);

}  // namespace rsplat
