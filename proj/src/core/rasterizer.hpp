#pragma once

#include <optional>
#include <type_traits>

#include "camera.hpp"
#include "image.hpp"
#include "splats.hpp"

namespace rsplat {

// Compositing constants. Defaults follow standard splatting practice; the
// exact_gradients preset tightens every cutoff until the rendering function
// is numerically continuous, which finite-difference validation needs.
struct RasterConfig {
    double near = 0.01;
    double cov2d_floor = 0.3;
    double sigma_cull = 3.0;
    double alpha_min = 1.0 / 255.0;
    double alpha_max = 0.99;
    double transmittance_min = 1e-4;
    int tile = 16;

    static RasterConfig exact_gradients() {
        RasterConfig c;
        c.sigma_cull = 7.0;
        c.alpha_min = 1e-9;
        c.transmittance_min = 1e-8;
        return c;
    }
};

// Non-owning view of splat arrays with rotations as 3x3 row-major matrices.
// GaussianSet renders go through the quaternion wrappers below; the posed
// pipeline feeds its blended rotation matrices directly.
template <typename S>
struct SplatView {
    const S* means = nullptr;       // 3N
    const S* rot_mats = nullptr;    // 9N row-major
    const S* log_scales = nullptr;  // 3N
    const S* opacity_logits = nullptr;
    const S* sh = nullptr;  // 27N
    int64_t n = 0;
};

template <typename S>
struct RasterGrads {
    std::vector<S> means, rot_mats, log_scales, opacity_logits, sh;
    std::vector<S> mean2d;  // screen-space positional gradients (densify signal)
    CameraCot camera;

    void init(int64_t n) {
        means.assign(3 * n, S(0));
        rot_mats.assign(9 * n, S(0));
        log_scales.assign(3 * n, S(0));
        opacity_logits.assign(n, S(0));
        sh.assign(kShCoeffs * n, S(0));
        mean2d.assign(2 * n, S(0));
        camera = CameraCot{};
    }
};

template <typename S>
struct RenderAux {
    // Per-Gaussian projection state.
    std::vector<uint8_t> visible;
    std::vector<S> cam_space;  // 3N camera-space means
    std::vector<S> mean2d;     // 2N
    std::vector<S> conic;      // 3N inverse 2D covariance (a, b, c)
    std::vector<S> color;      // 3N
    std::vector<S> opacity;    // N activated
    std::vector<S> radius;     // N pixel radii
    std::vector<int64_t> contrib_count;  // pixels composited per Gaussian

    // Depth order and per-tile candidate lists (indices into the splat view).
    std::vector<int32_t> order;
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<int32_t>> tile_lists;

    // Per-pixel state required to replay the compositing walk.
    std::vector<S> final_transmittance;
    std::vector<int32_t> n_contrib;
    Image<S> image;

    uint64_t input_hash = 0;
};

struct ProjectedGaussian {
    Vec2<double> mean2d;
    Mat2<double> cov2d;
    double depth;
};

// EWA projection of a single Gaussian; nullopt when culled by the near plane.
std::optional<ProjectedGaussian> project_gaussian(const Camera& camera, const Vec3d& mean3d,
                                                  const Mat3d& cov3d,
                                                  const RasterConfig& config = {});

template <typename S>
Image<S> render(const Camera& camera, const SplatView<S>& splats,
                const std::type_identity_t<Vec3<S>>& background,
                const RasterConfig& config, RenderAux<S>* aux = nullptr);

// Exact adjoint of render. Fails with StaleAux if the splats or camera were
// mutated since the forward call.
template <typename S>
RasterGrads<S> render_backward(const Camera& camera, const SplatView<S>& splats,
                               const RenderAux<S>& aux, const Image<S>& image_cotangent,
                               const RasterConfig& config);

// GaussianSet wrappers: rotations enter as quaternions and gradients leave in
// quaternion space.
template <typename S>
struct GaussianSetGrads {
    std::vector<S> means, rotations, log_scales, opacity_logits, sh;
    std::vector<S> mean2d;
    CameraCot camera;
};

template <typename S>
std::vector<S> rotation_matrices(const GaussianSet<S>& set);

template <typename S>
Image<S> rasterize(const Camera& camera, const GaussianSet<S>& set,
                   const std::type_identity_t<Vec3<S>>& background,
                   const RasterConfig& config, RenderAux<S>* aux = nullptr);

template <typename S>
GaussianSetGrads<S> rasterize_backward(const Camera& camera, const GaussianSet<S>& set,
                                       const RenderAux<S>& aux, const Image<S>& image_cotangent,
                                       const RasterConfig& config);

template <typename S>
uint64_t splat_input_hash(const Camera& camera, const SplatView<S>& splats);

}  // namespace rsplat
