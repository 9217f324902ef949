#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

namespace fs = std::filesystem;

namespace rsplat {

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <typename S>
void adam_step(std::span<S> params, std::span<const S> grads, AdamState<S>& state, double lr,
               double beta1, double beta2, double eps) {
    require(params.size() == grads.size(), ErrorCode::ShapeMismatch,
            "parameter/gradient size mismatch");
    if (state.m.size() != params.size()) state.reset(params.size());
    state.t += 1;
    const S b1 = S(beta1), b2 = S(beta2);
    const S corr1 = S(1) - S(std::pow(beta1, double(state.t)));
    const S corr2 = S(1) - S(std::pow(beta2, double(state.t)));
    for (size_t i = 0; i < params.size(); ++i) {
        const S g = grads[i];
        require(std::isfinite(double(g)), ErrorCode::NonFiniteGradient,
                "non-finite gradient in optimizer step");
        state.m[i] = b1 * state.m[i] + (S(1) - b1) * g;
        state.v[i] = b2 * state.v[i] + (S(1) - b2) * g * g;
        const S mh = state.m[i] / corr1;
        const S vh = state.v[i] / corr2;
        params[i] -= S(lr) * mh / (std::sqrt(vh) + S(eps));
    }
}

template void adam_step<float>(std::span<float>, std::span<const float>, AdamState<float>&, double,
                               double, double, double);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamState<double>&,
                                double, double, double, double);

// ---------------------------------------------------------------------------
// PSNR
// ---------------------------------------------------------------------------

template <typename S>
double psnr(const Image<S>& a, const Image<S>& b) {
    require(a.width == b.width && a.height == b.height, ErrorCode::ShapeMismatch,
            "image shapes differ");
    double sum = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        sum += d * d;
    }
    const double mse = sum / double(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

template double psnr<float>(const Image<float>&, const Image<float>&);
template double psnr<double>(const Image<double>&, const Image<double>&);

// ---------------------------------------------------------------------------
// Exact nearest neighbors on a uniform grid
// ---------------------------------------------------------------------------

namespace {

template <typename S, int D>
struct NnGrid {
    std::vector<S> points;  // packed D * n
    int64_t n = 0;
    S lo[D], cell[D];
    int dims[D];
    std::vector<std::vector<int32_t>> cells;
    S min_cell = S(0);

    void build(std::span<const S> pts) {
        n = int64_t(pts.size() / D);
        points.assign(pts.begin(), pts.end());
        S hi[D];
        for (int d = 0; d < D; ++d) {
            lo[d] = std::numeric_limits<S>::max();
            hi[d] = std::numeric_limits<S>::lowest();
        }
        for (int64_t i = 0; i < n; ++i)
            for (int d = 0; d < D; ++d) {
                lo[d] = std::min(lo[d], pts[D * i + d]);
                hi[d] = std::max(hi[d], pts[D * i + d]);
            }
        const int per_dim = std::max(
            1, std::min(48, int(std::ceil(std::pow(double(n) / 2.0, 1.0 / double(D))))));
        int64_t total = 1;
        for (int d = 0; d < D; ++d) {
            dims[d] = per_dim;
            const S extent = std::max(S(1e-12), hi[d] - lo[d]);
            cell[d] = extent / S(per_dim);
            total *= per_dim;
        }
        min_cell = cell[0];
        for (int d = 1; d < D; ++d) min_cell = std::min(min_cell, cell[d]);
        cells.assign(size_t(total), {});
        for (int64_t i = 0; i < n; ++i) cells[cell_index(&points[D * i])].push_back(int32_t(i));
    }

    int coord(const S* p, int d) const {
        int c = int(std::floor((p[d] - lo[d]) / cell[d]));
        return std::min(dims[d] - 1, std::max(0, c));
    }

    size_t cell_index(const S* p) const {
        size_t idx = 0;
        for (int d = 0; d < D; ++d) idx = idx * size_t(dims[d]) + size_t(coord(p, d));
        return idx;
    }

    // Exact nearest neighbor: expanding Chebyshev rings with a conservative
    // lower bound on the next ring's distance.
    int32_t nearest(const S* q, S& best_d2) const {
        best_d2 = std::numeric_limits<S>::max();
        int32_t best = -1;
        int base[D];
        for (int d = 0; d < D; ++d) base[d] = coord(q, d);
        int max_ring = 0;
        for (int d = 0; d < D; ++d) max_ring = std::max(max_ring, dims[d]);
        for (int ring = 0; ring <= max_ring; ++ring) {
            if (best >= 0) {
                const S bound = S(ring - 1) * min_cell;
                if (ring >= 1 && bound > S(0) && bound * bound > best_d2) break;
            }
            visit_ring(base, ring, q, best_d2, best);
        }
        return best;
    }

    void scan_cell(size_t idx, const S* q, S& best_d2, int32_t& best) const {
        for (int32_t i : cells[idx]) {
            S d2 = S(0);
            for (int d = 0; d < D; ++d) {
                const S diff = q[d] - points[D * i + d];
                d2 += diff * diff;
            }
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                best_d2 = d2;
                best = i;
            }
        }
    }

    void visit_ring(const int* base, int ring, const S* q, S& best_d2, int32_t& best) const {
        int c[D];
        visit_ring_rec(base, ring, q, best_d2, best, c, 0, false);
    }

    void visit_ring_rec(const int* base, int ring, const S* q, S& best_d2, int32_t& best, int* c,
                        int d, bool boundary) const {
        if (d == D) {
            if (!boundary) return;
            size_t idx = 0;
            for (int k = 0; k < D; ++k) idx = idx * size_t(dims[k]) + size_t(c[k]);
            scan_cell(idx, q, best_d2, best);
            return;
        }
        for (int off = -ring; off <= ring; ++off) {
            const int v = base[d] + off;
            if (v < 0 || v >= dims[d]) continue;
            c[d] = v;
            visit_ring_rec(base, ring, q, best_d2, best, c, d + 1,
                           boundary || std::abs(off) == ring);
        }
    }
};

// Order-invariant sum: sort addends before accumulating.
template <typename S>
double stable_mean(std::vector<S>& values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (S v : values) sum += double(v);
    return sum / double(values.size());
}

template <typename S, int D>
double chamfer_impl(std::span<const S> a, std::span<const S> b, std::vector<S>* grad_a) {
    require(!a.empty() && !b.empty(), ErrorCode::EmptySet, "chamfer of an empty point set");
    require(a.size() % D == 0 && b.size() % D == 0, ErrorCode::ShapeMismatch,
            "point arrays are not multiples of the dimension");
    const int64_t na = int64_t(a.size() / D), nb = int64_t(b.size() / D);
    NnGrid<S, D> grid_b, grid_a;
    grid_b.build(b);
    grid_a.build(a);

    if (grad_a) grad_a->assign(a.size(), S(0));

    std::vector<S> d2_ab(na), d2_ba(nb);
    std::vector<int32_t> nn_ab(na), nn_ba(nb);
    parallel_for(na, [&](int64_t i) { nn_ab[i] = grid_b.nearest(&a[D * i], d2_ab[i]); });
    parallel_for(nb, [&](int64_t j) { nn_ba[j] = grid_a.nearest(&b[D * j], d2_ba[j]); });

    if (grad_a) {
        for (int64_t i = 0; i < na; ++i) {
            const int32_t j = nn_ab[i];
            for (int d = 0; d < D; ++d)
                (*grad_a)[D * i + d] += S(2) * (a[D * i + d] - b[D * j + d]) / S(na);
        }
        for (int64_t j = 0; j < nb; ++j) {
            const int32_t i = nn_ba[j];
            for (int d = 0; d < D; ++d)
                (*grad_a)[D * i + d] += S(2) * (a[D * i + d] - b[D * j + d]) / S(nb);
        }
    }
    return stable_mean(d2_ab) + stable_mean(d2_ba);
}

}  // namespace

double chamfer(std::span<const double> a, std::span<const double> b) {
    return chamfer_impl<double, 3>(a, b, nullptr);
}

float chamfer(std::span<const float> a, std::span<const float> b) {
    return float(chamfer_impl<float, 3>(a, b, nullptr));
}

template <typename S>
double chamfer_with_grad(std::span<const S> a, std::span<const S> b, std::vector<S>& grad_a) {
    return chamfer_impl<S, 3>(a, b, &grad_a);
}

template double chamfer_with_grad<float>(std::span<const float>, std::span<const float>,
                                         std::vector<float>&);
template double chamfer_with_grad<double>(std::span<const double>, std::span<const double>,
                                          std::vector<double>&);

template <typename S>
double chamfer2d(std::span<const S> a, std::span<const S> b) {
    return chamfer_impl<S, 2>(a, b, nullptr);
}

template <typename S>
double chamfer2d_with_grad(std::span<const S> a, std::span<const S> b, std::vector<S>& grad_a) {
    return chamfer_impl<S, 2>(a, b, &grad_a);
}

template double chamfer2d<float>(std::span<const float>, std::span<const float>);
template double chamfer2d<double>(std::span<const double>, std::span<const double>);
template double chamfer2d_with_grad<float>(std::span<const float>, std::span<const float>,
                                           std::vector<float>&);
template double chamfer2d_with_grad<double>(std::span<const double>, std::span<const double>,
                                            std::vector<double>&);

// ---------------------------------------------------------------------------
// Dataset access
// ---------------------------------------------------------------------------

template <typename S>
TrainDataset<S> TrainDataset<S>::open(const std::string& dir) {
    TrainDataset<S> data;
    data.dir = dir;
    data.manifest = load_manifest(dir);
    std::string robot_path = data.manifest.robot_path;
    if (!robot_path.empty() && !fs::path(robot_path).is_absolute() &&
        !fs::exists(robot_path) && fs::exists(fs::path(dir) / robot_path))
        robot_path = (fs::path(dir) / robot_path).string();
    auto parsed = parse_urdf_file(robot_path);
    data.robot = std::make_shared<RobotModel>(std::move(parsed.model));
    data.manifest.validate(dir, *data.robot);

    std::vector<std::pair<std::string, int>> pose_first;
    for (int i = 0; i < int(data.manifest.samples.size()); ++i) {
        const DatasetSample& s = data.manifest.samples[i];
        (s.test ? data.test_samples : data.train_samples).push_back(i);
        if (s.pose.isZero()) data.canonical_samples.push_back(i);
        if (!s.test) {
            if (pose_first.empty() || pose_first.back().first != s.cloud)
                pose_first.emplace_back(s.cloud, i);
        }
    }
    for (auto& [cloud, idx] : pose_first) data.train_poses.push_back(idx);
    return data;
}

template <typename S>
Image<S> TrainDataset<S>::load_image(int sample) const {
    return read_raw_image<S>((fs::path(dir) / manifest.samples[sample].image_raw).string());
}

template <typename S>
std::vector<S> TrainDataset<S>::load_cloud(int sample) const {
    const std::vector<float> raw =
        read_cloud((fs::path(dir) / manifest.samples[sample].cloud).string());
    std::vector<S> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out[i] = S(raw[i]);
    return out;
}

template <typename S>
BlobRobot<S> TrainDataset<S>::rebuild_blob() const {
    BlobOptions opt;
    opt.points = manifest.meta.blob_points;
    opt.seed = manifest.meta.blob_seed;
    opt.opacity = manifest.meta.blob_opacity;
    opt.scale_factor = manifest.meta.blob_scale_factor;
    return build_blob_robot<S>(robot, opt);
}

// ---------------------------------------------------------------------------
// Reports and logging
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json json_number_or_inf(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

}  // namespace

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["psnr_mean"] = json_number_or_inf(psnr_mean);
    j["chamfer_mean"] = chamfer_mean;
    j["psnr_per_sample"] = nlohmann::ordered_json::array();
    for (double v : psnr_per_sample) j["psnr_per_sample"].push_back(json_number_or_inf(v));
    j["chamfer_per_pose"] = chamfer_per_pose;
    return j.dump(2) + "\n";
}

TrainLogger::TrainLogger(const std::string& path) {
    out_ = std::make_shared<std::ofstream>(path, std::ios::app);
    require(out_->good(), ErrorCode::IoFailure, "cannot open training log '" + path + "'");
}

void TrainLogger::log(const std::string& stage, int64_t step, double loss,
                      std::optional<double> psnr_db, int64_t n_gaussians,
                      const std::string& extra) {
    if (!out_) return;
    nlohmann::ordered_json j;
    j["step"] = step;
    j["stage"] = stage;
    j["loss"] = loss;
    if (psnr_db) j["psnr"] = json_number_or_inf(*psnr_db);
    j["n_gaussians"] = n_gaussians;
    if (!extra.empty()) j["event"] = extra;
    (*out_) << j.dump() << "\n";
    out_->flush();
}

// ---------------------------------------------------------------------------
// Model setup and the optimizer harness
// ---------------------------------------------------------------------------

template <typename S>
double scene_extent(const GaussianSet<S>& set) {
    Vec3<double> centroid = Vec3<double>::Zero();
    for (int64_t i = 0; i < set.size(); ++i) centroid += set.mean(i).template cast<double>();
    centroid /= double(set.size());
    double extent = 0.0;
    for (int64_t i = 0; i < set.size(); ++i)
        extent = std::max(extent, (set.mean(i).template cast<double>() - centroid).norm());
    return std::max(0.1, extent);
}

template <typename S>
SplatModel<S> make_initial_model(std::shared_ptr<const RobotModel> robot,
                                 const TrainConfig& config) {
    std::vector<SurfacePoint> points =
        sample_surface_points(*robot, config.init_points, config.init_seed);
    const FkResult fk0 = forward_kinematics(*robot, Pose::Zero(robot->dof));
    double area = 0.0;
    for (const Link& link : robot->links)
        for (const Visual& vis : link.visuals) area += vis.primitive.surface_area();
    for (SurfacePoint& p : points) p.position = fk0.link_world[p.link].apply(p.position);
    const double spacing = std::sqrt(area / double(config.init_points));

    GaussianSet<S> canonical = init_from_points<S>(points, 0.7 * spacing, config.init_opacity);
    DeformNetConfig net;
    net.encoding.bands = config.fourier_bands;
    net.hidden = config.mlp_hidden;
    net.hidden_layers = config.mlp_layers;
    net.no_deform = config.no_deform;
    return SplatModel<S>::create(std::move(robot), std::move(canonical), net, config.seed);
}

namespace {

// Adam over every parameter group of the model, with the post-step
// projections the set invariants require (unit quaternions, bounded scales).
template <typename S>
struct ModelOptimizer {
    SplatModel<S>* model;
    const TrainConfig* config;
    double extent;

    AdamState<S> means, rotations, log_scales, opacity, sh;
    std::vector<AdamState<S>> lbs_w, lbs_b, app_w, app_b;

    ModelOptimizer(SplatModel<S>& m, const TrainConfig& c) : model(&m), config(&c) {
        extent = scene_extent(m.canonical);
        lbs_w.resize(m.lbs_net.num_layers());
        lbs_b.resize(m.lbs_net.num_layers());
        app_w.resize(m.appearance_net.num_layers());
        app_b.resize(m.appearance_net.num_layers());
    }

    void reset_gaussian_state() {
        means = {};
        rotations = {};
        log_scales = {};
        opacity = {};
        sh = {};
    }

    void step_gaussians(const GaussianSetGrads<S>& g) {
        GaussianSet<S>& set = model->canonical;
        adam_step<S>(set.means, g.means, means, config->lr_means * extent);
        adam_step<S>(set.rotations, g.rotations, rotations, config->lr_rotations);
        adam_step<S>(set.log_scales, g.log_scales, log_scales, config->lr_scales);
        adam_step<S>(set.opacity_logits, g.opacity_logits, opacity, config->lr_opacity);
        adam_step<S>(set.sh, g.sh, sh, config->lr_sh);
        project(set);
    }

    static void project(GaussianSet<S>& set) {
        for (int64_t i = 0; i < set.size(); ++i) {
            Vec4<S> q = set.rotation(i);
            const S norm = q.norm();
            for (int k = 0; k < 4; ++k) set.rotations[4 * i + k] = q[k] / norm;
        }
        for (S& ls : set.log_scales)
            ls = std::min(S(kMaxLogScale), std::max(S(kMinLogScale), ls));
    }

    void step_net(Mlp<S>& net, const typename Mlp<S>::Grads& g, std::vector<AdamState<S>>& sw,
                  std::vector<AdamState<S>>& sb) {
        for (int l = 0; l < net.num_layers(); ++l) {
            adam_step<S>(std::span<S>(net.weights[l].data(), net.weights[l].size()),
                         std::span<const S>(g.weights[l].data(), g.weights[l].size()), sw[l],
                         config->lr_mlp);
            adam_step<S>(std::span<S>(net.biases[l].data(), net.biases[l].size()),
                         std::span<const S>(g.biases[l].data(), g.biases[l].size()), sb[l],
                         config->lr_mlp);
        }
    }

    void step_lbs(const typename Mlp<S>::Grads& g) { step_net(model->lbs_net, g, lbs_w, lbs_b); }
    void step_appearance(const typename Mlp<S>::Grads& g) {
        step_net(model->appearance_net, g, app_w, app_b);
    }
};

// Image loss and its cotangent. L1 uses sign(r - t) with sign(0) = 0, so an
// exact fit has an exactly zero gradient.
template <typename S>
double image_loss(TrainConfig::ImageLoss kind, const Image<S>& render, const Image<S>& target,
                  Image<S>& cotangent) {
    require(render.width == target.width && render.height == target.height,
            ErrorCode::ShapeMismatch, "render/target shape mismatch");
    cotangent = Image<S>(render.width, render.height);
    const double inv_n = 1.0 / double(render.data.size());
    double loss = 0.0;
    for (size_t i = 0; i < render.data.size(); ++i) {
        const double d = double(render.data[i]) - double(target.data[i]);
        if (kind == TrainConfig::ImageLoss::L1) {
            loss += std::abs(d) * inv_n;
            cotangent.data[i] = S((d > 0.0) - (d < 0.0)) * S(inv_n);
        } else {
            loss += d * d * inv_n;
            cotangent.data[i] = S(2.0 * d * inv_n);
        }
    }
    return loss;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stage 1: canonical Gaussians on zero-pose views
// ---------------------------------------------------------------------------

template <typename S>
double train_canonical(SplatModel<S>& model, const TrainDataset<S>& data,
                       const TrainConfig& config, TrainLogger& logger) {
    require(int(data.canonical_samples.size()) >= 3, ErrorCode::ConfigError,
            "canonical training needs at least three zero-pose views");
    ModelOptimizer<S> opt(model, config);
    Rng rng(config.seed);
    Rng pick_rng = rng.fork(0xca01);
    Rng densify_rng = rng.fork(0xde51);

    DensifyStats stats;
    stats.resize(model.canonical.size());
    const Vec3<S> background = data.background();
    const RasterConfig raster_cfg;

    // Preload the canonical views.
    std::vector<Image<S>> targets;
    for (int idx : data.canonical_samples) targets.push_back(data.load_image(idx));

    double last_loss = 0.0;
    for (int step = 1; step <= config.canonical_steps; ++step) {
        const int pick = int(pick_rng.uniform_int(int64_t(data.canonical_samples.size())));
        const Camera& camera = data.camera_of(data.canonical_samples[pick]);

        RenderAux<S> aux;
        const Image<S> render_out = rasterize(camera, model.canonical, background, raster_cfg, &aux);
        Image<S> cotangent;
        last_loss = image_loss(config.image_loss, render_out, targets[pick], cotangent);
        GaussianSetGrads<S> grads =
            rasterize_backward(camera, model.canonical, aux, cotangent, raster_cfg);

        for (int64_t i = 0; i < model.canonical.size(); ++i) {
            if (aux.contrib_count[i] > 0) {
                stats.grad_accum[i] += std::hypot(double(grads.mean2d[2 * i]),
                                                  double(grads.mean2d[2 * i + 1]));
                stats.obs_count[i] += 1;
            }
        }
        opt.step_gaussians(grads);

        const bool densify_window = step < int(config.densify_stop_fraction * config.canonical_steps);
        if (config.densify_interval > 0 && step % config.densify_interval == 0 && densify_window) {
            const DensifyReport report =
                densify_and_prune(model.canonical, stats, config.densify_grad_threshold,
                                  config.densify_opacity_floor, densify_rng);
            opt.reset_gaussian_state();
            logger.log("canonical", step, last_loss, std::nullopt, model.canonical.size(),
                       "densify split=" + std::to_string(report.split) +
                           " pruned=" + std::to_string(report.pruned));
        } else if (step % 100 == 0) {
            logger.log("canonical", step, last_loss, std::nullopt, model.canonical.size());
        }
    }

    // Report PSNR over the canonical views.
    std::vector<double> scores;
    for (size_t k = 0; k < targets.size(); ++k) {
        const Camera& camera = data.camera_of(data.canonical_samples[k]);
        const Image<S> img = rasterize<S>(camera, model.canonical, background, raster_cfg);
        scores.push_back(psnr(img, targets[k]));
    }
    const double mean_psnr =
        std::accumulate(scores.begin(), scores.end(), 0.0) / double(scores.size());
    logger.log("canonical", config.canonical_steps, last_loss, mean_psnr,
               model.canonical.size(), "stage done");
    return mean_psnr;
}

// ---------------------------------------------------------------------------
// Stage 2: implicit skinning weights on posed point clouds
// ---------------------------------------------------------------------------

template <typename S>
double train_lbs(SplatModel<S>& model, const TrainDataset<S>& data, const TrainConfig& config,
                 TrainLogger& logger) {
    require(int(data.train_poses.size()) >= 2, ErrorCode::ConfigError,
            "skinning supervision needs at least two distinct poses");
    const BlobRobot<S> blob = data.rebuild_blob();
    const std::vector<S>& points = blob.canonical.means;
    const int64_t count = blob.canonical.size();
    const int L = model.weight_slots();

    // Supervision poses with their oracle clouds and relative transforms.
    const int n_sup = std::min<int>(config.lbs_pose_count, int(data.train_poses.size()));
    struct Supervision {
        std::vector<Rigidd> rel;
        std::vector<S> cloud;
    };
    std::vector<Supervision> sup(n_sup);
    for (int k = 0; k < n_sup; ++k) {
        const int sample = data.train_poses[k];
        const FkResult fk = forward_kinematics(*model.robot, data.manifest.samples[sample].pose);
        sup[k].rel = relative_transforms(model, fk);
        sup[k].cloud = data.load_cloud(sample);
    }

    ModelOptimizer<S> opt(model, config);
    Rng rng(config.seed);
    Rng pick_rng = rng.fork(0x1b52);

    double last_loss = 0.0;
    for (int step = 1; step <= config.lbs_steps; ++step) {
        typename Mlp<S>::Cache cache;
        const MatX<S> weights = lbs_weights(model, points.data(), count, &cache);

        MatX<S> weights_bar = MatX<S>::Zero(L, count);
        double loss = 0.0;
        for (int b = 0; b < config.lbs_batch; ++b) {
            const int k = int(pick_rng.uniform_int(n_sup));
            BlendApplyTape<S> tape;
            BlendResult<S> blent =
                blend_apply(sup[k].rel, weights, points.data(), count, false, &tape);
            std::vector<S> grad_pos;
            loss += chamfer_with_grad<S>(blent.positions, sup[k].cloud, grad_pos) /
                    double(config.lbs_batch);
            for (S& g : grad_pos) g /= S(config.lbs_batch);
            std::vector<RigidCot> rel_bar(L);
            blend_apply_backward<S>(sup[k].rel, weights, points.data(), tape, grad_pos.data(),
                                    (const S*)nullptr, weights_bar, rel_bar, (S*)nullptr);
        }
        const MatX<S> logits_bar = softmax_columns_vjp(weights, weights_bar);
        typename Mlp<S>::Grads grads;
        grads.init_like(model.lbs_net);
        model.lbs_net.backward(cache, logits_bar, grads);
        opt.step_lbs(grads);
        last_loss = loss;
        if (step % 100 == 0) logger.log("lbs", step, loss, std::nullopt, count);
    }
    logger.log("lbs", config.lbs_steps, last_loss, std::nullopt, count, "stage done");
    return last_loss;
}

// ---------------------------------------------------------------------------
// Stage 3: joint optimization of all parameter groups
// ---------------------------------------------------------------------------

namespace {

template <typename S>
double validation_psnr(const SplatModel<S>& model, const TrainDataset<S>& data,
                       const std::vector<int>& samples) {
    double sum = 0.0;
    int finite = 0;
    bool all_exact = true;
    for (int idx : samples) {
        const PosedSplats<S> posed = pose_splat(model, data.manifest.samples[idx].pose, false);
        const Image<S> img = render(data.camera_of(idx), posed.view(), data.background(),
                                    RasterConfig{}, (RenderAux<S>*)nullptr);
        const double v = psnr(img, data.load_image(idx));
        if (std::isinf(v)) continue;
        all_exact = false;
        sum += v;
        ++finite;
    }
    if (finite == 0) return all_exact ? std::numeric_limits<double>::infinity() : 0.0;
    return sum / double(finite);
}

}  // namespace

namespace {

// Distills the appearance head toward the canonical model: zero residual
// rotation/scale/opacity and the canonical SH coefficients, across random
// poses. Keeps the joint stage from starting at a gray appearance.
template <typename S>
void warm_up_appearance(SplatModel<S>& model, const TrainDataset<S>& data,
                        const TrainConfig& config, ModelOptimizer<S>& opt) {
    if (model.config.no_deform || config.appearance_warmup_steps <= 0) return;
    const GaussianSet<S>& can = model.canonical;
    const int64_t n = can.size();
    const int enc_dim = model.config.encoding.out_dim(3);

    MatX<S> target = MatX<S>::Zero(kAppearanceOut, n);
    for (int64_t i = 0; i < n; ++i)
        for (int k = 0; k < kShCoeffs; ++k) target(8 + k, i) = can.sh[kShCoeffs * i + k];

    Rng rng(config.seed ^ 0x5d157111u);
    Pose lo, hi;
    pose_bounds(*model.robot, lo, hi);
    const MatX<S> weights = lbs_weights(model, can.means.data(), n);

    MatX<S> x_in(2 * enc_dim, n);
    for (int64_t i = 0; i < n; ++i)
        fourier_encode(model.config.encoding, can.means.data() + 3 * i, 3, x_in.col(i).data());

    for (int step = 0; step < config.appearance_warmup_steps; ++step) {
        Pose pose(model.robot->dof);
        for (int d = 0; d < model.robot->dof; ++d) pose[d] = rng.uniform(lo[d], hi[d]);
        const FkResult fk = forward_kinematics(*model.robot, pose);
        const std::vector<Rigidd> rel = relative_transforms(model, fk);
        const BlendResult<S> blend =
            blend_apply<S>(rel, weights, can.means.data(), n, false, nullptr);
        for (int64_t i = 0; i < n; ++i)
            fourier_encode(model.config.encoding, blend.positions.data() + 3 * i, 3,
                           x_in.col(i).data() + enc_dim);
        typename Mlp<S>::Cache cache;
        const MatX<S> out = model.appearance_net.forward(x_in, &cache);
        const MatX<S> out_bar = S(2) * (out - target) / S(out.size());
        typename Mlp<S>::Grads grads;
        grads.init_like(model.appearance_net);
        model.appearance_net.backward(cache, out_bar, grads);
        opt.step_appearance(grads);
    }
}

}  // namespace

template <typename S>
JointResult<S> train_joint(SplatModel<S>& model, const TrainDataset<S>& data,
                           const TrainConfig& config, TrainLogger& logger) {
    ModelOptimizer<S> opt(model, config);
    warm_up_appearance(model, data, config, opt);
    Rng rng(config.seed);
    Rng pick_rng = rng.fork(0x901f7);
    Rng densify_rng = rng.fork(0xde52);

    // Validation poses: the last few distinct train poses, all their views.
    std::vector<int> validation;
    {
        const int nv = std::min<int>(config.validation_poses, int(data.train_poses.size()) - 1);
        for (int k = 0; k < nv; ++k) {
            const int pose_sample = data.train_poses[data.train_poses.size() - 1 - k];
            const std::string& cloud = data.manifest.samples[pose_sample].cloud;
            for (int idx : data.train_samples)
                if (data.manifest.samples[idx].cloud == cloud) validation.push_back(idx);
        }
    }
    std::vector<int> step_pool;
    for (int idx : data.train_samples)
        if (std::find(validation.begin(), validation.end(), idx) == validation.end())
            step_pool.push_back(idx);
    require(!step_pool.empty(), ErrorCode::ConfigError, "no training samples left for steps");

    DensifyStats stats;
    stats.resize(model.canonical.size());
    const Vec3<S> background = data.background();
    const RasterConfig raster_cfg;

    JointResult<S> result;
    std::vector<std::pair<int64_t, double>> eval_history;
    double best_psnr = -1.0;

    for (int64_t step = 1; step <= config.joint_max_steps; ++step) {
        GaussianSetGrads<S> acc_gauss;
        typename Mlp<S>::Grads acc_lbs, acc_app;
        double loss = 0.0;
        for (int b = 0; b < config.batch_size; ++b) {
            const int idx = step_pool[pick_rng.uniform_int(int64_t(step_pool.size()))];
            const DatasetSample& sample = data.manifest.samples[idx];
            PosedSplats<S> posed = pose_splat(model, sample.pose, true);
            RenderAux<S> aux;
            const Image<S> img =
                render(data.camera_of(idx), posed.view(), background, raster_cfg, &aux);
            Image<S> cotangent;
            const Image<S> target = data.load_image(idx);
            loss += image_loss(config.image_loss, img, target, cotangent) /
                    double(config.batch_size);
            RasterGrads<S> rg =
                render_backward(data.camera_of(idx), posed.view(), aux, cotangent, raster_cfg);
            if (config.batch_size > 1)
                for (auto* arr : {&rg.means, &rg.rot_mats, &rg.log_scales, &rg.opacity_logits,
                                  &rg.sh, &rg.mean2d})
                    for (S& v : *arr) v /= S(config.batch_size);
            PoseSplatGrads<S> pg = pose_splat_backward(model, posed, rg);

            for (int64_t i = 0; i < model.canonical.size(); ++i) {
                if (aux.contrib_count[i] > 0) {
                    stats.grad_accum[i] += std::hypot(double(rg.mean2d[2 * i]),
                                                      double(rg.mean2d[2 * i + 1]));
                    stats.obs_count[i] += 1;
                }
            }

            if (b == 0) {
                acc_gauss = std::move(pg.canonical);
                acc_lbs = std::move(pg.lbs);
                acc_app = std::move(pg.appearance);
            } else {
                auto add = [](std::vector<S>& dst, const std::vector<S>& src) {
                    for (size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
                };
                add(acc_gauss.means, pg.canonical.means);
                add(acc_gauss.rotations, pg.canonical.rotations);
                add(acc_gauss.log_scales, pg.canonical.log_scales);
                add(acc_gauss.opacity_logits, pg.canonical.opacity_logits);
                add(acc_gauss.sh, pg.canonical.sh);
                for (int l = 0; l < model.lbs_net.num_layers(); ++l) {
                    acc_lbs.weights[l] += pg.lbs.weights[l];
                    acc_lbs.biases[l] += pg.lbs.biases[l];
                    acc_app.weights[l] += pg.appearance.weights[l];
                    acc_app.biases[l] += pg.appearance.biases[l];
                }
            }
        }

        opt.step_gaussians(acc_gauss);
        opt.step_lbs(acc_lbs);
        if (!config.no_deform) opt.step_appearance(acc_app);

        const bool densify_window =
            step < int64_t(config.densify_stop_fraction * config.joint_max_steps);
        if (config.densify_interval > 0 && step % config.densify_interval == 0 && densify_window) {
            const DensifyReport report =
                densify_and_prune(model.canonical, stats, config.densify_grad_threshold,
                                  config.densify_opacity_floor, densify_rng);
            opt.reset_gaussian_state();
            logger.log("joint", step, loss, std::nullopt, model.canonical.size(),
                       "densify split=" + std::to_string(report.split) +
                           " pruned=" + std::to_string(report.pruned));
        }

        if (step % config.eval_interval == 0 || step == config.joint_max_steps) {
            const double val = validation_psnr(model, data, validation);
            eval_history.emplace_back(step, val);
            best_psnr = std::max(best_psnr, val);
            logger.log("joint", step, loss, val, model.canonical.size());
            // Plateau: no improvement > delta over the trailing window.
            if (step > config.plateau_window) {
                double before = -1.0;
                for (const auto& [s, v] : eval_history)
                    if (s <= step - config.plateau_window) before = std::max(before, v);
                if (before >= 0.0 && best_psnr - before < config.plateau_delta_db) {
                    result.plateaued = true;
                    result.steps = step;
                    result.best_validation_psnr = best_psnr;
                    logger.log("joint", step, loss, val, model.canonical.size(), "plateau stop");
                    return result;
                }
            }
        }
        result.steps = step;
    }
    result.best_validation_psnr = best_psnr;
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation and retrieval baselines
// ---------------------------------------------------------------------------

template <typename S>
MetricsReport evaluate_model(const SplatModel<S>& model, const TrainDataset<S>& data,
                             bool test_split) {
    const std::vector<int>& samples = test_split ? data.test_samples : data.train_samples;
    require(!samples.empty(), ErrorCode::EmptyInput, "split has no samples");
    MetricsReport report;
    std::string last_cloud;
    double psnr_sum = 0.0;
    int finite = 0;
    bool any_inf = false;
    for (int idx : samples) {
        const DatasetSample& sample = data.manifest.samples[idx];
        const PosedSplats<S> posed = pose_splat(model, sample.pose, false);
        const Image<S> img = render(data.camera_of(idx), posed.view(), data.background(),
                                    RasterConfig{}, (RenderAux<S>*)nullptr);
        const double v = psnr(img, data.load_image(idx));
        report.psnr_per_sample.push_back(v);
        if (std::isinf(v)) any_inf = true;
        else {
            psnr_sum += v;
            ++finite;
        }
        if (sample.cloud != last_cloud) {
            last_cloud = sample.cloud;
            const std::vector<S> oracle = data.load_cloud(idx);
            report.chamfer_per_pose.push_back(
                chamfer_impl<S, 3>(posed.means, oracle, nullptr));
        }
    }
    report.psnr_mean = finite > 0 ? psnr_sum / double(finite)
                                  : (any_inf ? std::numeric_limits<double>::infinity() : 0.0);
    report.chamfer_mean =
        std::accumulate(report.chamfer_per_pose.begin(), report.chamfer_per_pose.end(), 0.0) /
        std::max<size_t>(1, report.chamfer_per_pose.size());
    return report;
}

namespace {

template <typename S>
MetricsReport evaluate_retrieval(const TrainDataset<S>& data,
                                 const std::function<int(int)>& retrieve) {
    MetricsReport report;
    std::string last_cloud;
    double psnr_sum = 0.0;
    int finite = 0;
    for (int idx : data.test_samples) {
        const int got = retrieve(idx);
        const double v = psnr(data.load_image(got), data.load_image(idx));
        report.psnr_per_sample.push_back(v);
        if (!std::isinf(v)) {
            psnr_sum += v;
            ++finite;
        }
        const DatasetSample& sample = data.manifest.samples[idx];
        if (sample.cloud != last_cloud) {
            last_cloud = sample.cloud;
            const std::vector<S> a = data.load_cloud(got);
            const std::vector<S> b = data.load_cloud(idx);
            report.chamfer_per_pose.push_back(chamfer_impl<S, 3>(a, b, nullptr));
        }
    }
    report.psnr_mean =
        finite > 0 ? psnr_sum / double(finite) : std::numeric_limits<double>::infinity();
    report.chamfer_mean =
        std::accumulate(report.chamfer_per_pose.begin(), report.chamfer_per_pose.end(), 0.0) /
        std::max<size_t>(1, report.chamfer_per_pose.size());
    return report;
}

}  // namespace

template <typename S>
MetricsReport evaluate_nn_baseline(const TrainDataset<S>& data, int pool_size, uint64_t seed) {
    // Retrieval pool: up to pool_size training samples, uniformly chosen.
    Rng rng(seed);
    std::vector<int> pool = data.train_samples;
    if (int(pool.size()) > pool_size) {
        for (size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[rng.uniform_int(int64_t(i))]);
        pool.resize(pool_size);
        std::sort(pool.begin(), pool.end());
    }
    return evaluate_retrieval<S>(data, [&](int idx) {
        const DatasetSample& query = data.manifest.samples[idx];
        double best = std::numeric_limits<double>::max();
        int best_idx = -1;
        for (int cand : pool) {
            const DatasetSample& c = data.manifest.samples[cand];
            if (c.camera != query.camera) continue;
            const double d = (c.pose - query.pose).squaredNorm();
            if (d < best) {
                best = d;
                best_idx = cand;
            }
        }
        if (best_idx < 0) best_idx = pool.front();
        return best_idx;
    });
}

template <typename S>
MetricsReport evaluate_random_baseline(const TrainDataset<S>& data, uint64_t seed) {
    Rng rng(seed);
    return evaluate_retrieval<S>(data, [&](int) {
        return data.train_samples[rng.uniform_int(int64_t(data.train_samples.size()))];
    });
}

template <typename S>
MetricsReport run_training(SplatModel<S>& model, const TrainDataset<S>& data,
                           const TrainConfig& config, TrainLogger& logger) {
    train_canonical(model, data, config, logger);
    train_lbs(model, data, config, logger);
    train_joint(model, data, config, logger);
    return evaluate_model(model, data, true);
}

#define RSPLAT_INSTANTIATE_TRAINING(S)                                                             \
    template struct TrainDataset<S>;                                                               \
    template double scene_extent<S>(const GaussianSet<S>&);                                        \
    template SplatModel<S> make_initial_model<S>(std::shared_ptr<const RobotModel>,               \
                                                 const TrainConfig&);                             \
    template double train_canonical<S>(SplatModel<S>&, const TrainDataset<S>&, const TrainConfig&, \
                                       TrainLogger&);                                              \
    template double train_lbs<S>(SplatModel<S>&, const TrainDataset<S>&, const TrainConfig&,       \
                                 TrainLogger&);                                                    \
    template JointResult<S> train_joint<S>(SplatModel<S>&, const TrainDataset<S>&,                 \
                                           const TrainConfig&, TrainLogger&);                      \
    template MetricsReport evaluate_model<S>(const SplatModel<S>&, const TrainDataset<S>&, bool);  \
    template MetricsReport evaluate_nn_baseline<S>(const TrainDataset<S>&, int, uint64_t);         \
    template MetricsReport evaluate_random_baseline<S>(const TrainDataset<S>&, uint64_t);          \
    template MetricsReport run_training<S>(SplatModel<S>&, const TrainDataset<S>&,                 \
                                           const TrainConfig&, TrainLogger&);

RSPLAT_INSTANTIATE_TRAINING(float)
RSPLAT_INSTANTIATE_TRAINING(double)

}  // namespace rsplat
