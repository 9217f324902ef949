/* robosplat C API: differentiable robot splatting engine.
 *
 * All functions return rsp_status (0 on success). On failure, a thread-local
 * message is available through rsp_last_error(). Strings returned through
 * char** out-parameters are heap-allocated; release them with
 * rsp_string_free(). Handles are opaque; release them with the matching
 * *_free function.
 */

#ifndef ROBOSPLAT_H
#define ROBOSPLAT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rsp_status {
    RSP_OK = 0,
    RSP_ERROR = 1,          /* unclassified failure */
    RSP_ERROR_CONFIG = 2,   /* bad arguments, malformed descriptions, limits */
    RSP_ERROR_IO = 3,       /* missing or malformed files */
    RSP_ERROR_TRAIN = 4,    /* optimization failure during training */
    RSP_ERROR_FITTING = 5   /* optimization failure at test time */
} rsp_status;

typedef struct rsp_robot rsp_robot;  /* parsed robot description */
typedef struct rsp_model rsp_model;  /* trained splat model bound to a robot */

const char* rsp_version(void);

/* Last error message for the calling thread (empty string if none). */
const char* rsp_last_error(void);

/* Worker threads for internal parallelism; n <= 0 selects the machine
 * parallelism. Results are identical at any setting. */
rsp_status rsp_set_threads(int n);

void rsp_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Robot descriptions                                                  */
/* ------------------------------------------------------------------ */

rsp_status rsp_robot_parse_file(const char* path, rsp_robot** out);
rsp_status rsp_robot_parse_text(const char* xml, rsp_robot** out);
int rsp_robot_dof(const rsp_robot* robot);
int rsp_robot_num_links(const rsp_robot* robot);
/* Robot summary: {name, dof, links[], joints[], warnings[]}. */
rsp_status rsp_robot_info_json(const rsp_robot* robot, char** json_out);
void rsp_robot_free(rsp_robot* robot);

/* ------------------------------------------------------------------ */
/* Synthetic dataset generation                                        */
/* ------------------------------------------------------------------ */

/* config_json keys (all optional): poses, views, image_size, seed,
 * blob_points, blob_seed, blob_opacity, background [r,g,b].
 * Writes images/, clouds/ and manifest.json under out_dir and copies the
 * robot description next to them. summary_json_out reports counts. */
rsp_status rsp_generate_dataset(const rsp_robot* robot, const char* robot_path,
                                const char* config_json, const char* out_dir,
                                char** summary_json_out);

/* ------------------------------------------------------------------ */
/* Training                                                            */
/* ------------------------------------------------------------------ */

/* config_json keys (all optional) mirror the training configuration:
 * canonical_steps, lbs_steps, joint_max_steps, plateau_window,
 * plateau_delta_db, eval_interval, batch_size, image_loss ("l1"|"mse"),
 * lr_means, lr_rotations, lr_scales, lr_opacity, lr_sh, lr_mlp,
 * densify_interval, densify_grad_threshold, densify_opacity_floor,
 * densify_stop_fraction, init_points, init_seed, init_opacity, mlp_hidden,
 * mlp_layers, fourier_bands, no_deform, lbs_pose_count, lbs_batch,
 * validation_poses, seed. Unknown keys are rejected.
 * Writes the checkpoint and optional JSONL log; metrics_json_out carries the
 * test-split report. */
rsp_status rsp_train(const char* dataset_dir, const char* config_json,
                     const char* checkpoint_path, const char* log_path,
                     char** metrics_json_out);

/* ------------------------------------------------------------------ */
/* Models                                                              */
/* ------------------------------------------------------------------ */

rsp_status rsp_model_load(const rsp_robot* robot, const char* checkpoint_path, rsp_model** out);
rsp_status rsp_model_save(const rsp_model* model, const char* checkpoint_path);
int64_t rsp_model_num_gaussians(const rsp_model* model);
void rsp_model_free(rsp_model* model);

/* camera_json: {fx, fy, cx, cy, width, height, axis_angle[3], translation[3]}
 * (world-to-camera extrinsics). Writes the render as PNG and/or raw float
 * image; either output path may be NULL. */
rsp_status rsp_render(const rsp_model* model, const double* pose, int pose_len,
                      const char* camera_json, const char* out_png, const char* out_raw);

/* Renders every sample of the chosen split ("test" or "train") and reports
 * PSNR / Chamfer metrics as JSON. */
rsp_status rsp_evaluate(const rsp_model* model, const char* dataset_dir, const char* split,
                        char** metrics_json_out);

/* Baseline metrics for the same split: kind is "nearest" or "random". */
rsp_status rsp_evaluate_baseline(const char* dataset_dir, const char* kind, int pool_size,
                                 uint64_t seed, char** metrics_json_out);

/* ------------------------------------------------------------------ */
/* Test-time optimization                                              */
/* ------------------------------------------------------------------ */

/* problem_json:
 *   targets: [{image: path(.raw), camera: {...}}], required
 *   init_pose: [..dof], optional (zeros)
 *   optimize_camera: bool, max_iters, lr_pose, lr_camera, tol,
 *   coarse_fraction, loss ("mse"|"l1")
 * result_json_out: {pose, cameras, final_loss, trace, converged, iterations}. */
rsp_status rsp_reconstruct(const rsp_model* model, const char* problem_json,
                           char** result_json_out);

/* frames_json: {frames: [path, ...], camera: {...}, init_pose: [...],
 * max_iters, ...}; result is a JSON array of per-frame results. */
rsp_status rsp_reconstruct_sequence(const rsp_model* model, const char* frames_json,
                                    char** result_json_out);

/* tracks_json: {frames, points, indices[], coords[T*K*2], visible[]?}
 * config_json: {camera: {...}, init_pose | init_poses, max_iters, lr_pose,
 * smoothness, tol}. */
rsp_status rsp_retarget(const rsp_model* model, const char* tracks_json, const char* config_json,
                        char** result_json_out);

/* bridge_spec: "host:port", "spawn:<command>" or a plain command line.
 * config_json: {camera: {...}, init_pose: [...], max_iters, lr_pose, tol}. */
rsp_status rsp_optimize_external(const rsp_model* model, const char* bridge_spec,
                                 const char* config_json, char** result_json_out);

#ifdef __cplusplus
}
#endif

#endif /* ROBOSPLAT_H */
