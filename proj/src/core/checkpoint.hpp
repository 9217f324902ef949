#pragma once

#include "deform.hpp"

namespace rsplat {

// Checkpoint container: "DRBT" magic, u32 version, then a DRGS Gaussian
// segment and a DRNN network segment. Weights are float32 little-endian on
// disk regardless of the in-memory precision.
template <typename S>
void save_checkpoint(const std::string& path, const SplatModel<S>& model);

// Loads a checkpoint against a parsed robot (the robot description is not
// part of the file). Validates dimension compatibility.
template <typename S>
SplatModel<S> load_checkpoint(const std::string& path, std::shared_ptr<const RobotModel> robot);

// "DRNN" segment: version, encoding/arch header, float32 weights for the
// skinning net then the appearance net.
template <typename S>
void write_drnn(std::ostream& out, const SplatModel<S>& model);
template <typename S>
void read_drnn(std::istream& in, SplatModel<S>& model);

// Sidecar training state for --resume (kept out of the checkpoint so the
// DRBT layout stays exactly two segments).
struct ResumeState {
    int64_t next_step = 1;
    std::string stage = "canonical";
    uint64_t rng_state = 0;

    void save(const std::string& path) const;
    static ResumeState load(const std::string& path);
};

}  // namespace rsplat
