#include "checkpoint.hpp"

#include <fstream>

#include "binio.hpp"

namespace rsplat {

namespace {

template <typename S>
void write_matrix(std::ostream& out, const MatX<S>& m) {
    write_u32(out, uint32_t(m.rows()));
    write_u32(out, uint32_t(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32(out, float(m(r, c)));
}

template <typename S>
MatX<S> read_matrix(std::istream& in) {
    const uint32_t rows = read_u32(in);
    const uint32_t cols = read_u32(in);
    require(rows <= (1u << 20) && cols <= (1u << 20), ErrorCode::IoFailure,
            "implausible matrix size in checkpoint");
    MatX<S> m(rows, cols);
    for (uint32_t r = 0; r < rows; ++r)
        for (uint32_t c = 0; c < cols; ++c) m(r, c) = S(read_f32(in));
    return m;
}

template <typename S>
void write_net(std::ostream& out, const Mlp<S>& net) {
    write_u32(out, uint32_t(net.num_layers()));
    for (int l = 0; l < net.num_layers(); ++l) {
        write_matrix(out, net.weights[l]);
        write_u32(out, uint32_t(net.biases[l].size()));
        for (Eigen::Index k = 0; k < net.biases[l].size(); ++k)
            write_f32(out, float(net.biases[l][k]));
    }
}

template <typename S>
Mlp<S> read_net(std::istream& in) {
    Mlp<S> net;
    const uint32_t layers = read_u32(in);
    require(layers >= 1 && layers <= 64, ErrorCode::IoFailure, "implausible layer count");
    for (uint32_t l = 0; l < layers; ++l) {
        net.weights.push_back(read_matrix<S>(in));
        const uint32_t blen = read_u32(in);
        require(blen == uint32_t(net.weights.back().rows()), ErrorCode::IoFailure,
                "bias length mismatch in checkpoint");
        VecX<S> b(blen);
        for (uint32_t k = 0; k < blen; ++k) b[k] = S(read_f32(in));
        net.biases.push_back(std::move(b));
    }
    return net;
}

}  // namespace

template <typename S>
void write_drnn(std::ostream& out, const SplatModel<S>& model) {
    write_magic(out, "DRNN");
    write_u32(out, 1);
    write_u32(out, uint32_t(model.config.encoding.bands));
    write_u8(out, model.config.encoding.include_input ? 1 : 0);
    write_u8(out, model.config.no_deform ? 1 : 0);
    write_u32(out, uint32_t(model.config.hidden));
    write_u32(out, uint32_t(model.config.hidden_layers));
    write_net(out, model.lbs_net);
    write_net(out, model.appearance_net);
}

template <typename S>
void read_drnn(std::istream& in, SplatModel<S>& model) {
    expect_magic(in, "DRNN", "network segment");
    const uint32_t version = read_u32(in);
    require(version == 1, ErrorCode::IoFailure, "unsupported DRNN version");
    model.config.encoding.bands = int(read_u32(in));
    model.config.encoding.include_input = read_u8(in) != 0;
    model.config.no_deform = read_u8(in) != 0;
    model.config.hidden = int(read_u32(in));
    model.config.hidden_layers = int(read_u32(in));
    model.lbs_net = read_net<S>(in);
    model.appearance_net = read_net<S>(in);
}

template <typename S>
void save_checkpoint(const std::string& path, const SplatModel<S>& model) {
    auto out = open_output(path);
    write_magic(out, "DRBT");
    write_u32(out, 1);
    write_drgs(out, model.canonical);
    write_drnn(out, model);
}

template <typename S>
SplatModel<S> load_checkpoint(const std::string& path, std::shared_ptr<const RobotModel> robot) {
    auto in = open_input(path);
    expect_magic(in, "DRBT", "checkpoint '" + path + "'");
    const uint32_t version = read_u32(in);
    require(version == 1, ErrorCode::IoFailure, "unsupported checkpoint version");
    SplatModel<S> model;
    model.robot = std::move(robot);
    model.canonical = read_drgs<S>(in);
    read_drnn(in, model);
    require(model.lbs_net.out_dim() == model.robot->num_links(), ErrorCode::ShapeMismatch,
            "checkpoint skinning weights do not match the robot's link count");
    const FkResult fk0 = forward_kinematics(*model.robot, Pose::Zero(model.robot->dof));
    model.canonical_world = fk0.link_world;
    model.canonical_inverse.clear();
    for (const Rigidd& T : fk0.link_world) model.canonical_inverse.push_back(T.inverse());
    return model;
}

void ResumeState::save(const std::string& path) const {
    auto out = open_output(path);
    write_magic(out, "DRTS");
    write_u32(out, 1);
    write_bytes(out, &next_step, 8);
    write_u32(out, uint32_t(stage.size()));
    write_bytes(out, stage.data(), stage.size());
    write_bytes(out, &rng_state, 8);
}

ResumeState ResumeState::load(const std::string& path) {
    auto in = open_input(path);
    expect_magic(in, "DRTS", "resume state '" + path + "'");
    require(read_u32(in) == 1, ErrorCode::IoFailure, "unsupported resume-state version");
    ResumeState st;
    read_bytes(in, &st.next_step, 8);
    const uint32_t len = read_u32(in);
    require(len <= 64, ErrorCode::IoFailure, "implausible stage name");
    st.stage.resize(len);
    read_bytes(in, st.stage.data(), len);
    read_bytes(in, &st.rng_state, 8);
    return st;
}

template void save_checkpoint<float>(const std::string&, const SplatModel<float>&);
template void save_checkpoint<double>(const std::string&, const SplatModel<double>&);
template SplatModel<float> load_checkpoint<float>(const std::string&,
                                                  std::shared_ptr<const RobotModel>);
template SplatModel<double> load_checkpoint<double>(const std::string&,
                                                    std::shared_ptr<const RobotModel>);
template void write_drnn<float>(std::ostream&, const SplatModel<float>&);
template void write_drnn<double>(std::ostream&, const SplatModel<double>&);
template void read_drnn<float>(std::istream&, SplatModel<float>&);
template void read_drnn<double>(std::istream&, SplatModel<double>&);

}  // namespace rsplat
