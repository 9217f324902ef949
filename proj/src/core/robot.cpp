#include "robot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "common.hpp"
#include "xml.hpp"

namespace rsplat {

double Primitive::surface_area() const {
    switch (kind) {
        case Kind::Box: {
            const Vec3d d = 2.0 * half_extents;
            return 2.0 * (d.x() * d.y() + d.y() * d.z() + d.z() * d.x());
        }
        case Kind::Cylinder:
            return 2.0 * M_PI * radius * length + 2.0 * M_PI * radius * radius;
        case Kind::Sphere:
            return 4.0 * M_PI * radius * radius;
    }
    return 0.0;
}

const char* joint_kind_name(JointKind kind) {
    switch (kind) {
        case JointKind::Revolute: return "revolute";
        case JointKind::Continuous: return "continuous";
        case JointKind::Prismatic: return "prismatic";
        case JointKind::Fixed: return "fixed";
    }
    return "unknown";
}

void RobotModel::validate() const {
    require(!links.empty(), ErrorCode::MalformedXml, "robot has no links");
    require(root_link >= 0 && root_link < num_links(), ErrorCode::UnknownLinkRef,
            "root link index out of range");
    int actuated = 0;
    std::vector<int> parent_of(links.size(), -1);
    for (size_t j = 0; j < joints.size(); ++j) {
        const Joint& joint = joints[j];
        require(joint.parent_link >= 0 && joint.parent_link < num_links(),
                ErrorCode::UnknownLinkRef, "joint '" + joint.name + "' parent out of range");
        require(joint.child_link >= 0 && joint.child_link < num_links(), ErrorCode::UnknownLinkRef,
                "joint '" + joint.name + "' child out of range");
        require(parent_of[joint.child_link] == -1, ErrorCode::CycleDetected,
                "link '" + links[joint.child_link].name + "' has two parent joints");
        parent_of[joint.child_link] = static_cast<int>(j);
        if (joint.actuated()) {
            ++actuated;
            require(std::abs(joint.axis.norm() - 1.0) <= 1e-9, ErrorCode::MalformedXml,
                    "joint '" + joint.name + "' axis is not unit length");
        }
        if (joint.has_limits)
            require(joint.lower <= joint.upper, ErrorCode::MalformedXml,
                    "joint '" + joint.name + "' has lower > upper");
    }
    require(parent_of[root_link] == -1, ErrorCode::CycleDetected, "root link has a parent joint");
    require(actuated == dof, ErrorCode::MalformedXml, "dof does not match actuated joint count");
    // Every non-root link must be reachable from the root (tree, no cycles).
    size_t reached = 1;
    std::vector<bool> seen(links.size(), false);
    seen[root_link] = true;
    for (const Joint& joint : joints) {
        require(seen[joint.parent_link], ErrorCode::CycleDetected,
                "joints are not in topological order");
        seen[joint.child_link] = true;
        ++reached;
    }
    require(reached == links.size(), ErrorCode::CycleDetected,
            "kinematic graph is not a connected tree");
}

namespace {

Vec3d parse_vec3(const std::string& text, const std::string& what) {
    std::istringstream in(text);
    Vec3d v;
    if (!(in >> v.x() >> v.y() >> v.z()))
        fail(ErrorCode::MalformedXml, "cannot parse 3-vector from '" + text + "' in " + what);
    std::string rest;
    if (in >> rest)
        fail(ErrorCode::MalformedXml, "trailing data in 3-vector '" + text + "' in " + what);
    return v;
}

double parse_scalar(const std::string& text, const std::string& what) {
    std::istringstream in(text);
    double v;
    if (!(in >> v)) fail(ErrorCode::MalformedXml, "cannot parse number from '" + text + "' in " + what);
    return v;
}

Mat3d rpy_to_matrix(const Vec3d& rpy) {
    return axis_rotation(Vec3d(0, 0, 1), rpy.z()) * axis_rotation(Vec3d(0, 1, 0), rpy.y()) *
           axis_rotation(Vec3d(1, 0, 0), rpy.x());
}

struct OriginParse {
    Rigidd transform;
    Vec3d rpy = Vec3d::Zero();
};

OriginParse parse_origin(const xml::Element* elem, const std::string& what) {
    OriginParse out;
    if (!elem) return out;
    if (elem->has_attr("xyz")) out.transform.t = parse_vec3(elem->attr("xyz"), what);
    if (elem->has_attr("rpy")) {
        out.rpy = parse_vec3(elem->attr("rpy"), what);
        out.transform.R = rpy_to_matrix(out.rpy);
    }
    return out;
}

}  // namespace

UrdfParseResult parse_urdf(std::string_view source) {
    auto root = xml::parse(source);
    require(root->name == "robot", ErrorCode::MalformedXml, "root element is not <robot>");

    UrdfParseResult result;
    RobotModel& model = result.model;
    model.name = root->attr("name", "robot");

    // Materials declared at robot scope can be referenced by name.
    std::map<std::string, Vec3d> materials;
    for (const xml::Element* mat : root->all("material")) {
        if (const xml::Element* color = mat->first("color")) {
            std::istringstream in(color->attr("rgba"));
            Vec3d rgb;
            double a;
            if (in >> rgb.x() >> rgb.y() >> rgb.z() >> a) materials[mat->attr("name")] = rgb;
        }
    }

    std::map<std::string, int> link_index;
    for (const xml::Element* link_elem : root->all("link")) {
        Link link;
        link.name = link_elem->attr("name");
        require(!link.name.empty(), ErrorCode::MalformedXml, "link without a name");
        require(!link_index.count(link.name), ErrorCode::MalformedXml,
                "duplicate link '" + link.name + "'");
        for (const xml::Element* vis : link_elem->all("visual")) {
            Visual visual;
            visual.local = parse_origin(vis->first("origin"), "visual of " + link.name).transform;
            const xml::Element* geom = vis->first("geometry");
            if (!geom || geom->children.empty()) {
                result.warnings.push_back("link '" + link.name + "': visual without geometry skipped");
                continue;
            }
            const xml::Element& shape = *geom->children.front();
            if (shape.name == "box") {
                visual.primitive.kind = Primitive::Kind::Box;
                visual.primitive.half_extents =
                    0.5 * parse_vec3(shape.attr("size"), "box of " + link.name);
            } else if (shape.name == "cylinder") {
                visual.primitive.kind = Primitive::Kind::Cylinder;
                visual.primitive.radius = parse_scalar(shape.attr("radius"), link.name);
                visual.primitive.length = parse_scalar(shape.attr("length"), link.name);
            } else if (shape.name == "sphere") {
                visual.primitive.kind = Primitive::Kind::Sphere;
                visual.primitive.radius = parse_scalar(shape.attr("radius"), link.name);
            } else {
                result.warnings.push_back("link '" + link.name + "': unsupported geometry <" +
                                          shape.name + "> skipped");
                continue;
            }
            const Primitive& p = visual.primitive;
            const bool positive = (p.kind == Primitive::Kind::Box)
                                      ? (p.half_extents.array() > 0.0).all()
                                      : (p.kind == Primitive::Kind::Cylinder
                                             ? (p.radius > 0.0 && p.length > 0.0)
                                             : p.radius > 0.0);
            require(positive, ErrorCode::MalformedXml,
                    "link '" + link.name + "': primitive dimensions must be positive");
            if (const xml::Element* mat = vis->first("material")) {
                if (const xml::Element* color = mat->first("color")) {
                    std::istringstream in(color->attr("rgba"));
                    Vec3d rgb;
                    double a;
                    if (in >> rgb.x() >> rgb.y() >> rgb.z() >> a) visual.color = rgb;
                } else if (materials.count(mat->attr("name"))) {
                    visual.color = materials.at(mat->attr("name"));
                }
            }
            link.visuals.push_back(visual);
        }
        for (const auto& child : link_elem->children) {
            if (child->name != "visual" && child->name != "origin")
                result.warnings.push_back("link '" + link.name + "': tag <" + child->name +
                                          "> skipped");
        }
        link_index[link.name] = model.num_links();
        model.links.push_back(std::move(link));
    }
    require(!model.links.empty(), ErrorCode::MalformedXml, "robot has no links");

    std::vector<Joint> raw_joints;
    for (const xml::Element* joint_elem : root->all("joint")) {
        Joint joint;
        joint.name = joint_elem->attr("name");
        const std::string type = joint_elem->attr("type");
        if (type == "revolute") joint.kind = JointKind::Revolute;
        else if (type == "continuous") joint.kind = JointKind::Continuous;
        else if (type == "prismatic") joint.kind = JointKind::Prismatic;
        else if (type == "fixed") joint.kind = JointKind::Fixed;
        else
            fail(ErrorCode::UnsupportedJointKind,
                 "joint '" + joint.name + "' has unsupported type '" + type + "'");

        const xml::Element* parent = joint_elem->first("parent");
        const xml::Element* child = joint_elem->first("child");
        require(parent && child, ErrorCode::MalformedXml,
                "joint '" + joint.name + "' missing parent/child");
        auto lookup = [&](const std::string& link_name) {
            auto it = link_index.find(link_name);
            if (it == link_index.end())
                fail(ErrorCode::UnknownLinkRef,
                     "joint '" + joint.name + "' references undefined link '" + link_name + "'");
            return it->second;
        };
        joint.parent_link = lookup(parent->attr("link"));
        joint.child_link = lookup(child->attr("link"));

        OriginParse origin = parse_origin(joint_elem->first("origin"), "joint " + joint.name);
        joint.origin = origin.transform;
        joint.rpy = origin.rpy;
        if (const xml::Element* axis = joint_elem->first("axis")) {
            joint.axis = parse_vec3(axis->attr("xyz"), "axis of " + joint.name);
            const double norm = joint.axis.norm();
            require(norm > 1e-12, ErrorCode::MalformedXml,
                    "joint '" + joint.name + "' has a zero axis");
            joint.axis /= norm;
        }
        if (const xml::Element* limit = joint_elem->first("limit")) {
            if (joint.kind == JointKind::Revolute || joint.kind == JointKind::Prismatic) {
                joint.lower = parse_scalar(limit->attr("lower", "0"), joint.name);
                joint.upper = parse_scalar(limit->attr("upper", "0"), joint.name);
                joint.has_limits = true;
            }
        }
        for (const auto& sub : joint_elem->children) {
            static const std::set<std::string> known = {"parent", "child", "origin", "axis",
                                                        "limit"};
            if (!known.count(sub->name))
                result.warnings.push_back("joint '" + joint.name + "': tag <" + sub->name +
                                          "> skipped");
        }
        raw_joints.push_back(std::move(joint));
    }
    for (const auto& child : root->children) {
        if (child->name != "link" && child->name != "joint" && child->name != "material")
            result.warnings.push_back("tag <" + child->name + "> skipped");
    }

    // Find the root: the unique link that is never a child.
    std::vector<int> parent_count(model.links.size(), 0);
    for (const Joint& j : raw_joints) parent_count[j.child_link]++;
    int root_link = -1;
    for (int i = 0; i < model.num_links(); ++i) {
        if (parent_count[i] == 0) {
            require(root_link == -1, ErrorCode::CycleDetected,
                    "multiple root links ('" + model.links[root_link == -1 ? i : root_link].name +
                        "' and '" + model.links[i].name + "')");
            root_link = i;
        }
        require(parent_count[i] <= 1, ErrorCode::CycleDetected,
                "link '" + model.links[i].name + "' has multiple parent joints");
    }
    require(root_link >= 0, ErrorCode::CycleDetected, "no root link (cycle)");
    model.root_link = root_link;

    // Topological order from the root.
    std::vector<bool> placed(model.links.size(), false);
    placed[root_link] = true;
    std::vector<bool> used(raw_joints.size(), false);
    for (size_t round = 0; round < raw_joints.size(); ++round) {
        bool progressed = false;
        for (size_t j = 0; j < raw_joints.size(); ++j) {
            if (used[j] || !placed[raw_joints[j].parent_link]) continue;
            used[j] = true;
            placed[raw_joints[j].child_link] = true;
            model.joints.push_back(raw_joints[j]);
            progressed = true;
        }
        if (!progressed) break;
    }
    require(model.joints.size() == raw_joints.size(), ErrorCode::CycleDetected,
            "kinematic graph contains a cycle or disconnected component");

    model.parent_joint_of_link.assign(model.links.size(), -1);
    for (size_t j = 0; j < model.joints.size(); ++j) {
        model.parent_joint_of_link[model.joints[j].child_link] = static_cast<int>(j);
        if (model.joints[j].actuated()) {
            model.actuated_joints.push_back(static_cast<int>(j));
            model.dof++;
        }
    }
    model.validate();
    return result;
}

UrdfParseResult parse_urdf_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoFailure, "cannot open URDF file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_urdf(buf.str());
}

namespace {

void emit_number(std::ostringstream& out, double v) {
    std::ostringstream tmp;
    tmp.precision(17);
    tmp << v;
    out << tmp.str();
}

void emit_vec3(std::ostringstream& out, const Vec3d& v) {
    emit_number(out, v.x());
    out << " ";
    emit_number(out, v.y());
    out << " ";
    emit_number(out, v.z());
}

}  // namespace

std::string serialize_urdf(const RobotModel& robot) {
    std::ostringstream out;
    out << "<robot name=\"" << robot.name << "\">\n";
    for (const Link& link : robot.links) {
        out << "  <link name=\"" << link.name << "\">\n";
        for (const Visual& vis : link.visuals) {
            out << "    <visual>\n      <origin xyz=\"";
            emit_vec3(out, vis.local.t);
            out << "\" rpy=\"";
            emit_vec3(out, rotation_log(vis.local.R));
            out << "\"/>\n      <geometry>";
            const Primitive& p = vis.primitive;
            switch (p.kind) {
                case Primitive::Kind::Box:
                    out << "<box size=\"";
                    emit_vec3(out, 2.0 * p.half_extents);
                    out << "\"/>";
                    break;
                case Primitive::Kind::Cylinder:
                    out << "<cylinder radius=\"";
                    emit_number(out, p.radius);
                    out << "\" length=\"";
                    emit_number(out, p.length);
                    out << "\"/>";
                    break;
                case Primitive::Kind::Sphere:
                    out << "<sphere radius=\"";
                    emit_number(out, p.radius);
                    out << "\"/>";
                    break;
            }
            out << "</geometry>\n      <material name=\"\"><color rgba=\"";
            emit_vec3(out, vis.color);
            out << " 1\"/></material>\n    </visual>\n";
        }
        out << "  </link>\n";
    }
    for (const Joint& joint : robot.joints) {
        out << "  <joint name=\"" << joint.name << "\" type=\"" << joint_kind_name(joint.kind)
            << "\">\n";
        out << "    <parent link=\"" << robot.links[joint.parent_link].name << "\"/>\n";
        out << "    <child link=\"" << robot.links[joint.child_link].name << "\"/>\n";
        out << "    <origin xyz=\"";
        emit_vec3(out, joint.origin.t);
        out << "\" rpy=\"";
        emit_vec3(out, joint.rpy);
        out << "\"/>\n    <axis xyz=\"";
        emit_vec3(out, joint.axis);
        out << "\"/>\n";
        if (joint.has_limits) {
            out << "    <limit lower=\"";
            emit_number(out, joint.lower);
            out << "\" upper=\"";
            emit_number(out, joint.upper);
            out << "\"/>\n";
        }
        out << "  </joint>\n";
    }
    out << "</robot>\n";
    return out.str();
}

namespace {

// Uniform point on a primitive surface in the primitive's own frame.
Vec3d sample_on_primitive(const Primitive& p, Rng& rng) {
    switch (p.kind) {
        case Primitive::Kind::Sphere: {
            const double z = rng.uniform(-1.0, 1.0);
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            return p.radius * Vec3d(r * std::cos(phi), r * std::sin(phi), z);
        }
        case Primitive::Kind::Cylinder: {
            const double side = 2.0 * M_PI * p.radius * p.length;
            const double cap = M_PI * p.radius * p.radius;
            const double u = rng.uniform() * (side + 2.0 * cap);
            if (u < side) {
                const double phi = rng.uniform(0.0, 2.0 * M_PI);
                const double z = rng.uniform(-0.5, 0.5) * p.length;
                return Vec3d(p.radius * std::cos(phi), p.radius * std::sin(phi), z);
            }
            const double sign = (u < side + cap) ? 1.0 : -1.0;
            const double rr = p.radius * std::sqrt(rng.uniform());
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            return Vec3d(rr * std::cos(phi), rr * std::sin(phi), sign * 0.5 * p.length);
        }
        case Primitive::Kind::Box: {
            const Vec3d h = p.half_extents;
            const double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
            const double total = 2.0 * (ax + ay + az);
            double u = rng.uniform() * total;
            int face;  // 0:+x 1:-x 2:+y 3:-y 4:+z 5:-z
            if (u < ax) face = 0;
            else if (u < 2 * ax) face = 1;
            else if (u < 2 * ax + ay) face = 2;
            else if (u < 2 * ax + 2 * ay) face = 3;
            else if (u < 2 * ax + 2 * ay + az) face = 4;
            else face = 5;
            const double a = rng.uniform(-1.0, 1.0);
            const double b = rng.uniform(-1.0, 1.0);
            switch (face) {
                case 0: return Vec3d(h.x(), a * h.y(), b * h.z());
                case 1: return Vec3d(-h.x(), a * h.y(), b * h.z());
                case 2: return Vec3d(a * h.x(), h.y(), b * h.z());
                case 3: return Vec3d(a * h.x(), -h.y(), b * h.z());
                case 4: return Vec3d(a * h.x(), b * h.y(), h.z());
                default: return Vec3d(a * h.x(), b * h.y(), -h.z());
            }
        }
    }
    return Vec3d::Zero();
}

}  // namespace

std::vector<SurfacePoint> sample_surface_points(const RobotModel& robot, int64_t n, uint64_t seed) {
    require(n >= 1, ErrorCode::EmptyInput, "need at least one sample point");
    struct Entry {
        int link;
        const Visual* visual;
        double cumulative;
    };
    std::vector<Entry> entries;
    double total = 0.0;
    for (int li = 0; li < robot.num_links(); ++li) {
        for (const Visual& vis : robot.links[li].visuals) {
            total += vis.primitive.surface_area();
            entries.push_back({li, &vis, total});
        }
    }
    require(!entries.empty() && total > 0.0, ErrorCode::NoGeometry, "robot has no visual geometry");

    Rng rng(seed);
    std::vector<SurfacePoint> points;
    points.reserve(n);
    for (int64_t i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        auto it = std::lower_bound(entries.begin(), entries.end(), u,
                                   [](const Entry& e, double val) { return e.cumulative < val; });
        if (it == entries.end()) --it;
        SurfacePoint sp;
        sp.link = it->link;
        sp.color = it->visual->color;
        sp.position = it->visual->local.apply(sample_on_primitive(it->visual->primitive, rng));
        points.push_back(sp);
    }
    return points;
}

}  // namespace rsplat
