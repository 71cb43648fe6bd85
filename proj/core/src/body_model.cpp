#include "motionlab/body_model.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "motionlab/errors.hpp"
#include "motionlab/rng.hpp"
#include "motionlab/rotations.hpp"

namespace motionlab {

namespace {

constexpr double kRowSumTol = 1e-9;

Tensor matrix_tensor(const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.rows() * m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return Tensor::leaf({static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                        std::move(data));
}

}  // namespace

void BodyTemplate::validate() const {
    if (joints < 2) throw ContractError("template: need at least 2 joints");
    if (vertices < 1) throw ContractError("template: need at least 1 vertex");
    if (static_cast<int>(parent.size()) != joints)
        throw ContractError("template: parent list size mismatch");
    int roots = 0;
    for (int j = 0; j < joints; ++j) {
        if (parent[j] < 0) {
            ++roots;
            if (j != 0) throw ContractError("template: root must be joint 0");
        } else if (parent[j] >= j) {
            throw ContractError("template: parent index must precede child (joint " +
                                std::to_string(j) + ")");
        }
    }
    if (roots != 1) throw ContractError("template: kinematic tree must have exactly one root");
    if (rest_vertices.rows() != vertices || rest_joints.rows() != joints)
        throw ContractError("template: rest geometry size mismatch");
    if (skin_weights.rows() != vertices || skin_weights.cols() != joints)
        throw ContractError("template: skin weight shape mismatch");
    if (shape_basis.rows() != 3 * vertices || shape_basis.cols() != kShapeCoeffs)
        throw ContractError("template: shape basis shape mismatch");
    if (joint_regressor.rows() != joints || joint_regressor.cols() != vertices)
        throw ContractError("template: joint regressor shape mismatch");
    for (int v = 0; v < vertices; ++v) {
        double s = 0.0;
        for (int j = 0; j < joints; ++j) {
            if (skin_weights(v, j) < 0.0)
                throw ContractError("template: negative skin weight");
            s += skin_weights(v, j);
        }
        if (std::abs(s - 1.0) > kRowSumTol)
            throw ContractError("template: skin weight row " + std::to_string(v) +
                                " sums to " + std::to_string(s));
    }
    for (int j = 0; j < joints; ++j) {
        double s = 0.0;
        for (int v = 0; v < vertices; ++v) {
            if (joint_regressor(j, v) < 0.0)
                throw ContractError("template: negative regressor weight");
            s += joint_regressor(j, v);
        }
        if (std::abs(s - 1.0) > kRowSumTol)
            throw ContractError("template: regressor row " + std::to_string(j) +
                                " sums to " + std::to_string(s));
    }
    const Eigen::MatrixX3d regressed = joint_regressor * rest_vertices;
    if ((regressed - rest_joints).cwiseAbs().maxCoeff() > 1e-9)
        throw ContractError("template: rest joints disagree with regressed joints");
}

const Tensor& BodyTemplate::rest_vertices_t() const {
    if (!rest_vertices_cache_.defined()) rest_vertices_cache_ = matrix_tensor(rest_vertices);
    return rest_vertices_cache_;
}

const Tensor& BodyTemplate::rest_joints_t() const {
    if (!rest_joints_cache_.defined()) rest_joints_cache_ = matrix_tensor(rest_joints);
    return rest_joints_cache_;
}

const Tensor& BodyTemplate::shape_basis_t() const {
    if (!shape_basis_cache_.defined()) shape_basis_cache_ = matrix_tensor(shape_basis);
    return shape_basis_cache_;
}

const Tensor& BodyTemplate::joint_regressor_t() const {
    if (!joint_regressor_cache_.defined())
        joint_regressor_cache_ = matrix_tensor(joint_regressor);
    return joint_regressor_cache_;
}

const Tensor& BodyTemplate::skin_col_t(int joint) const {
    if (skin_cols_cache_.empty()) {
        skin_cols_cache_.reserve(static_cast<std::size_t>(joints));
        for (int j = 0; j < joints; ++j) {
            std::vector<double> col(static_cast<std::size_t>(vertices));
            for (int v = 0; v < vertices; ++v) col[v] = skin_weights(v, j);
            skin_cols_cache_.push_back(Tensor::leaf({vertices}, std::move(col)));
        }
    }
    return skin_cols_cache_.at(static_cast<std::size_t>(joint));
}

BodyParams BodyParams::rest(int joints) {
    BodyParams p;
    p.theta.assign(static_cast<std::size_t>(joints) * 3, 0.0);
    p.beta.assign(kShapeCoeffs, 0.0);
    p.cam = {1.0, 0.0, 0.0};
    p.has_cam = false;
    return p;
}

bool BodyParams::finite() const {
    for (double v : theta)
        if (!std::isfinite(v)) return false;
    for (double v : beta)
        if (!std::isfinite(v)) return false;
    for (double v : cam)
        if (!std::isfinite(v)) return false;
    return true;
}

// ---- procedural template ----

namespace {

// humanoid scaffold, ~1.7 units tall, y up
const int kHumanParent[24] = {-1, 0, 0,  0,  1,  2,  3,  4,  5,  6,  7,  8,
                              9,  9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

const double kHumanPos[24][3] = {
    {0.00, 0.95, 0.00},   // pelvis
    {0.09, 0.91, 0.00},   // l hip
    {-0.09, 0.91, 0.00},  // r hip
    {0.00, 1.05, 0.00},   // spine1
    {0.10, 0.50, 0.00},   // l knee
    {-0.10, 0.50, 0.00},  // r knee
    {0.00, 1.15, 0.00},   // spine2
    {0.11, 0.08, 0.00},   // l ankle
    {-0.11, 0.08, 0.00},  // r ankle
    {0.00, 1.25, 0.00},   // chest
    {0.12, 0.02, 0.12},   // l foot
    {-0.12, 0.02, 0.12},  // r foot
    {0.00, 1.40, 0.00},   // neck
    {0.07, 1.32, 0.00},   // l collar
    {-0.07, 1.32, 0.00},  // r collar
    {0.00, 1.55, 0.00},   // head
    {0.18, 1.35, 0.00},   // l shoulder
    {-0.18, 1.35, 0.00},  // r shoulder
    {0.45, 1.35, 0.00},   // l elbow
    {-0.45, 1.35, 0.00},  // r elbow
    {0.70, 1.35, 0.00},   // l wrist
    {-0.70, 1.35, 0.00},  // r wrist
    {0.80, 1.35, 0.00},   // l hand
    {-0.80, 1.35, 0.00},  // r hand
};

void orthonormal_frame(const Eigen::Vector3d& dir, Eigen::Vector3d& n1,
                       Eigen::Vector3d& n2) {
    const Eigen::Vector3d pick =
        std::abs(dir.y()) < 0.9 ? Eigen::Vector3d(0, 1, 0) : Eigen::Vector3d(1, 0, 0);
    n1 = dir.cross(pick).normalized();
    n2 = dir.cross(n1).normalized();
}

}  // namespace

BodyTemplate make_toy_template(int joints, int vertices, std::uint64_t seed) {
    if (joints < 2) throw ContractError("make_toy_template: need at least 2 joints");
    if (vertices < joints)
        throw ContractError("make_toy_template: need at least as many vertices as joints");

    BodyTemplate tmpl;
    tmpl.joints = joints;
    tmpl.vertices = vertices;
    tmpl.parent.resize(static_cast<std::size_t>(joints));

    Eigen::MatrixX3d scaffold(joints, 3);
    if (joints == 24) {
        for (int j = 0; j < 24; ++j) {
            tmpl.parent[j] = kHumanParent[j];
            scaffold.row(j) = Eigen::RowVector3d(kHumanPos[j][0], kHumanPos[j][1],
                                                 kHumanPos[j][2]);
        }
    } else {
        Rng rng(seed_for(seed, "template-tree"));
        tmpl.parent[0] = -1;
        scaffold.row(0) = Eigen::RowVector3d(0.0, 1.0, 0.0);
        for (int j = 1; j < joints; ++j) {
            tmpl.parent[j] = (j - 1) / 2;
            int depth = 0;
            for (int a = j; tmpl.parent[a] >= 0; a = tmpl.parent[a]) ++depth;
            Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
            if (dir.norm() < 1e-6) dir = Eigen::Vector3d(0, 1, 0);
            dir.normalize();
            const double len = 0.30 * std::pow(0.85, depth - 1);
            scaffold.row(j) = scaffold.row(tmpl.parent[j]) + (len * dir).transpose();
        }
    }

    // vertices ring the bones; every non-root joint defines one bone
    Rng rng(seed_for(seed, "template-verts"));
    const int bones = joints - 1;
    tmpl.rest_vertices.resize(vertices, 3);
    tmpl.skin_weights = Eigen::MatrixXd::Zero(vertices, joints);
    for (int v = 0; v < vertices; ++v) {
        const int child = (v % bones) + 1;
        const int par = tmpl.parent[child];
        const Eigen::Vector3d a = scaffold.row(par);
        const Eigen::Vector3d b = scaffold.row(child);
        Eigen::Vector3d axis = b - a;
        double len = axis.norm();
        if (len < 1e-9) {
            axis = Eigen::Vector3d(0, 1, 0);
            len = 1e-9;
        } else {
            axis /= len;
        }
        Eigen::Vector3d n1, n2;
        orthonormal_frame(axis, n1, n2);
        const double t = rng.uniform(0.2, 0.8);
        const double radius = rng.uniform(0.03, 0.07);
        const double phi = rng.uniform(0.0, 6.283185307179586);
        const Eigen::Vector3d pos =
            a + t * (b - a) + radius * (std::cos(phi) * n1 + std::sin(phi) * n2);
        tmpl.rest_vertices.row(v) = pos.transpose();

        const double dp = (pos - a).norm();
        const double dc = (pos - b).norm();
        const double wp = std::exp(-dp / 0.15);
        const double wc = std::exp(-dc / 0.15);
        tmpl.skin_weights(v, par) = wp / (wp + wc);
        tmpl.skin_weights(v, child) = wc / (wp + wc);
    }

    // gaussian joint regressor over vertex distances to the scaffold joints
    tmpl.joint_regressor.resize(joints, vertices);
    const double sigma2 = 2.0 * 0.12 * 0.12;
    for (int j = 0; j < joints; ++j) {
        double total = 0.0;
        for (int v = 0; v < vertices; ++v) {
            const double d2 =
                (tmpl.rest_vertices.row(v) - scaffold.row(j)).squaredNorm();
            tmpl.joint_regressor(j, v) = std::exp(-d2 / sigma2);
            total += tmpl.joint_regressor(j, v);
        }
        tmpl.joint_regressor.row(j) /= total;
    }
    tmpl.rest_joints = tmpl.joint_regressor * tmpl.rest_vertices;

    // shape directions: scale, stretch, widen, then smooth seeded fields
    tmpl.shape_basis = Eigen::MatrixXd::Zero(3 * vertices, kShapeCoeffs);
    const Eigen::RowVector3d centroid = tmpl.rest_vertices.colwise().mean();
    Rng srng(seed_for(seed, "template-shape"));
    for (int v = 0; v < vertices; ++v) {
        const Eigen::RowVector3d d = tmpl.rest_vertices.row(v) - centroid;
        tmpl.shape_basis(3 * v + 0, 0) = 0.10 * d.x();
        tmpl.shape_basis(3 * v + 1, 0) = 0.10 * d.y();
        tmpl.shape_basis(3 * v + 2, 0) = 0.10 * d.z();
        tmpl.shape_basis(3 * v + 1, 1) = 0.15 * d.y();
        tmpl.shape_basis(3 * v + 0, 2) = 0.15 * d.x();
        tmpl.shape_basis(3 * v + 2, 2) = 0.15 * d.z();
    }
    for (int col = 3; col < kShapeCoeffs; ++col) {
        const Eigen::Vector3d k(srng.uniform(-3.0, 3.0), srng.uniform(-3.0, 3.0),
                                srng.uniform(-3.0, 3.0));
        const double phase = srng.uniform(0.0, 6.283185307179586);
        Eigen::Vector3d dir(srng.normal(), srng.normal(), srng.normal());
        if (dir.norm() < 1e-6) dir = Eigen::Vector3d(1, 0, 0);
        dir.normalize();
        for (int v = 0; v < vertices; ++v) {
            const double s =
                0.03 * std::sin(k.dot(tmpl.rest_vertices.row(v)) + phase);
            tmpl.shape_basis(3 * v + 0, col) = s * dir.x();
            tmpl.shape_basis(3 * v + 1, col) = s * dir.y();
            tmpl.shape_basis(3 * v + 2, col) = s * dir.z();
        }
    }

    tmpl.validate();
    return tmpl;
}

// ---- serialization ----

namespace {

void write_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
    os << "block " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    char buf[32];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            os << buf << (c + 1 < m.cols() ? " " : "");
        }
        os << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& is, const std::string& name, int& line_no) {
    std::string line;
    if (!std::getline(is, line))
        throw ParseError("template: unexpected end of file before block '" + name +
                         "' (line " + std::to_string(line_no) + ")");
    ++line_no;
    std::istringstream head(line);
    std::string tag, got;
    Eigen::Index rows = 0, cols = 0;
    head >> tag >> got >> rows >> cols;
    if (tag != "block" || got != name || rows <= 0 || cols <= 0)
        throw ParseError("template: malformed block header at line " +
                         std::to_string(line_no) + ", expected '" + name + "'");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(is, line))
            throw ParseError("template: truncated block '" + name + "' at line " +
                             std::to_string(line_no));
        ++line_no;
        std::istringstream row(line);
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(row >> m(r, c)))
                throw ParseError("template: bad number in block '" + name +
                                 "' at line " + std::to_string(line_no));
        }
    }
    return m;
}

}  // namespace

void save_template(const BodyTemplate& tmpl, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("template: cannot open for writing: " + path);
    os << "motionlab-template version 1\n";
    os << "joints " << tmpl.joints << '\n';
    os << "vertices " << tmpl.vertices << '\n';
    os << "block parent 1 " << tmpl.joints << '\n';
    for (int j = 0; j < tmpl.joints; ++j)
        os << tmpl.parent[j] << (j + 1 < tmpl.joints ? " " : "");
    os << '\n';
    write_matrix(os, "rest_vertices", tmpl.rest_vertices);
    write_matrix(os, "rest_joints", tmpl.rest_joints);
    write_matrix(os, "skin_weights", tmpl.skin_weights);
    write_matrix(os, "shape_basis", tmpl.shape_basis);
    write_matrix(os, "joint_regressor", tmpl.joint_regressor);
    os << "end\n";
    if (!os) throw IoError("template: write failed: " + path);
}

BodyTemplate load_template(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("template: cannot open for reading: " + path);
    int line_no = 0;
    std::string line;

    auto next = [&]() {
        if (!std::getline(is, line))
            throw ParseError("template: unexpected end of file at line " +
                             std::to_string(line_no));
        ++line_no;
    };

    next();
    if (line != "motionlab-template version 1")
        throw ParseError("template: bad magic or version at line 1");

    BodyTemplate tmpl;
    next();
    if (std::sscanf(line.c_str(), "joints %d", &tmpl.joints) != 1)
        throw ParseError("template: expected joint count at line 2");
    next();
    if (std::sscanf(line.c_str(), "vertices %d", &tmpl.vertices) != 1)
        throw ParseError("template: expected vertex count at line 3");

    next();
    {
        std::istringstream head(line);
        std::string tag, name;
        int rows = 0, cols = 0;
        head >> tag >> name >> rows >> cols;
        if (tag != "block" || name != "parent" || rows != 1 || cols != tmpl.joints)
            throw ParseError("template: malformed parent header at line " +
                             std::to_string(line_no));
    }
    next();
    {
        std::istringstream row(line);
        tmpl.parent.resize(static_cast<std::size_t>(tmpl.joints));
        for (int j = 0; j < tmpl.joints; ++j)
            if (!(row >> tmpl.parent[j]))
                throw ParseError("template: bad parent entry at line " +
                                 std::to_string(line_no));
    }

    tmpl.rest_vertices = read_matrix(is, "rest_vertices", line_no);
    tmpl.rest_joints = read_matrix(is, "rest_joints", line_no);
    tmpl.skin_weights = read_matrix(is, "skin_weights", line_no);
    tmpl.shape_basis = read_matrix(is, "shape_basis", line_no);
    tmpl.joint_regressor = read_matrix(is, "joint_regressor", line_no);

    next();
    if (line != "end")
        throw ParseError("template: missing end marker at line " +
                         std::to_string(line_no));
    tmpl.validate();
    return tmpl;
}

// ---- differentiable kinematics ----

Tensor shape_vertices(const Tensor& beta, const BodyTemplate& tmpl) {
    if (beta.rank() != 1 || beta.size() != kShapeCoeffs)
        throw DimensionError("shape_vertices: beta must be length " +
                             std::to_string(kShapeCoeffs));
    const Tensor offsets = reshape(matvec(tmpl.shape_basis_t(), beta),
                                   {tmpl.vertices, 3});
    return add(tmpl.rest_vertices_t(), offsets);
}

Tensor shape_joints(const Tensor& shaped_vertices, const BodyTemplate& tmpl) {
    return matmul(tmpl.joint_regressor_t(), shaped_vertices);
}

PosedBody pose_joints(const Tensor& rotmats, const Tensor& shaped_joints,
                      const BodyTemplate& tmpl) {
    if (rotmats.rank() != 2 || rotmats.rows() != tmpl.joints || rotmats.cols() != 9)
        throw DimensionError("pose_joints: rotations must be (J,9)");
    const int joints = tmpl.joints;

    PosedBody body;
    body.global_rot.reserve(static_cast<std::size_t>(joints));
    body.global_pos.reserve(static_cast<std::size_t>(joints));

    auto local_rot = [&](int j) {
        return reshape(slice(rotmats, 0, j, 1), {3, 3});
    };
    auto rest_pos = [&](int j) {
        return reshape(slice(shaped_joints, 0, j, 1), {3});
    };

    body.global_rot.push_back(local_rot(0));
    body.global_pos.push_back(rest_pos(0));
    for (int j = 1; j < joints; ++j) {
        const int p = tmpl.parent[j];
        body.global_rot.push_back(matmul(body.global_rot[p], local_rot(j)));
        const Tensor bone = sub(rest_pos(j), rest_pos(p));
        body.global_pos.push_back(
            add(matvec(body.global_rot[p], bone), body.global_pos[p]));
    }

    std::vector<Tensor> rows;
    rows.reserve(static_cast<std::size_t>(joints));
    for (int j = 0; j < joints; ++j)
        rows.push_back(reshape(body.global_pos[j], {1, 3}));
    body.joints = concat(rows, 0);
    return body;
}

Tensor skin_vertices(const PosedBody& posed, const Tensor& shaped_vertices,
                     const Tensor& shaped_joints, const BodyTemplate& tmpl) {
    Tensor out;
    for (int j = 0; j < tmpl.joints; ++j) {
        const Tensor rest_j = reshape(slice(shaped_joints, 0, j, 1), {3});
        const Tensor centered =
            add_rowvec(shaped_vertices, mul_scalar(rest_j, -1.0));
        const Tensor rotated = matmul(centered, posed.global_rot[j], false, true);
        const Tensor placed = add_rowvec(rotated, posed.global_pos[j]);
        const Tensor weighted = scale_rows(placed, tmpl.skin_col_t(j));
        out = out.defined() ? add(out, weighted) : weighted;
    }
    return out;
}

FkResult forward_kinematics(const Tensor& rotmats, const Tensor& beta,
                            const BodyTemplate& tmpl, bool want_vertices) {
    const Tensor shaped_v = shape_vertices(beta, tmpl);
    const Tensor shaped_j = shape_joints(shaped_v, tmpl);
    const PosedBody posed = pose_joints(rotmats, shaped_j, tmpl);
    FkResult result;
    result.joints = posed.joints;
    if (want_vertices)
        result.vertices = skin_vertices(posed, shaped_v, shaped_j, tmpl);
    return result;
}

FkResult forward_kinematics(const BodyParams& params, const BodyTemplate& tmpl,
                            bool want_vertices) {
    if (static_cast<int>(params.theta.size()) != tmpl.pose_dim())
        throw DimensionError("forward_kinematics: pose size " +
                             std::to_string(params.theta.size()) + " vs template " +
                             std::to_string(tmpl.pose_dim()));
    const Tensor omegas = Tensor::leaf({tmpl.joints, 3}, params.theta);
    const Tensor beta = Tensor::leaf({kShapeCoeffs},
                                     std::vector<double>(params.beta.begin(),
                                                         params.beta.end()));
    return forward_kinematics(axis_angle_to_rotmat_batch(omegas), beta, tmpl,
                              want_vertices);
}

Tensor regress_joints(const Tensor& vertices, const BodyTemplate& tmpl) {
    if (vertices.rank() != 2 || vertices.rows() != tmpl.vertices || vertices.cols() != 3)
        throw DimensionError("regress_joints: vertices must be (V,3)");
    return matmul(tmpl.joint_regressor_t(), vertices);
}

Tensor project_weak_perspective(const Tensor& points, const Tensor& cam,
                                const Tensor* rot_global) {
    if (points.rank() != 2 || points.cols() != 3)
        throw DimensionError("project_weak_perspective: points must be (n,3)");
    if (cam.rank() != 1 || cam.size() != kCamParams)
        throw DimensionError("project_weak_perspective: cam must be (s, tx, ty)");
    Tensor rotated = points;
    if (rot_global != nullptr)
        rotated = matmul(points, *rot_global, false, true);
    const Tensor xy = slice(rotated, 1, 0, 2);
    const Tensor s = slice(cam, 0, 0, 1);
    const Tensor t = slice(cam, 0, 1, 2);
    return add_rowvec(smul(s, xy), t);
}

// ---- plain evaluation ----

FkValues evaluate_body(const BodyParams& params, const BodyTemplate& tmpl,
                       bool want_vertices) {
    if (static_cast<int>(params.theta.size()) != tmpl.pose_dim())
        throw DimensionError("evaluate_body: pose size mismatch");
    const int joints = tmpl.joints;

    Eigen::MatrixX3d shaped_v = tmpl.rest_vertices;
    for (int c = 0; c < kShapeCoeffs; ++c) {
        if (params.beta[c] == 0.0) continue;
        for (int v = 0; v < tmpl.vertices; ++v)
            shaped_v.row(v) += params.beta[c] *
                               Eigen::RowVector3d(tmpl.shape_basis(3 * v, c),
                                                  tmpl.shape_basis(3 * v + 1, c),
                                                  tmpl.shape_basis(3 * v + 2, c));
    }
    const Eigen::MatrixX3d shaped_j = tmpl.joint_regressor * shaped_v;

    std::vector<Eigen::Matrix3d> rot_g(static_cast<std::size_t>(joints));
    std::vector<Eigen::Vector3d> pos_g(static_cast<std::size_t>(joints));
    for (int j = 0; j < joints; ++j) {
        const Eigen::Vector3d omega(params.theta[3 * j], params.theta[3 * j + 1],
                                    params.theta[3 * j + 2]);
        const Eigen::Matrix3d local = axis_angle_to_rotmat(omega);
        if (j == 0) {
            rot_g[0] = local;
            pos_g[0] = shaped_j.row(0);
        } else {
            const int p = tmpl.parent[j];
            rot_g[j] = rot_g[p] * local;
            pos_g[j] = rot_g[p] * (shaped_j.row(j) - shaped_j.row(p)).transpose() +
                       pos_g[p];
        }
    }

    FkValues out;
    out.joints.resize(joints, 3);
    for (int j = 0; j < joints; ++j) out.joints.row(j) = pos_g[j].transpose();

    if (want_vertices) {
        out.vertices = Eigen::MatrixX3d::Zero(tmpl.vertices, 3);
        for (int j = 0; j < joints; ++j) {
            const Eigen::Vector3d rest_j = shaped_j.row(j);
            for (int v = 0; v < tmpl.vertices; ++v) {
                const double w = tmpl.skin_weights(v, j);
                if (w == 0.0) continue;
                const Eigen::Vector3d posed =
                    rot_g[j] * (shaped_v.row(v).transpose() - rest_j) + pos_g[j];
                out.vertices.row(v) += w * posed.transpose();
            }
        }
    }
    return out;
}

}  // namespace motionlab
