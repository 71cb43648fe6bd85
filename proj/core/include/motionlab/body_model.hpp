#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab {

constexpr int kShapeCoeffs = 10;
constexpr int kCamParams = 3;  // weak perspective: scale, tx, ty

// Toy parametric body. Rest joints are defined as the joint regressor
// applied to the rest vertices, so shaped joints and shaped vertices stay
// consistent under the shape basis.
struct BodyTemplate {
    int joints = 0;
    int vertices = 0;
    std::vector<int> parent;           // parent[0] == -1, parent[j] < j
    Eigen::MatrixX3d rest_vertices;    // V x 3
    Eigen::MatrixX3d rest_joints;      // J x 3, == joint_regressor * rest_vertices
    Eigen::MatrixXd skin_weights;      // V x J, rows sum to 1, entries >= 0
    Eigen::MatrixXd shape_basis;       // 3V x 10, row-major vertex blocks
    Eigen::MatrixXd joint_regressor;   // J x V, rows sum to 1, entries >= 0

    int pose_dim() const { return joints * 3; }
    // pose + shape + camera, 85 at the default 24 joints
    int param_dim() const { return pose_dim() + kShapeCoeffs + kCamParams; }

    void validate() const;  // throws ContractError on invariant violation

    // cached tensor constants, built on first use
    const Tensor& rest_vertices_t() const;
    const Tensor& rest_joints_t() const;
    const Tensor& shape_basis_t() const;
    const Tensor& joint_regressor_t() const;
    const Tensor& skin_col_t(int joint) const;

  private:
    mutable Tensor rest_vertices_cache_;
    mutable Tensor rest_joints_cache_;
    mutable Tensor shape_basis_cache_;
    mutable Tensor joint_regressor_cache_;
    mutable std::vector<Tensor> skin_cols_cache_;
};

// Per-frame regression target: axis-angle pose (root rotation first), shape
// coefficients and weak-perspective camera.
struct BodyParams {
    std::vector<double> theta;        // 3J
    std::vector<double> beta;         // 10
    std::array<double, 3> cam{1, 0, 0};
    bool has_cam = false;

    static BodyParams rest(int joints);
    bool finite() const;
};

// Procedurally generated stick-figure hull: vertices sampled around each
// bone, two-joint skin weights, gaussian joint regressor, smooth shape
// directions. Deterministic in the seed. joints=24 uses a humanoid tree;
// other counts use a binary tree (used by tiny test configurations).
BodyTemplate make_toy_template(int joints = 24, int vertices = 64,
                               std::uint64_t seed = 2024);

void save_template(const BodyTemplate& tmpl, const std::string& path);
BodyTemplate load_template(const std::string& path);

// ---- differentiable kinematics ----

// shaped rest vertices: rest + reshape(shape_basis * beta)
Tensor shape_vertices(const Tensor& beta, const BodyTemplate& tmpl);  // (V,3)
// shaped rest joints: joint_regressor * shaped vertices
Tensor shape_joints(const Tensor& shaped_vertices, const BodyTemplate& tmpl);  // (J,3)

struct PosedBody {
    Tensor joints;                    // (J,3)
    std::vector<Tensor> global_rot;   // per joint (3,3)
    std::vector<Tensor> global_pos;   // per joint (3)
};

// Chains per-joint rotations root to leaf around the shaped rest joints.
PosedBody pose_joints(const Tensor& rotmats /*(J,9)*/, const Tensor& shaped_joints,
                      const BodyTemplate& tmpl);

// Linear blend skinning over the posed joint transforms.
Tensor skin_vertices(const PosedBody& posed, const Tensor& shaped_vertices,
                     const Tensor& shaped_joints, const BodyTemplate& tmpl);  // (V,3)

struct FkResult {
    Tensor joints;    // (J,3)
    Tensor vertices;  // (V,3); undefined unless requested
};

// Full differentiable pipeline from stacked per-joint rotation matrices.
FkResult forward_kinematics(const Tensor& rotmats /*(J,9)*/, const Tensor& beta /*(10)*/,
                            const BodyTemplate& tmpl, bool want_vertices = false);

// Convenience entry from axis-angle parameters.
FkResult forward_kinematics(const BodyParams& params, const BodyTemplate& tmpl,
                            bool want_vertices = false);

// Joint regression from arbitrary vertices: X = W * V.
Tensor regress_joints(const Tensor& vertices, const BodyTemplate& tmpl);  // (J,3)

// Weak-perspective projection: drop z after the global rotation, scale, then
// translate. cam is (s, tx, ty). The root rotation inside theta is
// authoritative; rot_global defaults to the identity so the root orientation
// is not applied twice.
Tensor project_weak_perspective(const Tensor& points /*(n,3)*/, const Tensor& cam /*(3)*/,
                                const Tensor* rot_global = nullptr);  // (n,2)

// plain-double evaluation for simulation and metrics (no graph)
struct FkValues {
    Eigen::MatrixX3d joints;
    Eigen::MatrixX3d vertices;  // empty unless requested
};
FkValues evaluate_body(const BodyParams& params, const BodyTemplate& tmpl,
                       bool want_vertices = false);

}  // namespace motionlab
