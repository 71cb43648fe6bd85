#include "motionlab/rotations.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <map>
#include <memory>

#include "motionlab/errors.hpp"

namespace motionlab {

namespace {

constexpr double kDegenerate = 1e-8;

using IndexVec = std::shared_ptr<const std::vector<int>>;

// Per-row index patterns repeated for a batch of n rows; cached since the
// same shapes recur every frame.
IndexVec tiled_pattern(const char* name, int n, int row_in, int row_out,
                       const int* pattern) {
    thread_local std::map<std::pair<const char*, int>, IndexVec> cache;
    auto key = std::make_pair(name, n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto idx = std::make_shared<std::vector<int>>();
    idx->reserve(static_cast<std::size_t>(n) * row_out);
    for (int r = 0; r < n; ++r)
        for (int k = 0; k < row_out; ++k) idx->push_back(r * row_in + pattern[k]);
    cache[key] = idx;
    return idx;
}

Tensor tiled_const(const char* name, int n, int row, const double* pattern) {
    thread_local std::map<std::pair<const char*, int>, std::shared_ptr<Node>> cache;
    auto key = std::make_pair(name, n);
    auto it = cache.find(key);
    if (it != cache.end()) return Tensor(it->second);
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(n) * row);
    for (int r = 0; r < n; ++r)
        for (int k = 0; k < row; ++k) data.push_back(pattern[k]);
    Tensor t = Tensor::leaf({n, row}, std::move(data));
    cache[key] = t.node();
    return t;
}

Tensor identity_rows(int n) {
    static const double eye[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return tiled_const("eye9", n, 9, eye);
}

}  // namespace

Tensor axis_angle_to_rotmat_batch(const Tensor& omegas) {
    if (omegas.rank() != 2 || omegas.cols() != 3)
        throw DimensionError("axis_angle_to_rotmat: expected (n,3) input");
    const int n = omegas.rows();

    const Tensor s = rowdot(omegas, omegas);  // squared angles
    const Tensor a = rodrigues_a(s);
    const Tensor b = rodrigues_b(s);

    // cross-product matrix K per row, as a gather + sign mask
    static const int comp[9] = {0, 2, 1, 2, 0, 0, 1, 0, 0};
    static const double sign[9] = {0, -1, 1, 1, 0, -1, -1, 1, 0};
    const Tensor k = mul(gather(omegas, tiled_pattern("skew", n, 3, 9, comp), {n, 9}),
                         tiled_const("skewsign", n, 9, sign));

    // K^2 = w w^T - s I, assembled from outer products
    static const int rowidx[9] = {0, 0, 0, 1, 1, 1, 2, 2, 2};
    static const int colidx[9] = {0, 1, 2, 0, 1, 2, 0, 1, 2};
    static const double diag[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    const Tensor outer =
        mul(gather(omegas, tiled_pattern("outer_r", n, 3, 9, rowidx), {n, 9}),
            gather(omegas, tiled_pattern("outer_c", n, 3, 9, colidx), {n, 9}));
    const Tensor k2 = sub(outer, scale_rows(tiled_const("diag9", n, 9, diag), s));

    // R = I + A K + B K^2
    return add(identity_rows(n), add(scale_rows(k, a), scale_rows(k2, b)));
}

Tensor axis_angle_to_rotmat(const Tensor& omega) {
    if (omega.rank() != 1 || omega.size() != 3)
        throw DimensionError("axis_angle_to_rotmat: expected length-3 input");
    return reshape(axis_angle_to_rotmat_batch(reshape(omega, {1, 3})), {3, 3});
}

Tensor rot6d_to_rotmat_batch(const Tensor& r) {
    if (r.rank() != 2 || r.cols() != 6)
        throw DimensionError("rot6d_to_rotmat: expected (n,6) input");
    const int n = r.rows();

    const Tensor a = slice(r, 1, 0, 3);
    const Tensor b = slice(r, 1, 3, 3);

    const Tensor na = rownorm(a);
    for (int i = 0; i < n; ++i)
        if (na.at(i) < kDegenerate)
            throw NumericError("rot6d_to_rotmat: first column near zero (row " +
                               std::to_string(i) + ")");
    const Tensor b1 = scale_rows(a, recip(na));

    const Tensor u2 = sub(b, scale_rows(b1, rowdot(b1, b)));
    const Tensor n2 = rownorm(u2);
    for (int i = 0; i < n; ++i)
        if (n2.at(i) < kDegenerate)
            throw NumericError("rot6d_to_rotmat: columns near parallel (row " +
                               std::to_string(i) + ")");
    const Tensor b2 = scale_rows(u2, recip(n2));

    const Tensor b3 = rowcross(b1, b2);

    // (b1 | b2 | b3) as columns: interleave the three row blocks
    static const int perm[9] = {0, 3, 6, 1, 4, 7, 2, 5, 8};
    return gather(concat({b1, b2, b3}, 1), tiled_pattern("colperm", n, 9, 9, perm),
                  {n, 9});
}

Tensor rot6d_to_rotmat(const Tensor& r) {
    if (r.rank() != 1 || r.size() != 6)
        throw DimensionError("rot6d_to_rotmat: expected length-6 input");
    return reshape(rot6d_to_rotmat_batch(reshape(r, {1, 6})), {3, 3});
}

Tensor rotmat_to_rot6d(const Tensor& rotmat) {
    if (rotmat.rank() != 2 || rotmat.rows() != 3 || rotmat.cols() != 3)
        throw DimensionError("rotmat_to_rot6d: expected (3,3) input");
    static const int cols01[6] = {0, 3, 6, 1, 4, 7};
    auto idx = std::make_shared<std::vector<int>>(cols01, cols01 + 6);
    return gather(reshape(rotmat, {9}), idx, {6});
}

Tensor rotmat_to_axis_angle_batch(const Tensor& rotmats) {
    if (rotmats.rank() != 2 || rotmats.cols() != 9)
        throw DimensionError("rotmat_to_axis_angle: expected (n,9) input");
    const int n = rotmats.rows();

    // u = vee(R - R^T)/2, |u| = sin(theta)
    static const int lower[3] = {7, 2, 3};
    static const int upper[3] = {5, 6, 1};
    const Tensor u = mul_scalar(
        sub(gather(rotmats, tiled_pattern("vee_l", n, 9, 3, lower), {n, 3}),
            gather(rotmats, tiled_pattern("vee_u", n, 9, 3, upper), {n, 3})),
        0.5);

    // cos(theta) = (trace - 1)/2
    static const int diag[3] = {0, 4, 8};
    static const double ones3[3] = {1, 1, 1};
    const Tensor trace =
        rowdot(gather(rotmats, tiled_pattern("diag3", n, 9, 3, diag), {n, 3}),
               tiled_const("ones3", n, 3, ones3));
    const Tensor c = add_scalar(mul_scalar(trace, 0.5), -0.5);

    // omega = u * theta/sin(theta)
    return scale_rows(u, logmap_factor(c));
}

Tensor rotmat_to_axis_angle(const Tensor& rotmat) {
    if (rotmat.rank() != 2 || rotmat.rows() != 3 || rotmat.cols() != 3)
        throw DimensionError("rotmat_to_axis_angle: expected (3,3) input");
    return reshape(rotmat_to_axis_angle_batch(reshape(rotmat, {1, 9})), {3});
}

// ---- plain-double versions ----

Eigen::Matrix3d axis_angle_to_rotmat(const Eigen::Vector3d& omega) {
    const double s = omega.squaredNorm();
    const double a = detail::rodrigues_a_fn(s);
    const double b = detail::rodrigues_b_fn(s);
    Eigen::Matrix3d k;
    k << 0, -omega.z(), omega.y(), omega.z(), 0, -omega.x(), -omega.y(), omega.x(), 0;
    return Eigen::Matrix3d::Identity() + a * k + b * (k * k);
}

Eigen::Vector3d rotmat_to_axis_angle(const Eigen::Matrix3d& r) {
    Eigen::Vector3d u(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    u *= 0.5;
    const double c = 0.5 * (r.trace() - 1.0);
    return u * detail::logmap_factor_fn(c);
}

Eigen::Matrix3d rot6d_to_rotmat(const Eigen::Matrix<double, 6, 1>& r) {
    const Eigen::Vector3d a = r.head<3>();
    const double na = a.norm();
    if (na < kDegenerate)
        throw NumericError("rot6d_to_rotmat: first column near zero");
    const Eigen::Vector3d b1 = a / na;
    const Eigen::Vector3d b = r.tail<3>();
    const Eigen::Vector3d u2 = b - b1.dot(b) * b1;
    const double n2 = u2.norm();
    if (n2 < kDegenerate)
        throw NumericError("rot6d_to_rotmat: columns near parallel");
    const Eigen::Vector3d b2 = u2 / n2;
    Eigen::Matrix3d out;
    out.col(0) = b1;
    out.col(1) = b2;
    out.col(2) = b1.cross(b2);
    return out;
}

Eigen::Matrix<double, 6, 1> rotmat_to_rot6d(const Eigen::Matrix3d& rotmat) {
    Eigen::Matrix<double, 6, 1> out;
    out.head<3>() = rotmat.col(0);
    out.tail<3>() = rotmat.col(1);
    return out;
}

}  // namespace motionlab
