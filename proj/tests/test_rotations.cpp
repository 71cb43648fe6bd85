#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "motionlab/errors.hpp"
#include "motionlab/gradcheck.hpp"
#include "motionlab/rng.hpp"
#include "motionlab/rotations.hpp"

using namespace motionlab;

namespace {

// Independent oracle: axis-angle -> unit quaternion -> rotation matrix.
Eigen::Matrix3d quaternion_rotmat(const Eigen::Vector3d& omega) {
    const double angle = omega.norm();
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
    if (angle > 0.0) {
        const Eigen::Vector3d axis = omega / angle;
        w = std::cos(angle / 2.0);
        const double s = std::sin(angle / 2.0);
        x = s * axis.x();
        y = s * axis.y();
        z = s * axis.z();
    }
    Eigen::Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Eigen::Vector3d random_axis_angle(Rng& rng, double max_angle) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    v.normalize();
    return v * rng.uniform(0.0, max_angle);
}

Eigen::Matrix3d tensor_to_mat3(const Tensor& t) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = t.at(i, j);
    return m;
}

}  // namespace

TEST_CASE("zero axis-angle gives the identity") {
    Tensor r = axis_angle_to_rotmat(Tensor::leaf({3}, {0, 0, 0}));
    CHECK(tensor_to_mat3(r).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST_CASE("quarter turn about z maps x to y") {
    const double half_pi = std::acos(0.0);
    Tensor r = axis_angle_to_rotmat(Tensor::leaf({3}, {0, 0, half_pi}));
    Eigen::Vector3d mapped = tensor_to_mat3(r) * Eigen::Vector3d(1, 0, 0);
    CHECK(mapped.isApprox(Eigen::Vector3d(0, 1, 0), 1e-14));
}

TEST_CASE("rodrigues matches the quaternion oracle") {
    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
        const Eigen::Vector3d omega = random_axis_angle(rng, 3.0);
        const Eigen::Matrix3d expect = quaternion_rotmat(omega);
        Tensor r = axis_angle_to_rotmat(
            Tensor::leaf({3}, {omega.x(), omega.y(), omega.z()}));
        CHECK((tensor_to_mat3(r) - expect).cwiseAbs().maxCoeff() <= 1e-12);
        // plain version agrees too
        CHECK((axis_angle_to_rotmat(omega) - expect).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("rotation constructors emit orthonormal det +1 matrices") {
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d omega = random_axis_angle(rng, 3.1);
        const Eigen::Matrix3d r1 = axis_angle_to_rotmat(omega);
        CHECK((r1.transpose() * r1 - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(r1.determinant() == doctest::Approx(1.0).epsilon(1e-9));

        Eigen::Matrix<double, 6, 1> six;
        for (int k = 0; k < 6; ++k) six[k] = rng.uniform(-2.0, 2.0);
        if (six.head<3>().norm() < 0.1) continue;
        Eigen::Matrix3d r2;
        try {
            r2 = rot6d_to_rotmat(six);
        } catch (const NumericError&) {
            continue;
        }
        CHECK((r2.transpose() * r2 - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(r2.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("orthonormal 6d input reproduces itself") {
    Tensor r = rot6d_to_rotmat(Tensor::leaf({6}, {1, 0, 0, 0, 1, 0}));
    CHECK(tensor_to_mat3(r).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST_CASE("hand gram-schmidt example: (2,0,0, 1,1,0) -> identity") {
    Tensor r = rot6d_to_rotmat(Tensor::leaf({6}, {2, 0, 0, 1, 1, 0}));
    CHECK(tensor_to_mat3(r).isApprox(Eigen::Matrix3d::Identity(), 1e-14));
}

TEST_CASE("degenerate 6d inputs raise numeric errors") {
    CHECK_THROWS_AS(rot6d_to_rotmat(Tensor::leaf({6}, {0, 0, 0, 0, 1, 0})),
                    NumericError);
    CHECK_THROWS_AS(rot6d_to_rotmat(Tensor::leaf({6}, {1, 0, 0, 2, 0, 0})),
                    NumericError);
}

TEST_CASE("rot6d of identity and round trips") {
    Tensor six = rotmat_to_rot6d(Tensor::leaf({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
    const std::vector<double> expect{1, 0, 0, 0, 1, 0};
    for (int i = 0; i < 6; ++i) CHECK(six.at(i) == expect[i]);

    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Matrix3d r = quaternion_rotmat(random_axis_angle(rng, 3.1));
        const Eigen::Matrix3d back = rot6d_to_rotmat(rotmat_to_rot6d(r));
        CHECK((back - r).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("log map inverts rodrigues below the half-turn") {
    Rng rng(37);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d omega = random_axis_angle(rng, 3.0);
        const Eigen::Vector3d back = rotmat_to_axis_angle(axis_angle_to_rotmat(omega));
        CHECK((back - omega).cwiseAbs().maxCoeff() <= 1e-12);
    }
    // exact at the identity
    CHECK(rotmat_to_axis_angle(Eigen::Matrix3d::Identity()).norm() == 0.0);
}

TEST_CASE("rotation conversions pass grad_check") {
    Rng rng(41);
    // fixed random weighting turns a matrix output into a scalar loss
    auto make_weights = [&](std::vector<int> shape) {
        int n = 1;
        for (int d : shape) n *= d;
        std::vector<double> w(static_cast<std::size_t>(n));
        for (auto& v : w) v = rng.uniform(-1.0, 1.0);
        return Tensor::leaf(std::move(shape), std::move(w));
    };

    SUBCASE("axis-angle to rotmat") {
        for (int i = 0; i < 5; ++i) {
            const Eigen::Vector3d omega = random_axis_angle(rng, 2.5);
            Tensor point = Tensor::leaf({3}, {omega.x(), omega.y(), omega.z()});
            Tensor w = make_weights({3, 3});
            auto f = [&](const std::vector<Tensor>& in) {
                return sum(mul(axis_angle_to_rotmat(in[0]), w));
            };
            CHECK(grad_check_error(f, {point}, 1e-5) <= 1e-4);
        }
    }
    SUBCASE("6d to rotmat") {
        for (int i = 0; i < 5; ++i) {
            std::vector<double> six(6);
            for (auto& v : six) v = rng.uniform(-1.5, 1.5);
            if (std::abs(six[0]) < 0.3) six[0] = 0.7;
            Tensor point = Tensor::leaf({6}, six);
            Tensor w = make_weights({3, 3});
            auto f = [&](const std::vector<Tensor>& in) {
                return sum(mul(rot6d_to_rotmat(in[0]), w));
            };
            CHECK(grad_check_error(f, {point}, 1e-5) <= 1e-4);
        }
    }
    SUBCASE("6d round trip through the log map") {
        for (int i = 0; i < 5; ++i) {
            std::vector<double> six(6);
            for (auto& v : six) v = rng.uniform(-1.5, 1.5);
            if (std::abs(six[0]) < 0.3) six[0] = 0.9;
            Tensor point = Tensor::leaf({6}, six);
            Tensor w = make_weights({3});
            auto f = [&](const std::vector<Tensor>& in) {
                return sum(mul(rotmat_to_axis_angle(rot6d_to_rotmat(in[0])), w));
            };
            CHECK(grad_check_error(f, {point}, 1e-5) <= 1e-4);
        }
    }
    SUBCASE("rot6d extraction round trip") {
        for (int i = 0; i < 5; ++i) {
            const Eigen::Vector3d omega = random_axis_angle(rng, 2.5);
            Tensor point = Tensor::leaf({3}, {omega.x(), omega.y(), omega.z()});
            Tensor w = make_weights({3, 3});
            auto f = [&](const std::vector<Tensor>& in) {
                return sum(mul(rot6d_to_rotmat(
                    rotmat_to_rot6d(axis_angle_to_rotmat(in[0]))), w));
            };
            CHECK(grad_check_error(f, {point}, 1e-5) <= 1e-4);
        }
    }
}

TEST_CASE("batched conversions agree with single-rotation versions") {
    Rng rng(43);
    const int n = 7;
    std::vector<double> omegas;
    for (int i = 0; i < n * 3; ++i) omegas.push_back(rng.uniform(-1.5, 1.5));
    Tensor batch = axis_angle_to_rotmat_batch(Tensor::leaf({n, 3}, omegas));
    for (int j = 0; j < n; ++j) {
        Tensor one = axis_angle_to_rotmat(
            Tensor::leaf({3}, {omegas[j * 3], omegas[j * 3 + 1], omegas[j * 3 + 2]}));
        for (int k = 0; k < 9; ++k)
            CHECK(batch.at(j, k) == doctest::Approx(one.values()[k]).epsilon(1e-15));
    }
}
