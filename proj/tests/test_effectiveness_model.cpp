#include <gtest/gtest.h>

#include <random>

#include "loe/effectiveness_model.hpp"
#include "loe/kalman_estimator.hpp"

using namespace loe;

TEST(EffectivenessModel, SignPattern)
{
    const auto& s = sign_matrix();
    EXPECT_EQ(s.row(0), Eigen::RowVector4d(1, -1, -1, 1));
    EXPECT_EQ(s.row(1), Eigen::RowVector4d(1, 1, -1, -1));
    EXPECT_EQ(s.row(2), Eigen::RowVector4d(-1, -1, -1, -1));
}

TEST(EffectivenessModel, ObservationMatrixScaling)
{
    const EffectivenessGains g{};
    const Eigen::Vector4d w{500.0, 600.0, 700.0, 800.0};
    const Matrix34 H = observation_matrix(g, w);
    EXPECT_NEAR(H(0, 1), -1e-4 * 360000.0, 1e-9);
    EXPECT_NEAR(H(1, 2), -1e-4 * 490000.0, 1e-9);
    EXPECT_NEAR(H(2, 3), -5e-6 * 640000.0, 1e-9);
    EXPECT_EQ(H, observation_matrix_sq(g, w.cwiseProduct(w)));
}

TEST(EffectivenessModel, HoverPredictsGravity)
{
    const EffectivenessGains g{};
    const double w = std::sqrt(9.81 / (4.0 * g.g_az));
    const auto a = predict_accelerations(g, Eigen::Vector4d::Constant(w), Eigen::Vector4d::Ones());
    EXPECT_NEAR(a.x(), 0.0, 1e-12);
    EXPECT_NEAR(a.y(), 0.0, 1e-12);
    EXPECT_NEAR(a.z(), -9.81, 1e-12);
}

TEST(EffectivenessModel, LinearInEffectiveness)
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.5), w(300.0, 1200.0);
    const EffectivenessGains g{};
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector4d speeds{w(rng), w(rng), w(rng), w(rng)};
        const Eigen::Vector4d k1{u(rng), u(rng), u(rng), u(rng)}, k2{u(rng), u(rng), u(rng), u(rng)};
        const Eigen::Vector3d lhs = predict_accelerations(g, speeds, k1 + k2);
        const Eigen::Vector3d rhs = predict_accelerations(g, speeds, k1) + predict_accelerations(g, speeds, k2);
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(EffectivenessModel, LosingRotorThreeSignature)
{
    // k3 -> 0 at hover: positive roll and pitch acceleration, less upward force
    const EffectivenessGains g{};
    const Eigen::Vector4d w = Eigen::Vector4d::Constant(700.0);
    const auto nominal = predict_accelerations(g, w, Eigen::Vector4d::Ones());
    const auto failed = predict_accelerations(g, w, Eigen::Vector4d{1.0, 1.0, 0.0, 1.0});
    EXPECT_GT(failed.x(), nominal.x());
    EXPECT_GT(failed.y(), nominal.y());
    EXPECT_GT(failed.z(), nominal.z());
}

TEST(EffectivenessModel, GainsFromDefaultGeometry)
{
    const auto g = gains_from_geometry(VehicleGeometry{});
    EXPECT_NEAR(g.g_p, 1e-4, 1e-6);
    EXPECT_NEAR(g.g_q, 1e-4, 1e-6);
    EXPECT_NEAR(g.g_az, 5e-6, 5e-8);
}

TEST(EffectivenessModel, Validation)
{
    EXPECT_THROW((EffectivenessGains{.g_p = 0.0, .g_q = 1e-4, .g_az = 5e-6}.validate()), std::invalid_argument);
    VehicleGeometry geom;
    geom.mass = -1.0;
    EXPECT_THROW(geom.validate(), std::invalid_argument);
}
