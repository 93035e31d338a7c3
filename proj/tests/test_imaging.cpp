#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dpd/imaging.hpp"
#include "helpers.hpp"

using namespace dpd;
using dpd::testkit::random_vec;
using dpd::testkit::worst_adjoint_error;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dpd_imaging_" + name);
}

}  // namespace

TEST(GaussianProblem, PerfectFitHasZeroLagrangian) {
  const Kernel2D k = make_motion_kernel(5, 45);
  const ImageGrid x = make_phantom(10, 10);
  const SaddleProblem p = build_gaussian_problem({blur(x, k), k, 3000.0, 0.0});
  EXPECT_NEAR(lagrangian(p, x.data, Vec::Zero(p.dual_dim())), 0.0, 1e-9);
}

TEST(GaussianProblem, ConstantImageIsStationaryWithIdentityKernel) {
  const ImageGrid b{6, 6, Vec::Constant(36, 0.4)};
  const SaddleProblem p = build_gaussian_problem({b, make_average_kernel(1), 3000.0, 0.01});
  EXPECT_NEAR(kkt_residual(p, b.data, Vec::Zero(p.dual_dim())), 0.0, 1e-12);
  EXPECT_TRUE(p.f.prox(b.data, 0.3).isApprox(b.data, 1e-12));
}

TEST(GaussianProblem, LipschitzConstantForNormalizedKernel) {
  const ImageGrid b{16, 16, Vec::Zero(256)};
  const SaddleProblem p = build_gaussian_problem({b, make_average_kernel(3), 3000.0, 0.01});
  EXPECT_NEAR(p.f.lipschitz, 3000.0, 1e-9);
  EXPECT_EQ(p.f.mu, 0.0);
  EXPECT_EQ(p.dual_dim(), 512);
}

TEST(SaltPepperProblem, StackedAdjointAndLayout) {
  const ImageGrid b = make_phantom(8, 8);
  const SaddleProblem p = build_saltpepper_problem({b, make_average_kernel(3), 4.0, 0.03, 10});
  EXPECT_EQ(p.dual_dim(), 3 * 64);
  EXPECT_LT(worst_adjoint_error(p.A, 100, 1), 1e-10);
}

TEST(SaltPepperProblem, ExactFitMakesDataBlockVanish) {
  const Kernel2D k = make_average_kernel(3);
  const ImageGrid x = make_phantom(8, 8);
  const ImageGrid b = blur(x, k);
  const SaddleProblem p = build_saltpepper_problem({b, k, 4.0, 0.0, 0});
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    Vec y = Vec::Zero(p.dual_dim());
    y.tail(64) = project_box(random_vec(64, rng), -1, 1);
    EXPECT_NEAR(lagrangian(p, x.data, y), 0.0, 1e-9);
  }
}

TEST(SaltPepperProblem, SmallAlphaDecouplesDataBlock) {
  const ImageGrid b = make_phantom(6, 6);
  const SaddleProblem p = build_saltpepper_problem({b, make_average_kernel(3), 1e-12, 0.0, 0});
  Rng rng(3);
  const Vec x = random_vec(36, rng);
  const Vec tv = make_difference_operator(6, 6).apply(x);
  EXPECT_LT((p.A.apply(x).head(72) - tv).norm(), 1e-14);
  EXPECT_LT(p.A.apply(x).tail(36).norm(), 1e-10);
}

TEST(SaltPepperProblem, ProxStaysFeasible) {
  const ImageGrid b = make_phantom(8, 8);
  const SaddleProblem p = build_saltpepper_problem({b, make_average_kernel(3), 4.0, 0.03, 10});
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Vec y = p.g.prox(5 * random_vec(p.dual_dim(), rng), 2.0);
    EXPECT_TRUE(std::isfinite(p.g.value(y)));
  }
}

TEST(Noise, GaussianZeroSigmaAndDeterminism) {
  const ImageGrid img = make_phantom(20, 20);
  EXPECT_EQ(add_gaussian_noise(img, 0.0, 5).data, img.data);
  EXPECT_EQ(add_gaussian_noise(img, 0.1, 5).data, add_gaussian_noise(img, 0.1, 5).data);
  EXPECT_NE(add_gaussian_noise(img, 0.1, 5).data, add_gaussian_noise(img, 0.1, 6).data);
}

TEST(Noise, GaussianSampleStd) {
  const ImageGrid img{1000, 1000, Vec::Zero(1000000)};
  const Vec e = add_gaussian_noise(img, 0.003, 9).data;
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().sum() / (e.size() - 1));
  EXPECT_GE(sd, 0.00297);
  EXPECT_LE(sd, 0.00303);
}

TEST(Noise, SaltPepper) {
  const ImageGrid img{10, 10, Vec::Constant(100, 0.5)};
  EXPECT_EQ(add_salt_pepper(img, 0.0, 1).data, img.data);
  const Vec all = add_salt_pepper(img, 1.0, 1).data;
  for (Index i = 0; i < all.size(); ++i) EXPECT_TRUE(all[i] == 0.0 || all[i] == 1.0);
  const Vec some = add_salt_pepper(img, 0.2, 3).data;
  EXPECT_EQ((some.array() != 0.5).count(), 20);
  EXPECT_EQ(add_salt_pepper(img, 0.2, 3).data, some);
  EXPECT_THROW(add_salt_pepper(img, 1.5, 1), ContractViolation);
}

TEST(Continuation, HalvesEveryTenIterations) {
  for (long t = 1; t <= 10; ++t) EXPECT_DOUBLE_EQ(continuation_mu_g(t, 0.03, 10), 0.03);
  EXPECT_DOUBLE_EQ(continuation_mu_g(11, 0.03, 10), 0.015);
  EXPECT_DOUBLE_EQ(continuation_mu_g(20, 0.03, 10), 0.015);
  EXPECT_DOUBLE_EQ(continuation_mu_g(21, 0.03, 10), 0.0075);
  EXPECT_DOUBLE_EQ(continuation_mu_g(500, 0.03, 0), 0.03);
  EXPECT_THROW(continuation_mu_g(1, 0.03, -1), ContractViolation);
}

TEST(Phantom, RangeAndStructure) {
  const ImageGrid p = make_phantom(64, 64);
  EXPECT_GE(p.data.minCoeff(), 0.0);
  EXPECT_LE(p.data.maxCoeff(), 1.0);
  EXPECT_GT(p.data.maxCoeff() - p.data.minCoeff(), 0.5);
}

TEST(Files, DpdfRoundTripIsExact) {
  Rng rng(10);
  const ImageGrid img{7, 5, random_vec(35, rng)};
  const auto path = temp_path("rt.dpdf").string();
  write_dpdf(path, img);
  const ImageGrid back = read_dpdf(path);
  EXPECT_EQ(back.rows, 7);
  EXPECT_EQ(back.cols, 5);
  EXPECT_EQ(back.data, img.data);
  EXPECT_EQ(std::filesystem::file_size(path), 4u + 16u + 35u * 8u);
}

TEST(Files, DpdfRejectsBadMagicAndTruncation) {
  const auto path = temp_path("bad.dpdf").string();
  { std::ofstream(path, std::ios::binary) << "NOPE0000000000000000"; }
  EXPECT_THROW(read_dpdf(path), IoError);
  write_dpdf(path, ImageGrid{3, 3, Vec::Zero(9)});
  std::filesystem::resize_file(path, 30);
  EXPECT_THROW(read_dpdf(path), IoError);
  EXPECT_THROW(read_dpdf(temp_path("missing.dpdf").string()), IoError);
}

TEST(Files, PgmRoundTripWithinQuantization) {
  const ImageGrid img = make_phantom(9, 13);
  const auto path = temp_path("rt.pgm").string();
  write_pgm(path, img);
  const ImageGrid back = read_pgm(path);
  ASSERT_EQ(back.rows, 9);
  ASSERT_EQ(back.cols, 13);
  EXPECT_LE((back.data - img.data).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
}

TEST(Files, PgmClampsAndRejectsGarbage) {
  const auto path = temp_path("clamp.pgm").string();
  write_pgm(path, ImageGrid{1, 2, Eigen::Vector2d(-3.0, 7.0)});
  const ImageGrid back = read_pgm(path);
  EXPECT_EQ(back.data[0], 0.0);
  EXPECT_EQ(back.data[1], 1.0);
  { std::ofstream(path) << "P2\n1 1\n255\n0\n"; }
  EXPECT_THROW(read_pgm(path), IoError);
}
