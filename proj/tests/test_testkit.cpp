#include <gtest/gtest.h>

#include <cmath>

#include "oracle/oracle.hpp"
#include "support.hpp"
#include "unicam/heatmap.hpp"
#include "unicam/testkit/fixtures.hpp"
#include "unicam/testkit/toy_net.hpp"
#include "unicam/unicam.hpp"

using namespace unicam;
using testkit::ToyNet;

TEST(SplitMix, ReferenceStream) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
  SplitMix64 u(0);
  EXPECT_EQ(u.uniform(), static_cast<double>(0xE220A8397B1DCDAFULL >> 11) * 0x1.0p-53);
}

TEST(FiniteDiff, AnalyticCases) {
  const auto sq = [](const std::vector<double>& v) { return v[0] * v[0] + v[1] * v[1]; };
  const auto g = oracle::finite_diff(sq, {1.0, 2.0}, {0, 1}, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-8);
  EXPECT_NEAR(g[1], 4.0, 1e-8);

  const auto lin = [](const std::vector<double>& v) { return 3.0 * v[0] - 0.5 * v[1]; };
  for (double h : {0.5, 0x1p-10, 0x1p-20}) {  // dyadic steps keep x +- h exact
    const auto l = oracle::finite_diff(lin, {0.25, -4.0}, {0, 1}, h);
    EXPECT_NEAR(l[0], 3.0, 1e-14);
    EXPECT_NEAR(l[1], -0.5, 1e-14);
  }
  const auto bad = [](const std::vector<double>& v) { return std::log(v[0]); };
  EXPECT_THROW(oracle::finite_diff(bad, {1e-6}, {0}, 1e-5), std::runtime_error);
}

namespace {

// Checks `analytic` against central differences of f over `coords`. A
// coordinate whose difference quotient changes with the step straddles a
// ReLU kink and is skipped; the number skipped is returned.
struct FdOutcome {
  double worst = 0.0;
  std::size_t skipped = 0;
};

FdOutcome check_grad(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& point,
                     const std::vector<double>& analytic, const std::vector<std::size_t>& coords) {
  const auto fd = oracle::finite_diff(f, point, coords, 1e-6);
  const auto fd_half = oracle::finite_diff(f, point, coords, 5e-7);
  double gmax = 0.0;
  for (double v : analytic) gmax = std::max(gmax, std::abs(v));
  FdOutcome out;
  for (std::size_t t = 0; t < coords.size(); ++t) {
    const double scale = std::max({std::abs(fd[t]), std::abs(analytic[coords[t]]), 1e-3 * gmax});
    if (std::abs(fd[t] - fd_half[t]) > 1e-6 * scale) {
      ++out.skipped;
      continue;
    }
    out.worst = std::max(out.worst, std::abs(analytic[coords[t]] - fd[t]) / scale);
  }
  return out;
}

}  // namespace

TEST(ToyNet, BackwardMatchesFiniteDifferences) {
  SplitMix64 rng(77);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto net = ToyNet::random(seed);
    const auto image = testsupport::uniform_tensor(rng, {1, 8, 8});
    const std::size_t cls = seed % 2;
    const auto a = net.forward(image);
    const auto g = net.backward(image, a, cls);

    std::vector<std::size_t> pcoords(400);
    for (auto& c : pcoords) c = rng.next() % net.param_count();
    const auto score_of_params = [&](const std::vector<double>& p) {
      return ToyNet(net.dims(), p).forward(image).scores[cls];
    };
    const auto po = check_grad(score_of_params, net.params(), g.params, pcoords);

    std::vector<std::size_t> icoords(100);
    for (auto& c : icoords) c = rng.next() % image.size();
    const auto score_of_input = [&](const std::vector<double>& v) {
      return net.forward(Tensor(image.shape(), v)).scores[cls];
    };
    const std::vector<double> pixels(image.data().begin(), image.data().end());
    const auto io = check_grad(score_of_input, pixels, g.input, icoords);

    EXPECT_LE(po.worst, 1e-5) << "seed " << seed;
    EXPECT_LE(io.worst, 1e-5) << "seed " << seed;
    EXPECT_LE(po.skipped + io.skipped, 10u);
  }
}

TEST(ToyNet, ScoreGradMatchesBackwardChain) {
  const auto net = ToyNet::random(3);
  SplitMix64 rng(4);
  const auto image = testsupport::uniform_tensor(rng, {1, 6, 6});
  const auto a = net.forward(image);
  const auto g = net.score_grad_conv2(a, 1);
  ASSERT_EQ(g.size(), a.conv2.size());
  // Perturbing one conv2 activation moves the score by head_w / (h w).
  const std::size_t hw = a.h * a.w;
  for (std::size_t k = 0; k < net.dims().c2; ++k)
    EXPECT_EQ(g[k * hw], net.params()[net.head_w_offset() + 1 * net.dims().c2 + k] / static_cast<double>(hw));
}

TEST(Fixtures, DeterministicFromSeed) {
  const auto a = testkit::gen_fixtures(42);
  const auto b = testkit::gen_fixtures(42);
  EXPECT_TRUE(bitwise_equal(a.images, b.images));
  EXPECT_TRUE(bitwise_equal(a.labels, b.labels));
  EXPECT_TRUE(bitwise_equal(a.embeddings, b.embeddings));
  EXPECT_TRUE(bitwise_equal(a.region_mask, b.region_mask));
  EXPECT_TRUE(bitwise_equal(a.student.acts, b.student.acts));
  EXPECT_TRUE(bitwise_equal(*a.student.grads, *b.student.grads));
  EXPECT_TRUE(bitwise_equal(a.base.acts, b.base.acts));
  EXPECT_EQ(a.student_net.params(), b.student_net.params());
  EXPECT_FALSE(bitwise_equal(a.images, testkit::gen_fixtures(43).images));
}

TEST(Fixtures, ShapesAndContracts) {
  const auto f = testkit::gen_fixtures(5, 10);
  EXPECT_EQ(f.images.shape(), (Shape{10, 1, 16, 16}));
  EXPECT_EQ(f.labels.shape(), (Shape{10}));
  EXPECT_EQ(f.region_mask.shape(), (Shape{10, 16, 16}));
  EXPECT_EQ(f.embeddings.shape(), (Shape{2, 8}));
  EXPECT_EQ(f.student.acts.shape(), (Shape{10, 8, 16, 16}));
  EXPECT_EQ(f.student.layer, testkit::kFixtureLayer);
  EXPECT_NO_THROW(f.student.validate());
  EXPECT_NO_THROW(f.base.validate());
  EXPECT_THROW(testkit::gen_fixtures(5, 7), std::invalid_argument);
}

TEST(Fixtures, NetsDifferOnlyInPlantedChannel) {
  const auto f = testkit::gen_fixtures(9);
  const auto& s = f.student_net;
  const auto& b = f.base_net;
  const std::size_t c1 = s.dims().c1;
  std::size_t differing = 0;
  for (std::size_t p = 0; p < s.param_count(); ++p) {
    if (s.params()[p] == b.params()[p]) continue;
    ++differing;
    const bool planted_weight = p >= s.w2_offset() + testkit::kPlantedChannel * c1 * 9 &&
                                p < s.w2_offset() + (testkit::kPlantedChannel + 1) * c1 * 9;
    const bool planted_bias = p == s.b2_offset() + testkit::kPlantedChannel;
    EXPECT_TRUE(planted_weight || planted_bias) << "parameter " << p;
  }
  EXPECT_GT(differing, 0u);
}

TEST(Fixtures, UnplantedStudentEqualsBase) {
  const auto f = testkit::gen_fixtures(11, 8, {.plant_edge_channel = false});
  EXPECT_TRUE(bitwise_equal(f.student.acts, f.base.acts));
  const auto r = unique_energy_with_grad(f.student.acts, f.base.acts);
  EXPECT_EQ(r.total, 0.0);
}

TEST(Fixtures, ScenarioOrdering) {
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    const auto m = testkit::measure_scenario(testkit::gen_fixtures(seed), kDefaultEps);
    EXPECT_GT(m.distilled_fraction, m.gradcam_fraction) << seed;
    EXPECT_LT(m.residual_fraction, m.distilled_fraction) << seed;
  }
}
