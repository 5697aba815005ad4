#include <gtest/gtest.h>

#include <random>

#include "stencilforge/discovery.hpp"
#include "stencilforge/stencil.hpp"
#include "testing.hpp"

using namespace sf;
using stencil::AccessOffset;

namespace {

IRModule discovered(const std::string& sample) { return discovery::discoverStencils(testkit::compileSample(sample)); }

Operation* firstApply(IRModule& m) { return walk(m, "stencil.apply").front(); }

}  // namespace

TEST(InferBounds, ListingOneWindow) {
  Bounds out({{0, 254}, {0, 254}});
  auto r = stencil::inferBounds(out, {{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}});
  EXPECT_EQ(r.output, out);
  ASSERT_EQ(r.inputs.size(), 1u);
  EXPECT_EQ(r.inputs[0], Bounds({{-1, 255}, {-1, 255}}));
}

TEST(InferBounds, IdentityAccess) {
  Bounds out({{0, 8}});
  EXPECT_EQ(stencil::inferBounds(out, {{{0}}}).inputs[0], out);
}

TEST(InferBounds, OperandWithoutAccesses) {
  Bounds out({{0, 4}, {0, 3}});
  auto r = stencil::inferBounds(out, {{}, {{2, -1}}});
  EXPECT_EQ(r.inputs[0], out);
  EXPECT_EQ(r.inputs[1], Bounds({{2, 6}, {-1, 2}}));
}

TEST(InferBounds, SevenPoint) {
  const int64_t n = 30;
  Bounds out({{0, n}, {0, n}, {0, n}});
  std::vector<AccessOffset> offs = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  EXPECT_EQ(stencil::inferBounds(out, {offs}).inputs[0], Bounds({{-1, n + 1}, {-1, n + 1}, {-1, n + 1}}));
}

TEST(InferBounds, RankMismatch) {
  EXPECT_THROW(stencil::inferBounds(Bounds({{0, 4}, {0, 4}}), {{{1}}}), RankMismatch);
}

TEST(InferBounds, MonotoneAndCoversEveryRead) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int64_t> off(-3, 3), ext(1, 4), rank(1, 3), count(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    size_t r = rank(rng);
    std::vector<Interval> dims;
    for (size_t d = 0; d < r; ++d) {
      int64_t lb = off(rng);
      dims.push_back({lb, lb + ext(rng)});
    }
    Bounds out(dims);
    std::vector<AccessOffset> offs;
    for (int64_t c = count(rng); c > 0; --c) {
      AccessOffset o(r);
      for (auto& v : o) v = off(rng);
      offs.push_back(o);
    }
    Bounds in = stencil::inferBounds(out, {offs}).inputs[0];
    forEachPoint(out, [&](const std::vector<int64_t>& p) {
      for (const auto& o : offs) {
        std::vector<int64_t> q(r);
        for (size_t d = 0; d < r; ++d) q[d] = p[d] + o[d];
        ASSERT_TRUE(in.contains(q));
      }
    });
    auto wider = offs;
    AccessOffset extra(r);
    for (auto& v : extra) v = off(rng);
    wider.push_back(extra);
    EXPECT_TRUE(stencil::inferBounds(out, {wider}).inputs[0].containsBox(in));
  }
}

TEST(AccessOffsets, ReadFromApplyRegion) {
  IRModule m = discovered("listing_average.f90");
  auto offs = stencil::accessOffsets(*firstApply(m));
  ASSERT_EQ(offs.size(), 1u);
  std::vector<AccessOffset> want = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
  EXPECT_EQ(offs[0], want);
  auto r = stencil::inferBounds(*firstApply(m));
  EXPECT_EQ(r.inputs[0], Bounds({{-1, 255}, {-1, 255}}));
}

TEST(CountFlops, Samples) {
  IRModule gs = discovered("gauss_seidel3d.f90");
  EXPECT_EQ(stencil::countFlops(*firstApply(gs)), 6);
  IRModule avg = discovered("listing_average.f90");
  EXPECT_EQ(stencil::countFlops(*firstApply(avg)), 4);
  IRModule pw = discovery::mergeStencils(discovered("pw_advection.f90"));
  EXPECT_EQ(stencil::countFlops(*firstApply(pw)), 63);
}

TEST(VerifyStencil, DiscoveredSamplesAreClean) {
  for (const char* s : {"listing_average.f90", "gauss_seidel3d.f90", "pw_advection.f90", "producer_consumer.f90"}) {
    IRModule m = discovered(s);
    EXPECT_TRUE(stencil::verifyStencil(m).empty()) << s;
  }
}

TEST(VerifyStencil, AccessOutsideInputWindow) {
  IRModule m = discovered("listing_average.f90");
  walk(m, "stencil.access").front()->setAttr("offset", IntList{0, -2});
  auto diags = stencil::verifyStencil(m);
  EXPECT_EQ(diags.size(), 1u);
}

TEST(VerifyStencil, ReturnArity) {
  IRModule m = discovered("listing_average.f90");
  Operation* ret = walk(m, "stencil.return").front();
  ret->operands().push_back(ret->operand(0));
  EXPECT_FALSE(stencil::verifyStencil(m).empty());
}

TEST(VerifyStencil, OutputBoundsMustMatchResultType) {
  IRModule m = discovered("listing_average.f90");
  firstApply(m)->setAttr("bounds", Bounds({{0, 253}, {0, 254}}));
  EXPECT_FALSE(verify(m).empty() && stencil::verifyStencil(m).empty());
}

TEST(VerifyStencil, StoreLargerThanArray) {
  IRModule m = discovered("listing_average.f90");
  walk(m, "stencil.store").front()->setAttr("origin", IntList{3, 1});
  EXPECT_FALSE(stencil::verifyStencil(m).empty());
}
