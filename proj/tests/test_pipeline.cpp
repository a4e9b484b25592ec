// Theta sweep, L-curve selection, and the sequential extract-and-deflate
// loop, on fixtures whose answers are known by construction.

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "laros/errors.hpp"
#include "laros/matio.hpp"
#include "laros/pipeline.hpp"
#include "oracles.hpp"
#include "testsupport.hpp"

using laros::ExtractionConfig;
using laros::ExtractionResult;
using laros::Feature;
using laros::InvalidInput;
using laros::LCurvePoint;
using laros::Matrix;
using laros::NumericError;
using laros::SupportPattern;
using laros::Vector;

namespace {

// Planted block plus deterministic nonnegative clutter outside it.
Matrix noisy_planted() {
  Matrix A = testsupport::planted_block(8, 6, 1, 1, 3, 3);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (A(i, j) == 0.0) A(i, j) = 0.25 * ((i * 31 + j * 17) % 7) / 7.0 + 0.05;
    }
  }
  return A;
}

LCurvePoint curve_point(double theta, double largeness, double averaging,
                        bool ok = true) {
  LCurvePoint p;
  p.theta = theta;
  p.largeness = largeness;
  p.averaging = averaging;
  p.ok = ok;
  return p;
}

}  // namespace

TEST_CASE("default_theta_grid spans the three ranges without duplicates") {
  std::vector<double> g = laros::default_theta_grid();
  CHECK(g.size() == 28);
  CHECK(g.front() == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(g.back() == doctest::Approx(10.0).epsilon(1e-14));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  // the shared endpoints 0.1 and 1 appear exactly once
  auto count_near = [&](double v) {
    return std::count_if(g.begin(), g.end(),
                         [&](double x) { return std::abs(x - v) <= 1e-9; });
  };
  CHECK(count_near(0.1) == 1);
  CHECK(count_near(1.0) == 1);
  CHECK(std::count_if(g.begin(), g.end(), [](double x) { return x <= 0.1 + 1e-9; }) == 10);
}

TEST_CASE("extraction config validation") {
  ExtractionConfig ok;
  CHECK_NOTHROW(ok.validate());

  ExtractionConfig bad = ok;
  bad.theta_grid = {0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad.theta_grid = {0.5, 0.1};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad.theta_grid = {-0.1, 0.5};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);

  bad = ok;
  bad.max_features = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.jobs = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.zero_averaging_tol = -1e-3;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("sweep_theta recovers a planted block at every theta") {
  Matrix A = testsupport::planted_block(10, 8, 1, 2, 3, 3);
  ExtractionConfig cfg;
  cfg.theta_grid = {0.1, 0.3, 0.5, 1.0};
  std::vector<LCurvePoint> pts = laros::sweep_theta(A, cfg);
  REQUIRE(pts.size() == 4);
  for (const LCurvePoint& p : pts) {
    CHECK(p.ok);
    CHECK(p.support.rows == std::vector<int>{1, 2, 3});
    CHECK(p.support.cols == std::vector<int>{2, 3, 4});
    // the block is exactly rank one with Frobenius mass 3
    CHECK(p.largeness == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.averaging <= 1e-12);
  }
}

TEST_CASE("sweep_theta handles single-point grids and rejects bad input") {
  Matrix A = testsupport::planted_block(6, 5, 0, 0, 2, 2);
  ExtractionConfig cfg;
  cfg.theta_grid = {0.5};
  std::vector<LCurvePoint> pts = laros::sweep_theta(A, cfg);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].ok);

  CHECK_THROWS_AS(laros::sweep_theta(Matrix::Zero(4, 4), cfg), InvalidInput);
  Matrix bad = A;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(laros::sweep_theta(bad, cfg), InvalidInput);
}

TEST_CASE("sweep_theta results do not depend on the job count") {
  Matrix A = noisy_planted();
  ExtractionConfig cfg;
  cfg.theta_grid = {0.05, 0.1, 0.5, 1.0};
  std::vector<LCurvePoint> one = laros::sweep_theta(A, cfg);
  cfg.jobs = 3;
  std::vector<LCurvePoint> par = laros::sweep_theta(A, cfg);
  REQUIRE(one.size() == par.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].ok == par[i].ok);
    CHECK(one[i].theta == par[i].theta);
    CHECK(one[i].largeness == par[i].largeness);
    CHECK(one[i].averaging == par[i].averaging);
    CHECK(one[i].support.rows == par[i].support.rows);
    CHECK(one[i].support.cols == par[i].support.cols);
  }
}

TEST_CASE("sweep_theta supports shrink and largeness falls as theta grows") {
  Matrix A = noisy_planted();
  ExtractionConfig cfg;
  cfg.theta_grid = {0.01, 0.05, 0.1, 0.5, 1.0, 5.0};
  std::vector<LCurvePoint> pts = laros::sweep_theta(A, cfg);
  for (const LCurvePoint& p : pts) REQUIRE(p.ok);

  // light l1 weight keeps the clutter, heavy weight prunes to the core block
  CHECK(pts.front().support.rows.size() == 8);
  CHECK(pts.front().support.cols.size() == 6);
  CHECK(pts.front().largeness >= pts.back().largeness - 1e-12);
  for (std::size_t i = 2; i < pts.size(); ++i) {
    CHECK(pts[i].support.rows == std::vector<int>{1, 2, 3});
    CHECK(pts[i].support.cols == std::vector<int>{1, 2, 3});
    CHECK(pts[i].averaging <= 1e-12);
  }
  // exact-fit shortcut: smallest theta among the zero-averaging points
  CHECK(laros::select_theta(pts) == 2);
}

TEST_CASE("select_theta prefers exact fits, then the sharpest corner") {
  // zero-averaging points win by largeness, ties to the smaller theta
  std::vector<LCurvePoint> zero = {curve_point(0.1, 2.0, 0.0),
                                   curve_point(0.2, 3.0, 0.0),
                                   curve_point(0.3, 5.0, 0.5)};
  CHECK(laros::select_theta(zero) == 1);
  zero[0].largeness = 3.0;
  CHECK(laros::select_theta(zero) == 0);

  // the shortcut tolerance is relative to the largeness scale
  std::vector<LCurvePoint> near = {curve_point(0.1, 2.0, 3.0e-10),
                                   curve_point(0.2, 1.0, 0.4)};
  CHECK(laros::select_theta(near, 1e-10) == 0);

  // right-angle polyline, shifted off averaging zero so the exact-fit
  // shortcut stays out of the way: the corner is the curvature maximum
  std::vector<LCurvePoint> angle = {curve_point(0.1, 0.0, 1.1),
                                    curve_point(0.2, 0.0, 0.1),
                                    curve_point(0.3, 1.0, 0.1)};
  CHECK(laros::select_theta(angle) == 1);

  // collinear points carry no curvature anywhere, ties resolve to the
  // smallest theta exactly like the flat endpoints
  std::vector<LCurvePoint> line = {curve_point(0.1, 1.0, 3.0),
                                   curve_point(0.2, 2.0, 2.0),
                                   curve_point(0.3, 3.0, 1.0)};
  CHECK(laros::select_theta(line) == 0);

  // failed solves are skipped; an unusable first point shifts the answer
  std::vector<LCurvePoint> skip = {curve_point(0.05, 9.0, 0.0, false),
                                   curve_point(0.1, 1.0, 0.0),
                                   curve_point(0.2, 1.0, 0.3)};
  CHECK(laros::select_theta(skip) == 1);

  std::vector<LCurvePoint> single = {curve_point(0.7, 1.0, 0.9)};
  CHECK(laros::select_theta(single) == 0);

  std::vector<LCurvePoint> none = {curve_point(0.1, 1.0, 1.0, false)};
  CHECK_THROWS_AS(laros::select_theta(none), NumericError);
  CHECK_THROWS_AS(laros::select_theta({}), NumericError);
}

TEST_CASE("extract_next_feature takes the heavier of two planted blocks") {
  Matrix A = testsupport::planted_block(12, 10, 0, 0, 4, 4);
  A.block(6, 6, 2, 2).setOnes();
  ExtractionConfig cfg;
  cfg.theta_grid = {0.2, 0.5, 1.0};

  std::vector<LCurvePoint> sweep;
  Feature f = laros::extract_next_feature(A, cfg, &sweep);
  CHECK(sweep.size() == 3);
  CHECK(f.support.rows == std::vector<int>{0, 1, 2, 3});
  CHECK(f.support.cols == std::vector<int>{0, 1, 2, 3});
  CHECK(f.size_pixels == 4);
  CHECK(f.image_count == 4);
  CHECK(f.sigma == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(f.f_min == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.v.maxCoeff() == 1.0);
  for (int i = 0; i < f.u.size(); ++i) CHECK(f.u(i) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.theta == 0.2);
}

TEST_CASE("extract_next_feature covers the whole pattern of a single block") {
  Matrix A = testsupport::planted_block(7, 9, 2, 3, 3, 4);
  ExtractionConfig cfg;
  cfg.theta_grid = {0.3, 0.7};
  Feature f = laros::extract_next_feature(A, cfg);
  CHECK(f.support.rows == std::vector<int>{2, 3, 4});
  CHECK(f.support.cols == std::vector<int>{3, 4, 5, 6});

  // starving the solver leaves no usable curve point
  ExtractionConfig caps = cfg;
  caps.dual.max_outer = 1;
  caps.dual.eps = 1e-12;
  CHECK_THROWS_AS(laros::extract_next_feature(A, caps), NumericError);
}

TEST_CASE("deflate zeroes exactly the support block") {
  Matrix A = testsupport::planted_block(10, 9, 1, 1, 3, 3);
  A.block(6, 5, 2, 3).setConstant(0.7);

  SupportPattern s;
  s.rows = {1, 2, 3};
  s.cols = {1, 2, 3};
  Matrix D = laros::deflate(A, s);
  CHECK(D.block(1, 1, 3, 3).isZero(0.0));
  CHECK((D.block(6, 5, 2, 3).array() == 0.7).all());

  const double removed = A.block(1, 1, 3, 3).squaredNorm();
  CHECK(D.squaredNorm() == doctest::Approx(A.squaredNorm() - removed).epsilon(1e-12));

  SupportPattern rest;
  rest.rows = {6, 7};
  rest.cols = {5, 6, 7};
  CHECK(laros::deflate(std::move(D), rest).isZero(0.0));

  SupportPattern oob;
  oob.rows = {10};
  oob.cols = {0};
  CHECK_THROWS_AS(laros::deflate(A, oob), InvalidInput);
  oob.rows = {0};
  oob.cols = {-1};
  CHECK_THROWS_AS(laros::deflate(A, oob), InvalidInput);
}

TEST_CASE("negative_transform flips intensities and inverts itself") {
  Matrix zero = Matrix::Zero(3, 4);
  Matrix B = laros::negative_transform(zero, 255.0);
  CHECK((B.array() == 255.0).all());

  Matrix A = oracle::random_matrix(5, 4, 42, 0.0, 200.0);
  Matrix twice = laros::negative_transform(laros::negative_transform(A));
  CHECK((twice - A).cwiseAbs().maxCoeff() <= 1e-11);

  Matrix hot = A;
  hot(0, 0) = 300.0;
  CHECK_THROWS_AS(laros::negative_transform(hot, 255.0), InvalidInput);
  hot(0, 0) = -1.0;
  CHECK_THROWS_AS(laros::negative_transform(hot, 255.0), InvalidInput);

  Vector u(3);
  u << 0.0, 100.0, 255.0;
  Vector un = laros::negative_feature_values(u, 255.0);
  CHECK(un(0) == 255.0);
  CHECK(un(1) == 155.0);
  CHECK(un(2) == 0.0);
}

TEST_CASE("a dark block on a bright field is extracted from the negative") {
  Matrix A = Matrix::Constant(8, 6, 255.0);
  A.block(2, 1, 3, 3).setZero();
  Matrix B = laros::negative_transform(A, 255.0);

  ExtractionConfig cfg;
  cfg.theta_grid = {0.2, 0.5, 1.0};
  ExtractionResult r = laros::run_extraction(B, cfg);
  REQUIRE(r.features.size() == 1);
  const Feature& f = r.features[0];
  CHECK(f.support.rows == std::vector<int>{2, 3, 4});
  CHECK(f.support.cols == std::vector<int>{1, 2, 3});
  for (int i = 0; i < f.u.size(); ++i) {
    CHECK(f.u(i) == doctest::Approx(255.0).epsilon(1e-9));
    CHECK(laros::negative_feature_values(f.u)(i) == doctest::Approx(0.0).scale(255.0).epsilon(1e-9));
  }
}

TEST_CASE("run_extraction peels disjoint blocks then stops") {
  Matrix A = testsupport::planted_block(12, 10, 0, 0, 4, 4);
  A.block(6, 6, 2, 2).setOnes();
  ExtractionConfig cfg;
  cfg.theta_grid = {0.2, 0.5, 1.0};
  ExtractionResult r = laros::run_extraction(A, cfg);

  REQUIRE(r.features.size() == 2);
  CHECK(r.sweeps.size() == 2);
  CHECK(r.features[0].support.rows == std::vector<int>{0, 1, 2, 3});
  CHECK(r.features[0].support.cols == std::vector<int>{0, 1, 2, 3});
  CHECK(r.features[1].support.rows == std::vector<int>{6, 7});
  CHECK(r.features[1].support.cols == std::vector<int>{6, 7});

  // (pixel, image) supports never overlap
  std::set<std::pair<int, int>> seen;
  for (const Feature& f : r.features) {
    for (int i : f.support.rows) {
      for (int j : f.support.cols) {
        CHECK(seen.insert({i, j}).second);
      }
    }
  }
  for (const Feature& f : r.features) {
    CHECK(f.f_min > 0.0);
    CHECK(f.f_min <= 1.0);
    CHECK(f.v.maxCoeff() == 1.0);
  }

  CHECK(laros::run_extraction(Matrix::Zero(5, 5), cfg).features.empty());
}

TEST_CASE("run_extraction is invariant under positive rescaling") {
  Matrix A = testsupport::planted_block(10, 8, 1, 1, 3, 2);
  A.block(6, 4, 2, 3).setConstant(0.6);
  ExtractionConfig cfg;
  cfg.theta_grid = {0.2, 0.5, 1.0};

  ExtractionResult r1 = laros::run_extraction(A, cfg);
  ExtractionResult r3 = laros::run_extraction(3.0 * A, cfg);
  REQUIRE(r1.features.size() == r3.features.size());
  REQUIRE(!r1.features.empty());
  for (std::size_t k = 0; k < r1.features.size(); ++k) {
    const Feature& a = r1.features[k];
    const Feature& b = r3.features[k];
    CHECK(a.support.rows == b.support.rows);
    CHECK(a.support.cols == b.support.cols);
    CHECK((a.v - b.v).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(b.sigma == doctest::Approx(3.0 * a.sigma).epsilon(1e-9));
    for (int i = 0; i < a.u.size(); ++i) {
      CHECK(b.u(i) == doctest::Approx(3.0 * a.u(i)).epsilon(1e-7));
    }
  }
}

TEST_CASE("sequential extraction decomposes a synthetic image stack exactly") {
  laros::SailboatSpec sc;
  sc.height = 16;
  sc.width = 12;
  laros::SailboatData gs = laros::gen_sailboat(sc);
  REQUIRE(gs.stack.data.rows() == 16 * 12);
  REQUIRE(gs.stack.data.cols() == 30);

  // ground-truth pixel sets of the five rectangles, row-major flattened
  std::vector<std::set<int>> rect_pixels;
  for (const laros::FeatureRect& rect : laros::default_sailboat_features(16, 12, 5)) {
    std::set<int> px;
    for (int r = rect.row0; r < rect.row0 + rect.height; ++r) {
      for (int c = rect.col0; c < rect.col0 + rect.width; ++c) px.insert(r * 12 + c);
    }
    rect_pixels.push_back(std::move(px));
  }

  ExtractionConfig cfg;
  cfg.theta_grid = {0.1, 0.2, 0.5, 1.0, 2.0};
  ExtractionResult res = laros::run_extraction(gs.stack.data, cfg);
  REQUIRE(res.features.size() == 5);

  Matrix R = gs.stack.data;
  std::vector<int> group_sizes;
  std::set<std::pair<int, int>> consumed;
  for (const Feature& f : res.features) {
    // the support is a solid lit rectangle of the residual stack
    for (int i : f.support.rows) {
      for (int j : f.support.cols) {
        CHECK(R(i, j) == 1.0);
        CHECK(consumed.insert({i, j}).second);
      }
    }
    // every pixel row set is a union of whole planted rectangles
    std::set<int> rows(f.support.rows.begin(), f.support.rows.end());
    std::set<int> rebuilt;
    for (const std::set<int>& px : rect_pixels) {
      const bool inside = std::includes(rows.begin(), rows.end(), px.begin(), px.end());
      if (inside) {
        rebuilt.insert(px.begin(), px.end());
      } else {
        for (int p : px) CHECK(rows.count(p) == 0);
      }
    }
    CHECK(rebuilt == rows);

    CHECK(f.f_min == doctest::Approx(1.0).epsilon(1e-9));
    for (int i = 0; i < f.v.size(); ++i) CHECK(f.v(i) == doctest::Approx(1.0).epsilon(1e-9));

    group_sizes.push_back(f.image_count);
    R = laros::deflate(std::move(R), f.support);
  }
  // nothing is left behind and the image groups match the fixed assignment
  CHECK(R.isZero(0.0));
  std::sort(group_sizes.begin(), group_sizes.end());
  CHECK(group_sizes == std::vector<int>{4, 4, 7, 15, 15});
}
