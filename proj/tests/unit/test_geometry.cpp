#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "choir/error.hpp"
#include "choir/geometry/contact.hpp"
#include "choir/geometry/knn.hpp"
#include "choir/geometry/mesh.hpp"
#include "choir/geometry/pose.hpp"
#include "choir/geometry/propagation.hpp"
#include "choir/io/ply.hpp"
#include "oracles.hpp"

using namespace choir;
using namespace choir::geometry;

namespace {

Points random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Points p;
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(u(rng), u(rng), u(rng));
  return p;
}

AffordanceSeed random_seed(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t nr = 1 + rng() % (n / 4);
  const std::size_t nb = 1 + rng() % (n / 2);
  AffordanceSeed s;
  s.red.assign(idx.begin(), idx.begin() + nr);
  s.blue.assign(idx.begin() + nr, idx.begin() + nr + nb);
  return s;
}

TemplateMesh tetrahedron() {
  TemplateMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(0.03, 0, 0), Vec3(0, 0.05, 0), Vec3(0, 0, 0.07)};
  m.faces = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  m.parts.assign(4, BodyPart::Torso);
  return m;
}

std::vector<std::uint8_t> random_mask(std::size_t n, std::mt19937_64& rng, bool nonempty = true) {
  std::vector<std::uint8_t> m(n);
  for (auto& x : m) x = static_cast<std::uint8_t>(rng() % 3 == 0);
  if (nonempty && std::none_of(m.begin(), m.end(), [](auto x) { return x; })) m[rng() % n] = 1;
  return m;
}

}  // namespace

TEST_CASE("relative motion: identity frame, pure translation, composed rotation") {
  HeadTrajectory traj(6);
  traj[0].t = Vec3(1, 2, 3);
  for (auto& p : traj) p.t = Vec3(1, 2, 3);
  traj[5].t = Vec3(1, 2, 5);
  auto rm = relative_motion(traj);
  REQUIRE(rm.size() == 6);
  const MotionFrame id = {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK(rm.frames[0] == id);
  CHECK(rm.frames[5][0] == 0.0);
  CHECK(rm.frames[5][1] == 0.0);
  CHECK(rm.frames[5][2] == doctest::Approx(2.0).epsilon(1e-15));
  for (int i = 3; i < 12; ++i) CHECK(rm.frames[5][i] == id[i]);

  const double deg = std::numbers::pi / 180.0;
  HeadTrajectory rot(2);
  rot[0].R = rot_z(90 * deg);
  rot[1].R = rot_z(120 * deg);
  auto rr = relative_motion(rot);
  // Direct product R0^T R1 computed entry by entry.
  const Mat3 a = rot_z(90 * deg), b = rot_z(120 * deg);
  const Mat3 expect = rot_z(30 * deg);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(k, r) * b(k, c);
      CHECK(rr.frames[1][3 + r * 3 + c] == doctest::Approx(s).epsilon(1e-14));
      CHECK(std::fabs(rr.frames[1][3 + r * 3 + c] - expect(r, c)) < 1e-12);
    }
}

TEST_CASE("relative motion rejects bad input and keeps rotations orthonormal") {
  CHECK_THROWS_AS(relative_motion(HeadTrajectory{}), DataError);
  HeadTrajectory bad(2);
  bad[1].R(0, 0) = 2.0;
  CHECK_THROWS_AS(relative_motion(bad), DataError);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    HeadTrajectory traj(8);
    for (auto& p : traj) p.R = rot_z(ang(rng)) * rot_y(ang(rng)) * rot_x(ang(rng));
    auto rm = relative_motion(traj);
    for (const auto& f : rm.frames) {
      Mat3 r;
      for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = f[3 + i];
      CHECK(is_rotation(r, 1e-9));
    }
  }
}

TEST_CASE("knn: tie-break, square, brute-force oracle") {
  Points line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  auto g = knn_graph(line, 1);
  CHECK(g.row(1)[0] == 0);

  Points sq = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  auto gs = knn_graph(sq, 2);
  auto sorted_row = [&](std::size_t i) {
    std::vector<std::size_t> r(gs.row(i).begin(), gs.row(i).end());
    std::sort(r.begin(), r.end());
    return r;
  };
  CHECK(sorted_row(0) == std::vector<std::size_t>{1, 3});
  CHECK(sorted_row(1) == std::vector<std::size_t>{0, 2});
  CHECK(sorted_row(2) == std::vector<std::size_t>{1, 3});
  CHECK(sorted_row(3) == std::vector<std::size_t>{0, 2});

  CHECK_THROWS_AS(knn_graph(sq, 4), UsageError);
  CHECK_THROWS_AS(knn_graph(sq, 0), UsageError);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto pts = random_points(64, seed);
    auto kg = knn_graph(pts, 8);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (j != i) all.emplace_back((pts[i] - pts[j]).squaredNorm(), j);
      std::sort(all.begin(), all.end());
      for (std::size_t m = 0; m < 8; ++m) {
        CHECK(kg.row(i)[m] == all[m].second);
        CHECK(kg.distances[i * 8 + m] == doctest::Approx(std::sqrt(all[m].first)).epsilon(1e-15));
        if (m) CHECK(kg.distances[i * 8 + m] >= kg.distances[i * 8 + m - 1]);
      }
    }
  }
}

TEST_CASE("propagation: degenerate cases") {
  auto pts = random_points(10, 1);
  AffordanceSeed none{{}, {1, 2, 3}};
  for (double v : propagate_affordance(pts, none)) CHECK(v == 0.0);

  AffordanceSeed seed{{0, 4}, {1, 2, 3, 5}};
  PropagationOptions o;
  o.alpha = 0.0;
  auto raw = propagate_raw(pts, seed, o);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(raw[i] == ((i == 0 || i == 4) ? 1.0 : 0.0));
  auto s = propagate_affordance(pts, seed, o);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(s[i] == ((i == 0 || i == 4) ? 1.0 : 0.0));

  AffordanceSeed overlap{{0}, {0, 1}};
  CHECK_THROWS_AS(propagate_affordance(pts, overlap), DataError);
  AffordanceSeed out_of_range{{0}, {10}};
  CHECK_THROWS_AS(propagate_affordance(pts, out_of_range), DataError);
}

TEST_CASE("propagation: five-point chain against Gaussian elimination") {
  Points chain;
  for (int i = 0; i < 5; ++i) chain.emplace_back(0.1 * i * (1 + 0.1 * i), 0, 0);
  AffordanceSeed seed{{0}, {1, 2}};
  PropagationOptions o;
  o.alpha = 0.5;
  o.k = 1;
  auto raw = propagate_raw(chain, seed, o);
  auto expect = testing::oracle_propagation(chain, seed, 1, 0.5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::fabs(raw[i] - expect[i]) < 1e-12);
  CHECK(raw[2] == 0.0);  // not a neighbor of the red point under k = 1
}

TEST_CASE("propagation: closed form vs oracle and iteration on random instances") {
  std::mt19937_64 rng(99);
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    const std::size_t n = 8 + rng() % 57;  // up to 64
    auto pts = random_points(n, 1000 + trial);
    auto seed = random_seed(n, rng);
    const std::size_t k = 1 + rng() % 6;
    PropagationOptions o;
    o.k = k;
    auto raw = propagate_raw(pts, seed, o);
    auto expect = testing::oracle_propagation(pts, seed, k, o.alpha);
    double scale = 1.0;
    for (double v : expect) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(raw[i] - expect[i]) <= 1e-9 * scale);

    auto iter = propagate_iterative(pts, seed, o.alpha, k);
    auto s_closed = normalize_affordance(raw, seed);
    auto s_iter = normalize_affordance(iter, seed);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(s_closed[i] - s_iter[i]) < 1e-6);

    const double mx = *std::max_element(s_closed.begin(), s_closed.end());
    for (auto r : seed.red) CHECK(s_closed[r] == mx);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s_closed[i] >= 0.0);
      CHECK(s_closed[i] <= 1.0);
      const bool inside = std::count(seed.red.begin(), seed.red.end(), i) ||
                          std::count(seed.blue.begin(), seed.blue.end(), i);
      if (!inside) CHECK(s_closed[i] == 0.0);
    }
  }
}

TEST_CASE("propagation: literal inverse placement reports singularity") {
  auto pts = random_points(12, 3);
  AffordanceSeed seed{{0}, {1, 2}};
  PropagationOptions o;
  o.form = PropagationForm::InverseOnAffinity;
  // Isolated points make the normalized affinity singular.
  CHECK_THROWS_AS(propagate_raw(pts, seed, o), NumericError);
}

TEST_CASE("contact from distance") {
  Points body = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  Points scene = {Vec3(0, 0, 0), Vec3(1.019, 0, 0), Vec3(2.021, 0, 0)};
  auto c = contact_from_distance(body, scene);
  CHECK(c == std::vector<std::uint8_t>{1, 1, 0});
  CHECK(contact_from_distance(body, Points{}) == std::vector<std::uint8_t>{0, 0, 0});
  CHECK_THROWS_AS(contact_from_distance(body, scene, 0.0), UsageError);

  auto b = random_points(20, 7);
  auto s = random_points(30, 8);
  for (double thr : {0.1, 0.3, 0.5}) {
    auto mask = contact_from_distance(b, s, thr);
    for (std::size_t i = 0; i < b.size(); ++i) {
      bool any = false;
      for (const auto& p : s) {
        const double d = std::sqrt((b[i][0] - p[0]) * (b[i][0] - p[0]) + (b[i][1] - p[1]) * (b[i][1] - p[1]) +
                                   (b[i][2] - p[2]) * (b[i][2] - p[2]));
        any = any || d <= thr;
      }
      CHECK(mask[i] == static_cast<std::uint8_t>(any));
    }
  }
}

TEST_CASE("template mesh is valid and labeled") {
  for (std::size_t v : {12u, 24u, 30u, 512u}) {
    auto m = make_template_mesh(v);
    CHECK(m.size() == v);
    CHECK_NOTHROW(m.validate());
  }
  auto m = make_template_mesh(512);
  std::array<int, kBodyPartCount> hist{};
  for (auto p : m.parts) ++hist[static_cast<std::size_t>(p)];
  for (auto h : hist) CHECK(h > 0);
  CHECK_THROWS_AS(make_template_mesh(7), UsageError);

  TemplateMesh split;
  split.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(5, 0, 0), Vec3(6, 0, 0), Vec3(5, 1, 0)};
  split.faces = {{0, 1, 2}, {3, 4, 5}};
  split.parts.assign(6, BodyPart::Head);
  CHECK_THROWS_AS(split.validate(), DataError);
  std::vector<std::uint8_t> one(6, 1);
  CHECK_THROWS_AS(geodesic_error(one, one, split), DataError);
}

TEST_CASE("geodesic error: degenerate cases") {
  auto m = make_template_mesh(24);
  std::mt19937_64 rng(1);
  auto gt = random_mask(24, rng);
  CHECK(geodesic_error(gt, gt, m).centimeters == 0.0);
  std::vector<std::uint8_t> empty(24, 0);
  auto e = geodesic_error(empty, gt, m);
  CHECK(e.empty_prediction);
  CHECK(e.centimeters == 0.0);

  TemplateMesh edge;
  edge.vertices = {Vec3(0, 0, 0), Vec3(0.03, 0, 0), Vec3(0, 0.5, 0)};
  edge.faces = {{0, 1, 2}};
  edge.parts.assign(3, BodyPart::Hands);
  auto r = geodesic_error(std::vector<std::uint8_t>{0, 1, 0}, std::vector<std::uint8_t>{1, 0, 0}, edge);
  CHECK(r.centimeters == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("geodesic error: Floyd-Warshall oracle, relabeling, monotonicity") {
  std::mt19937_64 rng(2024);
  std::vector<TemplateMesh> meshes = {tetrahedron(), make_template_mesh(12), make_template_mesh(24),
                                      make_template_mesh(30)};
  for (const auto& m : meshes) {
    const auto d = testing::floyd_warshall(m);
    const std::size_t n = m.size();
    for (int trial = 0; trial < 30; ++trial) {
      auto pred = random_mask(n, rng);
      auto gt = random_mask(n, rng);
      const double got = geodesic_error(pred, gt, m).centimeters;
      CHECK(std::fabs(got - testing::oracle_geodesic_cm(pred, gt, d)) < 1e-9);

      // Relabel vertices with a random permutation.
      std::vector<std::uint32_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0u);
      std::shuffle(perm.begin(), perm.end(), rng);
      TemplateMesh pm;
      pm.vertices.resize(n);
      pm.parts.resize(n);
      std::vector<std::uint8_t> ppred(n), pgt(n);
      for (std::size_t i = 0; i < n; ++i) {
        pm.vertices[perm[i]] = m.vertices[i];
        pm.parts[perm[i]] = m.parts[i];
        ppred[perm[i]] = pred[i];
        pgt[perm[i]] = gt[i];
      }
      for (const auto& f : m.faces) pm.faces.push_back({perm[f[0]], perm[f[1]], perm[f[2]]});
      CHECK(std::fabs(geodesic_error(ppred, pgt, pm).centimeters - got) < 1e-9);

      auto bigger = gt;
      bigger[rng() % n] = 1;
      CHECK(geodesic_error(pred, bigger, m).centimeters <= got + 1e-12);
    }
  }
}

TEST_CASE("ply round trip") {
  io::PlyData ply;
  ply.vertices = random_points(5, 11);
  ply.quality = std::vector<double>{0.0, 0.25, 1.0 / 3.0, 0.9, 1.0};
  ply.faces = {{0, 1, 2}, {2, 3, 4}};
  ply.comments = {"alpha 0.995", "made for a test"};
  const auto text = io::format_ply(ply);
  auto back = io::parse_ply(text);
  CHECK(back.vertices == ply.vertices);
  CHECK(back.faces == ply.faces);
  REQUIRE(back.quality.has_value());
  CHECK(*back.quality == *ply.quality);
  CHECK(back.comments == ply.comments);
  CHECK(io::format_ply(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "choir_test_roundtrip.ply";
  io::write_ply(path, ply);
  CHECK(io::format_ply(io::read_ply(path)) == text);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(io::parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n"), DataError);
  CHECK_THROWS_AS(io::parse_ply(text.substr(0, text.size() - 10)), DataError);
}
