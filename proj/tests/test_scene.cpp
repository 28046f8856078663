#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "test_util.hpp"

using namespace vss;
using vss::testing::TempDir;
using vss::testing::write_text;

namespace {

const char* kTetra =
    "# tetrahedron\n"
    "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
    "f 1 2 3\nf 1 2 4\nf 1 3 4\nf 2 3 4\n";

Mesh parse(const std::string& text, const MeshLoadOptions& opts = {}) {
  std::istringstream in(text);
  return parse_obj(in, "mem.obj", opts);
}

}  // namespace

TEST(ObjParse, Tetrahedron) {
  const Mesh m = parse(kTetra);
  ASSERT_EQ(m.vertices.size(), 4u);
  ASSERT_EQ(m.triangles.size(), 4u);
  EXPECT_EQ(m.vertices[3], (Vec3{0, 0, 1}));
  EXPECT_EQ(m.triangles[3], (Triangle{1, 2, 3}));
  EXPECT_FALSE(m.attribute.has_value());
}

TEST(ObjParse, SlashAndNegativeIndices) {
  const Mesh m = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 -1\n");
  ASSERT_EQ(m.triangles.size(), 1u);
  EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
}

TEST(ObjParse, QuadIsFanTriangulated) {
  const Mesh m = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  ASSERT_EQ(m.triangles.size(), 2u);
  EXPECT_EQ(m.triangles[1], (Triangle{0, 2, 3}));
}

TEST(ObjParse, QuadRejectedWhenTriangulationOff) {
  MeshLoadOptions opts;
  opts.triangulate_polygons = false;
  EXPECT_THROW(parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", opts), FormatError);
}

TEST(ObjParse, IndexOutOfRangeNamesLine) {
  try {
    parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 999\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("mem.obj:5"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("999"), std::string::npos);
  }
}

TEST(ObjParse, MalformedNumber) {
  EXPECT_THROW(parse("v 0 zero 0\n"), FormatError);
  EXPECT_THROW(parse("v 0 0\n"), FormatError);
  EXPECT_THROW(parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"), FormatError);
}

TEST(LoadMesh, SidecarAttribute) {
  TempDir dir;
  write_text(dir / "t.obj", kTetra);
  write_text(dir / "t.scalars", "# per-vertex\n0\n0.25\n\n0.5\n1\n");
  const Mesh m = load_mesh(dir / "t.obj", dir / "t.scalars");
  ASSERT_TRUE(m.attribute.has_value());
  EXPECT_EQ(*m.attribute, (std::vector<double>{0.0, 0.25, 0.5, 1.0}));
}

TEST(LoadMesh, SidecarLengthMismatch) {
  TempDir dir;
  write_text(dir / "t.obj", kTetra);
  write_text(dir / "t.scalars", "0\n0.5\n1\n");
  EXPECT_THROW(load_mesh(dir / "t.obj", dir / "t.scalars"), FormatError);
}

TEST(LoadMesh, SidecarOutOfRange) {
  TempDir dir;
  write_text(dir / "t.scalars", "0\n1.5\n");
  try {
    load_scalars(dir / "t.scalars");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(LoadMesh, MissingFile) { EXPECT_THROW(load_mesh("/nonexistent/mesh.obj"), Error); }

TEST(LoadMesh, WriteObjRoundTrip) {
  const Mesh a = fixtures::two_tube_mesh();
  std::stringstream ss;
  write_obj(ss, a);
  const Mesh b = parse_obj(ss, "rt");
  ASSERT_EQ(a.vertices.size(), b.vertices.size());
  EXPECT_EQ(a.triangles, b.triangles);
  for (std::size_t i = 0; i < a.vertices.size(); ++i) EXPECT_LT(length(a.vertices[i] - b.vertices[i]), 1e-8);
}

TEST(Linearize, Endpoints) {
  EXPECT_DOUBLE_EQ(linearize_depth(0.0, 1.0, 100.0), 1.0);
  EXPECT_DOUBLE_EQ(linearize_depth(1.0, 1.0, 100.0), 100.0);
}

TEST(Linearize, MidpointMatchesPerspectiveInverse) {
  // Perspective depth buffer value: d = (1/n - 1/z) / (1/n - 1/f). Solve for z.
  const double n = 1.0, f = 100.0, d = 0.5;
  const double z = 1.0 / (1.0 / n - d * (1.0 / n - 1.0 / f));
  EXPECT_NEAR(linearize_depth(d, n, f), z, 1e-12);
  EXPECT_NEAR(linearize_depth(d, n, f), 1.9802, 1e-4);
}

TEST(Linearize, RoundTripWithNdc) {
  for (double z : {0.2, 1.0, 3.7, 55.0, 99.9})
    EXPECT_NEAR(linearize_depth(ndc_depth(z, 0.2, 100.0), 0.2, 100.0), z, 1e-9 * z);
}

TEST(Normalize, ExampleValues) {
  DepthImage d(3, 1);
  d.set_foreground(0, 0, 2.0);
  d.set_foreground(1, 0, 4.0);
  d.set_foreground(2, 0, 6.0);
  const DepthImage n = normalize_depth(d);
  EXPECT_EQ(n.depth(0, 0), 0.0);
  EXPECT_EQ(n.depth(1, 0), 0.5);
  EXPECT_EQ(n.depth(2, 0), 1.0);
}

TEST(Normalize, ConstantMapsToZero) {
  DepthImage d(3, 1);
  for (int x = 0; x < 3; ++x) d.set_foreground(x, 0, 5.0);
  const DepthImage n = normalize_depth(d);
  for (int x = 0; x < 3; ++x) EXPECT_EQ(n.depth(x, 0), 0.0);
}

TEST(Normalize, BackgroundUntouchedAndEmptyThrows) {
  DepthImage d(4, 1);
  d.set_foreground(1, 0, 3.0);
  d.set_foreground(2, 0, 9.0);
  const DepthImage n = normalize_depth(d);
  EXPECT_TRUE(std::isinf(n.depth(0, 0)));
  EXPECT_TRUE(n.is_background(3, 0));
  EXPECT_THROW(normalize_depth(DepthImage(4, 4)), EmptySceneError);
}

TEST(Normalize, AffineInvarianceAndIdempotence) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthImage d = fixtures::random_scene(rng, 40, 30);
    DepthImage t = d;
    for (std::size_t i = 0; i < t.depth.size(); ++i)
      if (!t.background[i]) t.depth[i] = 3.0 * t.depth[i] + 1.0;
    const DepthImage a = normalize_depth(d), b = normalize_depth(t);
    for (std::size_t i = 0; i < a.depth.size(); ++i)
      if (!a.background[i]) {
        EXPECT_NEAR(a.depth[i], b.depth[i], 1e-9);
      }
    EXPECT_EQ(normalize_depth(a).depth, a.depth);
  }
}

TEST(DepthMap, PfmAllInfinityIsBackground) {
  TempDir dir;
  io::write_file(dir / "bg.pfm", io::encode_pfm(Image<float>(5, 4, std::numeric_limits<float>::infinity())));
  const DepthImage d = load_depth_map(dir / "bg.pfm");
  EXPECT_EQ(d.width(), 5);
  EXPECT_EQ(d.height(), 4);
  EXPECT_EQ(d.foreground_count(), 0u);
}

TEST(DepthMap, PfmRowsAndBackgroundMarkers) {
  TempDir dir;
  Image<float> img(3, 2, 1.0f);
  img(0, 0) = 2.5f;
  img(1, 1) = std::numeric_limits<float>::quiet_NaN();
  img(2, 1) = 0.0f;
  io::write_file(dir / "d.pfm", io::encode_pfm(img));
  const DepthImage d = load_depth_map(dir / "d.pfm");
  EXPECT_EQ(d.depth(0, 0), 2.5);  // top row stays on top
  EXPECT_TRUE(d.is_background(1, 1));
  EXPECT_TRUE(d.is_background(2, 1));
  EXPECT_EQ(d.foreground_count(), 4u);
}

TEST(DepthMap, Png16Linearized) {
  TempDir dir;
  Image<std::uint16_t> img(3, 1);
  img(0, 0) = 0;
  img(1, 0) = 65534;
  img(2, 0) = 65535;
  io::write_file(dir / "d.png", io::encode_png_gray16(img));
  const DepthImage d = load_depth_map(dir / "d.png", 1.0, 100.0);
  EXPECT_DOUBLE_EQ(d.depth(0, 0), 1.0);
  // Independent inverse of the perspective depth-buffer mapping.
  const double n = 1.0, f = 100.0, v = 65534.0 / 65535.0;
  const double expect = 1.0 / (1.0 / n - v * (1.0 / n - 1.0 / f));
  EXPECT_NEAR(d.depth(1, 0), expect, 1e-9);
  EXPECT_LT(d.depth(1, 0), 100.0);
  EXPECT_TRUE(d.is_background(2, 0));
}

TEST(DepthMap, Png16RequiresNearFar) {
  TempDir dir;
  io::write_file(dir / "d.png", io::encode_png_gray16(Image<std::uint16_t>(2, 2, 100)));
  EXPECT_THROW(load_depth_map(dir / "d.png"), ParameterError);
}

TEST(DepthMap, Png8Rejected) {
  TempDir dir;
  io::write_file(dir / "d.png", io::encode_png_gray8(Image<std::uint8_t>(2, 2, 100)));
  EXPECT_THROW(load_depth_map(dir / "d.png", 1.0, 10.0), FormatError);
}

TEST(DepthMap, UnknownFormat) {
  TempDir dir;
  write_text(dir / "d.txt", "hello world");
  EXPECT_THROW(load_depth_map(dir / "d.txt"), FormatError);
}

TEST(Rasterize, FullFramePlaneAtDepthFive) {
  const Camera cam = fixtures::front_camera(64, 48);
  const DepthImage d = rasterize(fixtures::quad(-10, -10, 10, 10, 0.0), cam);
  EXPECT_EQ(d.foreground_count(), 64u * 48u);
  for (std::size_t i = 0; i < d.depth.size(); ++i) EXPECT_NEAR(d.depth[i], 5.0, 1e-9);
  ASSERT_TRUE(d.normal.has_value());
  EXPECT_NEAR((*d.normal)(10, 10).z, -1.0, 1e-12);  // faces the viewer
}

TEST(Rasterize, EmptyMeshIsAllBackground) {
  const DepthImage d = rasterize(Mesh{}, fixtures::front_camera(32, 24));
  EXPECT_EQ(d.foreground_count(), 0u);
  EXPECT_EQ(d.width(), 32);
}

TEST(Rasterize, NearestSurfaceWins) {
  const Camera cam = fixtures::front_camera(80, 60);
  for (bool near_first : {true, false}) {
    const Mesh nearq = fixtures::quad(-1.0, -0.5, 0.5, 0.5, 2.0);  // view depth 3
    const Mesh farq = fixtures::quad(-0.5, -0.5, 3.0, 0.5, -2.0);  // view depth 7
    Mesh m;
    fixtures::append(m, near_first ? nearq : farq);
    fixtures::append(m, near_first ? farq : nearq);
    const DepthImage d = rasterize(m, cam);
    EXPECT_NEAR(d.depth(40, 30), 3.0, 1e-9);  // overlap
    EXPECT_NEAR(d.depth(70, 30), 7.0, 1e-9);  // far quad only
    EXPECT_TRUE(d.is_background(40, 5));
  }
}

TEST(Rasterize, SharedEdgeHasNoGapsOrDoubleCover) {
  // Two triangles of the full-frame quad share a diagonal; every pixel is covered.
  const DepthImage d = rasterize(fixtures::quad(-10, -10, 10, 10, 0.0), fixtures::front_camera(33, 17));
  EXPECT_EQ(d.foreground_count(), 33u * 17u);
}

TEST(Rasterize, BehindCameraIsClipped) {
  Camera cam = fixtures::front_camera(40, 30);
  const DepthImage d = rasterize(fixtures::quad(-1, -1, 1, 1, 6.0), cam);  // behind the eye
  EXPECT_EQ(d.foreground_count(), 0u);
  // A triangle crossing the near plane still renders its visible part.
  Mesh m;
  m.vertices = {{-1, -1, 4.9}, {1, -1, -3}, {0, 1, -3}};
  m.triangles = {{0, 1, 2}};
  const DepthImage c = rasterize(m, cam);
  EXPECT_GT(c.foreground_count(), 0u);
  for (std::size_t i = 0; i < c.depth.size(); ++i)
    if (!c.background[i]) {
      EXPECT_GE(c.depth[i], cam.near - 1e-9);
    }
}

TEST(Rasterize, AttributeInterpolated) {
  Mesh m = fixtures::quad(-10, -10, 10, 10, 0.0);
  m.attribute = std::vector<double>{0.0, 1.0, 1.0, 0.0};  // varies with x
  const DepthImage d = rasterize(m, fixtures::front_camera(64, 48));
  ASSERT_TRUE(d.attribute.has_value());
  EXPECT_LT((*d.attribute)(5, 20), (*d.attribute)(60, 20));
  EXPECT_NEAR((*d.attribute)(5, 20), (*d.attribute)(5, 40), 1e-9);
}

TEST(Rasterize, FrameMeshKeepsSceneInside) {
  const Mesh m = fixtures::two_tube_mesh();
  const Camera cam = frame_mesh(m, 120, 90);
  cam.validate();
  const DepthImage d = rasterize(m, cam);
  EXPECT_GT(d.foreground_count(), 0u);
  EXPECT_EQ(bench::border_crossings(foreground_mask(d)), 0);
}

TEST(CameraValidate, NamesField) {
  Camera c;
  c.far = c.near;
  try {
    c.validate();
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.param(), "camera.far");
  }
  c = Camera{};
  c.up = {0, 0, 1};
  EXPECT_THROW(c.validate(), ParameterError);
}
