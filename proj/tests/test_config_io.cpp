#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ctrkit/config.hpp"
#include "ctrkit/io.hpp"

using namespace ctrkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "ctrkit_config_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

bool has_code(const std::vector<ConfigIssue>& v, const std::string& code, bool warning = false) {
  for (const auto& i : v)
    if (i.code == code && i.warning == warning) return true;
  return false;
}

bool errors_free(const std::vector<ConfigIssue>& v) {
  for (const auto& i : v)
    if (!i.warning) return false;
  return true;
}

}  // namespace

TEST(Config, DefaultsValidateWithStrainWarningOnly) {
  const auto issues = validate_config(default_config());
  EXPECT_TRUE(errors_free(issues));
  EXPECT_TRUE(has_code(issues, "design.strain_exceeded", true));
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto load = parse_config(json::object());
  ASSERT_TRUE(load.ok());
  EXPECT_EQ(to_json(*load.config), to_json(default_config()));
}

TEST(Config, RoundTripThroughJson) {
  RobotConfig c = default_config();
  c.workspace.d_max = 70.0;
  c.kinematics.fk.sampling = CurvatureSampling::Midpoint;
  c.evacuation.aspiration.rate_ml_s = 0.2;
  c.evacuation.max_targets = 12;
  c.simulate_motors = true;
  c.rotational.params.kp_const = 9.0;
  const json j = to_json(c);
  const auto load = parse_config(j);
  ASSERT_TRUE(load.ok());
  EXPECT_EQ(to_json(*load.config), j);
  EXPECT_NEAR(load.config->evacuation.aspiration.rate_ml_s, 0.2, 1e-15);
  EXPECT_TRUE(load.config->evacuation_policy().motors.has_value());
}

TEST(Config, UnknownKeysAndTypeErrors) {
  const json j = {{"workspace", {{"d_max_mm", "far"}, {"depth", 3}}},
                  {"kinematics", {{"sampling", "cubic"}}},
                  {"bogus", 1}};
  const auto load = parse_config(j);
  EXPECT_FALSE(load.ok());
  EXPECT_TRUE(has_code(load.issues, "schema.type"));
  EXPECT_TRUE(has_code(load.issues, "schema.unknown_key"));
  EXPECT_TRUE(has_code(load.issues, "schema.enum"));
  bool saw_path = false;
  for (const auto& i : load.issues) saw_path |= i.path == "/workspace/depth";
  EXPECT_TRUE(saw_path);
}

TEST(Config, ValidationCodes) {
  RobotConfig c = default_config();
  c.inner.geometry.r_id = 3.5;
  c.workspace.d_min = 90.0;
  c.evacuation.aspiration.radius = 1.0;
  c.evacuation.stall_limit = 0;
  c.inner.material.strain_limit = 0.2;
  const auto v = validate_config(c);
  for (const char* code : {"tube.radius_order", "workspace.d_order", "evacuation.radius",
                           "evacuation.stall_limit", "material.strain_limit_bound"})
    EXPECT_TRUE(has_code(v, code)) << code;
}

TEST(Config, PairAndArcChecks) {
  RobotConfig c = default_config();
  c.outer.geometry.r_id = 2.9;
  c.inner.geometry.deflectable_arc = 40.0;
  const auto v = validate_config(c);
  EXPECT_TRUE(has_code(v, "pair.negative_clearance"));
  EXPECT_TRUE(has_code(v, "shape.arc_mismatch"));
}

TEST(Config, DegreesConvertToCounts) {
  const json j = {{"controllers", {{"rotational", {{"delta_deg", 360.0}}}}}};
  const auto load = parse_config(j);
  ASSERT_TRUE(load.ok());
  EXPECT_EQ(load.config->rotational.params.delta, load.config->rotational.plant.counts_per_rev);
}

TEST(Config, LoadsFileWithRelativeCenterline) {
  const fs::path dir = fs::temp_directory_path() / "ctrkit_config_test";
  fs::create_directories(dir);
  fs::copy_file(fs::path(CTRKIT_DATA_DIR) / "centerline.csv", dir / "centerline.csv",
                fs::copy_options::overwrite_existing);
  const fs::path p = scratch("robot.json", R"({"shape": {"centerline_csv": "centerline.csv"}})");
  const auto load = load_config(p);
  ASSERT_TRUE(load.ok());
  const PlanarShape s = load.config->build_shape();
  EXPECT_NEAR(s.arc_total(), reference_tube().arc_total(), 0.05);

  const fs::path missing = scratch("missing.json", R"({"shape": {"centerline_csv": "nope.csv"}})");
  EXPECT_TRUE(has_code(load_config(missing).issues, "shape.source"));
}

TEST(Config, ShippedSampleIsValid) {
  const auto load = load_config(fs::path(CTRKIT_DATA_DIR) / "robot.json");
  EXPECT_TRUE(load.ok());
}

TEST(Io, CsvReaders) {
  const auto pts = io::read_points_csv(scratch("p.csv", "x,y,z\n1,2,3\n\n4, 5 ,6\n"));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_TRUE(pts[1].isApprox(Vec3(4, 5, 6)));
  auto code = [](const fs::path& p) {
    try {
      io::read_points_csv(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code(scratch("nohdr.csv", "1,2,3\n")), ErrorCode::Parse);
  EXPECT_EQ(code(scratch("short.csv", "x,y,z\n1,2\n")), ErrorCode::Parse);
  EXPECT_EQ(code(scratch("nan.csv", "x,y,z\n1,two,3\n")), ErrorCode::Parse);
  EXPECT_EQ(code(scratch("empty.csv", "")), ErrorCode::Parse);
  EXPECT_EQ(code("/nonexistent/x.csv"), ErrorCode::Io);
}

TEST(Io, SplitKeepsTrailingEmptyCell) {
  EXPECT_EQ(io::split("a, b,"), (std::vector<std::string>{"a", "b", ""}));
}

TEST(Io, JsonHelpersRoundTrip) {
  const Transform t(Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized()).toRotationMatrix(),
                    Vec3(1, -2, 3));
  EXPECT_TRUE(io::transform_from_json(io::to_json(t)).matrix().isApprox(t.matrix(), 1e-15));
  const JointConfig q{12.5, 7.25, -0.4};
  const JointConfig r = io::joint_config_from_json(io::to_json(q));
  EXPECT_EQ(r.d, q.d);
  EXPECT_EQ(r.s, q.s);
  EXPECT_EQ(r.theta, q.theta);
  const PlanarShape ref = reference_tube();
  EXPECT_EQ(io::shape_from_json(io::to_json(ref)).coefficients(), ref.coefficients());
  EXPECT_THROW(io::vec3_from_json(json::array({1, 2})), Error);
  EXPECT_EQ(std::stod(io::fmt(0.1)), 0.1);
}
