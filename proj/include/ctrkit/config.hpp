#pragma once

// Robot configuration: defaults, JSON (de)serialization with exhaustive
// schema checking, and cross-validation with stable issue codes.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrkit/error.hpp"
#include "ctrkit/evacuation.hpp"
#include "ctrkit/inverse_kinematics.hpp"
#include "ctrkit/io.hpp"
#include "ctrkit/kinematics.hpp"
#include "ctrkit/motor_control.hpp"
#include "ctrkit/torsion.hpp"
#include "ctrkit/tube_design.hpp"
#include "ctrkit/tube_shape.hpp"

namespace ctrkit {

/// Characterized centerline of the default nylon inner tube: quartic fit of
/// 30 centerline points (1 mm arc spacing) from a 29 mm precurve whose
/// curvature varies about a 33.4 mm mean radius.
inline PlanarShape reference_tube() {
  return PlanarShape({0.028119440008709525, -0.042110072140996359, 0.0041188163362716338,
                      -0.0011347095748296798, 1.2077059999777063e-05},
                     25.212591134554);
}

struct AxisConfig {
  ControllerParams params;
  MotorPlant plant;
};

struct KinematicsConfig {
  ShapeTransformOptions fk;
  TorsionOptions torsion;
};

struct ShapeConfig {
  std::vector<double> coefficients;  ///< used when no centerline file is set
  double x_max_total = 0.0;
  std::optional<std::filesystem::path> centerline_csv;
  int fit_degree = 4;
};

struct RobotConfig {
  TubeModel inner;
  TubeModel outer;
  ShapeConfig shape;
  AxisConfig rotational{ControllerParams::rotational(), MotorPlant::rotational()};
  AxisConfig translational{ControllerParams::translational(), MotorPlant::translational()};
  JointLimits workspace;
  KinematicsConfig kinematics;
  EvacuationPolicy evacuation;
  double mm_per_rev = 1.0;
  bool simulate_motors = false;

  /// The inner tube's shape, fitting the centerline file when one is given.
  PlanarShape build_shape() const {
    if (shape.centerline_csv)
      return fit_centerline(io::read_centerline_csv(*shape.centerline_csv), shape.fit_degree);
    return PlanarShape(shape.coefficients, shape.x_max_total);
  }

  TorsionContext torsion_context() const { return {inner.geometry, inner.material, kinematics.torsion}; }

  Planner<PlanarShape> planner() const {
    return Planner<PlanarShape>(build_shape(), workspace, kinematics.fk, torsion_context());
  }

  EvacuationPolicy evacuation_policy() const {
    EvacuationPolicy p = evacuation;
    if (simulate_motors) {
      MotorSetup m;
      m.rot_params = rotational.params;
      m.rot_plant = rotational.plant;
      m.trans_params = translational.params;
      m.trans_plant = translational.plant;
      m.mm_per_rev = mm_per_rev;
      p.motors = m;
    } else {
      p.motors.reset();
    }
    return p;
  }
};

inline RobotConfig default_config() {
  RobotConfig c;
  const PlanarShape ref = reference_tube();
  c.inner.geometry = {3.0, 2.0, 300.0, ref.arc_total()};
  c.inner.material = {4.0, 2.7, 0.10, 0.17};
  // Rigid straight fiberglass delivery tube; its deflectable arc is unused.
  c.outer.geometry = {3.965, 3.1, 250.0, 250.0};
  c.outer.material = {74.0, 30.0, 0.02, 0.17};
  c.shape.coefficients = ref.coefficients();
  c.shape.x_max_total = ref.x_max_total();
  return c;
}

struct ConfigIssue {
  std::string code;     ///< stable identifier, e.g. "tube.radius_order"
  std::string path;     ///< JSON pointer-ish location
  std::string message;
  bool warning = false;

  nlohmann::json to_json() const {
    return {{"code", code}, {"path", path}, {"message", message},
            {"severity", warning ? "warning" : "error"}};
  }
};

namespace detail {

inline double counts_from_deg(double deg, const MotorPlant& p) {
  return std::round(deg / 360.0 * p.counts_per_rev);
}
inline double deg_from_counts(double counts, const MotorPlant& p) {
  return counts * 360.0 / p.counts_per_rev;
}

// Reads known keys of one JSON object into fields, reporting type errors
// and unknown keys.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path, std::vector<ConfigIssue>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {
    if (!obj_.is_object())
      issues_.push_back({"schema.type", path_, "expected an object"});
  }
  ~ObjectReader() {
    if (!obj_.is_object()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key()))
        issues_.push_back({"schema.unknown_key", path_ + "/" + it.key(), "unknown key"});
  }
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.is_object() && obj_.contains(key);
  }
  const nlohmann::json& at(const std::string& key) const { return obj_.at(key); }
  std::string path(const std::string& key) const { return path_ + "/" + key; }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    if (!obj_.at(key).is_number())
      issues_.push_back({"schema.type", path(key), "expected a number"});
    else
      out = obj_.at(key).get<double>();
  }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    if (!obj_.at(key).is_number_integer())
      issues_.push_back({"schema.type", path(key), "expected an integer"});
    else
      out = obj_.at(key).get<int>();
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    if (!obj_.at(key).is_boolean())
      issues_.push_back({"schema.type", path(key), "expected a boolean"});
    else
      out = obj_.at(key).get<bool>();
  }
  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    if (!obj_.at(key).is_string())
      issues_.push_back({"schema.type", path(key), "expected a string"});
    else
      out = obj_.at(key).get<std::string>();
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::vector<ConfigIssue>& issues_;
  std::set<std::string> seen_;
};

inline void read_tube(const nlohmann::json& j, const std::string& path, TubeModel& t,
                      std::vector<ConfigIssue>& issues) {
  ObjectReader r(j, path, issues);
  r.number("r_od_mm", t.geometry.r_od);
  r.number("r_id_mm", t.geometry.r_id);
  r.number("length_total_mm", t.geometry.length_total);
  r.number("deflectable_arc_mm", t.geometry.deflectable_arc);
  if (r.has("material")) {
    ObjectReader m(r.at("material"), r.path("material"), issues);
    m.number("elastic_modulus_gpa", t.material.elastic_modulus_gpa);
    m.number("shear_modulus_gpa", t.material.shear_modulus_gpa);
    m.number("strain_limit", t.material.strain_limit);
    m.number("friction_mu", t.material.friction_mu);
  }
}

inline void read_axis(const nlohmann::json& j, const std::string& path, AxisConfig& a,
                      std::vector<ConfigIssue>& issues) {
  ObjectReader r(j, path, issues);
  // Plant first: the degree-valued tolerances convert with its encoder.
  if (r.has("plant")) {
    ObjectReader p(r.at("plant"), r.path("plant"), issues);
    p.number("nominal_speed_rpm", a.plant.nominal_speed_rpm);
    p.number("gear_ratio", a.plant.gear_ratio);
    p.number("counts_per_rev", a.plant.counts_per_rev);
    p.number("transport_delay_s", a.plant.transport_delay);
    p.number("plant_deadband_v", a.plant.plant_deadband);
    p.number("time_constant_s", a.plant.time_constant);
    p.number("valve_center_v", a.plant.valve_center);
  }
  double delta_deg = deg_from_counts(a.params.delta, a.plant);
  double thresh_deg = deg_from_counts(a.params.err_thresh, a.plant);
  r.number("delta_deg", delta_deg);
  r.number("err_thresh_deg", thresh_deg);
  if (a.plant.counts_per_rev > 0.0) {
    a.params.delta = counts_from_deg(delta_deg, a.plant);
    a.params.err_thresh = counts_from_deg(thresh_deg, a.plant);
  }
  r.number("v_start", a.params.v_start);
  r.number("v_deadband", a.params.v_deadband);
  r.number("kp_const", a.params.kp_const);
  r.number("kd", a.params.kd);
  r.number("ki", a.params.ki);
  r.number("v_range", a.params.v_range);
  r.integer("resolution_bits", a.params.resolution_bits);
  r.number("omega_period_s", a.params.omega_period);
  r.integer("omega_window", a.params.omega_window);
  r.boolean("scheduling", a.params.scheduling);
}

}  // namespace detail

struct ConfigLoad {
  std::optional<RobotConfig> config;
  std::vector<ConfigIssue> issues;

  bool ok() const {
    for (const auto& i : issues)
      if (!i.warning) return false;
    return config.has_value();
  }
};

/// Overlays a JSON document on the defaults. Relative centerline paths are
/// resolved against `base_dir`.
inline ConfigLoad parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  ConfigLoad out;
  RobotConfig c = default_config();
  {
    detail::ObjectReader r(j, "", out.issues);
    if (r.has("inner_tube")) detail::read_tube(r.at("inner_tube"), "/inner_tube", c.inner, out.issues);
    if (r.has("outer_tube")) detail::read_tube(r.at("outer_tube"), "/outer_tube", c.outer, out.issues);
    if (r.has("shape")) {
      detail::ObjectReader s(r.at("shape"), "/shape", out.issues);
      if (s.has("coefficients")) {
        const auto& a = s.at("coefficients");
        if (!a.is_array() || !std::all_of(a.begin(), a.end(), [](const auto& v) { return v.is_number(); }))
          out.issues.push_back({"schema.type", "/shape/coefficients", "expected an array of numbers"});
        else
          c.shape.coefficients = a.get<std::vector<double>>();
      }
      s.number("x_max_total", c.shape.x_max_total);
      std::string csv;
      s.string("centerline_csv", csv);
      if (!csv.empty()) {
        std::filesystem::path p(csv);
        c.shape.centerline_csv = p.is_absolute() ? p : base_dir / p;
      }
      s.integer("fit_degree", c.shape.fit_degree);
    }
    if (r.has("controllers")) {
      detail::ObjectReader ctl(r.at("controllers"), "/controllers", out.issues);
      if (ctl.has("rotational"))
        detail::read_axis(ctl.at("rotational"), "/controllers/rotational", c.rotational, out.issues);
      if (ctl.has("translational"))
        detail::read_axis(ctl.at("translational"), "/controllers/translational", c.translational,
                          out.issues);
      ctl.number("mm_per_rev", c.mm_per_rev);
    }
    if (r.has("workspace")) {
      detail::ObjectReader w(r.at("workspace"), "/workspace", out.issues);
      w.number("d_min_mm", c.workspace.d_min);
      w.number("d_max_mm", c.workspace.d_max);
    }
    if (r.has("kinematics")) {
      detail::ObjectReader k(r.at("kinematics"), "/kinematics", out.issues);
      k.integer("segments", c.kinematics.fk.segments);
      std::string sampling = c.kinematics.fk.sampling == CurvatureSampling::Midpoint ? "midpoint" : "left";
      k.string("sampling", sampling);
      if (sampling == "left") c.kinematics.fk.sampling = CurvatureSampling::LeftEndpoint;
      else if (sampling == "midpoint") c.kinematics.fk.sampling = CurvatureSampling::Midpoint;
      else out.issues.push_back({"schema.enum", "/kinematics/sampling", "expected \"left\" or \"midpoint\""});
      k.integer("torsion_segments", c.kinematics.torsion.segments);
      std::string element = c.kinematics.torsion.element == AreaElement::Literal ? "literal" : "polar";
      k.string("area_element", element);
      if (element == "polar") c.kinematics.torsion.element = AreaElement::Polar;
      else if (element == "literal") c.kinematics.torsion.element = AreaElement::Literal;
      else out.issues.push_back({"schema.enum", "/kinematics/area_element", "expected \"polar\" or \"literal\""});
    }
    if (r.has("evacuation")) {
      detail::ObjectReader e(r.at("evacuation"), "/evacuation", out.issues);
      e.number("capture_radius_mm", c.evacuation.aspiration.radius);
      e.number("dwell_s", c.evacuation.aspiration.dwell);
      double rate_ml_min = c.evacuation.aspiration.rate_ml_s * 60.0;
      e.number("rate_ml_min", rate_ml_min);
      c.evacuation.aspiration.rate_ml_s = rate_ml_min / 60.0;
      e.number("stop_ml", c.evacuation.stop_ml);
      int max_targets = int(c.evacuation.max_targets);
      e.integer("max_targets", max_targets);
      if (max_targets < 0)
        out.issues.push_back({"evacuation.max_targets", "/evacuation/max_targets", "must be >= 0"});
      else
        c.evacuation.max_targets = std::size_t(max_targets);
      e.integer("stall_limit", c.evacuation.stall_limit);
      e.number("far_slab_mm", c.evacuation.far_slab_mm);
      e.boolean("compensate_torsion", c.evacuation.compensate_torsion);
      e.boolean("torsion_plant", c.evacuation.torsion_plant);
      e.boolean("simulate_motors", c.simulate_motors);
    }
  }
  out.config = c;
  return out;
}

/// Cross-checks a configuration. Every violated invariant yields one issue
/// with a stable code; strain-limit exceedance is a warning.
inline std::vector<ConfigIssue> validate_config(const RobotConfig& c) {
  std::vector<ConfigIssue> v;
  auto err = [&](std::string code, std::string path, std::string msg) {
    v.push_back({std::move(code), std::move(path), std::move(msg), false});
  };
  auto tube = [&](const TubeModel& t, const std::string& p) {
    const auto& g = t.geometry;
    if (!(g.r_id > 0.0 && g.r_id < g.r_od))
      err("tube.radius_order", p + "/r_id_mm", "need 0 < r_id < r_od");
    if (!(g.deflectable_arc > 0.0) || !(g.length_total > 0.0))
      err("tube.length_nonpositive", p, "lengths must be > 0");
    if (g.deflectable_arc > g.length_total)
      err("tube.arc_exceeds_length", p + "/deflectable_arc_mm", "deflectable arc exceeds total length");
    const auto& m = t.material;
    if (!(m.elastic_modulus_gpa > 0.0) || !(m.shear_modulus_gpa > 0.0) ||
        !(m.strain_limit > 0.0) || !(m.friction_mu > 0.0))
      err("material.nonpositive", p + "/material", "material constants must be positive");
    if (m.strain_limit > 0.15)
      err("material.strain_limit_bound", p + "/material/strain_limit", "strain limit above 0.15");
  };
  tube(c.inner, "/inner_tube");
  tube(c.outer, "/outer_tube");
  if (2.0 * c.inner.geometry.r_od > 2.0 * c.outer.geometry.r_id + 1e-12)
    err("pair.negative_clearance", "/outer_tube/r_id_mm", "inner tube OD exceeds outer tube ID");

  std::optional<PlanarShape> shape;
  try {
    shape = c.build_shape();
  } catch (const Error& e) {
    err(e.code() == ErrorCode::Io || e.code() == ErrorCode::Parse ? "shape.source" : "shape.invalid",
        "/shape", e.what());
  }
  if (shape) {
    const double arc = shape->arc_total();
    if (std::abs(arc - c.inner.geometry.deflectable_arc) > 1e-3 * std::max(1.0, arc)) {
      std::ostringstream os;
      os << "deflectable_arc " << c.inner.geometry.deflectable_arc
         << " mm differs from the shape's arc length " << arc << " mm";
      err("shape.arc_mismatch", "/inner_tube/deflectable_arc_mm", os.str());
    }
    // Strain check: the precurve must straighten within the elastic limit.
    if (c.inner.material.strain_limit > 0.0 && c.inner.geometry.r_od > 0.0) {
      double k_lim = 0.0;
      try {
        if (c.inner.geometry.r_od < c.outer.geometry.r_id)
          k_lim = kappa_limit({c.inner, c.outer}, arc);
      } catch (const Error&) {
      }
      const double k_o = max_precurvature(c.inner.material, c.inner.geometry.r_od, k_lim);
      double k_peak = 0.0;
      for (int i = 0; i <= 200; ++i)
        k_peak = std::max(k_peak, std::abs(shape->curvature(shape->x_max_total() * i / 200.0)));
      if (k_peak > k_o) {
        std::ostringstream os;
        os << "peak precurvature " << k_peak << " /mm exceeds the elastic maximum " << k_o << " /mm";
        v.push_back({"design.strain_exceeded", "/shape", os.str(), true});
      }
    }
  }
  if (c.shape.fit_degree < 2) err("shape.degree", "/shape/fit_degree", "fit degree must be >= 2");

  auto axis = [&](const AxisConfig& a, const std::string& p) {
    try {
      a.params.validate();
    } catch (const Error& e) {
      err("controller.invalid", p, e.what());
    }
    try {
      a.plant.validate();
    } catch (const Error& e) {
      err("plant.invalid", p + "/plant", e.what());
    }
  };
  axis(c.rotational, "/controllers/rotational");
  axis(c.translational, "/controllers/translational");
  if (!(c.mm_per_rev > 0.0)) err("controller.mm_per_rev", "/controllers/mm_per_rev", "must be > 0");

  if (!(c.workspace.d_min <= c.workspace.d_max))
    err("workspace.d_order", "/workspace", "d_min_mm exceeds d_max_mm");
  if (c.kinematics.fk.segments < 1)
    err("kinematics.segments", "/kinematics/segments", "must be >= 1");
  if (c.kinematics.torsion.segments < 1)
    err("kinematics.segments", "/kinematics/torsion_segments", "must be >= 1");

  const auto& ev = c.evacuation;
  if (!(ev.aspiration.radius >= c.inner.geometry.r_id))
    err("evacuation.radius", "/evacuation/capture_radius_mm",
        "capture radius must be at least the inner tube's inner radius");
  if (!(ev.aspiration.dwell > 0.0)) err("evacuation.dwell", "/evacuation/dwell_s", "must be > 0");
  if (!(ev.aspiration.rate_ml_s > 0.0))
    err("evacuation.rate", "/evacuation/rate_ml_min", "must be > 0");
  if (!(ev.stop_ml >= 0.0)) err("evacuation.stop_ml", "/evacuation/stop_ml", "must be >= 0");
  if (ev.stall_limit < 1) err("evacuation.stall_limit", "/evacuation/stall_limit", "must be >= 1");
  return v;
}

inline ConfigLoad load_config(const std::filesystem::path& path) {
  ConfigLoad out = parse_config(io::read_json(path), path.parent_path());
  if (out.config) {
    auto more = validate_config(*out.config);
    out.issues.insert(out.issues.end(), more.begin(), more.end());
  }
  return out;
}

/// Serialized form accepted by parse_config (angles in degrees).
inline nlohmann::json to_json(const RobotConfig& c) {
  using nlohmann::json;
  auto tube = [](const TubeModel& t) {
    return json{{"r_od_mm", t.geometry.r_od},
                {"r_id_mm", t.geometry.r_id},
                {"length_total_mm", t.geometry.length_total},
                {"deflectable_arc_mm", t.geometry.deflectable_arc},
                {"material",
                 {{"elastic_modulus_gpa", t.material.elastic_modulus_gpa},
                  {"shear_modulus_gpa", t.material.shear_modulus_gpa},
                  {"strain_limit", t.material.strain_limit},
                  {"friction_mu", t.material.friction_mu}}}};
  };
  auto axis = [](const AxisConfig& a) {
    return json{{"delta_deg", detail::deg_from_counts(a.params.delta, a.plant)},
                {"err_thresh_deg", detail::deg_from_counts(a.params.err_thresh, a.plant)},
                {"v_start", a.params.v_start},
                {"v_deadband", a.params.v_deadband},
                {"kp_const", a.params.kp_const},
                {"kd", a.params.kd},
                {"ki", a.params.ki},
                {"v_range", a.params.v_range},
                {"resolution_bits", a.params.resolution_bits},
                {"omega_period_s", a.params.omega_period},
                {"omega_window", a.params.omega_window},
                {"scheduling", a.params.scheduling},
                {"plant",
                 {{"nominal_speed_rpm", a.plant.nominal_speed_rpm},
                  {"gear_ratio", a.plant.gear_ratio},
                  {"counts_per_rev", a.plant.counts_per_rev},
                  {"transport_delay_s", a.plant.transport_delay},
                  {"plant_deadband_v", a.plant.plant_deadband},
                  {"time_constant_s", a.plant.time_constant},
                  {"valve_center_v", a.plant.valve_center}}}};
  };
  json shape;
  if (c.shape.centerline_csv) {
    shape = {{"centerline_csv", c.shape.centerline_csv->string()}, {"fit_degree", c.shape.fit_degree}};
  } else {
    shape = {{"coefficients", c.shape.coefficients},
             {"x_max_total", c.shape.x_max_total},
             {"fit_degree", c.shape.fit_degree}};
  }
  return json{
      {"inner_tube", tube(c.inner)},
      {"outer_tube", tube(c.outer)},
      {"shape", shape},
      {"controllers",
       {{"rotational", axis(c.rotational)},
        {"translational", axis(c.translational)},
        {"mm_per_rev", c.mm_per_rev}}},
      {"workspace", {{"d_min_mm", c.workspace.d_min}, {"d_max_mm", c.workspace.d_max}}},
      {"kinematics",
       {{"segments", c.kinematics.fk.segments},
        {"sampling", c.kinematics.fk.sampling == CurvatureSampling::Midpoint ? "midpoint" : "left"},
        {"torsion_segments", c.kinematics.torsion.segments},
        {"area_element", c.kinematics.torsion.element == AreaElement::Literal ? "literal" : "polar"}}},
      {"evacuation",
       {{"capture_radius_mm", c.evacuation.aspiration.radius},
        {"dwell_s", c.evacuation.aspiration.dwell},
        {"rate_ml_min", c.evacuation.aspiration.rate_ml_s * 60.0},
        {"stop_ml", c.evacuation.stop_ml},
        {"max_targets", c.evacuation.max_targets},
        {"stall_limit", c.evacuation.stall_limit},
        {"far_slab_mm", c.evacuation.far_slab_mm},
        {"compensate_torsion", c.evacuation.compensate_torsion},
        {"torsion_plant", c.evacuation.torsion_plant},
        {"simulate_motors", c.simulate_motors}}}};
}

/// Default clot: ellipsoid on the insertion axis, 38.36 mL at 1 mm voxels.
inline ClotPhantom default_phantom(double volume_ml = 38.36) {
  return make_ellipsoid_with_volume(Vec3(0.0, 0.0, 60.0), Vec3(1.0, 1.0, 1.5), volume_ml);
}

}  // namespace ctrkit
