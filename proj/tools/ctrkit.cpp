// ctrkit command-line front end. Every subcommand builds one JSON document and,
// where it has one, a numeric table. stdout gets the JSON (or the table with
// --format csv|md); --out-dir writes both as <command>.json / <command>.csv.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctrkit/ctrkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctrkit;

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("CTRKIT_LOG");
  if (!env) return LogLevel::Quiet;
  const std::string v(env);
  if (v == "debug" || v == "2") return LogLevel::Debug;
  if (v == "info" || v == "1") return LogLevel::Info;
  return LogLevel::Quiet;
}

void log(LogLevel level, const std::string& msg) {
  if (log_level() >= level) std::cerr << "ctrkit: " << msg << '\n';
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  template <class... T>
  void add(const T&... cells) {
    rows.push_back({cell(cells)...});
  }

  std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  std::string markdown() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      out += "|";
      for (const auto& c : r) out += " " + c + " |";
      out += '\n';
    };
    line(header);
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += "---|";
    out += '\n';
    for (const auto& r : rows) line(r);
    return out;
  }

 private:
  static std::string cell(double v) { return io::fmt(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "true" : "false"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }
};

// Thrown for an invalid configuration; carries the full issue list.
struct ConfigRejected {
  std::vector<ConfigIssue> issues;
};

struct Globals {
  std::string config_path;
  std::uint64_t seed = 20240601;
  std::string out_dir;
  std::string format = "json";
};

class Output {
 public:
  explicit Output(const Globals& g) : g_(g) {}

  void emit(const std::string& name, const json& doc, const std::optional<Table>& table = {}) const {
    if (!g_.out_dir.empty()) {
      io::write_text(fs::path(g_.out_dir) / (name + ".json"), doc.dump(2) + "\n");
      if (table) io::write_text(fs::path(g_.out_dir) / (name + ".csv"), table->csv());
      log(LogLevel::Info, "wrote " + name + " outputs to " + g_.out_dir);
    }
    if (table && g_.format == "csv")
      std::cout << table->csv();
    else if (table && g_.format == "md")
      std::cout << table->markdown();
    else
      std::cout << doc.dump(2) << '\n';
  }

 private:
  const Globals& g_;
};

RobotConfig load_robot(const Globals& g) {
  if (g.config_path.empty()) return default_config();
  ConfigLoad load = load_config(g.config_path);
  for (const auto& i : load.issues)
    if (i.warning) log(LogLevel::Info, "warning " + i.code + " at " + i.path + ": " + i.message);
  if (!load.ok()) throw ConfigRejected{load.issues};
  return *load.config;
}

Vec3 vec3_of(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }

json plan_json(const MovePlan& p) {
  json seq = json::array();
  for (const auto& a : p.sequence)
    seq.push_back({{"action", a.kind == ActionKind::Rotate ? "rotate" : "translate"},
                   {"theta_rad", a.theta},
                   {"d_mm", a.d},
                   {"s_mm", a.s}});
  return {{"nominal", io::to_json(p.nominal)},
          {"theta_command_rad", p.theta_command},
          {"s_command_mm", p.s_command},
          {"d_command_mm", p.d_command},
          {"phi_rad", p.phi},
          {"sequence", seq}};
}

json report_json(const BendingReport& r) {
  return {{"force_n", r.force},
          {"stiffness_n_per_rad", r.stiffness},
          {"bend_angle_rad", r.bend_angle},
          {"loc_mm", r.length}};
}

const char* region_name(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
  }
  return "?";
}

// --- subcommands --------------------------------------------------------------

struct FitShapeArgs {
  std::string centerline;
  int degree = 0;
};

void run_fit_shape(const Globals& g, const FitShapeArgs& a) {
  const RobotConfig cfg = load_robot(g);
  const int degree = a.degree > 0 ? a.degree : cfg.shape.fit_degree;
  const CenterlineSamples samples = io::read_centerline_csv(a.centerline);
  const PlanarShape shape = fit_centerline(samples, degree);
  Table t{{"x_mm", "y_mm", "y_fit_mm", "residual_mm", "curvature_per_mm"}, {}};
  double ss = 0.0, worst = 0.0;
  for (const auto& p : samples.points()) {
    const double r = p.y - shape.f(p.x);
    ss += r * r;
    worst = std::max(worst, std::abs(r));
    t.add(p.x, p.y, shape.f(p.x), r, shape.curvature(p.x));
  }
  json doc = io::to_json(shape);
  doc["degree"] = degree;
  doc["points"] = samples.size();
  doc["rms_residual_mm"] = std::sqrt(ss / double(samples.size()));
  doc["max_residual_mm"] = worst;
  Output(g).emit("fit_shape", doc, t);
}

void run_fk(const Globals& g, const std::vector<double>& joints) {
  const RobotConfig cfg = load_robot(g);
  const PlanarShape shape = cfg.build_shape();
  const JointConfig q{joints.at(0), joints.at(1), joints.at(2)};
  const ForwardResult fk = forward_kinematics(shape, q, cfg.kinematics.fk);
  Table t{{"x_mm", "y_mm", "z_mm"}, {}};
  json backbone = json::array();
  for (const auto& p : fk.backbone) {
    t.add(p.x(), p.y(), p.z());
    backbone.push_back(io::to_json(p));
  }
  json doc{{"joints", io::to_json(q)},
           {"tip", {{"position", io::to_json(fk.tip.translation())},
                    {"transform", io::to_json(fk.tip)}}},
           {"backbone", backbone}};
  Output(g).emit("fk", doc, t);
}

struct IkArgs {
  std::vector<double> target;
  std::string targets_csv;
  int random = 0;
  std::vector<double> current{0.0, 0.0, 0.0};
};

void run_ik(const Globals& g, const IkArgs& a) {
  const RobotConfig cfg = load_robot(g);
  const auto planner = cfg.planner();
  const JointConfig current{a.current.at(0), a.current.at(1), a.current.at(2)};

  if (!a.target.empty()) {
    const Vec3 p = vec3_of(a.target);
    const MovePlan plan = planner.plan_move(current, p);
    const Vec3 tip = planner.forward(plan.nominal).tip.translation();
    json doc{{"target", io::to_json(p)},
             {"joints", io::to_json(plan.nominal)},
             {"plan", plan_json(plan)},
             {"fk_tip", io::to_json(tip)},
             {"roundtrip_error_mm", (tip - p).norm()}};
    Output(g).emit("ik", doc);
    return;
  }

  std::vector<Vec3> targets;
  if (!a.targets_csv.empty()) {
    targets = io::read_points_csv(a.targets_csv);
  } else {
    std::mt19937_64 rng(g.seed);
    std::uniform_real_distribution<double> xy(-8.0, 8.0), z(20.0, 70.0);
    for (int i = 0; i < a.random; ++i) {
      const double x = xy(rng), y = xy(rng);
      targets.emplace_back(x, y, z(rng));
    }
  }
  Table t{{"index", "x_mm", "y_mm", "z_mm", "status", "d_mm", "s_mm", "theta_rad",
           "roundtrip_error_mm"},
          {}};
  json results = json::array();
  double worst = 0.0;
  std::size_t unreachable = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Vec3& p = targets[i];
    try {
      const JointConfig q = planner.solve_ik(p);
      const double err = (planner.forward(q).tip.translation() - p).norm();
      worst = std::max(worst, err);
      t.add(i, p.x(), p.y(), p.z(), "ok", q.d, q.s, q.theta, err);
      results.push_back({{"index", i}, {"target", io::to_json(p)}, {"status", "ok"},
                         {"joints", io::to_json(q)}, {"roundtrip_error_mm", err}});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unreachable) throw;
      ++unreachable;
      t.add(i, p.x(), p.y(), p.z(), "unreachable", "", "", "", "");
      results.push_back({{"index", i}, {"target", io::to_json(p)}, {"status", "unreachable"},
                         {"message", e.what()}});
    }
  }
  log(LogLevel::Info, std::to_string(targets.size()) + " targets, " +
                          std::to_string(unreachable) + " unreachable");
  json doc{{"results", results},
           {"count", targets.size()},
           {"unreachable", unreachable},
           {"max_roundtrip_error_mm", worst}};
  Output(g).emit("ik", doc, t);
}

struct TorsionArgs {
  double s_step = 1.0;
  double theta_max_deg = 180.0;
  double theta_step_deg = 30.0;
  double theta_current_deg = 0.0;
  double s_current = 0.0;
};

void run_torsion(const Globals& g, const TorsionArgs& a) {
  if (!(a.s_step > 0.0) || !(a.theta_step_deg > 0.0) || !(a.theta_max_deg >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "torsion: steps must be > 0 and theta range >= 0");
  const RobotConfig cfg = load_robot(g);
  const auto planner = cfg.planner();
  const TorsionContext tc = cfg.torsion_context();
  const double s_max = planner.curve().arc_total();
  const double deg = std::numbers::pi / 180.0;

  std::vector<double> s_values;
  for (int k = 0;; ++k) {
    const double s = k * a.s_step;
    if (s > s_max + 1e-12) break;
    s_values.push_back(std::min(s, s_max));
  }
  if (s_values.back() < s_max) s_values.push_back(s_max);

  json profile = json::array();
  std::vector<double> phis;
  for (double s : s_values) {
    const TorsionState st = torsion_state(planner.curve(), s, tc.tube, tc.material, tc.options);
    phis.push_back(st.phi);
    profile.push_back({{"s_mm", s},
                       {"phi_rad", st.phi},
                       {"torque_nmm", st.torque},
                       {"force_n", st.load.force},
                       {"resultant_mm", st.load.resultant_location}});
  }
  Table t{{"s_mm", "theta_nom_deg", "phi_rad", "theta_command_deg"}, {}};
  const int n_theta = int(std::floor(2.0 * a.theta_max_deg / a.theta_step_deg + 1e-9));
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    for (int j = 0; j <= n_theta; ++j) {
      const double th = -a.theta_max_deg + j * a.theta_step_deg;
      const double cmd = compensate(th * deg, s_values[i], a.theta_current_deg * deg,
                                    a.s_current, [&](double) { return phis[i]; });
      t.add(s_values[i], th, phis[i], cmd / deg);
    }
  }
  json doc{{"s_max_mm", s_max},
           {"theta_current_deg", a.theta_current_deg},
           {"s_current_mm", a.s_current},
           {"profile", profile}};
  Output(g).emit("torsion", doc, t);
}

struct DesignArgs {
  bool table1 = false;
  std::string pair;
  std::optional<double> check_roc;
};

TubePair read_pair(const fs::path& path, const RobotConfig& defaults) {
  const json j = io::read_json(path);
  TubePair pair{defaults.inner, defaults.outer};
  std::vector<ConfigIssue> issues;
  {
    detail::ObjectReader r(j, "", issues);
    if (r.has("inner_tube")) detail::read_tube(r.at("inner_tube"), "/inner_tube", pair.inner, issues);
    if (r.has("outer_tube")) detail::read_tube(r.at("outer_tube"), "/outer_tube", pair.outer, issues);
  }
  if (!issues.empty()) throw ConfigRejected{issues};
  pair.validate();
  return pair;
}

void run_design(const Globals& g, const DesignArgs& a) {
  const RobotConfig cfg = load_robot(g);
  if (a.check_roc) {
    const double roc = *a.check_roc;
    if (!(roc > 0.0)) throw Error(ErrorCode::InvalidArgument, "design: RoC must be > 0");
    const TubePair pair{cfg.inner, cfg.outer};
    const double klim = kappa_limit(pair, cfg.inner.geometry.deflectable_arc);
    const double kmax = max_precurvature(cfg.inner.material, cfg.inner.geometry.r_od, klim);
    const double strain = cfg.inner.geometry.r_od * (1.0 / roc - klim);
    json doc{{"roc_mm", roc},
             {"min_roc_mm", 1.0 / kmax},
             {"kappa_max_per_mm", kmax},
             {"kappa_limit_per_mm", klim},
             {"straightening_strain", strain},
             {"strain_limit", cfg.inner.material.strain_limit},
             {"pass", roc >= 1.0 / kmax}};
    Output(g).emit("design_check", doc);
    return;
  }
  if (!a.pair.empty()) {
    const TubePair pair = read_pair(a.pair, cfg);
    const double s_max = pair.inner.geometry.deflectable_arc;
    const double klim = kappa_limit(pair, s_max);
    const double kmax = max_precurvature(pair.inner.material, pair.inner.geometry.r_od, klim);
    const BendingReport rep =
        bending_report(pair.inner.geometry, pair.inner.material, 1.0 / kmax, s_max);
    json doc{{"clearance_mm", pair.clearance()},
             {"kappa_limit_per_mm", klim},
             {"kappa_max_per_mm", kmax},
             {"min_roc_mm", 1.0 / kmax},
             {"s_max_mm", s_max},
             {"at_min_roc", report_json(rep)}};
    Table t{{"quantity", "value"}, {}};
    t.add("clearance_mm", pair.clearance());
    t.add("kappa_limit_per_mm", klim);
    t.add("min_roc_mm", 1.0 / kmax);
    t.add("force_n", rep.force);
    t.add("stiffness_n_per_rad", rep.stiffness);
    Output(g).emit("design_pair", doc, t);
    return;
  }
  const PlanarShape shape = cfg.build_shape();
  const auto rows = comparison_table(&shape, cfg.inner.material);
  Table t{{"label", "E_gpa", "od_mm", "id_mm", "roc_mm", "loc_mm", "force_n",
           "stiffness_n_per_rad", "force_over_stiffness", "loc_over_roc"},
          {}};
  json out = json::array();
  for (const auto& r : rows) {
    const double ratio = r.report.force / r.report.stiffness;
    const std::string roc = r.roc_mm ? io::fmt(*r.roc_mm) : "variable";
    const std::string loc_roc = r.roc_mm ? io::fmt(r.loc_mm / *r.roc_mm) : "";
    t.add(r.label, r.elastic_modulus_gpa, r.od_mm, r.id_mm, roc, r.loc_mm, r.report.force,
          r.report.stiffness, ratio, loc_roc);
    json row{{"label", r.label},
             {"elastic_modulus_gpa", r.elastic_modulus_gpa},
             {"od_mm", r.od_mm},
             {"id_mm", r.id_mm},
             {"loc_mm", r.loc_mm},
             {"report", report_json(r.report)},
             {"force_over_stiffness", ratio}};
    row["roc_mm"] = r.roc_mm ? json(*r.roc_mm) : json(nullptr);
    out.push_back(row);
  }
  Output(g).emit("design_table", json{{"rows", out}}, t);
}

struct MotorArgs {
  std::string axis = "rot";
  double setpoint_deg = 0.0;
  double start_deg = 0.0;
  double t_max = 60.0;
  bool constant_gain = false;
  int record_every = 1;
};

void run_motor_sim(const Globals& g, const MotorArgs& a) {
  const RobotConfig cfg = load_robot(g);
  const AxisConfig& ax = a.axis == "rot" ? cfg.rotational : cfg.translational;
  ControllerParams params = ax.params;
  if (a.constant_gain) params.scheduling = false;
  SimOptions opt;
  opt.t_max = a.t_max;
  opt.record_every = a.record_every;
  opt.start = std::llround(detail::counts_from_deg(a.start_deg, ax.plant));
  const auto setpoint = std::llround(detail::counts_from_deg(a.setpoint_deg, ax.plant));
  const MotorTrace tr = simulate_move(setpoint, ax.plant, params, opt);
  const LimitCycleReport lc = detect_limit_cycle(tr, params.delta);

  Table t{{"t_s", "position_deg", "err_counts", "voltage_v", "region"}, {}};
  for (const auto& s : tr.samples)
    t.add(s.t, detail::deg_from_counts(double(s.position), ax.plant), s.err, s.voltage,
          region_name(s.region));
  json doc{{"axis", a.axis},
           {"setpoint_counts", setpoint},
           {"start_counts", opt.start},
           {"scheduling", params.scheduling},
           {"settled", tr.settled},
           {"settle_time_s", tr.settle_time},
           {"oscillated", tr.oscillated},
           {"first_band_entry_s", tr.first_band_entry},
           {"entered_band_moving", tr.entered_band_moving},
           {"final_error_counts", tr.final_error},
           {"final_error_deg", detail::deg_from_counts(double(tr.final_error), ax.plant)},
           {"final_time_s", tr.final_time},
           {"quiescent_exit", tr.quiescent_exit},
           {"limit_cycle",
            {{"sustained", lc.sustained},
             {"sign_changes", lc.sign_changes},
             {"amplitude_counts", lc.amplitude}}}};
  Output(g).emit("motor_sim", doc, t);
}

struct EvacuateArgs {
  std::string phantom;
  std::string registration;
  bool unlimited = false;
  std::string save_phantom;
};

Transform read_registration(const fs::path& path) {
  const json j = io::read_json(path);
  try {
    return io::transform_from_json(j.is_object() ? j.at("transform") : j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void run_evacuate(const Globals& g, const EvacuateArgs& a) {
  const RobotConfig cfg = load_robot(g);
  const auto planner = cfg.planner();
  ClotPhantom ph = a.phantom.empty() ? default_phantom() : load_phantom(a.phantom);
  const Transform reg =
      a.registration.empty() ? Transform::identity() : read_registration(a.registration);
  EvacuationPolicy policy = cfg.evacuation_policy();
  if (a.unlimited) {
    policy.stop_ml = 0.0;
    policy.max_targets = std::numeric_limits<int>::max();
  }
  log(LogLevel::Info, "phantom " + io::fmt(ph.volume_ml()) + " mL");
  const EvacuationReport rep = run_evacuation(ph, reg, planner, policy);
  if (!a.save_phantom.empty()) save_phantom(ph, a.save_phantom);

  Table t{{"index", "target_x", "target_y", "target_z", "d_mm", "s_mm", "theta_rad",
           "theta_command_rad", "tip_error_mm", "removed_voxels", "residual_ml", "elapsed_s"},
          {}};
  for (const auto& l : rep.log)
    t.add(l.index, l.target.x(), l.target.y(), l.target.z(), l.nominal.d, l.nominal.s,
          l.nominal.theta, l.theta_command, l.tip_error, l.removed_voxels, l.residual_ml,
          l.elapsed_s);
  json doc{{"initial_ml", rep.initial_ml},
           {"final_ml", rep.final_ml},
           {"initial_voxels", rep.initial_voxels},
           {"final_voxels", rep.final_voxels},
           {"removed_voxels", rep.removed_voxels},
           {"n_targets", rep.n_targets},
           {"elapsed_sim_time_s", rep.elapsed_sim_time},
           {"success", rep.success},
           {"stalled", rep.stalled},
           {"termination", rep.termination}};
  Output(g).emit("evacuation", doc, t);
}

void run_register(const Globals& g, const std::string& image_csv, const std::string& robot_csv) {
  const auto image = io::read_points_csv(image_csv);
  const auto robot = io::read_points_csv(robot_csv);
  const RegistrationResult r = register_fiducials(image, robot);
  Table t{{"index", "residual_mm"}, {}};
  for (std::size_t i = 0; i < image.size(); ++i)
    t.add(i, (r.transform.apply(image[i]) - robot[i]).norm());
  json doc{{"transform", io::to_json(r.transform)},
           {"rms_fiducial_error_mm", r.rms_fiducial_error},
           {"fiducials", image.size()}};
  Output(g).emit("registration", doc, t);
}

void run_validate(const Globals& g, bool normalized) {
  if (g.config_path.empty())
    throw Error(ErrorCode::InvalidArgument, "validate-config: --config is required");
  ConfigLoad load = load_config(g.config_path);
  if (!load.ok()) throw ConfigRejected{load.issues};
  json warnings = json::array();
  for (const auto& i : load.issues) warnings.push_back(i.to_json());
  json doc{{"ok", true}, {"warnings", warnings}};
  if (normalized) doc["config"] = to_json(*load.config);
  Output(g).emit("validate_config", doc);
}

struct PhantomArgs {
  std::string out;
  double volume_ml = 38.36;
  bool bit = false;
};

void run_make_phantom(const Globals& g, const PhantomArgs& a) {
  const ClotPhantom ph = default_phantom(a.volume_ml);
  save_phantom(ph, a.out, a.bit ? RawEncoding::Bit : RawEncoding::Byte);
  json doc{{"header", a.out},
           {"volume_ml", ph.volume_ml()},
           {"voxels", ph.count()},
           {"dims", ph.dims()}};
  Output(g).emit("make_phantom", doc);
}

int fail(const std::string& code, const std::string& message, const json& extra = {}) {
  json e{{"code", code}, {"message", message}};
  if (!extra.is_null()) e.update(extra);
  std::cerr << json{{"error", e}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concentric tube robot modeling and simulation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Robot configuration JSON");
  app.add_option("--seed", g.seed, "Seed for randomized inputs");
  app.add_option("--out-dir", g.out_dir, "Directory for JSON and CSV outputs");
  app.add_option("--format", g.format, "stdout format")
      ->check(CLI::IsMember({"json", "csv", "md"}));

  FitShapeArgs fit;
  auto* c_fit = app.add_subcommand("fit-shape", "Fit a polynomial to a digitized centerline");
  c_fit->add_option("--centerline", fit.centerline, "CSV with x_mm,y_mm")->required();
  c_fit->add_option("--degree", fit.degree, "Polynomial degree (default: config)");

  std::vector<double> joints;
  auto* c_fk = app.add_subcommand("fk", "Forward kinematics");
  c_fk->add_option("--joints", joints, "d_mm,s_mm,theta_rad")
      ->required()->delimiter(',')->expected(3);

  IkArgs ik;
  auto* c_ik = app.add_subcommand("ik", "Inverse kinematics");
  auto* o_target = c_ik->add_option("--target", ik.target, "x,y,z in mm")->delimiter(',')->expected(3);
  auto* o_targets = c_ik->add_option("--targets", ik.targets_csv, "CSV of x,y,z targets");
  auto* o_random = c_ik->add_option("--random", ik.random, "N random targets in the default box");
  c_ik->add_option("--current", ik.current, "current d,s,theta")->delimiter(',')->expected(3);
  o_target->excludes(o_targets)->excludes(o_random);
  o_targets->excludes(o_random);

  TorsionArgs tor;
  auto* c_tor = app.add_subcommand("torsion", "Torsional deflection grid");
  c_tor->add_option("--s-step", tor.s_step, "insertion step [mm]");
  c_tor->add_option("--theta-max-deg", tor.theta_max_deg);
  c_tor->add_option("--theta-step-deg", tor.theta_step_deg);
  c_tor->add_option("--theta-current-deg", tor.theta_current_deg);
  c_tor->add_option("--s-current", tor.s_current, "current insertion [mm]");

  DesignArgs des;
  double roc = 0.0;
  auto* c_des = app.add_subcommand("design", "Tube design report");
  auto* o_table = c_des->add_flag("--table1", des.table1, "Material comparison table (default)");
  auto* o_pair = c_des->add_option("--pair", des.pair, "Tube pair JSON");
  auto* o_roc = c_des->add_option("--check-roc", roc, "Check a proposed RoC [mm]");
  o_table->excludes(o_pair)->excludes(o_roc);
  o_pair->excludes(o_roc);

  MotorArgs mot;
  auto* c_mot = app.add_subcommand("motor-sim", "Closed-loop motor step response");
  c_mot->add_option("--axis", mot.axis)->check(CLI::IsMember({"rot", "trans"}));
  c_mot->add_option("--setpoint-deg", mot.setpoint_deg)->required();
  c_mot->add_option("--start-deg", mot.start_deg);
  c_mot->add_option("--t-max", mot.t_max, "simulated seconds");
  c_mot->add_flag("--constant-gain", mot.constant_gain, "Kp = kp_const everywhere");
  c_mot->add_option("--record-every", mot.record_every, "keep every Nth servo sample");

  EvacuateArgs ev;
  auto* c_ev = app.add_subcommand("evacuate", "Simulated clot evacuation");
  c_ev->add_option("--phantom", ev.phantom, "Phantom header JSON (default ellipsoid if absent)");
  c_ev->add_option("--registration", ev.registration, "Image-to-robot transform JSON");
  c_ev->add_flag("--unlimited", ev.unlimited, "Ignore the stop volume and target cap");
  c_ev->add_option("--save-phantom", ev.save_phantom, "Write the residual phantom here");

  std::string reg_image, reg_robot;
  auto* c_reg = app.add_subcommand("register", "Rigid fiducial registration");
  c_reg->add_option("--image", reg_image, "CSV of image-frame fiducials")->required();
  c_reg->add_option("--robot", reg_robot, "CSV of robot-frame fiducials")->required();

  bool normalized = false;
  auto* c_val = app.add_subcommand("validate-config", "Check a configuration file");
  c_val->add_flag("--normalized", normalized, "Echo the configuration with defaults filled in");

  PhantomArgs pha;
  auto* c_pha = app.add_subcommand("make-phantom", "Write the default ellipsoidal phantom");
  c_pha->add_option("--out", pha.out, "Header JSON path")->required();
  c_pha->add_option("--volume-ml", pha.volume_ml);
  c_pha->add_flag("--bit", pha.bit, "Bit-packed raw file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 2;
  }

  try {
    if (*c_fit) run_fit_shape(g, fit);
    if (*c_fk) run_fk(g, joints);
    if (*c_ik) {
      if (ik.target.empty() && ik.targets_csv.empty() && ik.random <= 0)
        throw Error(ErrorCode::InvalidArgument, "ik: give --target, --targets or --random");
      run_ik(g, ik);
    }
    if (*c_tor) run_torsion(g, tor);
    if (*c_des) {
      if (*o_roc) des.check_roc = roc;
      run_design(g, des);
    }
    if (*c_mot) run_motor_sim(g, mot);
    if (*c_ev) run_evacuate(g, ev);
    if (*c_reg) run_register(g, reg_image, reg_robot);
    if (*c_val) run_validate(g, normalized);
    if (*c_pha) run_make_phantom(g, pha);
  } catch (const ConfigRejected& r) {
    json issues = json::array();
    for (const auto& i : r.issues) issues.push_back(i.to_json());
    return fail(std::string(to_string(ErrorCode::Config)), "configuration rejected",
                {{"issues", issues}});
  } catch (const Error& e) {
    return fail(std::string(to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
