#pragma once

// Elastic feasibility of precurved tubes: maximum precurvature under a strain
// limit, the residual curvature allowed by outer-tube clearance, and the
// bending stiffness / straightening force report.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctrkit/error.hpp"
#include "ctrkit/numerics.hpp"
#include "ctrkit/torsion.hpp"
#include "ctrkit/tube_shape.hpp"

namespace ctrkit {

struct TubeModel {
  TubeSpec geometry;
  MaterialModel material;
};

struct TubePair {
  TubeModel inner;
  TubeModel outer;

  /// Diametral clearance D_ID,o - 2 r_OD,i [mm].
  double clearance() const { return 2.0 * outer.geometry.r_id - 2.0 * inner.geometry.r_od; }

  void validate() const {
    inner.geometry.validate();
    outer.geometry.validate();
    inner.material.validate();
    outer.material.validate();
    if (clearance() < -1e-12) {
      std::ostringstream os;
      os << "TubePair: inner OD " << 2.0 * inner.geometry.r_od
         << " mm exceeds outer ID " << 2.0 * outer.geometry.r_id << " mm";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
};

/// Largest precurvature that straightens without exceeding the strain limit:
/// kappa_o = eps_limit / r_od + kappa_limit (bend toward -y).
inline double max_precurvature(const MaterialModel& material, double r_od,
                               double kappa_limit = 0.0) {
  if (!(r_od > 0.0))
    throw Error(ErrorCode::InvalidArgument, "max_precurvature: r_od must be > 0");
  return material.strain_limit / r_od + kappa_limit;
}

/// y-residual of a tube retracted into the outer tube with curvature kappa:
/// the outer fiber at the distal end, offset by d_y, must touch the far wall.
inline double kappa_limit_residual(double kappa, double s_max, double r_od_inner,
                                   double d_y) {
  const double a = kappa * s_max;
  const double sag = std::abs(a) < 1e-8 ? -kappa * s_max * s_max / 2.0
                                        : (std::cos(a) - 1.0) / kappa;
  return sag - r_od_inner * std::cos(a) + d_y;
}

/// Residual curvature the inner tube can keep while fully inside the outer
/// tube. Zero-clearance pairs return exactly 0.
inline double kappa_limit(const TubePair& pair, double s_max) {
  if (!(s_max > 0.0))
    throw Error(ErrorCode::InvalidArgument, "kappa_limit: s_max must be > 0");
  pair.validate();
  const double r = pair.inner.geometry.r_od;
  const double d_y = 2.0 * pair.outer.geometry.r_id - r;
  if (pair.clearance() <= 0.0) return 0.0;
  auto g = [&](double k) { return kappa_limit_residual(k, s_max, r, d_y); };
  // Scan out to a half turn of bend for the first sign change.
  constexpr int kScan = 2000;
  const double k_hi = std::numbers::pi / s_max;
  double lo = 0.0;
  double g_lo = g(lo);
  for (int i = 1; i <= kScan; ++i) {
    const double hi = k_hi * double(i) / kScan;
    const double g_hi = g(hi);
    if (std::signbit(g_hi) != std::signbit(g_lo))
      return numerics::find_root(g, lo, hi, "kappa_limit");
    lo = hi;
    g_lo = g_hi;
  }
  std::ostringstream os;
  os << "kappa_limit: no sign change for kappa in (0, " << k_hi << "] (clearance "
     << pair.clearance() << " mm, s_max " << s_max << " mm, residual at end " << g_lo
     << ")";
  throw Error(ErrorCode::NumericFailure, os.str());
}

struct BendingReport {
  double stiffness = 0.0;   ///< F_bend per radian of total bend [N/rad]
  double force = 0.0;       ///< tip force to straighten the curved region [N]
  double bend_angle = 0.0;  ///< integral of kappa over the curved region [rad]
  double length = 0.0;      ///< LoC [mm]
};

/// Straightening force of the whole curved region, with the tip as moment arm,
/// and the stiffness F_bend / bend angle.
template <PlanarCurve C>
BendingReport bending_report(const C& curve, const TubeSpec& tube,
                             const MaterialModel& material, const TorsionOptions& opt = {}) {
  BendingReport rep;
  rep.length = curve.arc_total();
  rep.force = constrained_load(curve, rep.length, rep.length, tube, material, opt).force;
  const double n = double(opt.segments);
  const double x_max = curve.x_max_total();
  double x_prev = 0.0;
  for (int j = 1; j <= opt.segments; ++j) {
    const double x_j = j == opt.segments ? x_max : (double(j) / n) * x_max;
    rep.bend_angle += curve.curvature(x_prev) * curve.arc_length(x_prev, x_j);
    x_prev = x_j;
  }
  rep.stiffness = rep.bend_angle != 0.0 ? rep.force / std::abs(rep.bend_angle) : 0.0;
  return rep;
}

/// Constant-curvature tube of radius `roc` over length `loc`.
inline BendingReport bending_report(const TubeSpec& tube, const MaterialModel& material,
                                    double roc, double loc, const TorsionOptions& opt = {}) {
  if (!(roc > 0.0) || !(loc > 0.0))
    throw Error(ErrorCode::InvalidArgument, "bending_report: RoC and LoC must be > 0");
  return bending_report(ConstantCurvatureShape(1.0 / roc, loc), tube, material, opt);
}

struct DesignRow {
  std::string label;
  double elastic_modulus_gpa = 0.0;
  double od_mm = 0.0;
  double id_mm = 0.0;
  std::optional<double> roc_mm;  ///< empty for a variable-curvature shape
  double loc_mm = 0.0;
  BendingReport report;
};

inline DesignRow design_row(std::string label, double e_gpa, double od, double id,
                            double roc, double loc) {
  TubeSpec tube{od / 2.0, id / 2.0, 300.0, loc};
  MaterialModel mat;
  mat.elastic_modulus_gpa = e_gpa;
  return {std::move(label), e_gpa, od, id, roc, loc, bending_report(tube, mat, roc, loc)};
}

/// Reference comparison: small nitinol tube, nitinol and nylon at the 6/4 mm
/// clinical diameters with the same 20 mm RoC / 27 mm LoC, and optionally the
/// characterized nylon tube.
template <PlanarCurve C>
std::vector<DesignRow> comparison_table(const C* characterized,
                                        const MaterialModel& nylon = {}) {
  std::vector<DesignRow> rows;
  rows.push_back(design_row("nitinol_small", 74.0, 2.2, 1.5, 20.0, 27.0));
  rows.push_back(design_row("nitinol_clinical", 74.0, 6.0, 4.0, 20.0, 27.0));
  rows.push_back(design_row("nylon_clinical", nylon.elastic_modulus_gpa, 6.0, 4.0, 20.0, 27.0));
  if (characterized) {
    TubeSpec tube{3.0, 2.0, 300.0, characterized->arc_total()};
    DesignRow r{"nylon_characterized", nylon.elastic_modulus_gpa, 6.0, 4.0,
                std::nullopt, characterized->arc_total(),
                bending_report(*characterized, tube, nylon)};
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Shape retention after repeated straightening: pass iff the relative change
/// in radius of curvature is within `tolerance`.
inline bool cycling_retention_check(double initial_roc, double measured_roc_after,
                                    double tolerance = 0.05) {
  if (!(initial_roc > 0.0) || !(measured_roc_after > 0.0))
    throw Error(ErrorCode::InvalidArgument,
                "cycling_retention_check: radii must be > 0");
  if (tolerance < 0.0)
    throw Error(ErrorCode::InvalidArgument,
                "cycling_retention_check: tolerance must be >= 0");
  return std::abs(measured_roc_after - initial_roc) / initial_roc <= tolerance;
}

}  // namespace ctrkit
