#pragma once

// Strain-energy model of the straightening load the outer tube applies to
// the constrained part of the precurved inner tube, the friction torque it
// produces, and the resulting axial twist of the inner tube.

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "ctrkit/error.hpp"
#include "ctrkit/tube_shape.hpp"

namespace ctrkit {

/// Collects non-fatal warnings (e.g. strain above the elastic limit).
struct Diagnostics {
  std::vector<std::string> warnings;
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

struct MaterialModel {
  double elastic_modulus_gpa = 4.0;
  double shear_modulus_gpa = 2.7;
  double strain_limit = 0.10;
  double friction_mu = 0.17;

  /// N/mm^2
  double elastic_modulus() const { return elastic_modulus_gpa * 1000.0; }
  double shear_modulus() const { return shear_modulus_gpa * 1000.0; }

  void validate() const {
    if (!(elastic_modulus_gpa > 0.0) || !(shear_modulus_gpa > 0.0) ||
        !(strain_limit > 0.0) || !(friction_mu > 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "MaterialModel: all constants must be positive");
    if (strain_limit > 0.15)
      throw Error(ErrorCode::InvalidArgument,
                  "MaterialModel: strain_limit above 0.15 sanity bound");
  }
};

struct TubeSpec {
  double r_od = 3.0;              ///< outer radius [mm]
  double r_id = 2.0;              ///< inner radius [mm]
  double length_total = 300.0;    ///< L_i [mm]
  double deflectable_arc = 29.0;  ///< s_max [mm]

  void validate() const {
    if (!(r_id > 0.0 && r_id < r_od))
      throw Error(ErrorCode::InvalidArgument, "TubeSpec: need 0 < r_id < r_od");
    if (!(deflectable_arc > 0.0) || deflectable_arc > length_total)
      throw Error(ErrorCode::InvalidArgument,
                  "TubeSpec: need 0 < deflectable_arc <= length_total");
  }

  /// Second area moment of the annulus about a diameter [mm^4].
  double second_moment() const {
    return std::numbers::pi * (std::pow(r_od, 4) - std::pow(r_id, 4)) / 4.0;
  }
  /// Polar second moment J = pi (d_o^4 - d_i^4) / 32 [mm^4].
  double polar_moment() const {
    const double d_o = 2.0 * r_od;
    const double d_i = 2.0 * r_id;
    return std::numbers::pi * (std::pow(d_o, 4) - std::pow(d_i, 4)) / 32.0;
  }
};

/// Strain of an axial fiber at distance y from the section origin, with the
/// neutral plane at y_bar. The axis-symmetric tube has y_bar = 0: eps = kappa y.
inline double fiber_strain(double y, double kappa, double y_bar = 0.0) {
  return kappa * (y - y_bar) / (1.0 + y_bar * kappa);
}

/// Linear-elastic strain energy density E eps^2 / 2 [N/mm^2 == mJ/mm^3].
inline double strain_energy_density(double strain, const MaterialModel& material,
                                     Diagnostics* diag = nullptr) {
  if (diag && std::abs(strain) > material.strain_limit) {
    std::ostringstream os;
    os << "strain " << strain << " exceeds elastic limit " << material.strain_limit;
    diag->warn(os.str());
  }
  return 0.5 * material.elastic_modulus() * strain * strain;
}

/// Area element used in the cross-section integral. Polar is r dr dphi;
/// Literal drops the Jacobian r (dr dphi), kept for comparison only.
enum class AreaElement { Polar, Literal };

/// Section integral  int int W(eps(r sin phi, kappa)) dA  over the annulus,
/// evaluated numerically (Gauss-Legendre in r, periodic trapezoid in phi).
inline double section_energy(double kappa, const TubeSpec& tube,
                             const MaterialModel& material,
                             AreaElement element = AreaElement::Polar,
                             Diagnostics* diag = nullptr) {
  constexpr int kAngular = 64;
  const double half = 0.5 * (tube.r_od - tube.r_id);
  const double mid = 0.5 * (tube.r_od + tube.r_id);
  auto ring = [&](double r) {
    double acc = 0.0;
    for (int k = 0; k < kAngular; ++k) {
      const double phi = 2.0 * std::numbers::pi * double(k) / kAngular;
      acc += strain_energy_density(fiber_strain(r * std::sin(phi), kappa), material);
    }
    acc *= 2.0 * std::numbers::pi / kAngular;
    return element == AreaElement::Polar ? acc * r : acc;
  };
  using boost::math::quadrature::gauss;
  const double value =
      half * gauss<double, 20>::integrate([&](double t) { return ring(mid + half * t); },
                                          -1.0, 1.0);
  if (diag) strain_energy_density(kappa * tube.r_od, material, diag);
  return value;
}

/// Bending stiffness factor S of the section, such that the section integral
/// equals E kappa^2 S / 2. Polar: the area moment I. Literal: pi (ro^3 - ri^3)/3.
inline double section_factor(const TubeSpec& tube, AreaElement element) {
  if (element == AreaElement::Polar) return tube.second_moment();
  return std::numbers::pi * (std::pow(tube.r_od, 3) - std::pow(tube.r_id, 3)) / 3.0;
}

/// Energy stored by straightening a segment of length ds with curvature kappa.
inline double segment_energy(double kappa, double ds, const TubeSpec& tube,
                             const MaterialModel& material,
                             AreaElement element = AreaElement::Polar,
                             Diagnostics* diag = nullptr) {
  return ds * section_energy(kappa, tube, material, element, diag);
}

/// Segment energy over [x1, x2] of a curve, curvature taken at x1.
template <PlanarCurve C>
double segment_energy(const C& curve, double x1, double x2, const TubeSpec& tube,
                      const MaterialModel& material,
                      AreaElement element = AreaElement::Polar,
                      Diagnostics* diag = nullptr) {
  return segment_energy(curve.curvature(x1), curve.arc_length(x1, x2), tube, material,
                        element, diag);
}

inline double segment_energy_closed_form(double kappa, double ds, const TubeSpec& tube,
                                         const MaterialModel& material,
                                         AreaElement element = AreaElement::Polar) {
  return ds * 0.5 * material.elastic_modulus() * kappa * kappa *
         section_factor(tube, element);
}

/// d(dU)/d(kappa) under the linear material law: ds E kappa S.
inline double segment_energy_gradient(double kappa, double ds, const TubeSpec& tube,
                                      const MaterialModel& material,
                                      AreaElement element = AreaElement::Polar) {
  return ds * material.elastic_modulus() * kappa * section_factor(tube, element);
}

struct TorsionOptions {
  int segments = 100;
  AreaElement element = AreaElement::Polar;
};

struct StraighteningLoad {
  double force = 0.0;               ///< resultant F [N]
  double resultant_location = 0.0;  ///< from the proximal end of the precurve [mm]
  double constrained_arc = 0.0;     ///< precurved arc still inside the outer tube [mm]
};

/// Resultant of the load that keeps the first `constrained_arc` millimetres of
/// the precurve straight. Each grid segment j contributes the moment
/// M_j = (1/ds_j) d(dU_j)/d(kappa_j) needed to straighten it, as a line load
/// |M_j| ds_j / lever^2, so the total converges under grid refinement and
/// reduces to E I kappa / lever for a uniform arc of length `lever`.
template <PlanarCurve C>
StraighteningLoad constrained_load(const C& curve, double constrained_arc, double lever,
                                   const TubeSpec& tube, const MaterialModel& material,
                                   const TorsionOptions& opt = {}) {
  if (opt.segments < 1)
    throw Error(ErrorCode::InvalidArgument, "constrained_load: n must be >= 1");
  if (!(lever > 0.0))
    throw Error(ErrorCode::InvalidArgument, "constrained_load: lever must be > 0");
  StraighteningLoad out;
  out.constrained_arc = constrained_arc;
  if (constrained_arc <= 0.0) return out;

  const double x_max_t = x_at_arc(curve, constrained_arc);
  const double n = static_cast<double>(opt.segments);
  double x_prev = 0.0;
  double sigma_prev = 0.0;  // arc from the proximal end to x_prev
  double moment_sum = 0.0;
  for (int j = 1; j <= opt.segments; ++j) {
    const double x_j = j == opt.segments ? x_max_t : (double(j) / n) * x_max_t;
    const double ds = curve.arc_length(x_prev, x_j);
    const double kappa = curve.curvature(x_prev);
    const double grad = segment_energy_gradient(kappa, ds, tube, material, opt.element);
    const double df = std::abs(grad) / (lever * lever);
    out.force += df;
    moment_sum += df * sigma_prev;
    sigma_prev += ds;
    x_prev = x_j;
  }
  out.resultant_location = out.force > 0.0 ? moment_sum / out.force : 0.0;
  return out;
}

/// Straightening load at insertion s: the precurved arc still inside the outer
/// tube is s_max - s, measured from the proximal end of the precurved region.
template <PlanarCurve C>
StraighteningLoad straightening_force(const C& curve, double s, const TubeSpec& tube,
                                      const MaterialModel& material,
                                      const TorsionOptions& opt = {}) {
  const double s_max = curve.arc_total();
  s = detail::checked_arc(s, s_max, "straightening_force");
  return constrained_load(curve, s_max - s, s_max, tube, material, opt);
}

/// Friction torque mu F r_od [N mm].
inline double resistive_torque(double force, const TubeSpec& tube,
                               const MaterialModel& material) {
  if (force < 0.0)
    throw Error(ErrorCode::DomainError, "resistive_torque: force must be >= 0");
  return material.friction_mu * force * tube.r_od;
}

struct TorsionState {
  double phi = 0.0;     ///< twist between tube base and resultant [rad]
  double torque = 0.0;  ///< [N mm]
  StraighteningLoad load;
};

template <PlanarCurve C>
TorsionState torsion_state(const C& curve, double s, const TubeSpec& tube,
                           const MaterialModel& material, const TorsionOptions& opt = {}) {
  TorsionState st;
  st.load = straightening_force(curve, s, tube, material, opt);
  st.torque = resistive_torque(st.load.force, tube, material);
  if (st.torque == 0.0) return st;
  const double arm = tube.length_total - st.load.resultant_location - s;
  st.phi = st.torque * arm / (tube.polar_moment() * material.shear_modulus());
  return st;
}

/// Axial twist phi(s) = T(s) (L_i - L_resultant(s) - s) / (J G) [rad].
template <PlanarCurve C>
double torsional_deflection(const C& curve, double s, const TubeSpec& tube,
                            const MaterialModel& material, const TorsionOptions& opt = {}) {
  return torsion_state(curve, s, tube, material, opt).phi;
}

}  // namespace ctrkit
