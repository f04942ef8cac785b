#pragma once

// Voltage -> strain model for the electrostatically actuated diamond
// cantilever: parallel-plate load, Euler-Bernoulli bending, uniaxial strain
// tensor in the crystal frame, rotation into the SiV defect frame.

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "sivnems/constants.hpp"

namespace sivnems {

struct CantileverGeometry {
  double length_um = 50.0;
  double width_um = 6.0;
  double thickness_um = 1.0;
  double gap_um = 1.0;          // electrode gap g0
  double youngs_gpa = 1050.0;   // diamond
  double poisson = 0.11;
  double emitter_x_um = 2.0;    // axial position from the base
  double emitter_depth_um = 0.0;  // below the top surface

  void validate() const {
    if (!(length_um > 0.0 && width_um > 0.0 && thickness_um > 0.0 && gap_um > 0.0))
      throw std::invalid_argument("CantileverGeometry: lengths must be > 0");
    if (!(youngs_gpa > 0.0))
      throw std::invalid_argument("CantileverGeometry: Young modulus must be > 0");
    if (!(poisson >= 0.0 && poisson < 0.5))
      throw std::invalid_argument("CantileverGeometry: Poisson ratio must be in [0, 0.5)");
    if (!(emitter_x_um >= 0.0 && emitter_x_um <= length_um))
      throw std::invalid_argument("CantileverGeometry: emitter position outside beam");
    if (!(emitter_depth_um >= 0.0 && emitter_depth_um <= thickness_um))
      throw std::invalid_argument("CantileverGeometry: emitter depth outside beam");
  }

  double second_moment_m4() const {
    const double w = width_um * 1e-6;
    const double t = thickness_um * 1e-6;
    return w * t * t * t / 12.0;
  }
};

// Parallel-plate electrostatic load per unit length, N/m:
//   q = eps0 * w * V^2 / (2 g0^2)
inline double electrostatic_load_n_per_m(double voltage_v, const CantileverGeometry& geom) {
  if (!std::isfinite(voltage_v))
    throw std::invalid_argument("electrostatic_load: non-finite voltage");
  geom.validate();
  const double w = geom.width_um * 1e-6;
  const double g0 = geom.gap_um * 1e-6;
  return kVacuumPermittivity * w * voltage_v * voltage_v / (2.0 * g0 * g0);
}

// Tip deflection of a uniformly loaded cantilever, metres: q L^4 / (8 E I).
inline double tip_deflection_m(double voltage_v, const CantileverGeometry& geom) {
  const double q = electrostatic_load_n_per_m(voltage_v, geom);
  const double L = geom.length_um * 1e-6;
  const double E = geom.youngs_gpa * 1e9;
  return q * L * L * L * L / (8.0 * E * geom.second_moment_m4());
}

struct ModelValidity {
  double deflection_over_gap = 0.0;
  double strain_at_emitter = 0.0;
  bool small_deflection_ok = true;  // tip deflection < 10% of the gap
  bool linear_elastic_ok = true;    // |strain| < 1e-2
};

inline double axial_surface_strain(double x_um, double voltage_v,
                                   const CantileverGeometry& geom) {
  geom.validate();
  if (!(x_um >= 0.0 && x_um <= geom.length_um))
    throw std::invalid_argument("axial_surface_strain: x outside beam");
  const double q = electrostatic_load_n_per_m(voltage_v, geom);
  const double x = x_um * 1e-6;
  const double L = geom.length_um * 1e-6;
  const double moment = q * (L - x) * (L - x) / 2.0;
  const double lever = (geom.thickness_um / 2.0 - geom.emitter_depth_um) * 1e-6;
  const double E = geom.youngs_gpa * 1e9;
  return lever * moment / (E * geom.second_moment_m4());
}

inline ModelValidity check_model_limits(double voltage_v, const CantileverGeometry& geom) {
  ModelValidity v;
  v.deflection_over_gap = tip_deflection_m(voltage_v, geom) / (geom.gap_um * 1e-6);
  v.strain_at_emitter = axial_surface_strain(geom.emitter_x_um, voltage_v, geom);
  v.small_deflection_ok = v.deflection_over_gap < 0.10;
  v.linear_elastic_ok = std::abs(v.strain_at_emitter) < 1e-2;
  return v;
}

// Uniaxial strain tensor along unit direction u with isotropic Poisson
// contraction on the orthogonal complement:
//   eps * (u u^T) - nu * eps * (I - u u^T),  trace = eps (1 - 2 nu).
inline Eigen::Matrix3d crystal_strain_tensor(double eps_axial, const Eigen::Vector3d& long_axis,
                                             double poisson) {
  if (std::abs(long_axis.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("crystal_strain_tensor: long_axis must be a unit vector");
  if (!(poisson >= 0.0 && poisson < 0.5))
    throw std::invalid_argument("crystal_strain_tensor: Poisson ratio out of range");
  const Eigen::Matrix3d proj = long_axis * long_axis.transpose();
  return eps_axial * proj - poisson * eps_axial * (Eigen::Matrix3d::Identity() - proj);
}

// Internal axes of one SiV orientation: z along a <111>-family symmetry axis,
// x and y completing a right-handed orthonormal frame.
struct SivOrientation {
  Eigen::Vector3d x_axis;
  Eigen::Vector3d y_axis;
  Eigen::Vector3d z_axis;

  void validate(double tol = 1e-12) const {
    Eigen::Matrix3d r = rotation();
    if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("SivOrientation: frame not orthonormal");
    if (r.determinant() < 0.0)
      throw std::invalid_argument("SivOrientation: frame not right-handed");
  }

  // Rows are the defect axes expressed in crystal coordinates.
  Eigen::Matrix3d rotation() const {
    Eigen::Matrix3d r;
    r.row(0) = x_axis;
    r.row(1) = y_axis;
    r.row(2) = z_axis;
    return r;
  }

  // Build the frame from the symmetry axis alone; the transverse axes are
  // chosen deterministically (x along the axis's projection-free companion).
  static SivOrientation from_axis(const Eigen::Vector3d& axis) {
    if (axis.norm() < 1e-12)
      throw std::invalid_argument("SivOrientation: zero axis");
    SivOrientation o;
    o.z_axis = axis.normalized();
    Eigen::Vector3d seed = std::abs(o.z_axis.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                                        : Eigen::Vector3d::UnitY();
    o.x_axis = (seed - seed.dot(o.z_axis) * o.z_axis).normalized();
    o.y_axis = o.z_axis.cross(o.x_axis);
    return o;
  }

  // The transverse class addressed in this device: axis along [-1, 1, 1]/sqrt(3),
  // orthogonal to the [110] cantilever long axis.
  static SivOrientation transverse_default() {
    return from_axis(Eigen::Vector3d(-1.0, 1.0, 1.0));
  }
};

// Similarity transform of the strain tensor into the defect frame: R eps R^T.
inline Eigen::Matrix3d to_defect_frame(const Eigen::Matrix3d& strain,
                                       const SivOrientation& orient) {
  orient.validate();
  if ((strain - strain.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("to_defect_frame: strain tensor not symmetric");
  const Eigen::Matrix3d r = orient.rotation();
  Eigen::Matrix3d out = r * strain * r.transpose();
  return 0.5 * (out + out.transpose());  // remove rounding asymmetry
}

}  // namespace sivnems
