#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wlsremap/mesh.hpp"

namespace wlsr {

struct SphericalCoords {
  double theta = 0.0;  // polar angle in [0, pi]
  double phi = 0.0;    // azimuth in [0, 2 pi); 0 at the poles
};

/// Throws Error(NotOnSphere) unless |point| = 1 within 1e-10.
SphericalCoords to_spherical(const Vec3& point);

enum class FieldKind {
  F1,            // (sin(pi x) + cos(pi y)) z
  F2,            // Re(e^{4 i phi} sin^4 theta (11 cos^2 theta - 1))
  F3,            // interacting waves: piecewise in theta
  F4,            // crossing waves: piecewise in theta times a jump in phi
  Constant,
  PolynomialUV,  // sum c_k x^a y^b in graded lexicographic order
};

/// Closed-form test field on the unit sphere or the z = 0 plane.
class AnalyticField {
 public:
  static AnalyticField f1() { return AnalyticField(FieldKind::F1); }
  static AnalyticField f2() { return AnalyticField(FieldKind::F2); }
  static AnalyticField f3() { return AnalyticField(FieldKind::F3); }
  static AnalyticField f4() { return AnalyticField(FieldKind::F4); }
  static AnalyticField constant(double c);
  /// Coefficients over monomials 1, x, y, x^2, xy, y^2, x^3, ... evaluated at (x, y).
  static AnalyticField polynomial(std::vector<double> coeffs);

  /// Accepts f1..f4, const, or const:<value>.
  static AnalyticField from_name(const std::string& name);

  FieldKind kind() const noexcept { return kind_; }
  std::string name() const;

  double operator()(const Vec3& point) const;

  std::vector<double> sample(std::span<const Vec3> points) const;
  std::vector<double> sample(const SurfaceMesh& mesh) const { return sample(mesh.nodes()); }

 private:
  explicit AnalyticField(FieldKind kind) : kind_(kind) {}

  FieldKind kind_;
  double constant_ = 0.0;
  std::vector<double> coeffs_;
};

double eval_f3(double theta);
double eval_f4(double theta, double phi);

struct ErrorNorms {
  double l2 = 0.0;    // ||e||_2 / sqrt(N)
  double linf = 0.0;  // max |e_i|
  double l1 = 0.0;    // ||e||_1 / N
};

ErrorNorms error_norms(std::span<const double> values, std::span<const double> exact);

/// 2 log(err_coarse / err_fine) / log(n_fine / n_coarse).
double convergence_rate(double err_coarse, std::size_t n_coarse, double err_fine, std::size_t n_fine);

}  // namespace wlsr
