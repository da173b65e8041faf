#include "wlsremap/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wlsremap/error.hpp"

namespace wlsr {

namespace {
constexpr double kPi = std::numbers::pi;
}

SphericalCoords to_spherical(const Vec3& p) {
  const double r = norm(p);
  if (std::abs(r - 1.0) > 1e-10) throw Error(ErrorCode::NotOnSphere, "point is not on the unit sphere");
  SphericalCoords s;
  s.theta = std::acos(std::clamp(p.z, -1.0, 1.0));
  if (p.x == 0.0 && p.y == 0.0) return s;
  s.phi = std::atan2(p.y, p.x);
  if (s.phi < 0.0) s.phi += 2.0 * kPi;
  if (s.phi >= 2.0 * kPi) s.phi = 0.0;
  return s;
}

double eval_f3(double theta) {
  if (theta < 0.87) return 1.0;
  if (theta < kPi / 2) return 1.0 - 0.8 * (theta - 0.87);
  if (theta < 2.27) return 0.44;
  if (theta < 2.83) return 0.24;
  return 0.12;
}

double eval_f4(double theta, double phi) {
  const double g = phi < kPi ? -2000.0 : 2000.0;
  double shape = 0.0;
  if (theta < kPi / 4) {
    shape = 0.0;
  } else if (theta < kPi / 2) {
    shape = -4.0 * (theta / kPi - 0.5);
  } else if (theta < 3 * kPi / 4) {
    shape = 4.0 * (theta / kPi - 0.5);
  } else if (theta < 7 * kPi / 8) {
    shape = 1.0;
  } else {
    shape = -64.0 * theta * theta / (kPi * kPi) + 112.0 * theta / kPi - 48.0;
  }
  return -1000.0 + g * shape;
}

AnalyticField AnalyticField::constant(double c) {
  AnalyticField f(FieldKind::Constant);
  f.constant_ = c;
  return f;
}

AnalyticField AnalyticField::polynomial(std::vector<double> coeffs) {
  AnalyticField f(FieldKind::PolynomialUV);
  f.coeffs_ = std::move(coeffs);
  return f;
}

AnalyticField AnalyticField::from_name(const std::string& name) {
  if (name == "f1") return f1();
  if (name == "f2") return f2();
  if (name == "f3") return f3();
  if (name == "f4") return f4();
  if (name == "const") return constant(1.0);
  if (name.rfind("const:", 0) == 0) {
    try {
      return constant(std::stod(name.substr(6)));
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown field '" + name + "'");
}

std::string AnalyticField::name() const {
  switch (kind_) {
    case FieldKind::F1: return "f1";
    case FieldKind::F2: return "f2";
    case FieldKind::F3: return "f3";
    case FieldKind::F4: return "f4";
    case FieldKind::Constant: return "const";
    case FieldKind::PolynomialUV: return "polynomial";
  }
  return "unknown";
}

double AnalyticField::operator()(const Vec3& p) const {
  switch (kind_) {
    case FieldKind::F1:
      return (std::sin(kPi * p.x) + std::cos(kPi * p.y)) * p.z;
    case FieldKind::F2: {
      const double x2 = p.x * p.x, y2 = p.y * p.y;
      return (11.0 * p.z * p.z - 1.0) * (x2 * x2 - 6.0 * x2 * y2 + y2 * y2);
    }
    case FieldKind::F3:
      return eval_f3(to_spherical(p).theta);
    case FieldKind::F4: {
      const auto s = to_spherical(p);
      return eval_f4(s.theta, s.phi);
    }
    case FieldKind::Constant:
      return constant_;
    case FieldKind::PolynomialUV: {
      double sum = 0.0;
      std::size_t k = 0;
      for (int degree = 0; k < coeffs_.size(); ++degree) {
        for (int j = degree; j >= 0 && k < coeffs_.size(); --j, ++k) {
          sum += coeffs_[k] * std::pow(p.x, j) * std::pow(p.y, degree - j);
        }
      }
      return sum;
    }
  }
  return 0.0;
}

std::vector<double> AnalyticField::sample(std::span<const Vec3> points) const {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = (*this)(points[i]);
  return out;
}

ErrorNorms error_norms(std::span<const double> values, std::span<const double> exact) {
  if (values.size() != exact.size() || values.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "error norms need equal, nonzero lengths");
  }
  ErrorNorms e;
  double sq = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - exact[i];
    sq += d * d;
    e.l1 += std::abs(d);
    e.linf = std::max(e.linf, std::abs(d));
  }
  e.l2 = std::sqrt(sq / static_cast<double>(values.size()));
  e.l1 /= static_cast<double>(values.size());
  return e;
}

double convergence_rate(double err_coarse, std::size_t n_coarse, double err_fine, std::size_t n_fine) {
  if (!(err_coarse > 0.0) || !(err_fine > 0.0)) {
    throw Error(ErrorCode::NonPositiveError, "convergence rate needs positive errors");
  }
  if (n_fine <= n_coarse) throw Error(ErrorCode::InvalidArgument, "fine mesh must have more nodes");
  return 2.0 * std::log(err_coarse / err_fine) /
         std::log(static_cast<double>(n_fine) / static_cast<double>(n_coarse));
}

}  // namespace wlsr
