#pragma once

#include "qlev/model.hpp"

namespace qlev {

inline double sech(double x) {
  const double e = std::exp(-std::abs(x));
  return 2.0 * e / (1.0 + e * e);
}

inline cplx eta_plus(double s) { return {std::tanh(pi * s), sech(pi * s)}; }
inline cplx eta_minus(double s) { return {std::tanh(pi * s), -sech(pi * s)}; }

/// -tanh(pi s) + i sech(pi s)
inline cplx phi_function(double s) { return {-std::tanh(pi * s), sech(pi * s)}; }

/// sqrt(pi) (cosh(pi y/2) - i sinh(pi y/2)) / cosh(pi y), in exponentially scaled form.
inline cplx psi(double y) {
  const double a = pi * std::abs(y);
  const double e1 = std::exp(-a / 2.0), e2 = std::exp(-a), e4 = std::exp(-2.0 * a);
  const double c = e1 * (1.0 + e2) / (1.0 + e4);
  const double s = std::copysign(e1 * (1.0 - e2) / (1.0 + e4), y);
  return std::sqrt(pi) * cplx(c, -s);
}

inline cplx psi_bar(double y) { return std::conj(psi(y)); }

/// Closed form of det [[a,b,-c,c],[b,a,-c,c],[-d,-d,e,f],[d,d,f,e]].
inline cplx det4_structured(cplx a, cplx b, cplx c, cplx d, cplx e, cplx f) {
  return (b - a) * (f + e) * (4.0 * c * d + (b + a) * (f - e));
}

inline Eigen::Matrix4cd structured_matrix(cplx a, cplx b, cplx c, cplx d, cplx e, cplx f) {
  Eigen::Matrix4cd m;
  m << a, b, -c, c,
       b, a, -c, c,
       -d, -d, e, f,
       d, d, f, e;
  return m;
}

}  // namespace qlev
