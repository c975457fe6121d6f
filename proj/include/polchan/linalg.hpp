#pragma once

#include <algorithm>
#include <array>
#include <complex>

#include <Eigen/Dense>

namespace polchan {

using cd = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;
using Mat4c = Eigen::Matrix4cd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

/// Default tolerances. `exact` applies to quantities that are exactly
/// representable; `input` to validation of user-supplied data.
struct Tolerances {
  double exact = 1e-12;
  double input = 1e-9;
};

/// Pauli operators in Stokes order: sigma(0) = I, sigma(1) = Z (h/v axis),
/// sigma(2) = X (p/m axis), sigma(3) = Y (r/l axis).
const Mat2c& sigma(int index);

/// All four operators, same order as sigma().
const std::array<Mat2c, 4>& pauli_basis();

/// Square root of a Hermitian PSD matrix. Eigenvalues in [-clamp, 0) are
/// treated as zero; anything more negative is also clamped but reported via
/// `min_eigenvalue` when requested.
template <int N>
Eigen::Matrix<cd, N, N> psd_sqrt(const Eigen::Matrix<cd, N, N>& m,
                                 double* min_eigenvalue = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cd, N, N>> es(m);
  Eigen::Matrix<double, N, 1> ev = es.eigenvalues();
  if (min_eigenvalue != nullptr) *min_eigenvalue = ev.minCoeff();
  for (int i = 0; i < N; ++i) ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
template <int N>
Eigen::Matrix<double, N, 1> sorted_eigenvalues(const Eigen::Matrix<cd, N, N>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cd, N, N>> es(m, Eigen::EigenvaluesOnly);
  Eigen::Matrix<double, N, 1> ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + N, [](double a, double b) { return a > b; });
  return ev;
}

template <int N>
double hermiticity_error(const Eigen::Matrix<cd, N, N>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace polchan
