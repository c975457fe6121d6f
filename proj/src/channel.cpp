#include "polchan/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "polchan/error.hpp"

namespace polchan {

namespace {

using Mat16c = Eigen::Matrix<cd, 16, 16>;
using Vec16c = Eigen::Matrix<cd, 16, 1>;

// Linear map vec(chi) -> vec(R) where R is the 4x4 Pauli transfer matrix
// R_mn = tr(sigma_m E(sigma_n)) / 2.
struct TransferMap {
  Mat16c forward;
  Mat16c inverse;

  TransferMap() {
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            forward(m * 4 + n, a * 4 + b) =
                0.5 * (sigma(m) * sigma(a) * sigma(n) * sigma(b)).trace();
    inverse = forward.fullPivLu().inverse();
  }
};

const TransferMap& transfer_map() {
  static const TransferMap map;
  return map;
}

Eigen::Matrix4d transfer_matrix(const ProcessMatrix& chi) {
  Vec16c v;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) v(a * 4 + b) = chi(a, b);
  Vec16c r = transfer_map().forward * v;
  Eigen::Matrix4d out;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out(m, n) = r(m * 4 + n).real();
  return out;
}

ProcessMatrix chi_from_transfer(const Eigen::Matrix4d& r) {
  Vec16c v;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) v(m * 4 + n) = r(m, n);
  Vec16c c = transfer_map().inverse * v;
  Mat4c chi;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) chi(a, b) = c(a * 4 + b);
  // Symmetrize away round-off.
  return ProcessMatrix(0.5 * (chi + chi.adjoint()));
}

Mat2c channel_image(const Mat4c& chi, const Mat2c& x) {
  Mat2c out = Mat2c::Zero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      if (chi(m, n) == cd(0.0)) continue;
      out += chi(m, n) * sigma(m) * x * sigma(n).adjoint();
    }
  return out;
}

}  // namespace

void ProcessMatrix::validate(double tol, double psd_tol) const {
  if (!m_.allFinite())
    throw Error(ErrorKind::NonPhysicalChannel, "process matrix has non-finite entries");
  if (hermiticity_error<4>(m_) > tol)
    throw Error(ErrorKind::NonPhysicalChannel, "process matrix is not Hermitian");
  if (std::abs(m_.trace() - cd(1.0)) > tol)
    throw Error(ErrorKind::NonPhysicalChannel, "process matrix trace differs from 1");
  const double min_eig = eigenvalues()(3);
  if (min_eig < -psd_tol)
    throw Error(ErrorKind::NonPhysicalChannel,
                "process matrix has eigenvalue " + std::to_string(min_eig));
}

bool operator==(const DVector& a, const DVector& b) {
  return a.d1 == b.d1 && a.d2 == b.d2 && a.d3 == b.d3;
}

double max_abs_diff(const DVector& a, const DVector& b) {
  return (a.as_vector() - b.as_vector()).cwiseAbs().maxCoeff();
}

double KrausSet::completeness_error() const {
  Mat2c sum = Mat2c::Zero();
  for (const Mat2c& k : operators) sum += k.adjoint() * k;
  return (sum - Mat2c::Identity()).cwiseAbs().maxCoeff();
}

DensityMatrix apply_channel(const ProcessMatrix& chi, const DensityMatrix& rho) {
  chi.validate();
  Mat2c out = channel_image(chi.matrix(), rho.matrix());
  return DensityMatrix(0.5 * (out + out.adjoint()));
}

ProcessMatrix dephasing_channel(DephasingSpec spec) {
  if (!(spec.p >= 0.0 && spec.p <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "dephasing probability outside [0, 1]");
  Mat4c chi = Mat4c::Zero();
  chi(0, 0) = 1.0 - spec.p;
  chi(3, 3) = spec.p;
  return ProcessMatrix(chi);
}

double dephasing_probability(const ProcessMatrix& chi, double zero_tol) {
  const Vec4 ev = chi.eigenvalues();
  const auto nonzero = std::count_if(ev.data(), ev.data() + 4, [&](double e) { return e > zero_tol; });
  if (nonzero > 2)
    throw Error(ErrorKind::NotDephasing,
                std::to_string(nonzero) + " eigenvalues exceed " + std::to_string(zero_tol));
  return 1.0 - ev(0);
}

DMatrixResult d_matrix_from_chi(const ProcessMatrix& chi) {
  const Eigen::Matrix4d r = transfer_matrix(chi);
  DMatrixResult out;
  out.d.m = r.block<3, 3>(1, 1);
  const Mat2c image = channel_image(chi.matrix(), Mat2c::Identity());
  out.unitality_deviation = (image - Mat2c::Identity()).norm();
  return out;
}

ProcessMatrix chi_from_d_matrix(const DMatrix& d, double psd_tol) {
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
  r(0, 0) = 1.0;
  r.block<3, 3>(1, 1) = d.m;
  ProcessMatrix chi = chi_from_transfer(r);
  const double min_eig = chi.eigenvalues()(3);
  if (min_eig < -psd_tol)
    throw Error(ErrorKind::NotCompletelyPositive,
                "D matrix maps to chi with eigenvalue " + std::to_string(min_eig));
  return chi;
}

ProcessMatrix chi_from_d_vector(const DVector& d) {
  Mat4c chi = Mat4c::Zero();
  chi(0, 0) = (1.0 + d.d1 + d.d2 + d.d3) / 4.0;
  chi(1, 1) = (1.0 + d.d1 - d.d2 - d.d3) / 4.0;
  chi(2, 2) = (1.0 - d.d1 + d.d2 - d.d3) / 4.0;
  chi(3, 3) = (1.0 - d.d1 - d.d2 + d.d3) / 4.0;
  return ProcessMatrix(chi);
}

DVector d_vector(const DMatrix& d) {
  Eigen::JacobiSVD<Mat3> svd(d.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = svd.singularValues();
  // Carry det(D) on the smallest singular value so that both factors are
  // proper rotations.
  const double sign_u = svd.matrixU().determinant() < 0.0 ? -1.0 : 1.0;
  const double sign_v = svd.matrixV().determinant() < 0.0 ? -1.0 : 1.0;
  s(2) *= sign_u * sign_v;

  std::array<int, 3> order = {0, 1, 2};
  constexpr double tie = 1e-12;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(s(a));
    const double mb = std::abs(s(b));
    if (std::abs(ma - mb) > tie) return ma > mb;
    return s(a) >= 0.0 && s(b) < 0.0;
  });
  return {s(order[0]), s(order[1]), s(order[2])};
}

bool is_complete_positive(const DVector& d, double slack) {
  const Vec3 v = d.as_vector();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const int k = 3 - i - j;
      if (std::abs(v(i) + v(j)) > std::abs(1.0 + v(k)) + slack) return false;
      if (std::abs(v(i) - v(j)) > std::abs(1.0 - v(k)) + slack) return false;
    }
  return true;
}

DVector d_from_chi_eigenvalues(const std::array<double, 4>& eigs, double tol) {
  double sum = 0.0;
  for (double e : eigs) {
    if (!std::isfinite(e) || e < -tol)
      throw Error(ErrorKind::InvalidSpectrum, "negative or non-finite eigenvalue");
    sum += e;
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error(ErrorKind::InvalidSpectrum, "eigenvalues sum to " + std::to_string(sum));
  if (*std::max_element(eigs.begin(), eigs.end()) > eigs[0] + tol)
    throw Error(ErrorKind::InvalidSpectrum, "first eigenvalue must be the largest");
  const double c0 = eigs[0];
  return {c0 + eigs[1] - eigs[2] - eigs[3], c0 + eigs[2] - eigs[1] - eigs[3],
          c0 + eigs[3] - eigs[1] - eigs[2]};
}

double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b) {
  // tr sqrt(sqrt(a) b sqrt(a)) is the nuclear norm of sqrt(a) sqrt(b).
  const Mat4c prod = psd_sqrt<4>(a.matrix()) * psd_sqrt<4>(b.matrix());
  Eigen::JacobiSVD<Mat4c> svd(prod);
  const double root = svd.singularValues().sum();
  return std::clamp(root * root, 0.0, 1.0);
}

double rotation_stripped_fidelity(const ProcessMatrix& a, const ProcessMatrix& b) {
  const DVector da = d_vector(d_matrix_from_chi(a).d);
  const DVector db = d_vector(d_matrix_from_chi(b).d);
  return process_fidelity(chi_from_d_vector(da), chi_from_d_vector(db));
}

ProcessMatrix chi_from_kraus(const KrausSet& kraus, double tol) {
  const double err = kraus.completeness_error();
  if (!(err <= tol))
    throw Error(ErrorKind::IncompleteKraus,
                "sum K^dagger K deviates from identity by " + std::to_string(err));
  Mat4c chi = Mat4c::Zero();
  for (const Mat2c& k : kraus.operators) {
    Eigen::Vector4cd c;
    for (int m = 0; m < 4; ++m) c(m) = 0.5 * (sigma(m).adjoint() * k).trace();
    chi += c * c.adjoint();
  }
  return ProcessMatrix(0.5 * (chi + chi.adjoint()));
}

std::array<DVector, 4> sign_flip_orbit(const DVector& d) {
  return {DVector{d.d1, d.d2, d.d3}, DVector{-d.d1, -d.d2, d.d3}, DVector{-d.d1, d.d2, -d.d3},
          DVector{d.d1, -d.d2, -d.d3}};
}

DVector canonicalize_sign_flips(const DVector& d) {
  const auto orbit = sign_flip_orbit(d);
  return *std::max_element(orbit.begin(), orbit.end(), [](const DVector& a, const DVector& b) {
    return std::tie(a.d1, a.d2, a.d3) < std::tie(b.d1, b.d2, b.d3);
  });
}

double trace_preservation_deviation(const ProcessMatrix& chi) {
  Mat2c sum = Mat2c::Zero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) sum += chi(m, n) * sigma(n).adjoint() * sigma(m);
  return (sum - Mat2c::Identity()).norm();
}

}  // namespace polchan
