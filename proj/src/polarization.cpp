#include "polchan/polarization.hpp"

#include <cmath>
#include <string>

#include "polchan/error.hpp"

namespace polchan {

namespace {

std::array<Mat2c, 4> make_pauli() {
  const cd i(0.0, 1.0);
  std::array<Mat2c, 4> s;
  s[0] << 1, 0, 0, 1;
  s[1] << 1, 0, 0, -1;
  s[2] << 0, 1, 1, 0;
  s[3] << 0, -i, i, 0;
  return s;
}

}  // namespace

const std::array<Mat2c, 4>& pauli_basis() {
  static const std::array<Mat2c, 4> basis = make_pauli();
  return basis;
}

const Mat2c& sigma(int index) { return pauli_basis().at(static_cast<std::size_t>(index)); }

std::string_view to_string(BasisLabel label) {
  switch (label) {
    case BasisLabel::h: return "h";
    case BasisLabel::v: return "v";
    case BasisLabel::p: return "p";
    case BasisLabel::m: return "m";
    case BasisLabel::r: return "r";
    case BasisLabel::l: return "l";
  }
  return "?";
}

std::optional<BasisLabel> parse_basis_label(std::string_view text) {
  for (BasisLabel label : kAllLabels) {
    if (to_string(label) == text) return label;
  }
  return std::nullopt;
}

BasisLabel antipode(BasisLabel label) {
  switch (label) {
    case BasisLabel::h: return BasisLabel::v;
    case BasisLabel::v: return BasisLabel::h;
    case BasisLabel::p: return BasisLabel::m;
    case BasisLabel::m: return BasisLabel::p;
    case BasisLabel::r: return BasisLabel::l;
    case BasisLabel::l: return BasisLabel::r;
  }
  return label;
}

void DensityMatrix::validate(double tol) const {
  if (!m_.allFinite()) throw Error(ErrorKind::NonPhysical, "density matrix has non-finite entries");
  if (hermiticity_error<2>(m_) > tol)
    throw Error(ErrorKind::NonPhysical, "density matrix is not Hermitian");
  if (std::abs(m_.trace() - cd(1.0)) > tol)
    throw Error(ErrorKind::NonPhysical, "density matrix trace differs from 1");
  if (sorted_eigenvalues<2>(m_)(1) < -tol)
    throw Error(ErrorKind::NonPhysical, "density matrix has a negative eigenvalue");
}

bool DensityMatrix::is_physical(double tol) const {
  try {
    validate(tol);
  } catch (const Error&) {
    return false;
  }
  return true;
}

StokesVector operator-(const StokesVector& s) { return {-s.s1, -s.s2, -s.s3}; }

DensityMatrix basis_state(BasisLabel label) {
  const double r = 1.0 / std::sqrt(2.0);
  const cd i(0.0, 1.0);
  Eigen::Vector2cd ket;
  switch (label) {
    case BasisLabel::h: ket << 1, 0; break;
    case BasisLabel::v: ket << 0, 1; break;
    case BasisLabel::p: ket << r, r; break;
    case BasisLabel::m: ket << -r, r; break;
    case BasisLabel::r: ket << r, i * r; break;
    case BasisLabel::l: ket << r, -i * r; break;
  }
  return DensityMatrix(ket * ket.adjoint());
}

StokesVector stokes_from_density(const DensityMatrix& rho) {
  const Mat2c& m = rho.matrix();
  return {(m * sigma(1)).trace().real(), (m * sigma(2)).trace().real(),
          (m * sigma(3)).trace().real()};
}

DensityMatrix density_from_stokes(const StokesVector& s, double tol) {
  if (!std::isfinite(s.norm()) || s.norm() > 1.0 + tol) {
    throw Error(ErrorKind::NonPhysical,
                "Stokes vector of length " + std::to_string(s.norm()) + " lies outside the sphere");
  }
  Mat2c m = sigma(0) + s.s1 * sigma(1) + s.s2 * sigma(2) + s.s3 * sigma(3);
  return DensityMatrix(m / 2.0);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  Mat2c diff = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<Mat2c> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace polchan
