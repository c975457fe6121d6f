#pragma once

#include <array>
#include <vector>

#include "polchan/linalg.hpp"
#include "polchan/polarization.hpp"

namespace polchan {

/// Process matrix chi in the Pauli basis {I, Z, X, Y} (Stokes order), acting as
/// E(rho) = sum_mn chi_mn sigma_m rho sigma_n^dagger.
class ProcessMatrix {
 public:
  ProcessMatrix() : m_(Mat4c::Zero()) { m_(0, 0) = 1.0; }
  explicit ProcessMatrix(const Mat4c& m) : m_(m) {}

  static ProcessMatrix identity() { return ProcessMatrix(); }

  const Mat4c& matrix() const { return m_; }
  cd operator()(int r, int c) const { return m_(r, c); }

  /// Throws NonPhysicalChannel unless Hermitian (within `tol`), unit trace
  /// (within `tol`) and PSD (eigenvalues >= -psd_tol).
  void validate(double tol = 1e-12, double psd_tol = 1e-10) const;

  /// Eigenvalues, descending.
  Vec4 eigenvalues() const { return sorted_eigenvalues<4>(m_); }

 private:
  Mat4c m_;
};

/// 3x3 real Pauli block of the transfer matrix, D_mn = tr(sigma_m E(sigma_n)) / 2.
struct DMatrix {
  Mat3 m = Mat3::Identity();
};

/// Rotation-stripped coordinates of a unital channel in the tetrahedron.
struct DVector {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;

  double operator[](int i) const { return i == 0 ? d1 : (i == 1 ? d2 : d3); }
  Vec3 as_vector() const { return {d1, d2, d3}; }
  static DVector from(const Vec3& v) { return {v(0), v(1), v(2)}; }
};

bool operator==(const DVector& a, const DVector& b);
double max_abs_diff(const DVector& a, const DVector& b);

struct KrausSet {
  std::vector<Mat2c> operators;

  /// max |sum K^dagger K - I|.
  double completeness_error() const;
};

struct DephasingSpec {
  double p = 0.0;
};

struct DMatrixResult {
  DMatrix d;
  /// Frobenius norm of E(I) - I; zero for unital channels.
  double unitality_deviation = 0.0;
};

DensityMatrix apply_channel(const ProcessMatrix& chi, const DensityMatrix& rho);

/// (1 - P) rho + P sigma_3 rho sigma_3.
ProcessMatrix dephasing_channel(DephasingSpec spec);

/// P = 1 - largest eigenvalue; NotDephasing if more than two eigenvalues
/// exceed `zero_tol`.
double dephasing_probability(const ProcessMatrix& chi, double zero_tol = 1e-6);

DMatrixResult d_matrix_from_chi(const ProcessMatrix& chi);

/// Inverse of d_matrix_from_chi for unital channels. NotCompletelyPositive if
/// the resulting chi has an eigenvalue below -psd_tol.
ProcessMatrix chi_from_d_matrix(const DMatrix& d, double psd_tol = 1e-9);

/// chi of the Pauli-diagonal channel with the given D coordinates. No CP check.
ProcessMatrix chi_from_d_vector(const DVector& d);

/// Signed singular values of D (D = O1 diag(d) O2 with O1, O2 in SO(3)),
/// ordered by descending magnitude, then + before -, then axis.
DVector d_vector(const DMatrix& d);

/// |D_i +- D_j| <= |1 +- D_k| for all distinct (i, j, k).
bool is_complete_positive(const DVector& d, double slack = 1e-12);

/// D_i = chi_0 + chi_i - chi_j - chi_k, chi_0 the largest eigenvalue.
DVector d_from_chi_eigenvalues(const std::array<double, 4>& eigs, double tol = 1e-9);

/// (tr sqrt(sqrt(a) b sqrt(a)))^2.
double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b);

/// Fidelity after mapping both channels to their canonical DVector form.
double rotation_stripped_fidelity(const ProcessMatrix& a, const ProcessMatrix& b);

ProcessMatrix chi_from_kraus(const KrausSet& kraus, double tol = 1e-8);

/// The four elements {id, flip(1,2), flip(1,3), flip(2,3)}.
std::array<DVector, 4> sign_flip_orbit(const DVector& d);

/// Lexicographically largest element of sign_flip_orbit(d).
DVector canonicalize_sign_flips(const DVector& d);

/// Frobenius norm of sum_mn chi_mn sigma_n sigma_m - I.
double trace_preservation_deviation(const ProcessMatrix& chi);

}  // namespace polchan
