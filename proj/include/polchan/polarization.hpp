#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "polchan/linalg.hpp"

namespace polchan {

/// The six polarization basis kets. h/v span the computational basis.
enum class BasisLabel { h, v, p, m, r, l };

inline constexpr std::array<BasisLabel, 6> kAllLabels = {
    BasisLabel::h, BasisLabel::v, BasisLabel::p, BasisLabel::m, BasisLabel::r, BasisLabel::l};

std::string_view to_string(BasisLabel label);
std::optional<BasisLabel> parse_basis_label(std::string_view text);

/// Label of the orthogonal state (h<->v, p<->m, r<->l).
BasisLabel antipode(BasisLabel label);

/// 2x2 polarization density matrix. Holds any matrix; validate() checks the
/// physical invariants.
class DensityMatrix {
 public:
  DensityMatrix() : m_(Mat2c::Identity() / 2.0) {}
  explicit DensityMatrix(const Mat2c& m) : m_(m) {}

  const Mat2c& matrix() const { return m_; }
  cd operator()(int r, int c) const { return m_(r, c); }

  /// Throws Error{NonPhysical} unless Hermitian, unit trace and PSD.
  void validate(double tol = Tolerances{}.exact) const;
  bool is_physical(double tol = Tolerances{}.exact) const;

  double purity() const { return (m_ * m_).trace().real(); }

 private:
  Mat2c m_;
};

/// Stokes vector (S1, S2, S3) with S0 = 1 implicit.
struct StokesVector {
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  Vec3 as_vector() const { return {s1, s2, s3}; }
  double norm() const { return as_vector().norm(); }
};

StokesVector operator-(const StokesVector& s);

DensityMatrix basis_state(BasisLabel label);

/// s_i = tr(rho sigma_i).
StokesVector stokes_from_density(const DensityMatrix& rho);

/// rho = (I + sum s_i sigma_i) / 2. Throws NonPhysical when |s| > 1 + tol.
DensityMatrix density_from_stokes(const StokesVector& s, double tol = Tolerances{}.input);

/// Trace distance 0.5 * ||a - b||_1.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

}  // namespace polchan
