#include <doctest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "polchan/channel.hpp"
#include "polchan/error.hpp"

using namespace polchan;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

KrausSet to_set(const std::vector<Mat2c>& ks) { return KrausSet{ks}; }

Mat3 diag3(double a, double b, double c) { return Vec3(a, b, c).asDiagonal(); }

Mat3 rotation(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(); }

double max_diff(const Mat4c& a, const Mat4c& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("apply_channel") {
  const DensityMatrix p = basis_state(BasisLabel::p);
  CHECK((apply_channel(ProcessMatrix::identity(), p).matrix() - p.matrix()).norm() < 1e-15);

  const DensityMatrix half = apply_channel(dephasing_channel({0.5}), p);
  CHECK((half.matrix() - Mat2c::Identity() / 2.0).norm() < 1e-15);

  const StokesVector quarter = stokes_from_density(apply_channel(dephasing_channel({0.25}), p));
  CHECK(std::abs(quarter.s1) < 1e-15);
  CHECK(quarter.s2 == doctest::Approx(0.5));
  CHECK(std::abs(quarter.s3) < 1e-15);

  Mat4c bad = Mat4c::Zero();
  bad(0, 0) = 2.0;
  CHECK(kind_of([&] { apply_channel(ProcessMatrix(bad), p); }) == ErrorKind::NonPhysicalChannel);
}

TEST_CASE("apply_channel keeps states physical for random channels") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const ProcessMatrix chi = chi_from_kraus(to_set(oracle::random_kraus(rng, 1 + i % 4)));
    for (BasisLabel label : kAllLabels) {
      const DensityMatrix out = apply_channel(chi, basis_state(label));
      CHECK(std::abs(out.matrix().trace() - 1.0) <= 1e-12);
      CHECK(sorted_eigenvalues<2>(out.matrix()).minCoeff() >= -1e-10);
    }
  }
}

TEST_CASE("dephasing channel") {
  Mat4c e00 = Mat4c::Zero();
  e00(0, 0) = 1.0;
  CHECK(max_diff(dephasing_channel({0.0}).matrix(), e00) < 1e-15);

  const Mat4c half = Vec4(0.5, 0, 0, 0.5).cast<cd>().asDiagonal();
  CHECK(max_diff(dephasing_channel({0.5}).matrix(), half) < 1e-15);

  const ProcessMatrix q = dephasing_channel({0.25});
  const Vec4 eig = q.eigenvalues();
  CHECK((eig - Vec4(0.75, 0.25, 0, 0)).cwiseAbs().maxCoeff() < 1e-15);
  const Mat3 d = d_matrix_from_chi(q).d.m;
  CHECK((d - diag3(0.5, 0.5, 1.0)).cwiseAbs().maxCoeff() < 1e-15);
  const DVector from_eigs = d_from_chi_eigenvalues({0.75, 0.0, 0.0, 0.25});
  CHECK(max_abs_diff(from_eigs, {0.5, 0.5, 1.0}) < 1e-15);

  CHECK(kind_of([] { dephasing_channel({1.5}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { dephasing_channel({-0.1}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("dephasing_probability") {
  CHECK(dephasing_probability(ProcessMatrix::identity()) == doctest::Approx(0.0));
  CHECK(dephasing_probability(dephasing_channel({0.5})) == doctest::Approx(0.5));
  const Mat4c three = Vec4(0.5, 0.3, 0.2, 0.0).cast<cd>().asDiagonal();
  CHECK(kind_of([&] { dephasing_probability(ProcessMatrix(three)); }) == ErrorKind::NotDephasing);
}

TEST_CASE("d_matrix_from_chi reference values") {
  CHECK((d_matrix_from_chi(ProcessMatrix::identity()).d.m - Mat3::Identity()).norm() < 1e-15);
  for (double p : {0.0, 0.1, 0.3, 0.5, 0.8, 1.0}) {
    const Mat3 d = d_matrix_from_chi(dephasing_channel({p})).d.m;
    CHECK((d - diag3(1 - 2 * p, 1 - 2 * p, 1.0)).cwiseAbs().maxCoeff() < 1e-15);
  }
  const DMatrixResult depol = d_matrix_from_chi(ProcessMatrix(Mat4c::Identity() / 4.0));
  CHECK(depol.d.m.norm() < 1e-15);
  CHECK(depol.unitality_deviation < 1e-15);
}

TEST_CASE("d_matrix_from_chi agrees with the transfer matrix of the Kraus map") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto ks = oracle::random_kraus(rng, 1 + i % 4);
    const Eigen::Matrix4d r = oracle::transfer_matrix(ks);
    const DMatrixResult res = d_matrix_from_chi(chi_from_kraus(to_set(ks)));
    CHECK((res.d.m - r.block<3, 3>(1, 1)).cwiseAbs().maxCoeff() < 1e-12);
    // Non-unital channels report the shift of the identity.
    const double shift = std::sqrt(2.0) * r.block<3, 1>(1, 0).norm();
    CHECK(res.unitality_deviation == doctest::Approx(shift).epsilon(1e-9));
  }
}

TEST_CASE("chi_from_kraus") {
  CHECK(max_diff(chi_from_kraus({{Mat2c::Identity()}}).matrix(), ProcessMatrix::identity().matrix()) < 1e-15);
  for (double p : {0.1, 0.25, 0.7}) {
    const KrausSet k{{std::sqrt(1 - p) * Mat2c(Mat2c::Identity()), std::sqrt(p) * sigma(3)}};
    CHECK(max_diff(chi_from_kraus(k).matrix(), dephasing_channel({p}).matrix()) < 1e-15);
  }
  CHECK(kind_of([] { chi_from_kraus({{0.9 * Mat2c(Mat2c::Identity())}}); }) == ErrorKind::IncompleteKraus);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto ks = oracle::random_kraus(rng, 1 + i % 5);
    const ProcessMatrix chi = chi_from_kraus(to_set(ks));
    CHECK_NOTHROW(chi.validate());
    CHECK(max_diff(chi.matrix(), oracle::chi_by_linear_inversion(ks)) < 1e-12);
    CHECK(trace_preservation_deviation(chi) < 1e-9);
  }
}

TEST_CASE("chi_from_d_matrix") {
  CHECK(max_diff(chi_from_d_matrix({Mat3::Identity()}).matrix(), ProcessMatrix::identity().matrix()) < 1e-15);
  CHECK(kind_of([] { chi_from_d_matrix({diag3(1, 1, -1)}); }) == ErrorKind::NotCompletelyPositive);
  CHECK(max_diff(chi_from_d_matrix({diag3(0.5, 0.5, 1)}).matrix(), dephasing_channel({0.25}).matrix()) < 1e-15);
}

TEST_CASE("chi and D matrix round trip for unital channels") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const ProcessMatrix chi = chi_from_kraus(to_set(oracle::random_unital_kraus(rng, 1 + i % 4)));
    const DMatrixResult d = d_matrix_from_chi(chi);
    CHECK(d.unitality_deviation < 1e-9);
    CHECK(max_diff(chi_from_d_matrix(d.d).matrix(), chi.matrix()) < 1e-10);
    CHECK(d.d.m.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("d_vector") {
  CHECK(max_abs_diff(d_vector({diag3(0.9, 0.5, 0.2)}), {0.9, 0.5, 0.2}) < 1e-15);
  CHECK(max_abs_diff(d_vector({diag3(0.2, 0.9, 0.5)}), {0.9, 0.5, 0.2}) < 1e-15);
  CHECK(max_abs_diff(d_vector({rotation(Vec3::UnitZ(), std::numbers::pi / 2)}), {1, 1, 1}) < 1e-15);
  CHECK(max_abs_diff(d_vector({Mat3::Zero()}), {0, 0, 0}) == 0.0);
  CHECK(max_abs_diff(d_vector({diag3(1, -1, -1)}), {1, 1, 1}) < 1e-15);
  CHECK(max_abs_diff(d_vector({diag3(-0.5, 0.5, 0.5)}), {0.5, 0.5, -0.5}) < 1e-15);
}

TEST_CASE("d_vector strips rotations on both sides") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    Vec3 d(u(rng), u(rng), u(rng));
    const Mat3 o1 = rotation(Vec3(u(rng), u(rng), u(rng)), 3.0 * u(rng));
    const Mat3 o2 = rotation(Vec3(u(rng), u(rng), u(rng)), 3.0 * u(rng));
    const DVector got = d_vector({o1 * d.asDiagonal() * o2});
    // Magnitudes come out sorted; the product of signs equals sign(det).
    Vec3 mags = d.cwiseAbs();
    std::sort(mags.data(), mags.data() + 3, std::greater<>());
    CHECK((got.as_vector().cwiseAbs() - mags).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(got.d1 >= 0.0);
    CHECK(got.d2 >= 0.0);
    CHECK(got.d1 * got.d2 * got.d3 == doctest::Approx(d.prod()).epsilon(1e-9));
  }
}

TEST_CASE("complete positivity of D vectors") {
  CHECK(is_complete_positive({1, 1, 1}));
  CHECK_FALSE(is_complete_positive({1, 1, -1}));
  CHECK(is_complete_positive({0, 0, 0}));
  CHECK(is_complete_positive({1, -1, -1}));
  CHECK(is_complete_positive({0.5, 0.5, 1}));
}

TEST_CASE("CP test agrees with positivity of chi on random triples") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    const DVector d{u(rng), u(rng), u(rng)};
    // Independent check: eigenvalues of the Pauli-diagonal chi.
    const double e[4] = {1 + d.d1 + d.d2 + d.d3, 1 + d.d1 - d.d2 - d.d3, 1 - d.d1 + d.d2 - d.d3,
                         1 - d.d1 - d.d2 + d.d3};
    const bool positive = *std::min_element(e, e + 4) >= 0.0;
    CHECK(is_complete_positive(d) == positive);
    const DMatrix m{d.as_vector().asDiagonal()};
    if (is_complete_positive(d)) {
      ++accepted;
      CHECK_NOTHROW(chi_from_d_matrix(m));
    } else {
      CHECK(kind_of([&] { chi_from_d_matrix(m, 0.0); }) == ErrorKind::NotCompletelyPositive);
    }
  }
  // The tetrahedron fills a third of the cube.
  CHECK(accepted == doctest::Approx(10000.0 / 3.0).epsilon(0.05));
}

TEST_CASE("d_from_chi_eigenvalues") {
  CHECK(max_abs_diff(d_from_chi_eigenvalues({1, 0, 0, 0}), {1, 1, 1}) < 1e-15);
  CHECK(max_abs_diff(d_from_chi_eigenvalues({0.75, 0, 0, 0.25}), {0.5, 0.5, 1}) < 1e-15);
  CHECK(max_abs_diff(d_from_chi_eigenvalues({0.25, 0.25, 0.25, 0.25}), {0, 0, 0}) < 1e-15);
  CHECK(kind_of([] { d_from_chi_eigenvalues({1.1, 0, 0, -0.1}); }) == ErrorKind::InvalidSpectrum);
  CHECK(kind_of([] { d_from_chi_eigenvalues({0.5, 0.2, 0.2, 0.2}); }) == ErrorKind::InvalidSpectrum);
  CHECK(kind_of([] { d_from_chi_eigenvalues({0.2, 0.8, 0, 0}); }) == ErrorKind::InvalidSpectrum);
}

TEST_CASE("process fidelity") {
  CHECK(process_fidelity(ProcessMatrix::identity(), ProcessMatrix::identity()) == doctest::Approx(1.0));
  CHECK(process_fidelity(ProcessMatrix::identity(), dephasing_channel({0.5})) == doctest::Approx(0.5));

  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) {
    const ProcessMatrix a = chi_from_kraus(to_set(oracle::random_kraus(rng, 1 + i % 4)));
    const ProcessMatrix b = chi_from_kraus(to_set(oracle::random_kraus(rng, 1 + (i / 4) % 4)));
    const double fab = process_fidelity(a, b);
    CHECK(fab == doctest::Approx(process_fidelity(b, a)).epsilon(1e-10));
    // The eigenvalue route takes square roots of rounding-level eigenvalues.
    CHECK(std::abs(fab - oracle::fidelity(a.matrix(), b.matrix())) < 1e-7);
    CHECK(fab <= 1.0);
    CHECK(fab < 1.0 - 1e-6);
    CHECK(process_fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("rotation-stripped fidelity ignores unitary pre- and post-processing") {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 50; ++i) {
    const auto ks = oracle::random_unital_kraus(rng, 3);
    const Mat2c u = oracle::random_unitary(rng);
    const Mat2c v = oracle::random_unitary(rng);
    std::vector<Mat2c> rotated;
    for (const Mat2c& k : ks) rotated.push_back(u * k * v);
    const ProcessMatrix a = chi_from_kraus(to_set(ks));
    const ProcessMatrix b = chi_from_kraus(to_set(rotated));
    CHECK(rotation_stripped_fidelity(a, b) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("sign flip canonicalization") {
  CHECK(max_abs_diff(canonicalize_sign_flips({1, -1, -1}), {1, 1, 1}) == 0.0);
  CHECK(max_abs_diff(canonicalize_sign_flips({0.3, 0.2, 1}), {0.3, 0.2, 1}) == 0.0);
  CHECK(max_abs_diff(canonicalize_sign_flips({-0.5, 0.5, -1}), {0.5, 0.5, 1}) == 0.0);

  // Brute force: every sign pattern with an even number of flips.
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const DVector d{u(rng), u(rng), u(rng)};
    std::array<double, 3> best = {-2, -2, -2};
    for (int mask = 0; mask < 8; ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) % 2 != 0) continue;
      std::array<double, 3> c = {d.d1, d.d2, d.d3};
      for (int k = 0; k < 3; ++k)
        if (mask & (1 << k)) c[static_cast<std::size_t>(k)] = -c[static_cast<std::size_t>(k)];
      best = std::max(best, c);
    }
    const DVector got = canonicalize_sign_flips(d);
    CHECK(got.d1 == best[0]);
    CHECK(got.d2 == best[1]);
    CHECK(got.d3 == best[2]);
  }
}

TEST_CASE("process matrix validation") {
  CHECK_NOTHROW(ProcessMatrix::identity().validate());
  Mat4c neg = Vec4(0.6, 0.5, 0.0, -0.1).cast<cd>().asDiagonal();
  CHECK(kind_of([&] { ProcessMatrix(neg).validate(); }) == ErrorKind::NonPhysicalChannel);
  Mat4c herm = Mat4c::Identity() / 4.0;
  herm(0, 1) = 0.1;
  CHECK(kind_of([&] { ProcessMatrix(herm).validate(); }) == ErrorKind::NonPhysicalChannel);
}
