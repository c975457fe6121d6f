#include <doctest.h>

#include <numeric>
#include <set>
#include <stdexcept>

#include "polchan/parallel.hpp"
#include "polchan/reachability.hpp"
#include "polchan/tomography.hpp"

using namespace polchan;

TEST_CASE("every index runs once") {
  for (unsigned threads : {1u, 2u, 7u}) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, threads);
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
    CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
  }
  parallel_for(0, [](std::size_t) { FAIL("no work expected"); }, 4);
}

TEST_CASE("exceptions reach the caller") {
  CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) {
                    if (i == 37) throw std::runtime_error("boom");
                  }, 4),
                  std::runtime_error);
}

TEST_CASE("derived seeds differ") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  static_assert(derive_seed(3, 4) == derive_seed(3, 4));
}

TEST_CASE("results do not depend on the thread count") {
  const ProcessMatrix truth = four_crystal_channel(dephasing_locus_angles(6.0));
  AcquisitionConfig c;
  c.integration_s = 5.0;
  c.seed = 21;
  const auto records = simulate_counts(truth, c);

  default_thread_count() = 1;
  const TomographyResult serial = monte_carlo_errors(records, 12, 3);
  const ReachabilityCloud cloud1 = sweep(SweepConfig{});
  default_thread_count() = 5;
  const TomographyResult threaded = monte_carlo_errors(records, 12, 3);
  const ReachabilityCloud cloud5 = sweep(SweepConfig{});
  default_thread_count() = 0;

  CHECK(serial.chi_hat.matrix() == threaded.chi_hat.matrix());
  CHECK(serial.eigenvalue_errors == threaded.eigenvalue_errors);
  REQUIRE(cloud1.points.size() == cloud5.points.size());
  for (std::size_t i = 0; i < cloud1.points.size(); ++i) CHECK(max_abs_diff(cloud1.points[i], cloud5.points[i]) == 0.0);
}
