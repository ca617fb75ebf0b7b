#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "lp_oracle.hpp"
#include "rsmamec/baselines.hpp"
#include "test_support.hpp"

using namespace rsmamec;

namespace {

// B = 1 Hz, sigma^2 B = 1 W, P = 1 W: gain g gives R = log2(1 + g).
SystemConfig unit_system(double F) {
  SystemConfig c;
  c.bandwidth_hz = 1;
  c.noise_psd_w_per_hz = 1;
  c.max_tx_power_w = 1;
  c.server_frequency_bps = F;
  return c;
}

}  // namespace

TEST_CASE("baseline names round-trip") {
  CHECK(all_baselines().size() == 10);
  for (auto k : all_baselines()) CHECK(parse_baseline(to_string(k)) == k);
  CHECK(to_string(BaselineKind::rsma_match_maxmin) == "RSMA-Match-MaxMin");
  CHECK_THROWS_AS(parse_baseline("Best"), std::invalid_argument);
}

TEST_CASE("TDMA analytic cases") {
  // one device, F = 2, R = 2, T = 1: theta = R F / (F + R) = 1
  const auto one = testing::single_cell({3.0}, unit_system(2));
  const auto a1 = testing::everyone_on(1, 1, 1, 0, 0);
  const auto s1 = tdma_maximin(one, a1, ScaSettings{});
  CHECK(s1.mcor == doctest::Approx(1.0).epsilon(2e-4));
  CHECK(lp::tdma_lp_optimum(one, a1) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(check_solution(one, s1).empty());

  // two identical devices share the same budget: half of the single case
  const auto two = testing::single_cell({3.0, 3.0}, unit_system(2));
  const auto a2 = testing::everyone_on(1, 1, 2, 0, 0);
  const auto s2 = tdma_maximin(two, a2, ScaSettings{});
  CHECK(s2.mcor == doctest::Approx(0.5).epsilon(2e-4));
  CHECK(lp::tdma_lp_optimum(two, a2) == doctest::Approx(0.5).epsilon(1e-9));

  // the bisection stops just below the boundary
  const double eps = ScaSettings{}.bisection_tol * 2.0;
  CHECK(tdma_feasible(one, a1, s1.eta));
  CHECK_FALSE(tdma_feasible(one, a1, s1.eta + 2 * eps));
}

TEST_CASE("TDMA feasibility agrees with the LP on random instances") {
  SystemConfig c;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int seed = 0; seed < 20; ++seed) {
    const auto sc = generate_scenario(c, seed);
    auto alloc_rng = make_rng(seed, {1});
    const auto a = random_allocation(alloc_rng, 3, 3, 9);
    const auto sol = tdma_maximin(sc, a, ScaSettings{});
    CHECK(check_solution(sc, sol).empty());
    // the bisection stops within tol times its starting bracket, min R
    const auto R = tdma_link_rates(sc, a);
    double bracket = 1e300;
    for (int k = 0; k < 9; ++k)
      if (a.served(k)) bracket = std::min(bracket, R[k]);
    const double opt = lp::tdma_lp_optimum(sc, a);
    CHECK(sol.mcor <= opt * (1 + 1e-9));
    CHECK(sol.mcor >= opt - ScaSettings{}.bisection_tol * bracket);
    for (int i = 0; i < 5; ++i) {
      const double theta = 2 * u(rng) * sol.eta;
      CHECK(tdma_feasible(sc, a, theta) == lp::tdma_lp_feasible(sc, a, theta));
    }
  }
}

TEST_CASE("random allocation: valid, deterministic, roughly uniform") {
  std::map<int, int> hist;
  for (int s = 0; s < 2000; ++s) {
    auto rng = make_rng(s, {7});
    const auto a = random_allocation(rng, 3, 4, 9);
    REQUIRE(is_valid(a));
    for (int k = 0; k < 9; ++k) {
      REQUIRE(a.served(k));
      ++hist[a.channel_of[k]];
    }
  }
  // chi-square with 3 degrees of freedom, 0.1% critical value 16.27
  const double expect = 2000.0 * 9 / 4;
  double chi2 = 0;
  for (int n = 0; n < 4; ++n) chi2 += std::pow(hist[n] - expect, 2) / expect;
  CHECK(chi2 < 16.27);

  auto r1 = make_rng(3, {7});
  auto r2 = make_rng(3, {7});
  CHECK(random_allocation(r1, 3, 3, 9) == random_allocation(r2, 3, 3, 9));
  CHECK_THROWS_AS(random_allocation(r1, 0, 3, 9), std::invalid_argument);
}

TEST_CASE("NOMA matches RSMA for a single device and decodes by gain") {
  SystemConfig c;
  c.num_servers = c.num_channels = c.num_devices = 1;
  const auto sc = generate_scenario(c, 5);
  const auto a = testing::everyone_on(1, 1, 1, 0, 0);
  const auto noma = noma_maximin(sc, a, ScaSettings{});
  const auto rsma = bisection_mcor(sc, a, ScaSettings{});
  CHECK(noma.mcor == doctest::Approx(rsma.mcor).epsilon(1e-6));

  SystemConfig c3 = c;
  c3.num_devices = 3;
  const auto sc3 = generate_scenario(c3, 6);
  const auto sol = noma_maximin(sc3, testing::everyone_on(1, 1, 3, 0, 0), ScaSettings{});
  for (int k = 0; k < 3; ++k) CHECK(sol.powers(k, 1) == 0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (sc3.gain(0, 0, i) > sc3.gain(0, 0, j)) CHECK(sol.order.rank(i, 0) < sol.order.rank(j, 0));
}

TEST_CASE("sum-rate starves a near-zero-gain device") {
  const SystemConfig c;
  const auto sc = testing::single_cell({testing::gain_for_snr(1e4), testing::gain_for_snr(1e-6)});
  const auto sol = utility_solution(sc, testing::everyone_on(1, 1, 2, 0, 0), PowerObjective::sum_rate,
                                    ScaSettings{});
  CHECK(sol.mcor < 1e-3 * *std::max_element(sol.rates.begin(), sol.rates.end()));
  CHECK(check_solution(sc, sol).empty());
}

TEST_CASE("proportional fairness treats identical devices alike") {
  const auto sc = testing::single_cell({testing::gain_for_snr(100), testing::gain_for_snr(100)});
  const auto g = GroupProblem::build(sc, testing::everyone_on(1, 1, 2, 0, 0), 0);
  const auto p = propfair_power(g, init_decoding_order(g), ScaSettings{});
  CHECK(p.total(0) == doctest::Approx(p.total(1)).epsilon(1e-6));
}

TEST_CASE("sum-rate powers beat the max-min solution on the sum") {
  SystemConfig c;
  c.num_servers = c.num_channels = 1;
  c.num_devices = 3;
  for (int seed = 0; seed < 5; ++seed) {
    const auto sc = generate_scenario(c, seed);
    const auto a = testing::everyone_on(1, 1, 3, 0, 0);
    const auto g = GroupProblem::build(sc, a, 0);
    const auto mm = bisection_mcor(sc, a, ScaSettings{});
    const auto order = init_decoding_order(g);
    const auto ps = sumrate_power(g, order, ScaSettings{});
    CHECK(utility_objective(g, order, ps, PowerObjective::sum_rate) >=
          utility_objective(g, mm.order, mm.powers, PowerObjective::sum_rate) * (1 - 1e-9));
  }
}

TEST_CASE("order enumeration counts and the oracle guard") {
  SystemConfig c;
  c.num_servers = c.num_channels = 1;
  c.num_devices = 2;
  const auto sc2 = generate_scenario(c, 1);
  const auto g2 = GroupProblem::build(sc2, testing::everyone_on(1, 1, 2, 0, 0), 0);
  CHECK(enumerate_orders(g2).size() == 6);  // 4! / (2 * 2)
  c.num_devices = 3;
  const auto sc3 = generate_scenario(c, 1);
  const auto g3 = GroupProblem::build(sc3, testing::everyone_on(1, 1, 3, 0, 0), 0);
  CHECK(enumerate_orders(g3).size() == 90);  // 6! / 2^3
  c.num_devices = 4;
  const auto sc4 = generate_scenario(c, 1);
  CHECK_THROWS_AS(oracle_order_search(sc4, testing::everyone_on(1, 1, 4, 0, 0), ScaSettings{}),
                  std::length_error);
}

TEST_CASE("order search is never worse than the heuristic order") {
  SystemConfig c;
  c.num_servers = c.num_channels = 1;
  c.num_devices = 2;
  for (int seed = 0; seed < 10; ++seed) {
    const auto sc = generate_scenario(c, seed);
    const auto a = testing::everyone_on(1, 1, 2, 0, 0);
    const auto heur = bisection_mcor(sc, a, ScaSettings{});
    const auto best = oracle_order_search(sc, a, ScaSettings{});
    CHECK(best.mcor >= heur.mcor * (1 - ScaSettings{}.bisection_tol));
    CHECK(check_solution(sc, best).empty());
  }
  c.num_devices = 1;
  const auto sc1 = generate_scenario(c, 3);
  const auto a1 = testing::everyone_on(1, 1, 1, 0, 0);
  CHECK(oracle_order_search(sc1, a1, ScaSettings{}).mcor ==
        doctest::Approx(bisection_mcor(sc1, a1, ScaSettings{}).mcor).epsilon(1e-9));
}
