#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rmaft/daly.hpp"
#include "rmaft/errors.hpp"
#include "rmaft/topology.hpp"
#include "rmaft/xor_kernels.hpp"

using namespace rmaft;

TEST_CASE("daly interval") {
  CHECK(daly_interval({2.0, 1.0}) == 1.0);
  CHECK(daly_interval({5.0, 2.5}) == 2.5);
  CHECK(std::abs(daly_interval({1.0, 200.0}) - oracle::daly(1.0, 200.0)) < 1e-12);
  CHECK(std::abs(daly_interval({1.0, 200.0}) - 19.33889) < 1e-5);
  const double tiny = daly_interval({1e-12, 200.0});
  CHECK(tiny > 0.0);
  CHECK(tiny < 1e-4);
  CHECK_THROWS_AS(daly_interval({0.0, 1.0}), ArgumentError);
  CHECK_THROWS_AS(daly_interval({1.0, -1.0}), ArgumentError);
}

TEST_CASE("conditional probability by hand and by enumeration") {
  CHECK(p_conditional(4, 2, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(oracle::p_conditional_enumerated(4, 2, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(p_conditional(10, 3, 1) == 0.0);
  CHECK(p_conditional(10, 3, 0) == 0.0);
  for (std::size_t h = 2; h <= 10; ++h) {
    for (std::size_t g = 2; g <= std::min<std::size_t>(h, 5); ++g) {
      CHECK(p_conditional(h, g, h) == 1.0);
      CHECK(oracle::p_conditional_enumerated(h, g, h) == 1.0);
    }
  }
  CHECK_THROWS_AS(p_conditional(4, 1, 2), ArgumentError);
  CHECK_THROWS_AS(p_conditional(4, 2, 5), ArgumentError);
}

TEST_CASE("conditional probability agrees with the binomial form") {
  for (std::size_t h : {50u, 352u, 1408u}) {
    for (std::size_t x = 2; x <= 40; ++x) {
      const double lg = std::lgamma(h - 1.0) - std::lgamma(x - 1.0) - std::lgamma(h - x + 1.0) -
                        (std::lgamma(h + 1.0) - std::lgamma(x + 1.0) - std::lgamma(h - x + 1.0));
      const double d = std::ceil(static_cast<double>(h) / 5.0);
      const double expected = std::min(1.0, d * 10.0 * std::exp(lg));
      CHECK(p_conditional(h, 5, x) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("group sizes and fractions") {
  CHECK(group_size(4000, 200) == 21);
  CHECK(group_size(10, 3) == 5);
  CHECK(groups_for_fraction(4000, 0.05) == 200);
  CHECK_THROWS_AS(groups_for_fraction(4000, 0.0), ArgumentError);
  CHECK_THROWS_AS(groups_for_fraction(10, 0.01), ArgumentError);
}

TEST_CASE("tsubame2 profile") {
  const auto h = tsubame2_profile();
  REQUIRE(h.height() == 4);
  CHECK(h.level(1).pdf.a == 0.30142e-2);
  CHECK(h.level(1).pdf.lambda == 1.3567);
  CHECK(h.level(2).pdf.a == 1.1836e-4);
  CHECK(h.level(2).pdf.lambda == 1.4831);
  CHECK(h.level(3).pdf.a == 3.9249e-5);
  CHECK(h.level(3).pdf.lambda == 1.5902);
  CHECK(h.level(4).pdf.a == 3.2257e-5);
  CHECK(h.level(4).pdf.lambda == 1.5488);
  CHECK(h.level_index("Switch") == 3);
  CHECK_THROWS_AS(h.level_index("blade"), LookupError);
}

TEST_CASE("exact exponential data is fitted exactly") {
  std::vector<double> counts;
  for (int x = 1; x <= 8; ++x) counts.push_back(0.25 * std::exp(-1.1 * x));
  const auto pdf = fit_pdf(counts);
  CHECK(pdf.a == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(pdf.lambda == doctest::Approx(1.1).epsilon(1e-6));
}

TEST_CASE("synthesized node histogram refits close to the node coefficient") {
  const auto pdf = fit_pdf(synthesize_node_histogram(6));
  CHECK(std::abs(pdf.lambda - 1.3567) / 1.3567 < 0.10);
}

TEST_CASE("placement keeps group members apart") {
  const FdHierarchy small({{"node", 4, {0.1, 1.0}}, {"rack", 2, {0.1, 1.0}}});
  const auto groups = make_groups(4, 2);
  const auto placement = make_taware_placement(small, groups, 1);
  CHECK_FALSE(validate_taware(placement, groups, 1));
  CHECK(placement.at(ProcessId{0}, 1) != placement.at(ProcessId{1}, 1));
  CHECK(placement.at(ProcessId{2}, 1) != placement.at(ProcessId{3}, 1));
}

TEST_CASE("placement of three into two nodes is infeasible") {
  const FdHierarchy two({{"node", 2, {0.1, 1.0}}});
  CHECK_THROWS_AS(make_taware_placement(two, make_groups(3, 1), 1), InfeasiblePlacement);
}

TEST_CASE("placement at node and rack level, checked exhaustively") {
  // 8 nodes in 4 racks, 3 groups of 3.
  const FdHierarchy h({{"node", 8, {0.1, 1.0}}, {"rack", 4, {0.1, 1.0}}});
  const auto groups = make_groups(9, 3);
  const auto placement = make_taware_placement(h, groups, 2);
  for (const auto& g : groups) {
    for (std::size_t level = 1; level <= 2; ++level) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) {
          CHECK(placement.at(g[i], level) != placement.at(g[j], level));
        }
      }
    }
  }
  CHECK_FALSE(validate_taware(placement, groups, 2));
}

TEST_CASE("validator catches two members on one node") {
  const FdHierarchy h({{"node", 4, {0.1, 1.0}}});
  const auto groups = make_groups(4, 2);
  auto placement = make_taware_placement(h, groups, 1);
  placement.element[1][0] = placement.element[0][0];
  const auto v = validate_taware(placement, groups, 1);
  REQUIRE(v);
  CHECK(v->group == 0);
  CHECK(v->level == 1);
  CHECK_FALSE(validate_taware(placement, groups, 0));
}

TEST_CASE("no t-awareness makes P_cf independent of the group count") {
  PcfQuery q;
  q.processes = 4000;
  q.hierarchy = tsubame2_profile();
  q.groups = 40;
  const auto a = p_cf(q);
  q.groups = 400;
  CHECK(p_cf(q) == a);
}

TEST_CASE("parallel P_cf matches the serial loop") {
  PcfQuery q;
  q.processes = 4000;
  q.hierarchy = tsubame2_profile();
  for (std::size_t level = 0; level <= 4; ++level) {
    for (std::size_t g : {40u, 200u, 400u}) {
      q.taware_level = level;
      q.groups = g;
      CHECK(p_cf(q) == doctest::Approx(p_cf_serial(q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("parallel xor kernels match the serial ones") {
  std::mt19937_64 rng(3);
  for (std::size_t cells : {1u, 100u, 20000u}) {
    std::vector<std::vector<Word>> data(5, std::vector<Word>(cells));
    for (auto& d : data) {
      for (auto& w : d) w = static_cast<Word>(rng());
    }
    std::vector<std::span<const Word>> spans(data.begin(), data.end());
    CHECK(xor_reduce(spans) == xor_reduce_serial(spans));
    auto a = data[0];
    auto b = data[0];
    xor_into(a, data[1]);
    xor_into_serial(b, data[1]);
    CHECK(a == b);
  }
  std::vector<Word> small(3);
  const std::vector<Word> big(4);
  CHECK_THROWS_AS(xor_into(small, big), ArgumentError);
}
