#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nteg/equilibrium.hpp"
#include "nteg/model.hpp"
#include "nteg/oracle.hpp"
#include "test_util.hpp"

using namespace nteg;

TEST_CASE("best response closed form") {
    GameSpec spec = testutil::spec_from_betas({3.0, 6.0, 9.0});
    // others cover the ratio -> free-ride
    CHECK(best_response(0, Profile{1.0, 2.0, 2.0}, spec) == 0.0);
    // capped by the others' max
    CHECK(best_response(2, Profile{0.0, 2.0, 0.0}, spec) == doctest::Approx(2.0));
    // interior: ratio minus the others' sum
    CHECK(best_response(0, Profile{0.0, 1.2, 1.2}, spec) == doctest::Approx(0.6));
    // nobody else moves -> contributing alone buys nothing
    CHECK(best_response(1, Profile{0.0, 5.0, 0.0}, spec) == 0.0);

    GameSpec rewarded({{1.0, 2.0}, {1.0, 2.0}}, 1.0);
    CHECK_THROWS(best_response(0, Profile{1.0, 1.0}, rewarded));
}

TEST_CASE("classification of known profiles") {
    GameSpec spec = testutil::spec_from_betas({3.0, 6.0, 9.0});

    SUBCASE("one value with a free rider") {
        EquilibriumReport rep = classify(Profile{0.0, 2.0, 2.0}, spec);
        CHECK(rep.is_equilibrium);
        CHECK(rep.family == Family::OneValue);
        CHECK(rep.free_riders == std::vector<int>{0});
        REQUIRE(rep.eq_value.has_value());
        CHECK(*rep.eq_value == doctest::Approx(2.0));
        CHECK(rep.contributor_count(3) == 2);
    }
    SUBCASE("one value, everyone in") {
        EquilibriumReport rep = classify(Profile{0.8, 0.8, 0.8}, spec);
        CHECK(rep.is_equilibrium);
        CHECK(rep.family == Family::OneValue);
        CHECK(rep.free_riders.empty());
        REQUIRE(rep.eq_value.has_value());
        CHECK(*rep.eq_value == doctest::Approx(0.8));
    }
    SUBCASE("two value") {
        EquilibriumReport rep = classify(Profile{0.6, 1.2, 1.2}, spec);
        CHECK(rep.is_equilibrium);
        CHECK(rep.family == Family::TwoValue);
        CHECK(rep.free_riders.empty());
        REQUIRE(rep.eq_value.has_value());
        REQUIRE(rep.minor_value.has_value());
        CHECK(*rep.eq_value == doctest::Approx(1.2));
        CHECK(*rep.minor_value == doctest::Approx(0.6));
        CHECK(rep.minor_player == 0);
    }
    SUBCASE("not an equilibrium") {
        EquilibriumReport rep = classify(Profile{2.0, 2.0, 2.0}, spec);
        CHECK(!rep.is_equilibrium);
        CHECK(rep.family == Family::None);
        REQUIRE(rep.witness.size() == 3);
        CHECK(rep.witness[0].best_response == doctest::Approx(0.0));  // 3 - 4 < 0
    }
    SUBCASE("rest state is the degenerate shared value 0") {
        EquilibriumReport rep = classify(Profile{0.0, 0.0, 0.0}, spec);
        CHECK(rep.is_equilibrium);
        CHECK(rep.family == Family::OneValue);
        CHECK(rep.free_riders.empty());
        REQUIRE(rep.eq_value.has_value());
        CHECK(*rep.eq_value == doctest::Approx(0.0));
    }
    SUBCASE("coarser tolerance forgives dynamics-sized residue") {
        Profile noisy{0.6 + 3e-8, 1.2, 1.2 - 2e-8};
        CHECK(!classify(noisy, spec).is_equilibrium);
        EquilibriumReport rep = classify(noisy, spec, 1e-6);
        CHECK(rep.is_equilibrium);
        CHECK(rep.family == Family::TwoValue);
    }
}

TEST_CASE("family catalogues") {
    GameSpec spec = testutil::spec_from_betas({3.0, 6.0, 9.0});

    std::vector<OneValueRange> one = one_value_ranges(spec);
    REQUIRE(one.size() == 3);
    CHECK(one[0].free_riders == 0);
    CHECK(one[0].feasible);
    CHECK(one[0].range.lo == doctest::Approx(0.0));
    CHECK(one[0].range.hi == doctest::Approx(1.0));
    CHECK(one[1].feasible);
    CHECK(one[1].range.lo == doctest::Approx(1.5));
    CHECK(one[1].range.hi == doctest::Approx(3.0));
    CHECK(!one[2].feasible);  // a lone contributor would drop to 0

    std::vector<TwoValueRange> two = two_value_ranges(spec);
    REQUIRE(two.size() == 1);  // only the lowest ratio leaves 2 majors
    CHECK(two[0].minor_rank == 0);
    CHECK(two[0].major_range.lo == doctest::Approx(1.0));
    CHECK(two[0].major_range.hi == doctest::Approx(1.5));

    GameSpec four = testutil::spec_from_betas({3.0, 6.0, 9.0, 12.0});
    std::vector<TwoValueRange> two4 = two_value_ranges(four);
    REQUIRE(two4.size() == 2);
    CHECK(two4[0].major_range.lo == doctest::Approx(0.75));  // 3/4
    CHECK(two4[0].major_range.hi == doctest::Approx(1.0));   // 3/3
    CHECK(two4[1].major_range.lo == doctest::Approx(2.0));   // 6/3
    CHECK(two4[1].major_range.hi == doctest::Approx(3.0));   // 6/2
}

TEST_CASE("every catalogued value is a grid-checked equilibrium") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        testutil::BuiltEq built = (trial % 2 == 0) ? testutil::random_one_value(rng, 3 + trial % 4)
                                                   : testutil::random_two_value(rng, 3 + trial % 4);
        GridConfig grid = GridConfig::for_spec(built.spec, 2e-3);
        CHECK(verify_equilibrium(built.x, built.spec, grid));
    }
}

TEST_CASE("tied ratios: best responses work, the family catalogue refuses") {
    GameSpec tied({{1.0, 4.0}, {1.0, 4.0}, {1.0, 6.0}});  // ratios 4, 4, 6
    CHECK_FALSE(tied.has_distinct_betas());

    // Utilities and best responses never needed distinctness.
    CHECK(best_response(0, Profile{0.0, 1.0, 1.0}, tied) == doctest::Approx(1.0));

    // A numeric fixed point is still recognised, but no family label applies.
    EquilibriumReport rep = classify(Profile{1.0, 1.0, 1.0}, tied);
    CHECK(rep.is_equilibrium);
    CHECK(rep.family == Family::None);
    CHECK(rep.unmatched_equilibrium);

    // The catalogue enumerations assume genericity and say so.
    CHECK_THROWS(one_value_ranges(tied));
    CHECK_THROWS(two_value_ranges(tied));
    CHECK_THROWS(interior_pair_violation(Profile{1.0, 1.0, 1.0}, tied));
}

TEST_CASE("two-player equilibrium range") {
    GameSpec spec = testutil::spec_from_betas({4.0, 6.0});
    Interval range = two_player_equilibrium_range(spec);
    CHECK(range.lo == doctest::Approx(0.0));
    CHECK(range.hi == doctest::Approx(2.0));

    for (double x : {0.0, 0.5, 1.0, 1.7, 2.0}) {
        EquilibriumReport rep = classify(Profile{x, x}, spec);
        CHECK(rep.is_equilibrium);
        CHECK(rep.family == Family::OneValue);
    }
    CHECK(!classify(Profile{2.05, 2.05}, spec).is_equilibrium);
    // asymmetric profiles never survive: the lower side wants to match
    CHECK(!classify(Profile{1.0, 1.5}, spec).is_equilibrium);
}

TEST_CASE("no equilibrium has two distinct positive values below the max") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(0.0, 5.0);
    int equilibria_seen = 0;
    for (int trial = 0; trial < 4000; ++trial) {
        GameSpec spec = testutil::random_spec(rng, 2 + static_cast<int>(rng() % 4));
        Vec x(spec.n());
        for (int i = 0; i < spec.n(); ++i) x(i) = d(rng);
        Profile p(x);
        CHECK(!interior_pair_violation(p, spec));
        if (classify(p, spec).is_equilibrium) ++equilibria_seen;
    }
    // catalogue equilibria must satisfy it too
    for (int trial = 0; trial < 50; ++trial) {
        testutil::BuiltEq built = testutil::random_two_value(rng, 4);
        CHECK(!interior_pair_violation(built.x, built.spec));
    }
    (void)equilibria_seen;  // random interior profiles essentially never are
}

TEST_CASE("reward bounds for the two-player game") {
    GameSpec rewarded({{1.0, 2.0}, {1.0, 2.0}}, 1.0);
    RewardEquilibriumBounds bounds = reward_two_player_bounds(rewarded);
    for (int k = 0; k < 2; ++k) {
        CHECK(bounds.per_player[k].lo == doctest::Approx(0.0));
        CHECK(bounds.per_player[k].hi == doctest::Approx(1.25));  // ratio/2 + reward/(4 cost)
    }
    Interval sym = bounds.symmetric();
    CHECK(sym.lo == doctest::Approx(0.0));
    CHECK(sym.hi == doctest::Approx(1.25));

    // the grid agrees with the closed-form interval away from its endpoints
    GridConfig grid = GridConfig::for_spec(rewarded);
    for (double x : {0.1, 0.6, 1.2}) CHECK(verify_equilibrium(Profile{x, x}, rewarded, grid));
    for (double x : {1.3, 1.8}) CHECK(!verify_equilibrium(Profile{x, x}, rewarded, grid));

    GameSpec uneven({{1.0, 2.0}, {1.0, 3.0}}, 1.0);
    RewardEquilibriumBounds ub = reward_two_player_bounds(uneven);
    CHECK(ub.per_player[0].hi == doctest::Approx(1.25));
    CHECK(ub.per_player[1].hi == doctest::Approx(1.75));
    CHECK(ub.symmetric().hi == doctest::Approx(1.25));

    CHECK_THROWS(reward_two_player_bounds(GameSpec({{1.0, 2.0}, {1.0, 3.0}}, 2.0)));  // R >= min v
    CHECK_THROWS(reward_two_player_bounds(GameSpec({{1.0, 2.0}, {1.0, 3.0}})));       // no reward
    CHECK_THROWS(reward_two_player_bounds(
        GameSpec({{1.0, 2.0}, {1.0, 3.0}, {1.0, 4.0}}, 1.0)));  // only defined for pairs
}
