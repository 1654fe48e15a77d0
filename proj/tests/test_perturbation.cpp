#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nteg/oracle.hpp"
#include "nteg/perturbation.hpp"
#include "test_util.hpp"

using namespace nteg;

namespace {

// β=(3,6,9) catalogue workhorses used throughout.
struct Catalogue {
    GameSpec spec = testutil::spec_from_betas({3.0, 6.0, 9.0});
    Profile one_fr{0.0, 2.0, 2.0};   // one-value, player 0 free rides
    Profile all_in{1.0, 1.0, 1.0};   // one-value, everyone contributes
    Profile two_val{0.6, 1.2, 1.2};  // two-value, minor player 0
    Profile zeros{0.0, 0.0, 0.0};    // degenerate all-zero state

    EquilibriumReport rep(const Profile& x) const { return classify(x, spec); }
};

}  // namespace

TEST_CASE("join predictions on the one-value catalogue") {
    Catalogue cat;

    SUBCASE("entry that squeezes the lowest contributor") {
        auto p = predict_join(cat.spec, cat.all_in, cat.rep(cat.all_in), {1.0, 3.8});
        CHECK(p.others_change);
        CHECK(p.rule == DisruptionRule::JoinOneValue);
        CHECK(to_string(p.rule) == "join-one-value");
        CHECK(p.boundary_margin > 0.05);
    }
    SUBCASE("low-ratio newcomer free-rides") {
        auto p = predict_join(cat.spec, cat.all_in, cat.rep(cat.all_in), {1.0, 2.5});
        CHECK(!p.others_change);
    }
    SUBCASE("entry absorbed beside high-ratio contributors") {
        // e = min(2, 5-4) = 1; S+e = 5 < 6 = lowest contributor ratio
        auto p = predict_join(cat.spec, cat.one_fr, cat.rep(cat.one_fr), {1.0, 5.0});
        CHECK(!p.others_change);
    }
    SUBCASE("capped entry lands exactly on the squeeze edge") {
        // e caps at x_eq = 2, S+e = 6 = β of the lowest contributor
        auto p = predict_join(cat.spec, cat.one_fr, cat.rep(cat.one_fr), {1.0, 7.0});
        CHECK(!p.others_change);
        CHECK(p.boundary_margin == doctest::Approx(0.0));
    }
    SUBCASE("all-zero state absorbs any newcomer") {
        auto p = predict_join(cat.spec, cat.zeros, cat.rep(cat.zeros), {1.0, 4.0});
        CHECK(!p.others_change);
    }
}

TEST_CASE("join predictions on the two-value catalogue") {
    Catalogue cat;
    auto rep = cat.rep(cat.two_val);
    REQUIRE(rep.family == Family::TwoValue);

    auto stays = predict_join(cat.spec, cat.two_val, rep, {1.0, 2.9});
    CHECK(!stays.others_change);
    CHECK(stays.rule == DisruptionRule::JoinTwoValue);

    auto moves = predict_join(cat.spec, cat.two_val, rep, {1.0, 3.5});
    CHECK(moves.others_change);
}

TEST_CASE("join prediction input validation") {
    Catalogue cat;
    auto rep = cat.rep(cat.one_fr);
    CHECK_THROWS(predict_join(cat.spec, cat.one_fr, rep, {0.0, 1.0}));
    CHECK_THROWS(predict_join(cat.spec, cat.one_fr, rep, {1.0, -1.0}));
    // non-equilibrium reports are rejected
    auto bad = classify(Profile{2.0, 2.0, 2.0}, cat.spec);
    CHECK_THROWS(predict_join(cat.spec, Profile{2.0, 2.0, 2.0}, bad, {1.0, 4.0}));
    // reward-bearing specs have no closed-form rule (rejected before the
    // report is even inspected, so a hand-built one is fine here)
    GameSpec rewarded({{1.0, 2.0}, {1.0, 2.0}}, 1.0);
    EquilibriumReport rrep;
    rrep.is_equilibrium = true;
    rrep.family = Family::OneValue;
    rrep.eq_value = 0.6;
    CHECK_THROWS(predict_join(rewarded, Profile{0.6, 0.6}, rrep, {1.0, 4.0}));
}

TEST_CASE("leave predictions") {
    Catalogue cat;

    SUBCASE("free rider leaving changes nothing") {
        auto p = predict_leave(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 0);
        CHECK(!p.others_change);
        CHECK(p.rule == DisruptionRule::LeaveOneValue);
    }
    SUBCASE("a contributor leaving a two-contributor equilibrium strands the other") {
        auto p = predict_leave(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 1);
        CHECK(p.others_change);
    }
    SUBCASE("a contributor leaving a full house changes nothing without re-entry") {
        auto p = predict_leave(cat.spec, cat.all_in, cat.rep(cat.all_in), 0);
        CHECK(!p.others_change);
    }
    SUBCASE("a leave that pulls a free rider back in") {
        GameSpec spec = testutil::spec_from_betas({2.5, 6.0, 9.0, 12.0});
        Profile x{0.0, 1.0, 1.0, 1.0};
        auto rep = classify(x, spec);
        REQUIRE(rep.is_equilibrium);
        auto p = predict_leave(spec, x, rep, 1);
        CHECK(p.others_change);  // 2.5 > 2 * 1.0: the free rider re-enters
        CHECK(p.boundary_margin == doctest::Approx(0.5 / 2.5));
    }
    SUBCASE("two-value: the minor leaving leaves the majors in place") {
        auto p = predict_leave(cat.spec, cat.two_val, cat.rep(cat.two_val), 0);
        CHECK(!p.others_change);
        CHECK(p.rule == DisruptionRule::LeaveTwoValue);
    }
    SUBCASE("two-value: a major leaving always moves the minor") {
        auto p = predict_leave(cat.spec, cat.two_val, cat.rep(cat.two_val), 1);
        CHECK(p.others_change);
    }
    SUBCASE("out-of-range leaver throws") {
        CHECK_THROWS(predict_leave(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 3));
    }
}

TEST_CASE("deviation predictions on one-value equilibria") {
    Catalogue cat;

    SUBCASE("contributor raising always disrupts") {
        auto p = predict_deviation(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 1, 2.4);
        CHECK(p.others_change);
        CHECK(p.rule == DisruptionRule::DeviateOneValue);
    }
    SUBCASE("contributor lowering with one peer drops the peer's cap") {
        auto p = predict_deviation(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 1, 1.5);
        CHECK(p.others_change);
    }
    SUBCASE("contributor lowering among three peers is absorbed") {
        auto p = predict_deviation(cat.spec, cat.all_in, cat.rep(cat.all_in), 2, 0.8);
        CHECK(!p.others_change);
    }
    SUBCASE("lowering that re-admits a free rider") {
        GameSpec spec = testutil::spec_from_betas({2.5, 6.0, 9.0, 12.0});
        Profile x{0.0, 1.0, 1.0, 1.0};
        auto rep = classify(x, spec);
        auto in = predict_deviation(spec, x, rep, 3, 0.3);
        CHECK(in.others_change);  // 2.5 > 2*1 + 0.3
        auto out = predict_deviation(spec, x, rep, 3, 0.6);
        CHECK(!out.others_change);  // 2.5 < 2*1 + 0.6
    }
    SUBCASE("free rider overshooting the shared value disrupts") {
        auto p = predict_deviation(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 0, 2.5);
        CHECK(p.others_change);
    }
    SUBCASE("free rider entering below the shared value is absorbed here") {
        auto p = predict_deviation(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 0, 1.0);
        CHECK(!p.others_change);  // 6 < 2*2 + 1 fails
    }
    SUBCASE("free rider matching the shared value sits on the edge") {
        auto p = predict_deviation(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 0, 2.0);
        CHECK(!p.others_change);  // 6 < 6 fails, margin 0
        CHECK(p.boundary_margin == doctest::Approx(0.0));
    }
    SUBCASE("all-zero: others follow while someone's ratio exceeds the push") {
        auto rep = cat.rep(cat.zeros);
        CHECK(predict_deviation(cat.spec, cat.zeros, rep, 0, 2.0).others_change);
        CHECK(!predict_deviation(cat.spec, cat.zeros, rep, 2, 7.0).others_change);
        CHECK(predict_deviation(cat.spec, cat.zeros, rep, 2, 5.0).others_change);
    }
    SUBCASE("no-op deviation") {
        auto p = predict_deviation(cat.spec, cat.one_fr, cat.rep(cat.one_fr), 1, 2.0);
        CHECK(!p.others_change);
    }
    SUBCASE("invalid deviations throw") {
        auto rep = cat.rep(cat.one_fr);
        CHECK_THROWS(predict_deviation(cat.spec, cat.one_fr, rep, -1, 1.0));
        CHECK_THROWS(predict_deviation(cat.spec, cat.one_fr, rep, 0, -0.5));
    }
}

TEST_CASE("deviation predictions on two-value equilibria") {
    Catalogue cat;
    auto rep = cat.rep(cat.two_val);

    SUBCASE("a major moving always moves the minor") {
        CHECK(predict_deviation(cat.spec, cat.two_val, rep, 1, 1.0).others_change);
        CHECK(predict_deviation(cat.spec, cat.two_val, rep, 2, 1.4).others_change);
    }
    SUBCASE("the minor sliding down is absorbed when the majors have slack") {
        auto p = predict_deviation(cat.spec, cat.two_val, rep, 0, 0.5);
        CHECK(!p.others_change);
        CHECK(p.rule == DisruptionRule::DeviateTwoValue);
    }
    SUBCASE("the minor overshooting the major value disrupts") {
        CHECK(predict_deviation(cat.spec, cat.two_val, rep, 0, 1.5).others_change);
    }
    SUBCASE("a tight major loses its slack even for a downward minor move") {
        GameSpec spec = testutil::spec_from_betas({3.0, 3.2, 9.0});
        Profile x{0.2, 1.4, 1.4};
        auto r = classify(x, spec);
        REQUIRE(r.family == Family::TwoValue);
        // rhs = 1.4 + 0.8 + 1.4 = 3.6 > 3.2: the tight major must move
        CHECK(predict_deviation(spec, x, r, 0, 0.8).others_change);
    }
    SUBCASE("a free rider entering shifts the minor's fill") {
        GameSpec spec = testutil::spec_from_betas({3.0, 6.0, 9.0, 12.0});
        Profile x{0.0, 1.0, 2.5, 2.5};
        auto r = classify(x, spec);
        REQUIRE(r.family == Family::TwoValue);
        CHECK(predict_deviation(spec, x, r, 0, 0.5).others_change);
    }
}

TEST_CASE("applying events and observing the first-step responses") {
    Catalogue cat;
    DynamicsConfig cfg;

    SUBCASE("join: replacement leaves the reliability invariant") {
        auto res = apply_and_settle(cat.spec, cat.all_in, JoinEvent{{1.0, 3.8}}, cfg);
        CHECK(res.observed_change);
        CHECK(res.trace.outcome == Outcome::Converged);
        const Profile& last = res.trace.steps.back();
        REQUIRE(last.size() == 4);
        CHECK(last[0] < 1e-6);  // settled within the convergence tolerance of 0
        CHECK(last[1] == doctest::Approx(1.0));
        CHECK(last[2] == doctest::Approx(1.0));
        CHECK(last[3] == doctest::Approx(1.0));
        // the newcomer replaced the lowest-ratio player one-for-one
        CHECK(reliability(last) == doctest::Approx(reliability(cat.all_in)));
    }
    SUBCASE("join: absorbed entry observed as no change") {
        auto res = apply_and_settle(cat.spec, cat.one_fr, JoinEvent{{1.0, 5.0}}, cfg);
        CHECK(!res.observed_change);
        CHECK(res.trace.outcome == Outcome::Converged);
        const Profile& last = res.trace.steps.back();
        CHECK(last[3] == doctest::Approx(1.0));  // the newcomer's two-value fill
    }
    SUBCASE("leave: free rider exits unnoticed") {
        auto res = apply_and_settle(cat.spec, cat.one_fr, LeaveEvent{0}, cfg);
        CHECK(!res.observed_change);
        CHECK(res.trace.outcome == Outcome::Converged);
        CHECK(res.post_spec.n() == 2);
    }
    SUBCASE("leave: stranding a lone contributor is observed immediately") {
        auto res = apply_and_settle(cat.spec, cat.one_fr, LeaveEvent{1}, cfg);
        CHECK(res.observed_change);  // the re-run itself oscillates, but the
                                     // first-step responses already moved
    }
    SUBCASE("deviate: absorbed three-way lowering") {
        auto res = apply_and_settle(cat.spec, cat.all_in, DeviateEvent{2, 0.8, false}, cfg);
        CHECK(!res.observed_change);
    }
    SUBCASE("deviate: frozen deviator holds through the settle") {
        auto res = apply_and_settle(cat.spec, cat.all_in, DeviateEvent{2, 0.8, true}, cfg);
        for (const Profile& p : res.trace.steps) CHECK(p[2] == doctest::Approx(0.8));
    }
    SUBCASE("predictions agree with observations across the catalogue") {
        struct Case {
            Profile x;
            PerturbationEvent ev;
        };
        std::vector<Case> cases = {
            {cat.all_in, JoinEvent{{1.0, 3.8}}},  {cat.all_in, JoinEvent{{1.0, 2.5}}},
            {cat.one_fr, JoinEvent{{1.0, 5.0}}},  {cat.two_val, JoinEvent{{1.0, 3.5}}},
            {cat.two_val, JoinEvent{{1.0, 2.9}}}, {cat.one_fr, LeaveEvent{0}},
            {cat.one_fr, LeaveEvent{1}},          {cat.all_in, LeaveEvent{0}},
            {cat.two_val, LeaveEvent{0}},         {cat.two_val, LeaveEvent{1}},
            {cat.one_fr, DeviateEvent{1, 2.4}},   {cat.one_fr, DeviateEvent{1, 1.5}},
            {cat.all_in, DeviateEvent{2, 0.8}},   {cat.one_fr, DeviateEvent{0, 2.5}},
            {cat.one_fr, DeviateEvent{0, 1.0}},   {cat.two_val, DeviateEvent{0, 0.5}},
            {cat.two_val, DeviateEvent{0, 1.5}},  {cat.two_val, DeviateEvent{1, 1.0}},
        };
        for (const Case& c : cases) {
            auto rep = cat.rep(c.x);
            DisruptionPrediction pred;
            if (const auto* j = std::get_if<JoinEvent>(&c.ev))
                pred = predict_join(cat.spec, c.x, rep, j->params);
            else if (const auto* l = std::get_if<LeaveEvent>(&c.ev))
                pred = predict_leave(cat.spec, c.x, rep, l->player);
            else
                pred = predict_deviation(cat.spec, c.x, rep,
                                         std::get<DeviateEvent>(c.ev).player,
                                         std::get<DeviateEvent>(c.ev).value);
            auto res = apply_and_settle(cat.spec, c.x, c.ev, cfg);
            CAPTURE(pred.details);
            CHECK(pred.others_change == res.observed_change);
        }
    }
}

TEST_CASE("randomized prediction/observation agreement sample") {
    std::mt19937_64 rng(2024);
    DynamicsConfig cfg;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 120 && checked < 60; ++trial) {
        auto built = testutil::settled_equilibrium(rng, 3 + static_cast<int>(rng() % 3));
        if (!built) continue;
        const auto& [spec, x, rep] = *built;

        PerturbationEvent ev;
        int kind = static_cast<int>(rng() % 3);
        if (kind == 0) {
            double beta_new = 1.0 + 11.0 * unit(rng);
            ev = JoinEvent{{1.0, beta_new}};
        } else if (kind == 1) {
            ev = LeaveEvent{static_cast<int>(rng() % static_cast<std::size_t>(spec.n()))};
        } else {
            int who = static_cast<int>(rng() % static_cast<std::size_t>(spec.n()));
            ev = DeviateEvent{who, 3.0 * unit(rng), false};
        }

        DisruptionPrediction pred;
        if (const auto* j = std::get_if<JoinEvent>(&ev))
            pred = predict_join(spec, x, rep, j->params);
        else if (const auto* l = std::get_if<LeaveEvent>(&ev)) {
            if (spec.n() <= 2) continue;  // removal below two players is rejected
            pred = predict_leave(spec, x, rep, l->player);
        } else
            pred = predict_deviation(spec, x, rep, std::get<DeviateEvent>(ev).player,
                                     std::get<DeviateEvent>(ev).value);
        if (pred.boundary_margin <= 1e-8) continue;  // boundary cases excluded

        auto res = apply_and_settle(spec, x, ev, cfg);
        CAPTURE(pred.details);
        CHECK(pred.others_change == res.observed_change);
        ++checked;
    }
    CHECK(checked >= 40);
}

TEST_CASE("coalition merges pool effort into the smallest member slot") {
    Profile x{1.0, 1.0, 1.0};
    Profile merged = coalition_merge(x, {0, 1});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0] == doctest::Approx(2.0));
    CHECK(merged[1] == doctest::Approx(1.0));

    // member order does not matter; non-members keep their order
    Profile y{0.5, 2.0, 0.25, 1.0};
    Profile m2 = coalition_merge(y, {3, 1});
    REQUIRE(m2.size() == 3);
    CHECK(m2[0] == doctest::Approx(0.5));
    CHECK(m2[1] == doctest::Approx(3.0));
    CHECK(m2[2] == doctest::Approx(0.25));

    CHECK_THROWS(coalition_merge(x, {}));
    CHECK_THROWS(coalition_merge(x, {0, 0}));
    CHECK_THROWS(coalition_merge(x, {0, 3}));
}

TEST_CASE("coalitions never raise the normalised total effort") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(0.0, 5.0);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 3 + static_cast<int>(rng() % 5);
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = d(rng);
        Profile x(v);
        if (x.all_zero()) continue;
        int size = 2 + static_cast<int>(rng() % static_cast<std::size_t>(n - 1));
        std::vector<int> ids(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(static_cast<std::size_t>(size));

        double pooled = 0.0;
        for (int i : ids) pooled += x[i];
        Profile merged = coalition_merge(x, ids);
        double before = *nte(x);
        double after = *nte(merged);
        CHECK(after <= before + 1e-12);
        if (pooled > x.max() + 1e-12) CHECK(after < before - 1e-12);
    }
}

TEST_CASE("non-myopic search on a reward-free equilibrium is diagnostic") {
    Catalogue cat;
    DynamicsConfig cfg;
    auto rep = non_myopic_search(cat.spec, cat.one_fr, 1, cfg, 2.0);
    CHECK(rep.diagnostic);
    CHECK(!rep.any_positive);
    REQUIRE(rep.outcomes.size() == 50);  // (K-1)*base / (base/50)
    // outcomes are sorted best-first; the gentlest push loses the least
    CHECK(rep.outcomes.front().utility_delta <= 0.0 + 1e-12);
    CHECK(rep.outcomes.front().forced_value == doctest::Approx(2.04));
    CHECK(rep.outcomes.front().utility_delta == doctest::Approx(-0.04));
    for (std::size_t k = 1; k < rep.outcomes.size(); ++k)
        CHECK(rep.outcomes[k - 1].utility_delta >= rep.outcomes[k].utility_delta - 1e-12);

    CHECK_THROWS(non_myopic_search(cat.spec, cat.one_fr, 0, cfg));   // free rider
    CHECK_THROWS(non_myopic_search(cat.spec, cat.one_fr, 1, cfg, 1.0));
    CHECK_THROWS(non_myopic_search(cat.spec, cat.one_fr, 9, cfg));
}

TEST_CASE("non-myopic search under a reward can force free riding") {
    GameSpec spec({{1.0, 2.0}, {1.0, 2.0}}, 1.0);
    Profile eq{1.0, 1.0};
    REQUIRE(verify_equilibrium(eq, spec, GridConfig::for_spec(spec)));
    DynamicsConfig cfg;
    auto rep = non_myopic_search(spec, eq, 0, cfg, 3.5);
    CHECK(!rep.diagnostic);
    bool forced_free_riding = false;
    for (const auto& o : rep.outcomes)
        if (o.forced_value > 3.0 && o.settled[1] == 0.0) forced_free_riding = true;
    CHECK(forced_free_riding);
}
