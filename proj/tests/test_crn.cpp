#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "ctrand/crn.hpp"
#include "ctrand/io.hpp"
#include "support.hpp"

using namespace ctrand;

TEST_CASE("CRN parsing") {
    auto crn = parse_crn("X + Z -> 2Y + Z @ 1\ninit X = 1\ninit Z = 1\n");
    REQUIRE(crn.species == std::vector<std::string>{"X", "Y", "Z"});
    REQUIRE(crn.reactions.size() == 1);
    CHECK(crn.reactions[0].reactants == std::vector<unsigned long>{1, 0, 1});
    CHECK(crn.reactions[0].products == std::vector<unsigned long>{0, 2, 1});
    CHECK(crn.reactions[0].rate_constant == Rational(1));
    CHECK(crn.init_counts == std::vector<unsigned long>{1, 0, 1});

    CHECK_THROWS_AS(parse_crn("X -> X @ 1\n"), ParseError);
    CHECK_THROWS_AS(parse_crn("X -> 0 @ 0\n"), ParseError);
    CHECK_THROWS_AS(parse_crn("X -> 0 @ 1\ninit Q = 3\n"), ParseError);
    try {
        parse_crn("X -> 0 @ 1\nY => 0 @ 1\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
    // empty reaction list: a valid CRN whose every state is terminal
    auto empty = parse_crn("# nothing\n");
    CHECK(empty.reactions.empty());
    auto m = crn_to_ctmc(empty);
    CHECK(m.terminal(empty.initial_state()));

    // keyword prefixes stay species names
    auto kw = parse_crn("initX -> boundY @ 1\ninit initX = 2\n");
    CHECK(kw.species == std::vector<std::string>{"boundY", "initX"});
    CHECK(kw.init_counts == std::vector<unsigned long>{0, 2});
}

TEST_CASE("CRN rendering round trip") {
    std::string text = "2X -> Y @ 3/2\nY + X -> 3 Z @ 0.25\ninit X = 5\nbound Z <= 9\n";
    auto crn = parse_crn(text);
    std::string rendered = render_crn(crn);
    auto again = parse_crn(rendered);
    CHECK(again.species == crn.species);
    CHECK(again.init_counts == crn.init_counts);
    CHECK(again.bounds == crn.bounds);
    REQUIRE(again.reactions.size() == crn.reactions.size());
    for (std::size_t i = 0; i < crn.reactions.size(); ++i) {
        CHECK(again.reactions[i].reactants == crn.reactions[i].reactants);
        CHECK(again.reactions[i].products == crn.reactions[i].products);
        CHECK(again.reactions[i].rate_constant == crn.reactions[i].rate_constant);
    }
    CHECK(render_crn(again) == rendered);
}

TEST_CASE("mass-action propensities use falling factorials") {
    auto crn = parse_crn("X + Z -> 2Y + Z @ 1\n2X -> Z @ 1\n");
    // species sorted: X, Y, Z
    const Reaction& bimolecular = crn.reactions[0];
    CHECK(propensity(bimolecular, {2, 0, 3}) == Rational(6));  // k * x * z
    CHECK(propensity(bimolecular, {0, 5, 1}) == Rational(0));  // missing reactant
    const Reaction& dimer = crn.reactions[1];
    CHECK(propensity(dimer, {1, 0, 0}) == Rational(0));  // needs two X
    CHECK(propensity(dimer, {4, 0, 0}) == Rational(12));  // 4 * 3
}

TEST_CASE("compilation to a CTMC") {
    auto crn = parse_crn("X -> Y @ 2\nX -> Y @ 1\ninit X = 1\n");
    auto model = crn_to_ctmc(crn);
    // identical net effects add their propensities on the shared successor
    auto row = model.rate_row(crn.initial_state());
    REQUIRE(row.size() == 1);
    CHECK(row[0].second == Rational(3));
    CHECK(model.terminal({row[0].first}));
}

TEST_CASE("compilation accepts an alternative propensity rule") {
    auto crn = parse_crn("2X -> Y @ 3\ninit X = 4\n");
    // plain concentration-style product instead of falling factorials
    auto alt = crn_to_ctmc(crn, [](const Reaction& rho, const std::vector<unsigned long>& q) {
        for (std::size_t i = 0; i < q.size(); ++i)
            if (q[i] < rho.reactants[i]) return Rational(0);
        Rational a = rho.rate_constant;
        for (std::size_t i = 0; i < q.size(); ++i)
            for (unsigned long j = 0; j < rho.reactants[i]; ++j) a *= Rational(q[i]);
        return a;
    });
    auto row = alt.rate_row(crn.initial_state());
    REQUIRE(row.size() == 1);
    CHECK(row[0].second == Rational(48));  // 3 * 4 * 4 rather than 3 * 4 * 3
}

TEST_CASE("compilation agrees with the rate-free Boolean shadow") {
    SplitMix64 gen(13);
    const char* texts[] = {
        "X + Y -> 2X @ 1\nX -> 0 @ 2\ninit X = 2\ninit Y = 2\n",
        "A -> B @ 1/2\nB -> A @ 3\nA + B -> 0 @ 1\ninit A = 2\ninit B = 1\n",
        "2W -> W + V @ 2\nV -> W @ 5\ninit W = 3\n",
    };
    for (const char* text : texts) {
        auto crn = parse_crn(text);
        auto model = crn_to_ctmc(crn);
        auto boolean = crn_to_boolean(crn);
        // random walk over reachable states, comparing successor sets
        StateId q = crn.initial_state();
        for (int step = 0; step < 25; ++step) {
            auto row = model.rate_row(q);
            CHECK(model.terminal(q) == boolean.terminal(q));
            std::set<std::string> rate_succ;
            for (const auto& [r, _] : row) {
                rate_succ.insert(r.id);
                CHECK(boolean.delta(q, r));
            }
            // count successors claimed by the Boolean system via reactions
            auto counts = parse_count_state(crn.species, q);
            REQUIRE(counts);
            std::set<std::string> bool_succ;
            for (const auto& rho : crn.reactions) {
                RateFreeReaction rf{rho.reactants, rho.products};
                if (reaction_applicable(rf, *counts))
                    bool_succ.insert(render_count_state(crn.species, apply_reaction(rf, *counts)).id);
            }
            CHECK(bool_succ == rate_succ);
            if (row.empty()) break;
            q = row[gen() % row.size()].first;
        }
    }
}

TEST_CASE("simulation basics and determinism") {
    auto crn = parse_crn("X -> 0 @ 1\ninit X = 3\n");
    auto model = crn_to_ctmc(crn);
    SimConfig cfg;
    cfg.seed = 2024;
    cfg.max_events = 100;
    auto tau = ssa_simulate(model, cfg);
    CHECK(tau.terminated);
    REQUIRE(tau.events.size() == 4);  // three decays plus the terminal pair
    CHECK(tau.events.back().sojourn.is_infinite());
    for (std::size_t i = 0; i + 1 < tau.events.size(); ++i) {
        CHECK_FALSE(tau.events[i].sojourn.is_infinite());
        CHECK(sgn(tau.events[i].sojourn.rational_value()) > 0);
    }
    auto tau2 = ssa_simulate(model, cfg);
    REQUIRE(tau2.events.size() == tau.events.size());
    for (std::size_t i = 0; i < tau.events.size(); ++i) {
        CHECK(tau2.events[i].state == tau.events[i].state);
        CHECK(render_duration(tau2.events[i].sojourn) == render_duration(tau.events[i].sojourn));
    }
    // distinct runs use distinct child streams
    SimConfig other = cfg;
    other.run_index = 1;
    auto tau3 = ssa_simulate(model, other);
    bool differs = tau3.events.size() != tau.events.size();
    for (std::size_t i = 0; !differs && i < tau.events.size(); ++i)
        differs = render_duration(tau3.events[i].sojourn) != render_duration(tau.events[i].sojourn);
    CHECK(differs);
}

TEST_CASE("terminal-start CRN yields the zero-event trajectory") {
    auto crn = parse_crn("X -> 0 @ 1\n");  // init X = 0: nothing can fire
    auto model = crn_to_ctmc(crn);
    SimConfig cfg;
    cfg.seed = 1;
    auto tau = ssa_simulate(model, cfg);
    CHECK(tau.terminated);
    REQUIRE(tau.events.size() == 1);
    CHECK(tau.events[0].sojourn.is_infinite());
}

TEST_CASE("decay chain event count and mean total time") {
    auto crn = parse_crn("X -> 0 @ 1\ninit X = 20\n");
    auto model = crn_to_ctmc(crn);
    const int kRuns = 2000;
    double total = 0;
    for (int run = 0; run < kRuns; ++run) {
        SimConfig cfg;
        cfg.seed = 555;
        cfg.run_index = static_cast<std::uint64_t>(run);
        cfg.max_events = 50;
        auto tau = ssa_simulate(model, cfg);
        REQUIRE(tau.events.size() == 21);  // exactly 20 decays, then terminal
        double t = 0;
        for (const auto& ev : tau.events)
            if (!ev.sojourn.is_infinite()) t += ev.sojourn.rational_value().get_d();
        total += t;
    }
    double mean = total / kRuns;
    double expected = 0, var = 0;
    for (int n = 1; n <= 20; ++n) {
        expected += 1.0 / n;
        var += 1.0 / (static_cast<double>(n) * n);
    }
    double se = std::sqrt(var / kRuns);
    CHECK(std::abs(mean - expected) <= 3 * se);
}

TEST_CASE("conserved quantities stay constant along trajectories") {
    // A <-> B conserves A + B
    auto crn = parse_crn("A -> B @ 1\nB -> A @ 2\ninit A = 3\ninit B = 1\n");
    auto model = crn_to_ctmc(crn);
    SimConfig cfg;
    cfg.seed = 77;
    cfg.max_events = 40;
    auto tau = ssa_simulate(model, cfg);
    for (const auto& ev : tau.events) {
        auto counts = parse_count_state(crn.species, ev.state);
        REQUIRE(counts);
        CHECK((*counts)[0] + (*counts)[1] == 4);
    }
}

TEST_CASE("zeno report fields") {
    auto crn = parse_crn("A -> B @ 1\nB -> A @ 1\ninit A = 1\nbound A <= 1\nbound B <= 1\n");
    auto model = crn_to_ctmc(crn);
    PrecisionConfig prec;

    // all sojourns >= ln2 / M with M = 1: every first bit is 1
    Trajectory slow;
    slow.model_fingerprint = model.fingerprint();
    for (int i = 0; i < 10; ++i)
        slow.events.push_back({i % 2 ? StateId{"A:0,B:1"} : StateId{"A:1,B:0"},
                               Duration::rational(Rational(1)), ""});
    auto report = zeno_report(crn, model, slow, prec);
    CHECK(report.bounds_respected);
    CHECK(report.zero_suffix_length == 0);
    CHECK(report.detector_capital == Rational(1));
    CHECK(report.max_exit_rate == Rational(1));
    CHECK(report.total_sojourn == Rational(10));

    // t_i = 2^-(i+2): all first bits 0, capital doubles each step
    Trajectory fast;
    fast.model_fingerprint = model.fingerprint();
    for (int i = 0; i < 12; ++i)
        fast.events.push_back({i % 2 ? StateId{"A:0,B:1"} : StateId{"A:1,B:0"},
                               Duration::rational(pow2(-(i + 2))), ""});
    auto zreport = zeno_report(crn, model, fast, prec);
    CHECK(zreport.zero_suffix_length == 12);
    CHECK(zreport.detector_capital == pow2(12));

    // bound violation reports the first offending index
    Trajectory bad;
    bad.model_fingerprint = model.fingerprint();
    bad.events.push_back({{"A:1,B:0"}, Duration::rational(Rational(1)), ""});
    bad.events.push_back({{"A:2,B:0"}, Duration::rational(Rational(1)), ""});
    auto breport = zeno_report(crn, model, bad, prec);
    CHECK_FALSE(breport.bounds_respected);
    REQUIRE(breport.first_bound_violation);
    CHECK(*breport.first_bound_violation == 1);
}

TEST_CASE("trajectory files round trip byte-for-byte") {
    auto crn = parse_crn("A -> B @ 1\nB -> A @ 1\ninit A = 1\n");
    auto model = crn_to_ctmc(crn);
    SimConfig cfg;
    cfg.seed = 9;
    cfg.max_events = 6;
    cfg.depth = 4;
    auto tau = ssa_simulate(model, cfg);
    auto spec = encode_trajectory(model, tau, Profile(tau.events.size(), 4));
    for (std::size_t i = 0; i < tau.events.size(); ++i) tau.events[i].bits = spec.pairs[i].bits;

    RunManifest manifest;
    manifest.command = "test";
    manifest.timestamp = "2026-01-01T00:00:00Z";
    std::string text = render_trajectory(tau, manifest);
    Trajectory parsed = parse_trajectory(text);
    REQUIRE(parsed.events.size() == tau.events.size());
    CHECK(parsed.seed == tau.seed);
    CHECK(parsed.model_fingerprint == tau.model_fingerprint);
    for (std::size_t i = 0; i < tau.events.size(); ++i) {
        CHECK(parsed.events[i].state == tau.events[i].state);
        CHECK(parsed.events[i].bits == tau.events[i].bits);
        CHECK(render_duration(parsed.events[i].sojourn) == render_duration(tau.events[i].sojourn));
    }
    CHECK(render_trajectory(parsed, manifest) == text);
    // stored durations parse back to the exact same rationals
    for (std::size_t i = 0; i + 1 < parsed.events.size(); ++i)
        CHECK(parsed.events[i].sojourn.rational_value() == tau.events[i].sojourn.rational_value());
}
