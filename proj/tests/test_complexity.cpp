#include <catch2/catch_amalgamated.hpp>

#include "ctrand/complexity.hpp"
#include "support.hpp"

using namespace ctrand;
using testsup::table_ctmc;

namespace {

TrajectorySpec all_zero_spec(const CtmcModel&, std::size_t events, std::size_t depth) {
    TrajectorySpec w;
    for (std::size_t i = 0; i < events; ++i)
        w.pairs.push_back({{i % 2 ? "b" : "a"}, std::string(depth, '0')});
    return w;
}

}  // namespace

TEST_CASE("profile-measure sums") {
    auto loop = testsup::two_state_loop();
    CHECK(profile_measure_sum(loop, {}) == Rational(1));
    // deterministic-jump model, profile (1,1): four specs of measure 1/4
    CHECK(profile_measure_sum(loop, {1, 1}) == Rational(1));
    CHECK(profile_measure_sum(loop, {3, 2, 1}) == Rational(1));

    auto branch = table_ctmc(
        {{"a", {{"b", Rational(1)}, {"c", Rational(2)}}},
         {"b", {{"a", Rational(1)}}},
         {"c", {{"a", make_rational(1, 2)}, {"b", make_rational(1, 2)}}}},
        {{"a", make_rational(1, 3)}, {"b", make_rational(2, 3)}}, "branchy");
    for (const Profile& p : {Profile{2}, Profile{1, 2}, Profile{0, 3, 1}})
        CHECK(profile_measure_sum(branch, p) == Rational(1));

    // terminal states at the last position keep the sum at 1; earlier
    // terminals genuinely lose mass
    auto term = testsup::terminal_chain();
    CHECK(profile_measure_sum(term, {2}) == Rational(1));
    CHECK(profile_measure_sum(term, {1, 1}) == Rational(1));
    CHECK(profile_measure_sum(term, {1, 1, 1}) == Rational(0));
}

TEST_CASE("profile enumeration respects its budget") {
    auto loop = testsup::two_state_loop();
    CHECK_THROWS_AS(profile_measure_sum(loop, {8, 8, 8, 8}, 100), BudgetExceeded);
}

TEST_CASE("compression proxy is deterministic and round-trips") {
    auto proxy = CompressorProxy::deflate9();
    auto loop = testsup::two_state_loop();
    auto w = all_zero_spec(loop, 40, 25);
    auto a = k_upper_bound(w, proxy);
    auto b = k_upper_bound(w, proxy);
    CHECK(a == b);
    std::string text = render_spec(w);
    CHECK(proxy.decompress(proxy.compress(text), text.size()) == text);
    // a highly repetitive spec compresses far below its raw length
    CHECK(a < text.size() * 8 / 5);
    // the empty spec costs only framing
    CHECK(k_upper_bound({}, proxy) < 200);
}

TEST_CASE("deficiency reports certify repetitive specs and stay honest otherwise") {
    auto loop = testsup::two_state_loop();
    auto proxy = CompressorProxy::deflate9();
    auto w = all_zero_spec(loop, 40, 60);
    auto report = deficiency_report(loop, w, proxy);
    REQUIRE(report.self_info.is_exact());
    CHECK(*report.self_info.exact_bits == 2400);
    CHECK(report.certified);
    CHECK(report.certified_deficiency >= 30);
    CHECK(report.prof == Profile(40, 60));
    CHECK(report.verdict().rfind("certified-nonrandom", 0) == 0);

    // l(w) always equals -log2 mu recomputed independently
    Rational m = mu_traj(loop, w);
    auto e = dyadic_log2(m);
    REQUIRE(e);
    CHECK(*report.self_info.exact_bits == -*e);

    CHECK_THROWS_AS(deficiency_report(loop, TrajectorySpec{{{{"b"}, ""}}}, proxy),
                    std::invalid_argument);
}

TEST_CASE("genuinely random bits are not certified at depth") {
    auto loop = testsup::two_state_loop();
    auto proxy = CompressorProxy::deflate9();
    SplitMix64 gen(4242);
    TrajectorySpec w;
    for (int i = 0; i < 8; ++i) {
        std::string bits;
        for (int b = 0; b < 8; ++b) bits.push_back(gen() % 2 ? '1' : '0');
        w.pairs.push_back({{i % 2 ? "b" : "a"}, bits});
    }
    auto report = deficiency_report(loop, w, proxy);
    // 64 random bits cannot compress below 34 bits with an honest compressor
    CHECK_FALSE(report.certified);
    CHECK(report.verdict() == "inconclusive");
}

TEST_CASE("tail report: measure of high-deficiency specs per profile") {
    // Over an exhaustive enumeration of one small profile, report the
    // empirical constant c with mass{l - khat > k} <= 2^(c - k); the bound is
    // reported per proxy version, not asserted (khat includes real framing
    // overhead, so deficiencies here are strongly negative).
    auto loop = testsup::two_state_loop();
    auto proxy = CompressorProxy::deflate9();
    const Profile prof = {4, 4};
    std::map<long, Rational> mass_above;  // k -> mu-mass with l - khat > k
    std::string bits(8, '0');
    Rational total(0);
    long max_deficiency = -100000;
    while (true) {
        TrajectorySpec w;
        w.pairs.push_back({{"a"}, bits.substr(0, 4)});
        w.pairs.push_back({{"b"}, bits.substr(4)});
        Rational m = mu_traj(loop, w);
        total += m;
        auto info = self_information(loop, w);
        long deficiency = *info.exact_bits - static_cast<long>(k_upper_bound(w, proxy));
        max_deficiency = std::max(max_deficiency, deficiency);
        for (long k = -400; k <= deficiency - 1; ++k) mass_above[k] += m;
        std::size_t j = bits.size();
        while (j > 0 && bits[j - 1] == '1') bits[--j] = '0';
        if (j == 0) break;
        bits[j - 1] = '1';
    }
    REQUIRE(total == Rational(1));
    double c_proxy = -1e9;
    for (const auto& [k, m] : mass_above) {
        double log2m = std::log2(m.get_d());
        c_proxy = std::max(c_proxy, log2m + static_cast<double>(k));
    }
    WARN("tail report (" << proxy.id() << ", profile 4,4): max deficiency " << max_deficiency
                         << ", fitted c_proxy " << c_proxy);
    CHECK(max_deficiency < 0);  // honest framing overhead dominates at this size
}

TEST_CASE("self-information is additive along extensions") {
    auto loop = testsup::two_state_loop();
    TrajectorySpec w;
    w.pairs.push_back({{"a"}, "01"});
    auto l1 = self_information(loop, w);
    auto deeper = w.with_bit('0');
    auto l2 = self_information(loop, deeper);
    REQUIRE(l1.is_exact());
    REQUIRE(l2.is_exact());
    CHECK(*l2.exact_bits - *l1.exact_bits == 1);
}
