#pragma once

#include <zlib.h>

#include <cstdint>
#include <deque>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctrand/ctmc.hpp"
#include "ctrand/errors.hpp"
#include "ctrand/martingale.hpp"
#include "ctrand/rational.hpp"

namespace ctrand {

/// Deterministic compression function used as a one-sided stand-in for
/// program length: a low compressed size is a valid upper bound on
/// description length; a high one proves nothing.
class CompressorProxy {
  public:
    /// deflate at level 9; the identifier pins the codec and parameters so
    /// reports are comparable only within a proxy version.
    static CompressorProxy deflate9() { return CompressorProxy{}; }

    std::string id() const { return std::string("deflate-9/zlib-") + ZLIB_VERSION; }

    std::vector<unsigned char> compress(const std::string& data) const {
        uLongf bound = compressBound(static_cast<uLong>(data.size()));
        std::vector<unsigned char> out(bound);
        int rc = compress2(out.data(), &bound,
                           reinterpret_cast<const Bytef*>(data.data()),
                           static_cast<uLong>(data.size()), 9);
        if (rc != Z_OK) throw std::runtime_error("deflate failed");
        out.resize(bound);
        return out;
    }

    std::string decompress(const std::vector<unsigned char>& data, std::size_t original_size) const {
        std::string out(original_size, '\0');
        uLongf len = static_cast<uLongf>(original_size);
        int rc = uncompress(reinterpret_cast<Bytef*>(out.data()), &len, data.data(),
                            static_cast<uLong>(data.size()));
        if (rc != Z_OK || len != original_size) throw std::runtime_error("inflate failed");
        return out;
    }
};

/// Charge for a self-delimiting frame around the compressed body (a 64-bit
/// length prefix), so reported sizes describe a self-contained encoding.
inline constexpr std::uint64_t kProxyHeaderBits = 64;

/// Compressed length in bits of the canonical spec serialization plus the
/// fixed header charge. Deterministic; an upper bound on description length.
inline std::uint64_t k_upper_bound(const TrajectorySpec& w, const CompressorProxy& proxy) {
    return 8 * proxy.compress(render_spec(w)).size() + kProxyHeaderBits;
}

inline std::uint64_t k_upper_bound_bytes(const std::string& data, const CompressorProxy& proxy) {
    return 8 * proxy.compress(data).size() + kProxyHeaderBits;
}

/// Exhaustive sum of mu_C over every spec with the given profile. Only
/// sigma-reachable admissible state words can contribute nonzero measure, so
/// the enumeration walks the reachable tree; lazily infinite models exhaust
/// the node budget. Equals 1 exactly for all-nonterminal models.
inline Rational profile_measure_sum(const CtmcModel& c, const Profile& p,
                                    std::size_t max_nodes = 1'000'000) {
    if (p.empty()) return Rational(1);  // only the empty spec has the empty profile
    std::size_t nodes = 0;
    Rational total(0);
    struct Frame {
        std::vector<StateId> word;
        Rational state_measure;
    };
    std::deque<Frame> queue;
    for (const auto& [q, w] : c.init().support) queue.push_back({{q}, Rational(w)});
    while (!queue.empty()) {
        Frame f = std::move(queue.front());
        queue.pop_front();
        if (++nodes > max_nodes)
            throw BudgetExceeded("profile enumeration exceeded node budget (model too large?)");
        if (f.word.size() == p.size()) {
            // Sum over all bit tuples with this profile via the exact measure
            // of each resulting spec.
            std::vector<std::string> bits(p.size());
            std::function<void(std::size_t)> rec = [&](std::size_t i) {
                if (++nodes > max_nodes) throw BudgetExceeded("profile enumeration exceeded node budget");
                if (i == p.size()) {
                    TrajectorySpec w;
                    for (std::size_t j = 0; j < p.size(); ++j) w.pairs.push_back({f.word[j], bits[j]});
                    total += mu_traj(c, w);
                    return;
                }
                std::string u(p[i], '0');
                while (true) {
                    bits[i] = u;
                    rec(i + 1);
                    // next binary string of this length
                    std::size_t j = u.size();
                    while (j > 0 && u[j - 1] == '1') u[--j] = '0';
                    if (j == 0) break;
                    u[j - 1] = '1';
                }
            };
            rec(0);
            continue;
        }
        if (c.terminal(f.word.back())) continue;  // longer words through q have measure 0
        for (const auto& [r, prob] : c.jump_row(f.word.back())) {
            Frame next = f;
            next.word.push_back(r);
            next.state_measure *= prob;
            queue.push_back(std::move(next));
        }
    }
    return total;
}

struct DeficiencyReport {
    std::string spec_text;
    SelfInformation self_info;
    std::uint64_t khat_bits = 0;
    Profile prof;
    std::uint64_t khat_profile_bits = 0;
    std::string proxy_id;
    /// Largest k certified by khat < l(w) - k; nonpositive values mean the
    /// report is inconclusive.
    long certified_deficiency = 0;
    bool certified = false;

    std::string verdict() const {
        if (certified)
            return "certified-nonrandom k=" + std::to_string(certified_deficiency);
        return "inconclusive";
    }
};

/// Since the proxy only upper-bounds description length, a low compressed
/// size certifies deficiency (one-sided); a high one is inconclusive. The
/// round trip through the proxy is checked byte-for-byte.
inline DeficiencyReport deficiency_report(const CtmcModel& c, const TrajectorySpec& w,
                                          const CompressorProxy& proxy,
                                          const PrecisionConfig& prec = {}) {
    DeficiencyReport report;
    report.spec_text = render_spec(w);
    report.self_info = self_information(c, w, prec);
    auto compressed = proxy.compress(report.spec_text);
    if (proxy.decompress(compressed, report.spec_text.size()) != report.spec_text)
        throw std::runtime_error("compressor proxy failed to round-trip the spec");
    report.khat_bits = 8 * compressed.size() + kProxyHeaderBits;
    report.prof = profile(w);
    std::ostringstream prof_text;
    for (std::size_t i = 0; i < report.prof.size(); ++i) {
        if (i) prof_text << ',';
        prof_text << report.prof[i];
    }
    report.khat_profile_bits = k_upper_bound_bytes(prof_text.str(), proxy);
    report.proxy_id = proxy.id();

    // Use the provably-correct side of l(w): an exact value, or the enclosure
    // lower bound rounded down.
    long l_floor;
    if (report.self_info.is_exact()) {
        l_floor = *report.self_info.exact_bits;
    } else {
        l_floor = static_cast<long>(mpfr_get_si(report.self_info.enclosure->lo(), MPFR_RNDD));
    }
    report.certified_deficiency = l_floor - static_cast<long>(report.khat_bits);
    report.certified = report.certified_deficiency > 0;
    return report;
}

}  // namespace ctrand
