#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctrand/errors.hpp"
#include "ctrand/rational.hpp"
#include "ctrand/real.hpp"

namespace ctrand {

/// Nonnegative rate. Stored exactly when rational; non-rational rates carry a
/// high-precision enclosure binding and are required to be strictly positive.
class Rate {
  public:
    static Rate of(Rational q) {
        if (sgn(q) < 0) throw std::invalid_argument("rate must be nonnegative");
        Rate r;
        r.exact_ = std::move(q);
        return r;
    }
    static Rate of(long q) { return of(Rational(q)); }

    static Rate computable(std::function<Enclosure(mpfr_prec_t)> binding) {
        Rate r;
        r.binding_ = std::move(binding);
        return r;
    }

    bool is_exact() const { return exact_.has_value(); }
    const Rational& exact() const { return *exact_; }
    bool is_zero() const { return exact_ && sgn(*exact_) == 0; }

    Enclosure enclose(mpfr_prec_t prec) const {
        if (exact_) return Enclosure::of_rational(*exact_, prec);
        return binding_(prec);
    }

  private:
    std::optional<Rational> exact_;
    std::function<Enclosure(mpfr_prec_t)> binding_;
};

/// Half-open dyadic interval I_w = (i * 2^-n, (i+1) * 2^-n], where n = |w| and
/// i is the lexicographic rank of w among {0,1}^n.
struct DyadicInterval {
    Rational lo;
    Rational hi;
    std::string generator;

    Rational width() const { return hi - lo; }
};

inline void validate_bits(const std::string& w) {
    for (char c : w)
        if (c != '0' && c != '1') throw std::invalid_argument("bit string may contain only 0/1");
}

inline DyadicInterval dyadic_interval(const std::string& w) {
    validate_bits(w);
    mpz_class rank(0);
    for (char c : w) {
        rank <<= 1;
        if (c == '1') rank += 1;
    }
    Rational unit = pow2(-static_cast<long>(w.size()));
    return {Rational(rank) * unit, Rational(rank + 1) * unit, w};
}

/// A duration in (0, inf]. Three representations: an exact positive rational,
/// the symbol inf, or a quantile-exact point: the t with exp(-rate * t) equal
/// to a given rational survival probability (so F is exactly rational whenever
/// the querying rate is an integer multiple of the stored one).
class Duration {
  public:
    static Duration rational(Rational t) {
        if (sgn(t) <= 0) throw std::invalid_argument("duration must be positive");
        Duration d;
        d.value_ = std::move(t);
        return d;
    }

    static Duration infinity() {
        Duration d;
        d.infinite_ = true;
        return d;
    }

    /// t = -ln(survival)/rate with survival in (0,1) and rate > 0, stored
    /// symbolically.
    static Duration from_survival(Rational survival, Rational rate) {
        if (sgn(survival) <= 0 || survival >= 1)
            throw std::invalid_argument("survival probability must be in (0,1)");
        if (sgn(rate) <= 0) throw std::invalid_argument("from_survival requires rate > 0");
        Duration d;
        d.survival_ = std::move(survival);
        d.survival_rate_ = std::move(rate);
        return d;
    }

    bool is_infinite() const { return infinite_; }
    bool is_rational() const { return value_.has_value(); }
    bool is_survival_point() const { return survival_.has_value(); }
    const Rational& rational_value() const { return *value_; }
    const Rational& survival() const { return *survival_; }
    const Rational& survival_rate() const { return *survival_rate_; }

    /// Enclosure of the numeric value (finite cases).
    Enclosure enclose(mpfr_prec_t prec) const {
        if (infinite_) return Enclosure::pos_infinity(prec);
        if (value_) return Enclosure::of_rational(*value_, prec);
        Enclosure s = Enclosure::of_rational(*survival_, prec);
        return (-log(s)).div_rational_pos(*survival_rate_);
    }

  private:
    std::optional<Rational> value_;
    std::optional<Rational> survival_;
    std::optional<Rational> survival_rate_;
    bool infinite_ = false;
};

/// F_lambda(t), either exactly rational or as a directed enclosure.
struct CdfValue {
    std::optional<Rational> exact;
    std::optional<Enclosure> approx;
};

/// F_lambda(t) = 1 - exp(-lambda t) for lambda > 0 (with F(inf) = 1 exactly);
/// the rate-0 point mass has F_0(t) = 0 for finite t and 1 at inf.
inline CdfValue exp_cdf(const Rate& rate, const Duration& t, mpfr_prec_t prec) {
    if (t.is_infinite()) return {Rational(1), std::nullopt};
    if (rate.is_zero()) return {Rational(0), std::nullopt};
    if (t.is_survival_point() && rate.is_exact()) {
        Rational k = rate.exact() / t.survival_rate();
        if (k.get_den() == 1 && k.get_num().fits_ulong_p()) {
            // F = 1 - s^k exactly
            unsigned long e = k.get_num().get_ui();
            mpz_class num, den;
            mpz_pow_ui(num.get_mpz_t(), t.survival().get_num().get_mpz_t(), e);
            mpz_pow_ui(den.get_mpz_t(), t.survival().get_den().get_mpz_t(), e);
            return {Rational(1) - make_rational(num, den), std::nullopt};
        }
    }
    Enclosure f = [&] {
        if (t.is_survival_point()) {
            // 1 - exp((lambda / c) * ln s), ln s < 0
            Enclosure ln_s = log(Enclosure::of_rational(t.survival(), prec));
            Enclosure exponent = rate.is_exact()
                ? ln_s.mul_rational_pos(rate.exact() / t.survival_rate())
                : -mul_nonneg(-ln_s, rate.enclose(prec).div_rational_pos(t.survival_rate()));
            return one_minus(exp(exponent));
        }
        Enclosure x = rate.is_exact()
            ? Enclosure::of_rational(rate.exact() * t.rational_value(), prec)
            : mul_nonneg(rate.enclose(prec), Enclosure::of_rational(t.rational_value(), prec));
        return one_minus(exp(-x));
    }();
    return {std::nullopt, std::move(f)};
}

/// Quantile cell D_lambda(w) = F_lambda^{-1}(I_w) over (0, inf]. Lower bound
/// is always open; a finite upper bound is closed.
struct TimeInterval {
    std::string generator;
    bool empty = false;
    bool point_at_infinity = false;
    std::optional<Enclosure> lower;   // exact 0 rendered as an exact enclosure
    std::optional<Enclosure> upper;   // nullopt: unbounded
    bool includes_infinity = false;   // distinguishes (a, inf] from (a, inf)
};

inline bool all_of_bit(const std::string& w, char b) {
    return std::all_of(w.begin(), w.end(), [b](char c) { return c == b; });
}

inline TimeInterval quantile_interval(const Rate& rate, const std::string& w,
                                      const PrecisionConfig& prec = {}) {
    validate_bits(w);
    TimeInterval out;
    out.generator = w;
    if (rate.is_zero()) {
        // Example case table for the point mass at infinity.
        if (w.empty()) {
            out.lower = Enclosure::exact_zero(prec.working);
            out.includes_infinity = true;
        } else if (all_of_bit(w, '0')) {
            out.lower = Enclosure::exact_zero(prec.working);
            out.includes_infinity = false;
        } else if (all_of_bit(w, '1')) {
            out.point_at_infinity = true;
        } else {
            out.empty = true;
        }
        return out;
    }
    DyadicInterval iw = dyadic_interval(w);
    auto inverse = [&](const Rational& p) {
        // -ln(1 - p) / lambda
        Enclosure ln = log(Enclosure::of_rational(Rational(1) - p, prec.working));
        if (rate.is_exact()) return (-ln).div_rational_pos(rate.exact());
        return div_nonneg_by_pos(-ln, rate.enclose(prec.working));
    };
    out.lower = sgn(iw.lo) == 0 ? Enclosure::exact_zero(prec.working) : inverse(iw.lo);
    if (iw.hi == 1) {
        out.includes_infinity = true;
    } else {
        out.upper = inverse(iw.hi);
    }
    return out;
}

namespace detail {

/// Decides "F <= m" for an escalating enclosure computation; `recompute` is
/// called with doubling precision until the comparison resolves.
inline bool decide_le(const CdfValue& f, const Rational& m,
                      const std::function<CdfValue(mpfr_prec_t)>& recompute,
                      const PrecisionConfig& prec) {
    if (f.exact) return *f.exact <= m;
    CdfValue cur = f;
    for (mpfr_prec_t p = cur.approx->precision();; p *= 2) {
        if (auto r = cur.approx->le(m)) return *r;
        if (p >= prec.maximum) break;
        cur = recompute(std::min<mpfr_prec_t>(p * 2, prec.maximum));
        if (cur.exact) return *cur.exact <= m;
    }
    throw BoundaryAmbiguous("CDF value cannot be separated from dyadic endpoint " +
                            rational_str(m) + " at maximum precision");
}

}  // namespace detail

/// w approximates t under lambda iff t lies in D_lambda(w).
inline bool approximates(const Rate& rate, const std::string& w, const Duration& t,
                         const PrecisionConfig& prec = {}) {
    validate_bits(w);
    if (rate.is_zero())
        return t.is_infinite() ? all_of_bit(w, '1') : all_of_bit(w, '0');
    if (w.empty()) return true;  // I_"" = (0,1] holds every CDF value
    DyadicInterval iw = dyadic_interval(w);
    if (t.is_infinite()) return iw.hi == 1;  // F = 1 exactly
    auto recompute = [&](mpfr_prec_t p) { return exp_cdf(rate, t, p); };
    CdfValue f = exp_cdf(rate, t, prec.working);
    bool le_hi = detail::decide_le(f, iw.hi, recompute, prec);
    if (!le_hi) return false;
    bool le_lo = sgn(iw.lo) == 0 ? false : detail::decide_le(f, iw.lo, recompute, prec);
    return !le_lo;  // in (lo, hi] iff F > lo and F <= hi
}

/// The unique w of length `depth` with t in D_lambda(w): the first `depth`
/// binary digits of F_lambda(t) under the half-open cell convention (a value
/// equal to a shared endpoint belongs to the left cell).
inline std::string encode_time(const Rate& rate, const Duration& t, std::size_t depth,
                               const PrecisionConfig& prec = {}) {
    if (rate.is_zero()) {
        if (!t.is_infinite())
            throw RateDurationMismatch("rate 0 pairs only with an infinite duration");
        return std::string(depth, '1');
    }
    if (t.is_infinite())
        throw RateDurationMismatch("positive rate pairs only with a finite duration");
    auto recompute = [&](mpfr_prec_t p) { return exp_cdf(rate, t, p); };
    CdfValue f = exp_cdf(rate, t, prec.working);
    std::string bits;
    bits.reserve(depth);
    Rational lo(0), hi(1);
    for (std::size_t i = 0; i < depth; ++i) {
        Rational mid = (lo + hi) / 2;
        if (detail::decide_le(f, mid, recompute, prec)) {
            bits.push_back('0');
            hi = mid;
        } else {
            bits.push_back('1');
            lo = mid;
        }
    }
    return bits;
}

/// Rate sequence: finite with a single trailing zero rate, or an infinite
/// all-positive sequence given by a generator with a materialized prefix.
class RateSequence {
  public:
    static RateSequence finite(std::vector<Rate> rates) {
        if (rates.empty()) throw std::invalid_argument("rate sequence must be nonempty");
        for (std::size_t i = 0; i + 1 < rates.size(); ++i)
            if (rates[i].is_zero())
                throw std::invalid_argument("zero rate may occur only at the end");
        if (!rates.back().is_zero())
            throw std::invalid_argument("finite rate sequence must end with the zero rate");
        RateSequence s;
        s.prefix_ = std::move(rates);
        s.infinite_ = false;
        return s;
    }

    static RateSequence infinite(std::function<Rate(std::size_t)> gen,
                                 std::size_t materialize = 0) {
        RateSequence s;
        s.infinite_ = true;
        s.gen_ = std::move(gen);
        for (std::size_t i = 0; i < materialize; ++i) s.prefix_.push_back(s.gen_(i));
        return s;
    }

    bool is_infinite() const { return infinite_; }
    std::optional<std::size_t> length() const {
        if (infinite_) return std::nullopt;
        return prefix_.size();
    }

    Rate at(std::size_t i) const {
        if (i < prefix_.size()) return prefix_[i];
        if (!infinite_) throw std::out_of_range("rate index past the end of a finite sequence");
        Rate r = gen_(i);
        if (r.is_zero()) throw std::invalid_argument("infinite rate sequence produced a zero rate");
        return r;
    }

  private:
    std::vector<Rate> prefix_;
    bool infinite_ = false;
    std::function<Rate(std::size_t)> gen_;
};

/// Ordered list of durations paired with a rate sequence.
struct DurationSequence {
    std::vector<Duration> durations;

    void validate_against(const RateSequence& rates) const {
        if (auto len = rates.length(); len && durations.size() > *len)
            throw std::invalid_argument("more durations than rates");
        for (std::size_t i = 0; i < durations.size(); ++i) {
            bool finite = !durations[i].is_infinite();
            bool positive_rate = !rates.at(i).is_zero();
            if (finite != positive_rate)
                throw std::invalid_argument("duration finiteness must match rate positivity");
        }
    }
};

/// Tuple of per-index binary approximations (w_0, ..., w_{n-1}).
using BitTuple = std::vector<std::string>;

inline std::size_t total_bits(const BitTuple& w) {
    std::size_t n = 0;
    for (const auto& u : w) n += u.size();
    return n;
}

/// mu_lambda of the cylinder named by w: 2^(-sum |w_i|), exact.
inline Rational mu_duration(const RateSequence& rates, const BitTuple& w) {
    if (auto len = rates.length(); len && w.size() > *len)
        throw std::invalid_argument("approximation tuple longer than the rate sequence");
    for (const auto& u : w) validate_bits(u);
    return pow2(-static_cast<long>(total_bits(w)));
}

inline bool tuple_approximates(const RateSequence& rates, const BitTuple& w,
                               const DurationSequence& t, const PrecisionConfig& prec = {}) {
    if (auto len = rates.length(); len && w.size() > *len)
        throw std::invalid_argument("approximation tuple longer than the rate sequence");
    if (w.size() > t.durations.size())
        throw std::invalid_argument("approximation tuple longer than the duration sequence");
    t.validate_against(rates);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!approximates(rates.at(i), w[i], t.durations[i], prec)) return false;
    return true;
}

}  // namespace ctrand
