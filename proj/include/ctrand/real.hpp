#pragma once

#include <mpfr.h>

#include <optional>
#include <string>
#include <utility>

#include "ctrand/rational.hpp"

namespace ctrand {

/// Working/maximum precision for enclosure arithmetic, in bits. Operations
/// start at `working` and double up to `maximum` until a comparison resolves.
struct PrecisionConfig {
    mpfr_prec_t working = 128;
    mpfr_prec_t maximum = 4096;
};

/// RAII wrapper around a single mpfr value.
class BigFloat {
  public:
    explicit BigFloat(mpfr_prec_t prec) { mpfr_init2(v_, prec); mpfr_set_nan(v_); }
    BigFloat(const BigFloat& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    BigFloat(BigFloat&& o) noexcept {
        v_[0] = o.v_[0];
        mpfr_init2(o.v_, MPFR_PREC_MIN);
    }
    BigFloat& operator=(BigFloat o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~BigFloat() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

  private:
    mpfr_t v_;
};

/// A directed-rounding enclosure [lo, hi] of a real number: the true value is
/// guaranteed to satisfy lo <= x <= hi.
class Enclosure {
  public:
    Enclosure(BigFloat lo, BigFloat hi) : lo_(std::move(lo)), hi_(std::move(hi)) {}

    static Enclosure of_rational(const Rational& q, mpfr_prec_t prec) {
        BigFloat lo(prec), hi(prec);
        mpfr_set_q(lo.get(), q.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(hi.get(), q.get_mpq_t(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    static Enclosure exact_zero(mpfr_prec_t prec) { return of_rational(Rational(0), prec); }
    static Enclosure pos_infinity(mpfr_prec_t prec) {
        BigFloat lo(prec), hi(prec);
        mpfr_set_inf(lo.get(), 1);
        mpfr_set_inf(hi.get(), 1);
        return {std::move(lo), std::move(hi)};
    }

    mpfr_srcptr lo() const { return lo_.get(); }
    mpfr_srcptr hi() const { return hi_.get(); }
    mpfr_prec_t precision() const { return mpfr_get_prec(lo_.get()); }

    bool is_infinite_point() const { return mpfr_inf_p(lo_.get()) && mpfr_inf_p(hi_.get()); }

    Enclosure operator-() const {
        BigFloat nlo(precision()), nhi(precision());
        mpfr_neg(nlo.get(), hi_.get(), MPFR_RNDD);
        mpfr_neg(nhi.get(), lo_.get(), MPFR_RNDU);
        return {std::move(nlo), std::move(nhi)};
    }

    friend Enclosure operator+(const Enclosure& a, const Enclosure& b) {
        mpfr_prec_t p = std::max(a.precision(), b.precision());
        BigFloat lo(p), hi(p);
        mpfr_add(lo.get(), a.lo(), b.lo(), MPFR_RNDD);
        mpfr_add(hi.get(), a.hi(), b.hi(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    friend Enclosure operator-(const Enclosure& a, const Enclosure& b) {
        mpfr_prec_t p = std::max(a.precision(), b.precision());
        BigFloat lo(p), hi(p);
        mpfr_sub(lo.get(), a.lo(), b.hi(), MPFR_RNDD);
        mpfr_sub(hi.get(), a.hi(), b.lo(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    /// Product of two enclosures of nonnegative values.
    friend Enclosure mul_nonneg(const Enclosure& a, const Enclosure& b) {
        mpfr_prec_t p = std::max(a.precision(), b.precision());
        BigFloat lo(p), hi(p);
        mpfr_mul(lo.get(), a.lo(), b.lo(), MPFR_RNDD);
        mpfr_mul(hi.get(), a.hi(), b.hi(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    /// exp is monotone, so endpoints map directly.
    friend Enclosure exp(const Enclosure& a) {
        BigFloat lo(a.precision()), hi(a.precision());
        mpfr_exp(lo.get(), a.lo(), MPFR_RNDD);
        mpfr_exp(hi.get(), a.hi(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    /// Natural log; requires lo > 0.
    friend Enclosure log(const Enclosure& a) {
        BigFloat lo(a.precision()), hi(a.precision());
        mpfr_log(lo.get(), a.lo(), MPFR_RNDD);
        mpfr_log(hi.get(), a.hi(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    friend Enclosure log2(const Enclosure& a) {
        BigFloat lo(a.precision()), hi(a.precision());
        mpfr_log2(lo.get(), a.lo(), MPFR_RNDD);
        mpfr_log2(hi.get(), a.hi(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    Enclosure mul_rational_pos(const Rational& q) const {
        BigFloat lo(precision()), hi(precision());
        mpfr_mul_q(lo.get(), lo_.get(), q.get_mpq_t(), MPFR_RNDD);
        mpfr_mul_q(hi.get(), hi_.get(), q.get_mpq_t(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    Enclosure div_rational_pos(const Rational& q) const {
        BigFloat lo(precision()), hi(precision());
        mpfr_div_q(lo.get(), lo_.get(), q.get_mpq_t(), MPFR_RNDD);
        mpfr_div_q(hi.get(), hi_.get(), q.get_mpq_t(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    /// Division by an enclosure of a strictly positive value (lo > 0),
    /// for a nonnegative numerator.
    friend Enclosure div_nonneg_by_pos(const Enclosure& a, const Enclosure& b) {
        mpfr_prec_t p = std::max(a.precision(), b.precision());
        BigFloat lo(p), hi(p);
        mpfr_div(lo.get(), a.lo(), b.hi(), MPFR_RNDD);
        mpfr_div(hi.get(), a.hi(), b.lo(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    friend Enclosure one_minus(const Enclosure& a) {
        BigFloat lo(a.precision()), hi(a.precision());
        mpfr_ui_sub(lo.get(), 1, a.hi(), MPFR_RNDD);
        mpfr_ui_sub(hi.get(), 1, a.lo(), MPFR_RNDU);
        return {std::move(lo), std::move(hi)};
    }

    /// Tri-state "x <= q": decided only when the whole enclosure lies on one
    /// side. Equality of hi with q still decides true (x <= hi = q).
    std::optional<bool> le(const Rational& q) const {
        if (is_infinite_point()) return false;
        if (mpfr_cmp_q(hi_.get(), const_cast<mpq_ptr>(q.get_mpq_t())) <= 0) return true;
        if (mpfr_cmp_q(lo_.get(), const_cast<mpq_ptr>(q.get_mpq_t())) > 0) return false;
        return std::nullopt;
    }

    /// Tri-state "x > q".
    std::optional<bool> gt(const Rational& q) const {
        auto r = le(q);
        if (!r) return std::nullopt;
        return !*r;
    }

    bool contains_rational(const Rational& q) const {
        return mpfr_cmp_q(lo_.get(), const_cast<mpq_ptr>(q.get_mpq_t())) <= 0 &&
               mpfr_cmp_q(hi_.get(), const_cast<mpq_ptr>(q.get_mpq_t())) >= 0;
    }

    /// True when hi - lo < 2^e.
    bool width_below_pow2(long e) const {
        if (mpfr_inf_p(lo_.get()) || mpfr_inf_p(hi_.get()))
            return is_infinite_point();
        BigFloat w(precision());
        mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
        BigFloat bound(precision());
        mpfr_set_ui(bound.get(), 1, MPFR_RNDN);
        mpfr_mul_2si(bound.get(), bound.get(), e, MPFR_RNDN);
        return mpfr_cmp(w.get(), bound.get()) < 0;
    }

    /// Enclosures of the same number intersect; disjoint enclosures cannot
    /// describe the same value.
    bool intersects(const Enclosure& o) const {
        return !(mpfr_cmp(hi_.get(), o.lo()) < 0 || mpfr_cmp(o.hi(), lo_.get()) < 0);
    }

    double midpoint_double() const {
        BigFloat m(precision());
        mpfr_add(m.get(), lo_.get(), hi_.get(), MPFR_RNDN);
        mpfr_div_ui(m.get(), m.get(), 2, MPFR_RNDN);
        return mpfr_get_d(m.get(), MPFR_RNDN);
    }

    std::string str(std::size_t digits = 20) const {
        char* s = nullptr;
        std::string fmt = "[%." + std::to_string(digits) + "Rg, %." + std::to_string(digits) + "Rg]";
        mpfr_asprintf(&s, fmt.c_str(), lo_.get(), hi_.get());
        std::string out(s);
        mpfr_free_str(s);
        return out;
    }

  private:
    BigFloat lo_;
    BigFloat hi_;
};

}  // namespace ctrand
