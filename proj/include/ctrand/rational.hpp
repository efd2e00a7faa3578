#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ctrand/errors.hpp"

namespace ctrand {

/// Exact rational number. All probabilities, measures and martingale capitals
/// in this library are values of this type; equality checks are exact.
using Rational = mpq_class;

inline Rational make_rational(long num, long den) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Rational make_rational(const mpz_class& num, const mpz_class& den) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// 2^e for any integer e (negative exponents give dyadic fractions).
inline Rational pow2(long e) {
    mpz_class p = 1;
    p <<= static_cast<unsigned long>(e < 0 ? -e : e);
    return e < 0 ? make_rational(mpz_class(1), p) : Rational(p);
}

/// If q equals 2^e for some integer e, return e.
inline std::optional<long> dyadic_log2(const Rational& q) {
    if (sgn(q) <= 0) return std::nullopt;
    const mpz_class& num = q.get_num();
    const mpz_class& den = q.get_den();
    if (num == 1) {
        std::size_t b = mpz_scan1(den.get_mpz_t(), 0);
        if (mpz_sizeinbase(den.get_mpz_t(), 2) == b + 1)
            return -static_cast<long>(b);
        return std::nullopt;
    }
    if (den == 1) {
        std::size_t b = mpz_scan1(num.get_mpz_t(), 0);
        if (mpz_sizeinbase(num.get_mpz_t(), 2) == b + 1)
            return static_cast<long>(b);
        return std::nullopt;
    }
    return std::nullopt;
}

/// Canonical rendering: "p/q", or just "p" when the denominator is 1.
inline std::string rational_str(const Rational& q) {
    return q.get_str();
}

/// Renders q as an exact finite decimal when the denominator divides a power
/// of ten, otherwise as "p/q". Both forms are exact.
inline std::string rational_decimal_str(const Rational& q) {
    if (sgn(q) == 0) return "0";
    mpz_class den = q.get_den();
    unsigned long twos = 0, fives = 0;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) { den /= 2; ++twos; }
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) { den /= 5; ++fives; }
    if (den != 1) return rational_str(q);
    unsigned long digits = twos > fives ? twos : fives;
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, digits);
    mpz_class scaled = q.get_num() * scale / q.get_den();
    bool neg = scaled < 0;
    if (neg) scaled = -scaled;
    std::string s = scaled.get_str();
    if (digits == 0) return (neg ? "-" : "") + s;
    if (s.size() <= digits) s.insert(0, digits - s.size() + 1, '0');
    s.insert(s.size() - digits, ".");
    return (neg ? "-" : "") + s;
}

/// Parses "p/q", an integer, or a plain decimal ("3.25") into an exact value.
inline Rational parse_rational(std::string_view text, std::size_t line = 0, std::size_t col = 0) {
    std::string s(text);
    if (s.empty()) throw ParseError("empty number", line, col);
    auto slash = s.find('/');
    try {
        if (slash != std::string::npos) {
            mpz_class num(s.substr(0, slash), 10);
            mpz_class den(s.substr(slash + 1), 10);
            if (den == 0) throw std::invalid_argument("zero denominator");
            return make_rational(num, den);
        }
        auto dot = s.find('.');
        if (dot == std::string::npos) return Rational(mpz_class(s, 10));
        std::string intpart = s.substr(0, dot);
        std::string frac = s.substr(dot + 1);
        if (frac.empty() && (intpart.empty() || intpart == "-")) throw std::invalid_argument("bad decimal");
        bool neg = !intpart.empty() && intpart[0] == '-';
        if (neg) intpart.erase(0, 1);
        if (intpart.empty()) intpart = "0";
        mpz_class whole(intpart + frac, 10);
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
        Rational r = make_rational(whole, den);
        return neg ? Rational(-r) : r;
    } catch (const std::invalid_argument&) {
        throw ParseError("invalid number '" + s + "'", line, col);
    }
}

/// FNV-1a 64-bit fingerprint, used for model/file identity in manifests.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace ctrand
