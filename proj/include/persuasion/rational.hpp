#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace persuasion {

/// Exact rational number, always stored in lowest terms with a positive
/// denominator. Backed by GMP so iterated products of weights never overflow.
class Rational {
public:
    Rational() = default;
    Rational(long value) : q_(value) {} // NOLINT: implicit from integers is intended
    Rational(long num, long den);
    explicit Rational(mpq_class q) : q_(std::move(q)) { q_.canonicalize(); }

    /// Parses "n/d" or "n". Throws ValidationError on malformed input or zero denominator.
    static Rational parse(std::string_view text);

    /// Exact binary value of a finite double.
    static Rational from_double(double value);

    /// Canonical "n/d" form; zero is "0/1", integers carry "/1".
    std::string str() const;
    double to_double() const { return q_.get_d(); }

    int sign() const { return sgn(q_); }
    bool is_zero() const { return sign() == 0; }
    Rational abs() const { return Rational(mpq_class(::abs(q_))); }

    const mpq_class& raw() const noexcept { return q_; }

    Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
    Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
    Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
    Rational& operator/=(const Rational& o);

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
    friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.q_)); }

    friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.q_, b.q_) == 0; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const int c = cmp(a.q_, b.q_);
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

    std::size_t hash() const;

private:
    mpq_class q_{0};
};

inline Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

/// 2^exponent for possibly negative exponents.
Rational pow2(long exponent);

} // namespace persuasion

template <>
struct std::hash<persuasion::Rational> {
    std::size_t operator()(const persuasion::Rational& r) const noexcept { return r.hash(); }
};
