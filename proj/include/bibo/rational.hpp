#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bibo {

// Series exponent that stays an exact rational as long as it can.
//
// Exponents entering from expression syntax or JSON are doubles; anything
// that is bit-exactly p/q with a small power-of-two denominator (1.5, -0.25,
// ...) is kept as a rational, and rationals produced by snapping numeric
// estimates (denominator <= 12) are exact by construction. Arithmetic
// between two exact values is exact; once a float is involved the result is
// a float and comparisons use an absolute tolerance of 1e-12.
class Exponent {
public:
    static constexpr double kMergeTol = 1e-12;

    Exponent() = default;
    Exponent(int v) : exact_(true), num_(v), den_(1), value_(v) {}

    static Exponent rational(long long num, long long den) {
        if (den == 0) throw std::invalid_argument("Exponent: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        Exponent e;
        e.exact_ = true;
        e.num_ = num;
        e.den_ = den;
        e.value_ = static_cast<double>(num) / static_cast<double>(den);
        return e;
    }

    static Exponent inexact(double v) {
        Exponent e;
        e.exact_ = false;
        e.value_ = v;
        return e;
    }

    // Keeps the value exact when it is bit-equal to p/q for a dyadic q <= 4096.
    static Exponent from_double(double v) {
        if (!std::isfinite(v)) throw std::invalid_argument("Exponent: non-finite value");
        for (long long q = 1; q <= 4096; q *= 2) {
            double scaled = v * static_cast<double>(q);
            if (scaled == std::floor(scaled) && std::abs(scaled) < 9.0e15) {
                long long p = static_cast<long long>(scaled);
                if (static_cast<double>(p) / static_cast<double>(q) == v)
                    return rational(p, q);
            }
        }
        return inexact(v);
    }

    // Nearest p/q with q <= max_den; used for snapping slope estimates.
    static Exponent snap(double v, long long max_den, double tol) {
        long long best_p = 0, best_q = 1;
        double best_err = std::numeric_limits<double>::infinity();
        for (long long q = 1; q <= max_den; ++q) {
            long long p = static_cast<long long>(std::llround(v * static_cast<double>(q)));
            double err = std::abs(v - static_cast<double>(p) / static_cast<double>(q));
            if (err < best_err - 1e-18) { best_err = err; best_p = p; best_q = q; }
        }
        if (best_err <= tol) return rational(best_p, best_q);
        return inexact(v);
    }

    bool exact() const { return exact_; }
    long long num() const { return num_; }
    long long den() const { return den_; }
    double value() const { return value_; }

    bool is_integer() const {
        if (exact_) return den_ == 1;
        return std::abs(value_ - std::round(value_)) < kMergeTol;
    }
    bool is_nonneg_integer() const { return is_integer() && value_ > -0.5; }

    Exponent operator-() const {
        if (exact_) return rational(-num_, den_);
        return inexact(-value_);
    }
    Exponent operator+(const Exponent& o) const {
        if (exact_ && o.exact_) {
            long long g = std::gcd(den_, o.den_);
            long long dl = den_ / g;
            long long num = 0, den = 0;
            if (!mul_overflow(num_, o.den_ / g, num) && !add_scaled(num, o.num_, dl) &&
                !mul_overflow(den_, o.den_ / g, den))
                return rational(num, den);
        }
        return inexact(value_ + o.value_);
    }
    Exponent operator-(const Exponent& o) const { return *this + (-o); }

    int compare(const Exponent& o) const {
        if (exact_ && o.exact_) {
            __int128 lhs = static_cast<__int128>(num_) * o.den_;
            __int128 rhs = static_cast<__int128>(o.num_) * den_;
            if (lhs < rhs) return -1;
            if (lhs > rhs) return 1;
            return 0;
        }
        double d = value_ - o.value_;
        if (std::abs(d) <= kMergeTol) return 0;
        return d < 0 ? -1 : 1;
    }
    bool operator==(const Exponent& o) const { return compare(o) == 0; }
    bool operator!=(const Exponent& o) const { return compare(o) != 0; }
    bool operator<(const Exponent& o) const { return compare(o) < 0; }
    bool operator<=(const Exponent& o) const { return compare(o) <= 0; }
    bool operator>(const Exponent& o) const { return compare(o) > 0; }
    bool operator>=(const Exponent& o) const { return compare(o) >= 0; }

    std::string str() const {
        if (exact_ && den_ != 1) return std::to_string(num_) + "/" + std::to_string(den_);
        if (exact_) return std::to_string(num_);
        return std::to_string(value_);
    }

private:
    static bool mul_overflow(long long a, long long b, long long& out) {
        return __builtin_mul_overflow(a, b, &out);
    }
    static bool add_scaled(long long& acc, long long b, long long scale) {
        long long t = 0;
        if (__builtin_mul_overflow(b, scale, &t)) return true;
        return __builtin_add_overflow(acc, t, &acc);
    }

    bool exact_ = true;
    long long num_ = 0;
    long long den_ = 1;
    double value_ = 0.0;
};

}  // namespace bibo
