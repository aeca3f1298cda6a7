#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lonetrack {

// Exact rational with 64-bit parts, always stored in lowest terms with a positive denominator.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
        if (d == 0) throw std::domain_error("rational with zero denominator");
        normalize();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_, a.den_ * b.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }

    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        return (a.num_ * b.den_) <=> (b.num_ * a.den_);
    }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    // Accepts "n", "n/d" and plain decimals such as "0.25".
    static std::optional<Rational> parse(std::string_view text) {
        if (text.empty()) return std::nullopt;
        auto slash = text.find('/');
        if (slash != std::string_view::npos) {
            auto n = parse_int(text.substr(0, slash));
            auto d = parse_int(text.substr(slash + 1));
            if (!n || !d || *d == 0) return std::nullopt;
            return Rational(*n, *d);
        }
        auto dot = text.find('.');
        if (dot == std::string_view::npos) {
            auto n = parse_int(text);
            if (!n) return std::nullopt;
            return Rational(*n);
        }
        auto whole = text.substr(0, dot);
        auto frac = text.substr(dot + 1);
        if (frac.empty() || frac.size() > 15) return std::nullopt;
        bool negative = !whole.empty() && whole.front() == '-';
        if (negative) whole.remove_prefix(1);
        std::int64_t w = 0;
        if (!whole.empty()) {
            auto parsed = parse_int(whole);
            if (!parsed || *parsed < 0) return std::nullopt;
            w = *parsed;
        }
        auto f = parse_int(frac);
        if (!f || *f < 0) return std::nullopt;
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        Rational r = Rational(w) + Rational(*f, scale);
        return negative ? -r : r;
    }

private:
    static std::optional<std::int64_t> parse_int(std::string_view s) {
        if (s.empty()) return std::nullopt;
        std::size_t i = 0;
        bool negative = false;
        if (s[0] == '-' || s[0] == '+') {
            negative = s[0] == '-';
            i = 1;
        }
        if (i == s.size() || s.size() - i > 17) return std::nullopt;
        std::int64_t v = 0;
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return negative ? -v : v;
    }

    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        auto g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

// Exact half-integer, stored as twice its value. Index sums and gate indices live here.
class HalfInt {
public:
    constexpr HalfInt() = default;
    static constexpr HalfInt from_twice(long long twice) {
        HalfInt h;
        h.twice_ = twice;
        return h;
    }
    static constexpr HalfInt integer(long long v) { return from_twice(2 * v); }

    constexpr long long twice() const { return twice_; }
    constexpr bool is_integer() const { return twice_ % 2 == 0; }
    double to_double() const { return static_cast<double>(twice_) / 2.0; }

    friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return from_twice(a.twice_ + b.twice_); }
    friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return from_twice(a.twice_ - b.twice_); }
    constexpr HalfInt operator-() const { return from_twice(-twice_); }
    constexpr HalfInt& operator+=(HalfInt o) {
        twice_ += o.twice_;
        return *this;
    }
    friend constexpr bool operator==(HalfInt, HalfInt) = default;
    friend constexpr auto operator<=>(HalfInt a, HalfInt b) { return a.twice_ <=> b.twice_; }

    constexpr HalfInt abs() const { return from_twice(twice_ < 0 ? -twice_ : twice_); }

    std::string str() const {
        if (is_integer()) return std::to_string(twice_ / 2);
        return std::to_string(twice_) + "/2";
    }

private:
    long long twice_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, HalfInt h) { return os << h.str(); }

}  // namespace lonetrack
