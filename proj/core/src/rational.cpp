#include "metamap/rational.hpp"

#include "metamap/errors.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace metamap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::int64_t parse_int(std::string_view s, std::string_view whole) {
    s = trim(s);
    std::int64_t v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw DomainError("not a rational number: '" + std::string(whole) + "'");
    return v;
}

// Decimal literal "0.125" -> 125/1000.
Rational parse_decimal(std::string_view s, std::string_view whole) {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    const auto dot = s.find('.');
    std::string digits(s.substr(0, dot));
    std::int64_t den = 1;
    if (dot != std::string_view::npos) {
        const auto frac = s.substr(dot + 1);
        if (frac.size() > 15) throw DomainError("too many decimals in '" + std::string(whole) + "'");
        digits += frac;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    }
    if (digits.empty()) throw DomainError("not a rational number: '" + std::string(whole) + "'");
    std::int64_t num = parse_int(digits, whole);
    return normalized({negative ? -num : num, den});
}

}  // namespace

Rational normalized(Rational r) {
    if (r.den == 0) throw DomainError("rational with zero denominator");
    if (r.den < 0) {
        r.num = -r.num;
        r.den = -r.den;
    }
    const std::int64_t g = std::gcd(r.num < 0 ? -r.num : r.num, r.den);
    if (g > 1) {
        r.num /= g;
        r.den /= g;
    }
    return r;
}

Rational Rational::parse(std::string_view text) {
    const auto s = trim(text);
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) {
        if (s.find('.') != std::string_view::npos) return parse_decimal(s, text);
        return {parse_int(s, text), 1};
    }
    return normalized({parse_int(s.substr(0, slash), text), parse_int(s.substr(slash + 1), text)});
}

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

std::int64_t lcm_of_denominators(const Rational* first, const Rational* last) {
    std::int64_t l = 1;
    for (; first != last; ++first) l = std::lcm(l, normalized(*first).den);
    return l;
}

ScenarioError::ScenarioError(std::vector<std::string> issues)
    : Error([&] {
          std::string msg = "invalid scenario:";
          for (const auto& i : issues) msg += "\n  " + i;
          return msg;
      }()),
      issues_(std::move(issues)) {}

}  // namespace metamap
