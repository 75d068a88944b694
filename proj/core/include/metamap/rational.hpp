#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace metamap {

/// Exact rational used for scenario coordinates before conversion to double.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational parse(std::string_view text);
    static Rational from_integer(std::int64_t v) { return {v, 1}; }

    double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;

    friend bool operator==(const Rational&, const Rational&) = default;
};

Rational normalized(Rational r);
std::int64_t lcm_of_denominators(const Rational* first, const Rational* last);

}  // namespace metamap
