// Exact rational scalars for the whole engine.
//
// Every computation downstream is an exact algebraic identity, so the
// scalar type is arbitrary-precision rational (GMP).  Floats never appear.

#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace fedosov {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational rat(long num, long den = 1)
{
    if (den == 0)
        throw std::invalid_argument("rational with zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

// Parses "a" or "a/b" with optional sign.  Throws on anything else,
// in particular on floating-point syntax such as "1.5e3".
inline Rational rat_parse(const std::string& s)
{
    if (s.empty())
        throw std::invalid_argument("empty rational literal");
    for (char c : s)
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-' || c == '+'))
            throw std::invalid_argument("bad rational literal: '" + s + "'");
    Rational q;
    if (q.set_str(s, 10) != 0)
        throw std::invalid_argument("bad rational literal: '" + s + "'");
    q.canonicalize();
    if (q.get_den() == 0)
        throw std::invalid_argument("zero denominator in '" + s + "'");
    return q;
}

inline std::string rat_str(const Rational& q) { return q.get_str(); }

} // namespace fedosov
