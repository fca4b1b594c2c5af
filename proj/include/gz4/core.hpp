#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>
#include <boost/math/constants/constants.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gz4 {

namespace mp = boost::multiprecision;

using Int = mp::number<mp::gmp_int, mp::et_off>;
using Rat = mp::number<mp::gmp_rational, mp::et_off>;
using Real = mp::number<mp::mpfr_float_backend<0>, mp::et_off>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define GZ4_ERROR(Name)                                                  \
    struct Name : Error {                                                \
        using Error::Error;                                              \
        const char* kind() const noexcept override { return #Name; }     \
    };

GZ4_ERROR(NonUnitDeterminant)
GZ4_ERROR(NotProjectivelyIntegral)
GZ4_ERROR(NotElliptic)
GZ4_ERROR(NotCoprime)
GZ4_ERROR(DomainError)
GZ4_ERROR(PoleHit)
GZ4_ERROR(DegeneratePole)
GZ4_ERROR(StepTooSmall)
GZ4_ERROR(BadFit)
GZ4_ERROR(PrecisionTooLow)
GZ4_ERROR(OriginNotInterior)
GZ4_ERROR(NotMUM)
GZ4_ERROR(ParseError)
GZ4_ERROR(InvariantViolation)
GZ4_ERROR(PresentationUnavailable)

#undef GZ4_ERROR

/// Sets the default mpfr precision (decimal digits) for the lifetime of the guard.
class PrecisionGuard {
public:
    explicit PrecisionGuard(unsigned digits) : old_(Real::default_precision()) {
        Real::default_precision(digits);
    }
    ~PrecisionGuard() { Real::default_precision(old_); }
    PrecisionGuard(const PrecisionGuard&) = delete;
    PrecisionGuard& operator=(const PrecisionGuard&) = delete;

private:
    unsigned old_;
};

inline unsigned working_digits() { return Real::default_precision(); }

inline Real real_pi() { return boost::math::constants::pi<Real>(); }

inline Real real_from(const std::string& s) { return Real(s); }

inline Real to_real(const Rat& q) {
    return Real(Real(mp::numerator(q)) / Real(mp::denominator(q)));
}

/// Nearest integer to x.
inline Int round_to_int(const Real& x) {
    Int r;
    mpfr_get_z(r.backend().data(), x.backend().data(), MPFR_RNDN);
    return r;
}

inline std::string to_string(const Real& x, int digits = 0) {
    return x.str(digits > 0 ? digits : static_cast<int>(working_digits()),
                 std::ios_base::scientific);
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline std::int64_t mod_pos(std::int64_t a, std::int64_t m) {
    std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

/// Extended gcd: returns g and sets x, y with a*x + b*y = g >= 0.
inline std::int64_t ext_gcd(std::int64_t a, std::int64_t b, std::int64_t& x, std::int64_t& y) {
    std::int64_t x0 = 1, y0 = 0, x1 = 0, y1 = 1;
    while (b != 0) {
        std::int64_t q = floor_div(a, b);
        std::int64_t r = a - q * b;
        a = b;
        b = r;
        std::int64_t t = x0 - q * x1;
        x0 = x1;
        x1 = t;
        t = y0 - q * y1;
        y0 = y1;
        y1 = t;
    }
    if (a < 0) {
        a = -a;
        x0 = -x0;
        y0 = -y0;
    }
    x = x0;
    y = y0;
    return a;
}

}  // namespace gz4
