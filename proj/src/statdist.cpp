#include "rpv/statdist.hpp"

#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rpv {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

void RngStream::refill() noexcept {
    const std::array<std::uint32_t, 4> ctr{block_, substream_,
                                           static_cast<std::uint32_t>(stream_id_),
                                           static_cast<std::uint32_t>(stream_id_ >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                           static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = philox4x32_10(ctr, key);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    ++block_;
}

RngStream::result_type RngStream::operator()() noexcept {
    if (buffered_) {
        buffered_ = false;
        return buffer_[1];
    }
    refill();
    buffered_ = true;
    return buffer_[0];
}

double uniform_sample(RngStream& rng) noexcept {
    // (k + 0.5) / 2^52 is exact and never hits 0 or 1.
    return (static_cast<double>(rng() >> 12) + 0.5) * 0x1.0p-52;
}

double exponential_sample(RngStream& rng) noexcept {
    return -std::log(uniform_sample(rng));
}

double normal_sample(RngStream& rng) noexcept {
    return std_normal_quantile(uniform_sample(rng));
}

double positive_stable_sample(double alpha, RngStream& rng) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("positive_stable_sample: alpha must lie in (0, 1], got " +
                                    std::to_string(alpha));
    }
    if (alpha == 1.0) {
        return 1.0;
    }
    // Kanter's representation.
    const double u = std::numbers::pi * uniform_sample(rng);
    const double e = exponential_sample(rng);
    const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
    const double b = std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
    return a * b;
}

double std_normal_cdf(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("std_normal_cdf: non-finite argument");
    }
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5);
}

double std_normal_pdf(double x) noexcept {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

namespace {

// Acklam's rational approximation, relative error ~1.2e-9 before refinement.
double acklam_lower(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("std_normal_quantile: p must lie in (0, 1), got " +
                                    std::to_string(p));
    }
    if (p > 0.5) {
        // 1 - p is exact for p in (0.5, 1).
        return -std_normal_quantile(1.0 - p);
    }
    double x = acklam_lower(p);
    for (int step = 0; step < 2; ++step) {
        // Halley step on Phi(x) - p; Phi is accurate in the lower tail via erfc.
        const double pdf = std_normal_pdf(x);
        if (pdf <= 0.0) {
            break;
        }
        const double u = (std_normal_cdf(x) - p) / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

namespace {

// Continued fraction for I_x(a,b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 5000; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) {
            return h;
        }
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

// Stirling remainder lgamma(x) - [(x - 1/2) log x - x + log(2 pi)/2], x >= 10.
double stirling_remainder(double x) {
    const double r = 1.0 / x;
    const double r2 = r * r;
    return r * (1.0 / 12 + r2 * (-1.0 / 360 + r2 * (1.0 / 1260 + r2 * (-1.0 / 1680 +
           r2 * (1.0 / 1188 - r2 * 691.0 / 360360)))));
}

// lgamma(big + small) - lgamma(big) without the cancellation of two large values.
double log_gamma_ratio(double big, double small) {
    if (big < 10.0) return std::lgamma(big + small) - std::lgamma(big);
    return (big - 0.5) * std::log1p(small / big) + small * std::log(big + small) - small +
           stirling_remainder(big + small) - stirling_remainder(big);
}

// I_x(a,b) with y = 1 - x supplied separately to keep precision near x = 1.
double incomplete_beta_xy(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double log_x = x > 0.5 ? std::log1p(-y) : std::log(x);
    const double log_y = y > 0.5 ? std::log1p(-x) : std::log(y);
    const double log_front = log_gamma_ratio(hi, lo) - std::lgamma(lo) + a * log_x + b * log_y;
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

void check_df(int df, const char* where) {
    if (df < 1) {
        throw std::invalid_argument(std::string(where) + ": degrees of freedom must be >= 1, got " +
                                    std::to_string(df));
    }
}

double student_t_pdf(double x, int df) {
    const double nu = df;
    const double log_norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                            0.5 * std::log(nu * std::numbers::pi);
    return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

// Root of a non-decreasing f on [lo, hi] with f(lo) <= 0 <= f(hi); Illinois
// variant of regula falsi with a bisection fallback.
double monotone_root(const std::function<double(double)>& f, double lo, double hi,
                     double x_tol) {
    double f_lo = f(lo);
    double f_hi = f(hi);
    int side = 0;
    for (int iter = 0; iter < 200 && hi - lo > x_tol * (1.0 + std::fabs(lo) + std::fabs(hi)); ++iter) {
        double x = (f_hi != f_lo) ? (lo * f_hi - hi * f_lo) / (f_hi - f_lo) : 0.5 * (lo + hi);
        if (!(x > lo && x < hi) || iter % 8 == 7) {
            x = 0.5 * (lo + hi);
        }
        const double fx = f(x);
        if (fx == 0.0) {
            return x;
        }
        if (fx < 0.0) {
            lo = x;
            f_lo = fx;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if (side == 1) f_lo *= 0.5;
            side = 1;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) {
        throw std::invalid_argument("incomplete_beta: shape parameters must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("incomplete_beta: x must lie in [0, 1]");
    }
    return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_cdf(double x, int df) {
    check_df(df, "student_t_cdf");
    if (std::isnan(x)) {
        throw std::invalid_argument("student_t_cdf: NaN argument");
    }
    if (x == 0.0) return 0.5;
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    const double nu = df;
    const double x2 = x * x;
    // P(|T| > |x|) = I_{nu/(nu+x^2)}(nu/2, 1/2)
    const double tail = 0.5 * incomplete_beta_xy(0.5 * nu, 0.5, nu / (nu + x2), x2 / (nu + x2));
    return x > 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, int df) {
    check_df(df, "student_t_quantile");
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("student_t_quantile: p must lie in (0, 1)");
    }
    if (p == 0.5) return 0.0;
    if (p > 0.5) return -student_t_quantile(1.0 - p, df);
    // Lower tail: bracket then safeguarded Newton.
    double hi = 0.0;
    double lo = std::min(-1.0, 2.0 * std_normal_quantile(p));
    while (student_t_cdf(lo, df) > p) {
        hi = lo;
        lo *= 2.0;
        if (!std::isfinite(lo)) return -std::numeric_limits<double>::infinity();
    }
    double x = std::clamp(std_normal_quantile(p), lo, hi);
    for (int iter = 0; iter < 100; ++iter) {
        const double fx = student_t_cdf(x, df) - p;
        if (fx > 0) hi = x; else lo = x;
        const double pdf = student_t_pdf(x, df);
        double next = (pdf > 0) ? x - fx / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) <= 1e-15 * (1.0 + std::fabs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

namespace {

// E[Phi(sign * (x S - ncp))] with S = sqrt(chi2_df / df); sign = +1 gives
// P(T <= x), sign = -1 gives P(T > x).
double noncentral_t_mixture(double x, int df, double ncp, double sign) {
    check_df(df, "noncentral_t_cdf");
    if (!std::isfinite(ncp)) {
        throw std::invalid_argument("noncentral_t_cdf: non-centrality must be finite");
    }
    if (std::isnan(x)) {
        throw std::invalid_argument("noncentral_t_cdf: NaN argument");
    }
    if (std::isinf(x)) return (x > 0) == (sign > 0) ? 1.0 : 0.0;

    const double nu = df;
    const double log_norm = std::log(2.0) + 0.5 * nu * std::log(0.5 * nu) - std::lgamma(0.5 * nu);
    auto log_density = [&](double s) {
        return log_norm + (nu - 1.0) * std::log(s) - 0.5 * nu * s * s;
    };
    auto integrand = [&](double s) {
        if (s <= 0.0) return 0.0;
        const double arg = sign * (x * s - ncp);
        return 0.5 * std::erfc(-arg * std::numbers::sqrt2 * 0.5) * std::exp(log_density(s));
    };

    const double mode = std::sqrt(std::max(nu - 1.0, 0.0) / nu);
    const double spread = 1.0 / std::sqrt(2.0 * nu);
    constexpr double log_cut = -60.0;
    double lo = mode;
    while (lo > 0.0 && log_density(lo) > log_cut) {
        lo = std::max(0.0, lo - spread);
    }
    double hi = std::max(mode, 0.5) + spread;
    while (log_density(hi) > log_cut) {
        hi += spread;
    }

    constexpr int max_panels = 4096;
    int panels = 4;
    double previous = detail::composite_gauss_legendre(integrand, lo, hi, panels);
    while (panels < max_panels) {
        panels *= 2;
        const double current = detail::composite_gauss_legendre(integrand, lo, hi, panels);
        const double change = std::fabs(current - previous);
        if (change <= 1e-15 || change <= 1e-12 * std::fabs(current)) {
            return std::clamp(current, 0.0, 1.0);
        }
        previous = current;
    }
    throw std::runtime_error("noncentral_t_cdf: integration budget exceeded (df=" +
                             std::to_string(df) + ", ncp=" + std::to_string(ncp) + ")");
}

// The integral is accurate relative to its size, so the larger side is taken
// as one minus the smaller.
double noncentral_t_tail(double x, int df, double ncp, double sign) {
    const double direct = noncentral_t_mixture(x, df, ncp, sign);
    if (direct <= 0.5) return direct;
    return 1.0 - noncentral_t_mixture(x, df, ncp, -sign);
}

} // namespace

double noncentral_t_cdf(double x, int df, double ncp) {
    return noncentral_t_tail(x, df, ncp, 1.0);
}

double noncentral_t_sf(double x, int df, double ncp) {
    return noncentral_t_tail(x, df, ncp, -1.0);
}

double noncentral_t_quantile(double p, int df, double ncp) {
    check_df(df, "noncentral_t_quantile");
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("noncentral_t_quantile: p must lie in (0, 1)");
    }
    auto f = [&](double x) { return noncentral_t_cdf(x, df, ncp) - p; };
    const double guess = student_t_quantile(p, df) + ncp;
    double step = 1.0 + std::fabs(guess);
    double lo = guess - step;
    double hi = guess + step;
    while (f(lo) > 0.0) {
        hi = lo;
        step *= 2.0;
        lo -= step;
    }
    while (f(hi) < 0.0) {
        lo = hi;
        step *= 2.0;
        hi += step;
    }
    return monotone_root(f, lo, hi, 1e-13);
}

} // namespace rpv
