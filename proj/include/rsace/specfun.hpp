#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rsace/types.hpp"

namespace rsace {

template <class T>
T gaussian_q(T x)
{
    if (!std::isfinite(x)) throw std::domain_error("gaussian_q: non-finite argument");
    return T(0.5) * std::erfc(x / std::sqrt(T(2)));
}

/* Inverse of gaussian_q: rational start (Acklam) polished by Halley steps on erfc. */
template <class T>
T gaussian_q_inv(T p)
{
    if (!(p > T(0) && p < T(1))) throw std::domain_error("gaussian_q_inv: p must lie in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    // lower-tail quantile z with Phi(z) = 1 - p
    const double pl = 1.0 - double(p);
    double z;
    if (pl < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(pl));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (pl > 1.0 - 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(double(p)));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = pl - 0.5;
        const double r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    T x = T(z);
    for (int it = 0; it < 3; ++it) {
        const T e = gaussian_q(x) - p;
        const T pdf = std::exp(-x * x / T(2)) / std::sqrt(T(2) * T(EIGEN_PI));
        if (pdf <= T(0)) break;
        const T u = -e / pdf;  // Newton step for Q(x) = p, Q' = -pdf
        x = x - u / (T(1) + x * u / T(2));
    }
    return x;
}

namespace detail {

/* e^{-x} I_k(x) for k = 0..n by normalized backward (Miller) recurrence. */
template <class T>
std::vector<T> scaled_bessel_i(T x, int n)
{
    std::vector<T> out(std::size_t(n) + 1, T(0));
    if (x == T(0)) {
        out[0] = T(1);
        return out;
    }
    const int start = n + 20 + int(std::ceil(std::sqrt(T(40) * std::max(x, T(n)))));
    T ip1 = T(0);
    T ik = T(1e-300);
    T sum = T(0);  // accumulates I_0 + 2 sum_{k>=1} I_k
    for (int k = start; k >= 1; --k) {
        const T im1 = ip1 + (T(2) * T(k) / x) * ik;
        if (k <= n) out[std::size_t(k)] = ik;
        sum += T(2) * ik;
        ip1 = ik;
        ik = im1;
        if (std::abs(ik) > T(1e250)) {
            const T s = T(1e-250);
            ip1 *= s;
            ik *= s;
            sum *= s;
            for (auto& v : out) v *= s;
        }
    }
    out[0] = ik;
    sum += ik;
    for (auto& v : out) v /= sum;
    return out;
}

} // namespace detail

/// First-order Marcum Q and its complement, each from the series that converges for the arguments.
template <class T>
struct MarcumPair {
    T q;  // Q_1(a, b)
    T p;  // 1 - Q_1(a, b)
};

template <class T>
MarcumPair<T> marcum_q1_pair(T a, T b)
{
    if (!(a >= T(0)) || !(b >= T(0))) throw std::domain_error("marcum_q1: arguments must be nonnegative");
    if (!std::isfinite(a) || !std::isfinite(b)) throw std::domain_error("marcum_q1: non-finite argument");
    if (b == T(0)) return {T(1), T(0)};
    if (a == T(0)) {
        const T q = std::exp(-b * b / T(2));
        return {q, -std::expm1(-b * b / T(2))};
    }
    const T x = a * b;
    const T pre = std::exp(-(a - b) * (a - b) / T(2));
    const T r = a < b ? a / b : b / a;
    // term k behaves like r^k e^{-k^2/(2x)}; enough indices for 1e-14 relative
    int n = 40 + int(std::ceil(T(9) * std::sqrt(std::max(x, T(1)))));
    if (r < T(1)) n = std::min(n, 40 + int(std::ceil(T(40) / std::max(-std::log(r), T(1e-3)))));
    const auto bi = detail::scaled_bessel_i(x, n);
    T sum = T(0);
    T rk = a < b ? T(1) : r;
    for (int k = a < b ? 0 : 1; k <= n; ++k) {
        const T term = rk * bi[std::size_t(k)];
        sum += term;
        if (k > 2 && term < T(1e-14) * sum) break;
        rk *= r;
    }
    const T s = pre * sum;
    if (a < b) return {s, T(1) - s};
    return {T(1) - s, s};
}

template <class T>
T marcum_q1(T a, T b)
{
    return marcum_q1_pair(a, b).q;
}

/// Noncentral chi-square (two real degrees of freedom) in the form used for ||f||^2:
/// F(x) = 1 - Q_1(sqrt(noncentrality), sqrt(2 x / scale)).
template <class T>
struct NoncentralChi2Params {
    T noncentrality = T(0);  // 2 ||f_hat||^2 / (K sigma_e^2)
    T scale = T(1);          // K sigma_e^2
    T threshold = T(0);
};

template <class T>
NoncentralChi2Params<T> chi2_params_from_estimate(T fhat_norm2, T scale, T threshold = T(0))
{
    return {T(2) * fhat_norm2 / scale, scale, threshold};
}

template <class T>
T ncchi2_cdf(const NoncentralChi2Params<T>& prm)
{
    if (!(prm.scale > T(0))) throw std::domain_error("ncchi2_cdf: scale must be positive");
    if (!(prm.noncentrality >= T(0))) throw std::domain_error("ncchi2_cdf: negative noncentrality");
    if (!(prm.threshold >= T(0))) return T(0);
    if (std::isinf(prm.threshold)) return T(1);
    return marcum_q1_pair(std::sqrt(prm.noncentrality), std::sqrt(T(2) * prm.threshold / prm.scale)).p;
}

template <class T>
T ncchi2_cdf_inv(T p, NoncentralChi2Params<T> prm, int max_iter = 400)
{
    if (!(p > T(0) && p < T(1))) throw std::domain_error("ncchi2_cdf_inv: p must lie in (0,1)");
    if (!(prm.scale > T(0))) throw std::domain_error("ncchi2_cdf_inv: scale must be positive");
    T lo = T(0);
    T hi = prm.scale * (T(1) + prm.noncentrality);
    auto cdf_at = [&](T x) {
        prm.threshold = x;
        return ncchi2_cdf(prm);
    };
    int guard = 0;
    while (cdf_at(hi) < p) {
        lo = hi;
        hi *= T(2);
        if (++guard > 200) throw NumericError("ncchi2_cdf_inv: failed to bracket quantile");
    }
    for (int it = 0; it < max_iter; ++it) {
        const T mid = T(0.5) * (lo + hi);
        if (cdf_at(mid) < p) lo = mid;
        else hi = mid;
        if (hi - lo <= std::numeric_limits<T>::epsilon() * hi * T(4)) return T(0.5) * (lo + hi);
    }
    const T x = T(0.5) * (lo + hi);
    if (std::abs(cdf_at(x) - p) > T(1e-9)) throw NumericError("ncchi2_cdf_inv: bisection did not converge");
    return x;
}

} // namespace rsace
