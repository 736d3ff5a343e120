#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rsace {

template <class T> using Cplx = std::complex<T>;
template <class T> using CVec = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;
template <class T> using CMat = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <class T> using RVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Rng = std::mt19937_64;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Thrown when sensing constraints leave no admissible ISAC duration.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when an iterative numeric routine fails to converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* One circularly-symmetric complex Gaussian draw with the given variance. */
template <class T>
std::complex<T> draw_cn(Rng& rng, T variance = T(1))
{
    if (!(variance > T(0))) return {};
    std::normal_distribution<T> n(T(0), std::sqrt(variance / T(2)));
    const T re = n(rng);
    const T im = n(rng);
    return {re, im};
}

template <class T>
CVec<T> draw_cn_vec(Rng& rng, Eigen::Index n, T variance = T(1))
{
    CVec<T> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = draw_cn<T>(rng, variance);
    return v;
}

template <class T>
CMat<T> draw_cn_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, T variance = T(1))
{
    CMat<T> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = draw_cn<T>(rng, variance);
    return m;
}

/* Unit-modulus vector with independent uniform phases. */
template <class T>
CVec<T> draw_phases(Rng& rng, Eigen::Index n)
{
    std::uniform_real_distribution<T> u(T(0), T(2) * T(EIGEN_PI));
    CVec<T> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(T(1), u(rng));
    return v;
}

/* Deterministic per-stream seed derived from a base seed and two indices (splitmix64). */
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0)
{
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

} // namespace rsace
