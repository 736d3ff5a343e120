#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "rsace/types.hpp"

namespace rsace {

/// One log-rate term rho * ln(1 + ||a||^2 / B).
template <class T>
struct RatioTerm {
    CVec<T> a;
    T B = T(1);

    T sinr() const { return a.squaredNorm() / B; }
};

/// The same term written as an affine function of one block z: a = A z + b, B = z^H C z + d.
template <class T>
struct AffineTerm {
    CMat<T> A;
    CVec<T> b;
    CMat<T> C;  // empty when the denominator does not depend on z
    T d = T(0);

    RatioTerm<T> at(const CVec<T>& z) const
    {
        RatioTerm<T> t;
        t.a = A * z + b;
        t.B = d + (C.size() ? std::real(z.dot(C * z)) : T(0));
        return t;
    }
};

/// Lagrangian-dual auxiliaries v_l and quadratic-transform auxiliaries y_l for three ratio terms.
template <class T>
struct Aux {
    std::array<T, 3> v{};
    std::array<CVec<T>, 3> y;
};

/* Closed-form v maximizing rho[ln(1+v) - v] + 2 sqrt(rho(1+v)) R. */
template <class T>
T qt_v_closed_form(T rho, T R)
{
    if (!(rho > T(0))) return T(0);
    return (R * R + R * std::sqrt(R * R + T(4) * rho)) / (T(2) * rho);
}

template <class T>
CVec<T> qt_y_closed_form(T rho, T v, const RatioTerm<T>& t)
{
    return (std::sqrt(std::max(T(0), rho * (T(1) + v))) / (t.a.squaredNorm() + t.B)) * t.a;
}

/// Surrogate value of one term (nats).
template <class T>
T qt_term_value(T rho, T v, const CVec<T>& y, const RatioTerm<T>& t)
{
    const std::complex<T> ya = y.dot(t.a);
    const T lin = rho > T(0) ? T(2) * std::sqrt(rho * (T(1) + v)) * std::real(ya) : T(0);
    const T head = rho > T(0) ? rho * (std::log1p(v) - v) : T(0);
    return head + lin - std::norm(ya) - y.squaredNorm() * t.B;
}

template <class T>
T qt_value(const std::array<double, 4>& rho, const Aux<T>& aux, const std::array<RatioTerm<T>, 3>& terms)
{
    T s = T(0);
    for (int l = 0; l < 3; ++l) s += qt_term_value(T(rho[l + 1]), aux.v[l], aux.y[l], terms[l]);
    return s;
}

/// v update given the current y (the closed form of the v block alone).
template <class T>
std::array<T, 3> update_v(const std::array<double, 4>& rho, const Aux<T>& aux,
                          const std::array<RatioTerm<T>, 3>& terms)
{
    std::array<T, 3> v{};
    for (int l = 0; l < 3; ++l) v[l] = qt_v_closed_form(T(rho[l + 1]), std::real(aux.y[l].dot(terms[l].a)));
    return v;
}

template <class T>
std::array<CVec<T>, 3> update_u_y(const std::array<double, 4>& rho, const std::array<T, 3>& v,
                                  const std::array<RatioTerm<T>, 3>& terms)
{
    std::array<CVec<T>, 3> y;
    for (int l = 0; l < 3; ++l) y[l] = qt_y_closed_form(T(rho[l + 1]), v[l], terms[l]);
    return y;
}

/// Joint maximizer over (v, y): v_l equals the SINR of term l, y_l follows from it.
template <class T>
Aux<T> optimal_aux(const std::array<double, 4>& rho, const std::array<RatioTerm<T>, 3>& terms)
{
    Aux<T> aux;
    for (int l = 0; l < 3; ++l) aux.v[l] = rho[l + 1] > 0.0 ? terms[l].sinr() : T(0);
    aux.y = update_u_y(rho, aux.v, terms);
    return aux;
}

/// Concave quadratic -z^H Q z + 2 Re(r^H z) + const obtained by fixing the auxiliaries.
template <class T>
struct BlockQuadratic {
    CMat<T> Q;
    CVec<T> r;
    T c = T(0);

    T value(const CVec<T>& z) const { return -std::real(z.dot(Q * z)) + T(2) * std::real(r.dot(z)) + c; }
};

template <class T>
BlockQuadratic<T> block_quadratic(const std::array<double, 4>& rho, const Aux<T>& aux,
                                  const std::array<AffineTerm<T>, 3>& terms)
{
    const Eigen::Index n = terms[0].A.cols();
    BlockQuadratic<T> bq;
    bq.Q = CMat<T>::Zero(n, n);
    bq.r = CVec<T>::Zero(n);
    for (int l = 0; l < 3; ++l) {
        const AffineTerm<T>& t = terms[l];
        const CVec<T>& y = aux.y[l];
        const T rl = T(rho[l + 1]);
        const T s = rl > T(0) ? std::sqrt(rl * (T(1) + aux.v[l])) : T(0);
        const CVec<T> Ay = t.A.adjoint() * y;
        const std::complex<T> yb = y.dot(t.b);
        bq.Q += Ay * Ay.adjoint();
        if (t.C.size()) bq.Q += y.squaredNorm() * t.C;
        bq.r += (s - yb) * Ay;
        bq.c += (rl > T(0) ? rl * (std::log1p(aux.v[l]) - aux.v[l]) : T(0)) + T(2) * s * std::real(yb) -
                std::norm(yb) - y.squaredNorm() * t.d;
    }
    bq.Q = (T(0.5) * (bq.Q + bq.Q.adjoint())).eval();
    return bq;
}

/// Constraint z^H S z <= bound; an empty S stands for the identity.
template <class T>
struct QuadConstraint {
    CMat<T> S;
    T bound = T(0);

    T eval(const CVec<T>& z) const { return S.size() ? std::real(z.dot(S * z)) : z.squaredNorm(); }
};

template <class T>
struct QcqpSolution {
    CVec<T> z;
    std::vector<T> duals;
    bool feasible = true;
};

/* Minimum-norm solution of M z = r for Hermitian PSD M. */
template <class T>
CVec<T> psd_solve(const CMat<T>& M, const CVec<T>& r)
{
    Eigen::SelfAdjointEigenSolver<CMat<T>> es(M);
    const RVec<T>& ev = es.eigenvalues();
    const T top = std::max(T(0), ev.maxCoeff());
    const T tol = top * T(M.rows()) * std::numeric_limits<T>::epsilon();
    CVec<T> c = es.eigenvectors().adjoint() * r;
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = ev(i) > tol ? c(i) / ev(i) : std::complex<T>(0);
    return es.eigenvectors() * c;
}

namespace detail {

template <class T>
void add_scaled(CMat<T>& M, T eta, const QuadConstraint<T>& c)
{
    if (eta == T(0)) return;
    if (c.S.size())
        M += eta * c.S;
    else
        M.diagonal().array() += std::complex<T>(eta);
}

/* Smallest multiplier eta >= 0 making c feasible for z(eta) = solve(base + eta S_c); bracket doubles from 1. */
template <class T, class Solve>
T min_multiplier(const CMat<T>& base, const QuadConstraint<T>& c, Solve&& solve, CVec<T>& z, int max_iter,
                 T tol)
{
    auto feasible_at = [&](T eta, CVec<T>& out) {
        CMat<T> M = base;
        add_scaled(M, eta, c);
        out = solve(M);
        return c.eval(out) <= c.bound * (T(1) + tol);
    };
    if (feasible_at(T(0), z)) return T(0);
    T lo = T(0), hi = T(1);
    CVec<T> zhi;
    int grow = 0;
    while (!feasible_at(hi, zhi)) {
        lo = hi;
        hi *= T(2);
        if (++grow > 2000) throw NumericError("min_multiplier: multiplier bracket diverged");
    }
    for (int it = 0; it < max_iter; ++it) {
        const T mid = T(0.5) * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        CVec<T> zm;
        if (feasible_at(mid, zm)) {
            hi = mid;
            zhi = zm;
            if (c.eval(zhi) >= c.bound * (T(1) - tol)) break;
        } else {
            lo = mid;
        }
    }
    z = zhi;
    return hi;
}

} // namespace detail

/// Maximizes -z^H Q z + 2 Re(r^H z) subject to one or two quadratic constraints through their duals.
/// With two constraints the second multiplier is searched in an outer loop around the first.
template <class T>
QcqpSolution<T> solve_qcqp(const CMat<T>& Q, const CVec<T>& r, const std::vector<QuadConstraint<T>>& cons,
                           int max_iter = 100, T tol = T(1e-9))
{
    auto solve = [&](const CMat<T>& M) { return psd_solve<T>(M, r); };
    QcqpSolution<T> sol;
    if (cons.empty()) {
        sol.z = solve(Q);
        return sol;
    }
    if (cons.size() == 1) {
        sol.duals = {detail::min_multiplier<T>(Q, cons[0], solve, sol.z, max_iter, tol)};
        return sol;
    }
    if (cons.size() != 2) throw std::invalid_argument("solve_qcqp: at most two constraints");
    auto inner = [&](T mu, CVec<T>& z) {
        CMat<T> M = Q;
        detail::add_scaled(M, mu, cons[1]);
        return detail::min_multiplier<T>(M, cons[0], solve, z, max_iter, tol);
    };
    CVec<T> z;
    T eta = inner(T(0), z);
    if (cons[1].eval(z) <= cons[1].bound * (T(1) + tol)) {
        sol.z = z;
        sol.duals = {eta, T(0)};
        return sol;
    }
    T lo = T(0), hi = T(1);
    CVec<T> zhi;
    T eta_hi = inner(hi, zhi);
    int grow = 0;
    while (cons[1].eval(zhi) > cons[1].bound * (T(1) + tol)) {
        lo = hi;
        hi *= T(2);
        eta_hi = inner(hi, zhi);
        if (++grow > 2000) {
            sol.feasible = false;
            break;
        }
    }
    for (int it = 0; it < max_iter && sol.feasible; ++it) {
        const T mid = T(0.5) * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        CVec<T> zm;
        const T em = inner(mid, zm);
        if (cons[1].eval(zm) <= cons[1].bound * (T(1) + tol)) {
            hi = mid;
            zhi = zm;
            eta_hi = em;
            if (cons[1].eval(zhi) >= cons[1].bound * (T(1) - tol)) break;
        } else {
            lo = mid;
        }
    }
    sol.z = zhi;
    sol.duals = {eta_hi, hi};
    return sol;
}

} // namespace rsace
