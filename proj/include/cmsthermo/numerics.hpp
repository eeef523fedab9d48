#pragma once

// Small numeric helpers shared across the library: log-domain sums,
// extended reals with an explicit "undecided" state, sequence
// extrapolation and bisection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cms {

inline constexpr double kNegInfLog = -std::numeric_limits<double>::infinity();

inline double logsumexp2(double a, double b) {
    if (a == kNegInfLog) return b;
    if (b == kNegInfLog) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double logsumexp(std::span<const double> xs) {
    double m = kNegInfLog;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInfLog) return kNegInfLog;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Online log-domain accumulator: keeps a running max and rescaled sum.
class LogAccumulator {
public:
    void add(double logterm) {
        if (logterm == kNegInfLog) return;
        if (logterm <= max_) {
            sum_ += std::exp(logterm - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - logterm) + 1.0;
            max_ = logterm;
        }
    }
    [[nodiscard]] double log_total() const {
        return max_ == kNegInfLog ? kNegInfLog : max_ + std::log(sum_);
    }
    [[nodiscard]] bool empty() const { return max_ == kNegInfLog; }

private:
    double max_ = kNegInfLog;
    double sum_ = 0.0;
};

// Extended real with an explicit undecided state. Finiteness questions in
// this library are semi-decidable, so "undecided" is a first-class value
// and is never coerced to a number.
struct ExtReal {
    enum class Kind { finite, plus_inf, minus_inf, undecided };
    Kind kind = Kind::undecided;
    double value = 0.0;

    static ExtReal finite(double v) { return {Kind::finite, v}; }
    static ExtReal pos_inf() { return {Kind::plus_inf, 0.0}; }
    static ExtReal neg_inf() { return {Kind::minus_inf, 0.0}; }
    static ExtReal undecided() { return {Kind::undecided, 0.0}; }

    [[nodiscard]] bool is_finite() const { return kind == Kind::finite; }
    [[nodiscard]] bool is_pos_inf() const { return kind == Kind::plus_inf; }
    [[nodiscard]] bool is_neg_inf() const { return kind == Kind::minus_inf; }
    [[nodiscard]] bool is_undecided() const { return kind == Kind::undecided; }

    [[nodiscard]] double finite_value() const {
        if (!is_finite()) throw std::domain_error("ExtReal: not a finite value");
        return value;
    }

    [[nodiscard]] std::string str() const {
        switch (kind) {
            case Kind::finite: return std::to_string(value);
            case Kind::plus_inf: return "inf";
            case Kind::minus_inf: return "-inf";
            default: return "undecided";
        }
    }
};

inline ExtReal operator+(ExtReal a, double c) {
    if (a.is_finite()) return ExtReal::finite(a.value + c);
    return a;
}

// Aitken delta-squared extrapolation of the last usable triple of a
// sequence; returns {accelerated value, residual |x_n - accelerated|}.
struct AitkenResult {
    double value = 0.0;
    double residual = 0.0;
    bool valid = false;
};

inline AitkenResult aitken_last(std::span<const double> xs) {
    AitkenResult r;
    const std::size_t n = xs.size();
    if (n < 3) return r;
    const double x0 = xs[n - 3], x1 = xs[n - 2], x2 = xs[n - 1];
    const double d2 = x2 - 2.0 * x1 + x0;
    if (std::abs(d2) < 1e-300) {
        r.value = x2;
        r.residual = std::abs(x2 - x1);
        r.valid = true;
        return r;
    }
    const double d1 = x2 - x1;
    r.value = x2 - d1 * d1 / d2;
    r.residual = std::abs(r.value - x2);
    r.valid = true;
    return r;
}

// Bisection on a monotone predicate over [lo, hi]: pred(lo) is expected
// true, pred(hi) false; returns the boundary bracket of width <= tol.
struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
    [[nodiscard]] double width() const { return hi - lo; }
};

template <class Pred>
Bracket bisect_boundary(double lo, double hi, double tol, Pred&& pred,
                        int max_steps = 200) {
    Bracket b{lo, hi};
    for (int i = 0; i < max_steps && b.width() > tol; ++i) {
        const double m = b.mid();
        if (pred(m)) b.lo = m;
        else b.hi = m;
    }
    return b;
}

// Root bracket for a monotone decreasing function f: find [lo,hi] with
// f(lo) >= 0 >= f(hi), widening geometrically from the seed interval.
template <class F>
Bracket widen_decreasing_bracket(F&& f, double lo = -50.0, double hi = 50.0,
                                 int max_widen = 60) {
    double flo = f(lo), fhi = f(hi);
    for (int i = 0; i < max_widen && flo < 0.0; ++i) {
        hi = lo;
        lo *= 2.0;
        flo = f(lo);
    }
    for (int i = 0; i < max_widen && fhi > 0.0; ++i) {
        lo = hi;
        hi *= 2.0;
        fhi = f(hi);
    }
    if (flo < 0.0 || fhi > 0.0)
        throw std::runtime_error("bracket search failed for decreasing function");
    return {lo, hi};
}

// Signed log-domain scalar: value = sign * e^{lg}. Supports the four
// operations, so dense elimination works across huge dynamic ranges.
struct SignedLog {
    double lg = kNegInfLog;
    int sign = 0;  // -1, 0, +1

    static SignedLog zero() { return {kNegInfLog, 0}; }
    static SignedLog from_log(double lg_, int sign_ = 1) {
        return lg_ == kNegInfLog ? zero() : SignedLog{lg_, sign_};
    }
    [[nodiscard]] bool is_zero() const { return sign == 0; }
};

inline SignedLog operator*(SignedLog a, SignedLog b) {
    if (a.is_zero() || b.is_zero()) return SignedLog::zero();
    return {a.lg + b.lg, a.sign * b.sign};
}
inline SignedLog operator/(SignedLog a, SignedLog b) {
    if (a.is_zero()) return SignedLog::zero();
    if (b.is_zero()) throw std::domain_error("SignedLog: division by zero");
    return {a.lg - b.lg, a.sign * b.sign};
}
inline SignedLog operator+(SignedLog a, SignedLog b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.sign == b.sign) return {logsumexp2(a.lg, b.lg), a.sign};
    const SignedLog& big = a.lg >= b.lg ? a : b;
    const SignedLog& small = a.lg >= b.lg ? b : a;
    const double d = small.lg - big.lg;
    if (d >= 0.0) return SignedLog::zero();  // equal magnitudes cancel
    const double diff = big.lg + std::log1p(-std::exp(d));
    if (!std::isfinite(diff)) return SignedLog::zero();
    return {diff, big.sign};
}
inline SignedLog operator-(SignedLog a, SignedLog b) {
    b.sign = -b.sign;
    return a + b;
}

// Solves A x = b by Gaussian elimination with partial pivoting in signed
// log arithmetic. A is row-major n*n and is destroyed.
inline std::vector<SignedLog> signed_log_solve(std::vector<SignedLog> A,
                                               std::vector<SignedLog> b) {
    const int n = static_cast<int>(b.size());
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    auto at = [&](int r, int c) -> SignedLog& {
        return A[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)]) * n + c];
    };
    auto bt = [&](int r) -> SignedLog& { return b[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])]; };
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (at(r, col).lg > at(piv, col).lg) piv = r;
        std::swap(perm[static_cast<std::size_t>(col)], perm[static_cast<std::size_t>(piv)]);
        if (at(col, col).is_zero())
            throw std::runtime_error("signed_log_solve: singular matrix");
        for (int r = col + 1; r < n; ++r) {
            if (at(r, col).is_zero()) continue;
            const SignedLog f = at(r, col) / at(col, col);
            at(r, col) = SignedLog::zero();
            for (int c = col + 1; c < n; ++c) at(r, c) = at(r, c) - f * at(col, c);
            bt(r) = bt(r) - f * bt(col);
        }
    }
    std::vector<SignedLog> x(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        SignedLog acc = bt(r);
        for (int c = r + 1; c < n; ++c) acc = acc - at(r, c) * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = acc / at(r, r);
    }
    return x;
}

// Dense double-precision solve with partial pivoting (A row-major, destroyed).
inline std::vector<double> dense_solve(std::vector<double> A, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[static_cast<std::size_t>(r) * n + col]) >
                std::abs(A[static_cast<std::size_t>(piv) * n + col]))
                piv = r;
        if (piv != col) {
            for (int c = 0; c < n; ++c)
                std::swap(A[static_cast<std::size_t>(col) * n + c], A[static_cast<std::size_t>(piv) * n + c]);
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(piv)]);
        }
        const double d = A[static_cast<std::size_t>(col) * n + col];
        if (d == 0.0) throw std::runtime_error("dense_solve: singular matrix");
        for (int r = col + 1; r < n; ++r) {
            const double f = A[static_cast<std::size_t>(r) * n + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c)
                A[static_cast<std::size_t>(r) * n + c] -= f * A[static_cast<std::size_t>(col) * n + c];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c) acc -= A[static_cast<std::size_t>(r) * n + c] * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = acc / A[static_cast<std::size_t>(r) * n + r];
    }
    return x;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline double gcd_int(double a, double b) {
    auto ia = static_cast<long long>(a), ib = static_cast<long long>(b);
    while (ib != 0) {
        const long long t = ia % ib;
        ia = ib;
        ib = t;
    }
    return static_cast<double>(ia);
}

}  // namespace cms
