#pragma once

// Locally constant potentials of finite depth, plus an analytic tail rule
// for first-coordinate laws so that full-shift series and finiteness
// questions can be answered beyond any truncation.

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cmsthermo/graph.hpp"
#include "cmsthermo/numerics.hpp"

namespace cms {

// First-coordinate tail law: a(i) = shift - beta*log(i) - c*i + vanish(i),
// where vanish is bounded and tends to zero. Closed under the potential
// algebra below, which is all the finiteness classifier needs.
struct FirstCoordTail {
    bool present = false;
    double shift = 0.0;
    double beta_log = 0.0;
    double c_exp = 0.0;
    bool has_vanishing_extra = false;

    [[nodiscard]] ExtReal limit() const {
        if (!present) return ExtReal::undecided();
        if (c_exp > 0.0 || beta_log > 0.0) return ExtReal::neg_inf();
        if (c_exp < 0.0 || beta_log < 0.0) return ExtReal::pos_inf();
        return ExtReal::finite(shift);
    }

    // Finiteness of sum_i e^{a(i)} over the whole alphabet.
    // Kind::undecided at the p-series boundary beta == 1.
    [[nodiscard]] ExtReal::Kind series_finiteness() const {
        if (!present) return ExtReal::Kind::undecided;
        if (c_exp > 0.0) return ExtReal::Kind::finite;
        if (c_exp < 0.0) return ExtReal::Kind::plus_inf;
        if (beta_log > 1.0) return ExtReal::Kind::finite;
        if (beta_log < 1.0) return ExtReal::Kind::plus_inf;
        return ExtReal::Kind::undecided;
    }
};

class Potential {
public:
    Potential() = default;

    int depth = 1;
    std::function<double(std::span<const Symbol>)> fn;
    FirstCoordTail tail;
    double sup_bound = 0.0;  // declared sup over the shift space
    double inf_bound = -std::numeric_limits<double>::infinity();
    std::string desc = "zero";

    [[nodiscard]] bool is_constant() const {
        return tail.present && tail.beta_log == 0.0 && tail.c_exp == 0.0 &&
               !tail.has_vanishing_extra && depth == 1 && sup_bound == tail.shift &&
               inf_bound == tail.shift;
    }

    [[nodiscard]] double eval(std::span<const Symbol> word) const {
        if (static_cast<int>(word.size()) < depth)
            throw std::invalid_argument("Potential::eval: word shorter than depth");
        return fn(word.first(static_cast<std::size_t>(depth)));
    }
    [[nodiscard]] double eval(const Word& w) const { return eval(std::span<const Symbol>(w)); }

    // Depth <= 2 evaluation on an edge (the workhorse of all matrices).
    [[nodiscard]] double eval2(Symbol i, Symbol j) const {
        if (depth == 1) {
            const Symbol w[1] = {i};
            return fn(std::span<const Symbol>(w, 1));
        }
        if (depth == 2) {
            const Symbol w[2] = {i, j};
            return fn(std::span<const Symbol>(w, 2));
        }
        throw std::invalid_argument("Potential::eval2 requires depth <= 2");
    }

    static Potential zero() { return constant(0.0); }

    static Potential constant(double c) {
        Potential p;
        p.depth = 1;
        p.fn = [c](std::span<const Symbol>) { return c; };
        p.tail = {true, c, 0.0, 0.0, false};
        p.sup_bound = c;
        p.inf_bound = c;
        p.desc = "const(" + std::to_string(c) + ")";
        return p;
    }

    // 1_[s]: indicator of the 1-cylinder at symbol s.
    static Potential indicator(Symbol s) {
        Potential p;
        p.depth = 1;
        p.fn = [s](std::span<const Symbol> w) { return w[0] == s ? 1.0 : 0.0; };
        p.tail = {true, 0.0, 0.0, 0.0, true};
        p.sup_bound = 1.0;
        p.inf_bound = 0.0;
        p.desc = "indicator(" + std::to_string(s) + ")";
        return p;
    }

    static Potential first_coordinate(std::function<double(Symbol)> a, FirstCoordTail tail,
                                      double sup, std::string desc,
                                      double inf = -std::numeric_limits<double>::infinity()) {
        Potential p;
        p.depth = 1;
        p.fn = [a = std::move(a)](std::span<const Symbol> w) { return a(w[0]); };
        p.tail = tail;
        p.sup_bound = sup;
        p.inf_bound = inf;
        p.desc = std::move(desc);
        return p;
    }

    // a(i) = shift - beta*log(i)
    static Potential log_law(double beta, double shift = 0.0) {
        std::ostringstream os;
        os << "loglaw(beta=" << beta << ",shift=" << shift << ")";
        return first_coordinate(
            [beta, shift](Symbol i) { return shift - beta * std::log(static_cast<double>(i)); },
            {true, shift, beta, 0.0, false}, beta >= 0 ? shift : std::numeric_limits<double>::infinity(),
            os.str());
    }

    // a(i) = shift - c*i
    static Potential exp_law(double c, double shift = 0.0) {
        std::ostringstream os;
        os << "explaw(c=" << c << ",shift=" << shift << ")";
        return first_coordinate([c, shift](Symbol i) { return shift - c * static_cast<double>(i); },
                                {true, shift, 0.0, c, false},
                                c >= 0 ? shift - c : std::numeric_limits<double>::infinity(), os.str());
    }

    // V = sum_k (1/k) 1_[k], the canonical cylinder-topology test function.
    static Potential v_function() {
        Potential p = first_coordinate([](Symbol i) { return 1.0 / static_cast<double>(i); },
                                       {true, 0.0, 0.0, 0.0, true}, 1.0, "V", 0.0);
        return p;
    }

    static Potential one_minus_v() {
        Potential p = first_coordinate([](Symbol i) { return 1.0 - 1.0 / static_cast<double>(i); },
                                       {true, 1.0, 0.0, 0.0, true}, 1.0, "1-V", 0.0);
        return p;
    }

    static Potential depth2(std::function<double(Symbol, Symbol)> f, double sup, std::string desc,
                            double inf = -std::numeric_limits<double>::infinity()) {
        Potential p;
        p.depth = 2;
        p.fn = [f = std::move(f)](std::span<const Symbol> w) { return f(w[0], w[1]); };
        p.sup_bound = sup;
        p.inf_bound = inf;
        p.desc = std::move(desc);
        return p;
    }

    // Explicit table on admissible k-words with a fallback rule for words
    // outside the table. Table and rule must agree where both are defined;
    // the table here is a materialized cache, never an override.
    static Potential from_table(int depth, std::map<Word, double> table,
                                std::function<double(std::span<const Symbol>)> fallback,
                                double sup, std::string desc) {
        Potential p;
        p.depth = depth;
        p.fn = [table = std::move(table), fallback = std::move(fallback),
                depth](std::span<const Symbol> w) {
            Word key(w.begin(), w.begin() + depth);
            auto it = table.find(key);
            if (it != table.end()) return it->second;
            if (!fallback) throw std::domain_error("Potential table: word not covered");
            return fallback(w);
        };
        p.sup_bound = sup;
        p.desc = std::move(desc);
        return p;
    }
};

inline Potential operator*(double t, const Potential& p) {
    if (t == 0.0) return Potential::constant(0.0);
    Potential q;
    q.depth = p.depth;
    q.fn = [t, f = p.fn](std::span<const Symbol> w) { return t * f(w); };
    if (p.tail.present)
        q.tail = {true, t * p.tail.shift, t * p.tail.beta_log, t * p.tail.c_exp,
                  p.tail.has_vanishing_extra};
    q.sup_bound = t >= 0 ? t * p.sup_bound : t * p.inf_bound;
    q.inf_bound = t >= 0 ? t * p.inf_bound : t * p.sup_bound;
    q.desc = std::to_string(t) + "*" + p.desc;
    return q;
}

inline Potential operator+(const Potential& p, const Potential& r) {
    Potential q;
    q.depth = std::max(p.depth, r.depth);
    q.fn = [pd = p.depth, rd = r.depth, pf = p.fn, rf = r.fn](std::span<const Symbol> w) {
        return pf(w.first(static_cast<std::size_t>(pd))) + rf(w.first(static_cast<std::size_t>(rd)));
    };
    if (p.tail.present && r.tail.present)
        q.tail = {true, p.tail.shift + r.tail.shift, p.tail.beta_log + r.tail.beta_log,
                  p.tail.c_exp + r.tail.c_exp,
                  p.tail.has_vanishing_extra || r.tail.has_vanishing_extra};
    q.sup_bound = p.sup_bound + r.sup_bound;
    q.inf_bound = p.inf_bound + r.inf_bound;
    q.desc = p.desc + "+" + r.desc;
    return q;
}

inline Potential operator+(const Potential& p, double c) { return p + Potential::constant(c); }
inline Potential operator-(const Potential& p, const Potential& r) { return p + (-1.0) * r; }

// Birkhoff sum of a depth-k potential over one period of the cyclic word
// (x_1..x_n)^inf, reading coordinates with wrap-around. Requires k <= n+1.
inline double birkhoff_periodic(const Potential& phi, const Word& cycle) {
    const int n = static_cast<int>(cycle.size());
    if (phi.depth > n + 1)
        throw std::invalid_argument("birkhoff_periodic: potential depth exceeds n+1");
    double s = 0.0;
    Word window(static_cast<std::size_t>(phi.depth));
    for (int k = 0; k < n; ++k) {
        for (int t = 0; t < phi.depth; ++t) window[static_cast<std::size_t>(t)] = cycle[static_cast<std::size_t>((k + t) % n)];
        s += phi.eval(window);
    }
    return s;
}

// n-th variation of phi over a truncation: the max spread of values over
// pairs of admissible depth-words sharing their first j symbols. Zero for
// j >= depth by construction.
inline double variation_on(const TruncatedGraph& g, const Potential& phi, int j,
                           std::size_t cap = 200000) {
    if (j >= phi.depth) return 0.0;
    const auto words = admissible_words(g, phi.depth, cap);
    std::map<Word, std::pair<double, double>> spread;  // prefix -> (min,max)
    for (const auto& w : words) {
        Word prefix(w.begin(), w.begin() + j);
        const double v = phi.eval(w);
        auto [it, fresh] = spread.try_emplace(prefix, std::pair{v, v});
        if (!fresh) {
            it->second.first = std::min(it->second.first, v);
            it->second.second = std::max(it->second.second, v);
        }
    }
    double m = 0.0;
    for (auto& [_, mm] : spread) m = std::max(m, mm.second - mm.first);
    return m;
}

inline double sup_on(const TruncatedGraph& g, const Potential& phi, std::size_t cap = 200000) {
    const auto words = admissible_words(g, phi.depth, cap);
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& w : words) m = std::max(m, phi.eval(w));
    return m;
}

// Materialized table on a truncation (the spec's table field): the tail
// rule and the table agree by construction.
inline std::map<Word, double> materialize_table(const TruncatedGraph& g, const Potential& phi,
                                                std::size_t cap = 200000) {
    std::map<Word, double> t;
    for (const auto& w : admissible_words(g, phi.depth, cap)) t[w] = phi.eval(w);
    return t;
}

// Lifts a base potential of depth <= m+1 through a higher-block recode to
// an equivalent potential of depth <= 2 on the recoded graph.
inline Potential lift_through_recode(const Potential& phi, const Recode& rc) {
    const int m = rc.block_length;
    if (phi.depth > m + 1)
        throw std::invalid_argument("lift_through_recode: depth exceeds m+1");
    Potential q;
    q.depth = phi.depth <= m ? 1 : 2;
    q.fn = [phi, &words = rc.block_words](std::span<const Symbol> w) {
        Word base = words[static_cast<std::size_t>(w[0]) - 1];
        for (std::size_t k = 1; k < w.size(); ++k)
            base.push_back(words[static_cast<std::size_t>(w[k]) - 1].back());
        return phi.eval(base);
    };
    q.sup_bound = phi.sup_bound;
    q.desc = phi.desc + "/recoded";
    return q;
}

}  // namespace cms
