#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace canard {

constexpr int max_jet_vars = 4;
using MultiIndex = std::array<int, max_jet_vars>;

class JetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

// Monomials of total degree <= D in k variables, graded order, with a dense
// (D+1)^k lookup from exponent tuple to slot.
struct JetLayout {
    int nvars = 0;
    int degree = 0;
    std::vector<MultiIndex> monomials;
    std::vector<int> slot_of;  // hypercube -> slot or -1
    std::vector<int> total;    // total degree per slot

    int cube_index(const MultiIndex& e) const {
        int idx = 0;
        for (int v = 0; v < nvars; ++v) idx = idx * (degree + 1) + e[v];
        return idx;
    }

    int slot(const MultiIndex& e) const {
        int s = 0;
        for (int v = 0; v < nvars; ++v) {
            if (e[v] < 0 || e[v] > degree) return -1;
            s += e[v];
        }
        if (s > degree) return -1;
        return slot_of[cube_index(e)];
    }
};

inline std::shared_ptr<const JetLayout> make_layout(int nvars, int degree) {
    auto L = std::make_shared<JetLayout>();
    L->nvars = nvars;
    L->degree = degree;
    int cube = 1;
    for (int v = 0; v < nvars; ++v) cube *= degree + 1;
    L->slot_of.assign(cube, -1);
    for (int d = 0; d <= degree; ++d) {
        // enumerate exponents with total degree d, first variable highest first
        MultiIndex e{};
        std::vector<MultiIndex> level;
        auto rec = [&](auto&& self, int v, int left) -> void {
            if (v == nvars - 1) {
                e[v] = left;
                level.push_back(e);
                return;
            }
            for (int i = left; i >= 0; --i) {
                e[v] = i;
                self(self, v + 1, left - i);
            }
        };
        if (nvars == 0) continue;
        rec(rec, 0, d);
        for (auto& m : level) {
            L->slot_of[L->cube_index(m)] = static_cast<int>(L->monomials.size());
            L->monomials.push_back(m);
            L->total.push_back(d);
        }
    }
    return L;
}

inline std::shared_ptr<const JetLayout> layout(int nvars, int degree) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(nvars, degree);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto L = make_layout(nvars, degree);
    cache.emplace(key, L);
    return L;
}

}  // namespace detail

// Truncated multivariate polynomial. `exact` stays true while the value is a
// genuine polynomial of degree <= D (nothing was ever truncated away); only
// exact jets may be recentered at a nonzero point.
template <typename T = double>
class BasicJet {
public:
    BasicJet() : BasicJet(1, 4) {}

    BasicJet(int nvars, int degree = 4) {
        if (nvars < 1 || nvars > max_jet_vars) throw JetError("jet: nvars must be in 1..4");
        if (degree < 0) throw JetError("jet: negative degree bound");
        layout_ = detail::layout(nvars, degree);
        c_.assign(layout_->monomials.size(), T(0));
    }

    static BasicJet constant(int nvars, int degree, T value) {
        BasicJet j(nvars, degree);
        j.c_[0] = value;
        return j;
    }

    static BasicJet variable(int nvars, int degree, int var, T value = T(0)) {
        if (var < 0 || var >= nvars) throw JetError("jet: bad variable index");
        BasicJet j(nvars, degree);
        j.c_[0] = value;
        if (degree >= 1) {
            MultiIndex e{};
            e[var] = 1;
            j.c_[j.layout_->slot(e)] = T(1);
        }
        return j;
    }

    // Build from {exponents, coefficient} terms; terms beyond D are dropped and
    // the jet is marked inexact if any dropped coefficient was nonzero.
    static BasicJet from_terms(int nvars, int degree,
                               std::initializer_list<std::pair<MultiIndex, T>> terms) {
        BasicJet j(nvars, degree);
        for (auto& [e, v] : terms) j.add_term(e, v);
        return j;
    }

    int nvars() const { return layout_->nvars; }
    int degree_bound() const { return layout_->degree; }
    bool exact() const { return exact_; }
    std::size_t size() const { return c_.size(); }
    const MultiIndex& monomial(std::size_t slot) const { return layout_->monomials[slot]; }
    int total_degree(std::size_t slot) const { return layout_->total[slot]; }
    T coeff_at(std::size_t slot) const { return c_[slot]; }

    T coeff(const MultiIndex& e) const {
        check_index(e);
        int s = layout_->slot(e);
        return s < 0 ? T(0) : c_[s];
    }
    T coeff(int i) const { return coeff(MultiIndex{i, 0, 0, 0}); }
    T coeff(int i, int j) const { return coeff(MultiIndex{i, j, 0, 0}); }
    T coeff(int i, int j, int k) const { return coeff(MultiIndex{i, j, k, 0}); }

    void set(const MultiIndex& e, T v) {
        check_index(e);
        int s = layout_->slot(e);
        if (s < 0) throw JetError("jet: multi-index above degree bound");
        c_[s] = v;
    }
    void set(int i, int j, T v) { set(MultiIndex{i, j, 0, 0}, v); }

    void add_term(const MultiIndex& e, T v) {
        check_index(e);
        int s = layout_->slot(e);
        if (s < 0) {
            if (v != T(0)) exact_ = false;
            return;
        }
        c_[s] += v;
    }

    // Actual degree of the stored polynomial (-1 for the zero jet).
    int actual_degree() const {
        int d = -1;
        for (std::size_t s = 0; s < c_.size(); ++s)
            if (c_[s] != T(0) && layout_->total[s] > d) d = layout_->total[s];
        return d;
    }

    BasicJet truncated(int degree) const {
        BasicJet r(nvars(), degree);
        r.exact_ = exact_;
        for (std::size_t s = 0; s < c_.size(); ++s) r.add_term(layout_->monomials[s], c_[s]);
        return r;
    }

    BasicJet operator-() const {
        BasicJet r = *this;
        for (auto& v : r.c_) v = -v;
        return r;
    }

    BasicJet scaled(T k) const {
        BasicJet r = *this;
        for (auto& v : r.c_) v *= k;
        return r;
    }

    friend BasicJet add(const BasicJet& a, const BasicJet& b) {
        same_vars(a, b);
        int D = std::min(a.degree_bound(), b.degree_bound());
        BasicJet r(a.nvars(), D);
        r.exact_ = a.exact_ && b.exact_;
        for (std::size_t s = 0; s < a.c_.size(); ++s) r.add_term(a.monomial(s), a.c_[s]);
        for (std::size_t s = 0; s < b.c_.size(); ++s) r.add_term(b.monomial(s), b.c_[s]);
        return r;
    }

    friend BasicJet mul(const BasicJet& a, const BasicJet& b) {
        same_vars(a, b);
        int D = std::min(a.degree_bound(), b.degree_bound());
        BasicJet r(a.nvars(), D);
        r.exact_ = a.exact_ && b.exact_;
        const int n = a.nvars();
        for (std::size_t i = 0; i < a.c_.size(); ++i) {
            if (a.c_[i] == T(0)) continue;
            const auto& ei = a.monomial(i);
            for (std::size_t j = 0; j < b.c_.size(); ++j) {
                if (b.c_[j] == T(0)) continue;
                const auto& ej = b.monomial(j);
                MultiIndex e{};
                for (int v = 0; v < n; ++v) e[v] = ei[v] + ej[v];
                r.add_term(e, a.c_[i] * b.c_[j]);
            }
        }
        return r;
    }

    friend BasicJet operator+(const BasicJet& a, const BasicJet& b) { return add(a, b); }
    friend BasicJet operator-(const BasicJet& a, const BasicJet& b) { return add(a, -b); }
    friend BasicJet operator*(const BasicJet& a, const BasicJet& b) { return mul(a, b); }
    friend BasicJet operator*(T k, const BasicJet& a) { return a.scaled(k); }
    friend BasicJet operator*(const BasicJet& a, T k) { return a.scaled(k); }
    friend BasicJet operator+(const BasicJet& a, T k) {
        BasicJet r = a;
        r.c_[0] += k;
        return r;
    }
    friend BasicJet operator+(T k, const BasicJet& a) { return a + k; }
    friend BasicJet operator-(const BasicJet& a, T k) { return a + (-k); }

    BasicJet pow(int k) const {
        if (k < 0) throw JetError("jet: negative power");
        BasicJet r = constant(nvars(), degree_bound(), T(1));
        for (int i = 0; i < k; ++i) r = r * *this;
        return r;
    }

    BasicJet diff(int var) const {
        if (var < 0 || var >= nvars()) throw JetError("jet: bad variable index");
        BasicJet r(nvars(), degree_bound());
        r.exact_ = exact_;
        for (std::size_t s = 0; s < c_.size(); ++s) {
            MultiIndex e = monomial(s);
            if (e[var] == 0 || c_[s] == T(0)) continue;
            T k = c_[s] * T(e[var]);
            e[var] -= 1;
            r.c_[layout_->slot(e)] += k;
        }
        return r;
    }

    T eval(const std::vector<T>& p) const {
        if (static_cast<int>(p.size()) != nvars()) throw JetError("jet: point length mismatch");
        // Horner on the first variable, recursion through the rest is overkill
        // for D <= 4; evaluate by cached powers instead.
        const int D = degree_bound();
        std::vector<std::vector<T>> pw(nvars(), std::vector<T>(D + 1, T(1)));
        for (int v = 0; v < nvars(); ++v)
            for (int k = 1; k <= D; ++k) pw[v][k] = pw[v][k - 1] * p[v];
        T acc = T(0);
        for (std::size_t s = c_.size(); s-- > 0;) {
            if (c_[s] == T(0)) continue;
            T term = c_[s];
            const auto& e = monomial(s);
            for (int v = 0; v < nvars(); ++v) term *= pw[v][e[v]];
            acc += term;
        }
        return acc;
    }

    T max_abs() const {
        T m = T(0);
        for (auto v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    // 1/a as a truncated series; needs a nonzero constant term. The result is
    // a series, so it is marked inexact.
    friend BasicJet reciprocal(const BasicJet& a) {
        T a0 = a.c_[0];
        if (a0 == T(0)) throw JetError("jet: reciprocal of a jet with zero constant term");
        BasicJet u = a;
        u.c_[0] = T(0);
        u = u.scaled(T(1) / a0);
        // 1/(a0 (1+u)) = (1/a0) sum (-u)^k
        BasicJet acc = constant(a.nvars(), a.degree_bound(), T(1));
        BasicJet term = acc;
        for (int k = 1; k <= a.degree_bound(); ++k) {
            term = term * (-u);
            acc = acc + term;
        }
        acc = acc.scaled(T(1) / a0);
        acc.exact_ = a.exact_ && u.actual_degree() <= 0;
        return acc;
    }

private:
    std::shared_ptr<const detail::JetLayout> layout_;
    std::vector<T> c_;
    bool exact_ = true;

    void check_index(const MultiIndex& e) const {
        for (int v = nvars(); v < max_jet_vars; ++v)
            if (e[v] != 0) throw JetError("jet: multi-index uses a variable beyond nvars");
    }

    static void same_vars(const BasicJet& a, const BasicJet& b) {
        if (a.nvars() != b.nvars()) throw JetError("jet: nvars mismatch");
    }

    template <typename U>
    friend BasicJet<U> compose(const BasicJet<U>&, const std::vector<BasicJet<U>>&);
    template <typename U>
    friend BasicJet<U> recenter(const BasicJet<U>&, const std::vector<U>&);
};

using Jet = BasicJet<double>;

// Substitute variable i of `target` by subs[i]. Every substitution must have a
// zero constant term; shifting the expansion point goes through recenter().
template <typename T>
BasicJet<T> compose(const BasicJet<T>& target, const std::vector<BasicJet<T>>& subs) {
    if (static_cast<int>(subs.size()) != target.nvars())
        throw JetError("jet_compose: arity mismatch");
    if (subs.empty()) throw JetError("jet_compose: no substitutions");
    const int m = subs[0].nvars();
    int D = target.degree_bound();
    for (auto& s : subs) {
        if (s.nvars() != m) throw JetError("jet_compose: substitutions disagree on nvars");
        if (s.coeff_at(0) != T(0))
            throw JetError("jet_compose: constant-term substitution into a truncated series; use recenter");
        D = std::min(D, s.degree_bound());
    }
    const int k = target.nvars();
    // powers[v][p] = subs[v]^p
    std::vector<std::vector<BasicJet<T>>> powers(k);
    for (int v = 0; v < k; ++v) {
        powers[v].push_back(BasicJet<T>::constant(m, D, T(1)));
        for (int p = 1; p <= target.degree_bound(); ++p)
            powers[v].push_back(powers[v].back() * subs[v].truncated(D));
    }
    BasicJet<T> out(m, D);
    for (std::size_t s = 0; s < target.size(); ++s) {
        T c = target.coeff_at(s);
        if (c == T(0)) continue;
        const auto& e = target.monomial(s);
        BasicJet<T> term = BasicJet<T>::constant(m, D, c);
        for (int v = 0; v < k; ++v)
            if (e[v] > 0) term = term * powers[v][e[v]];
        out = out + term;
    }
    bool ex = target.exact_;
    for (auto& s : subs) ex = ex && s.exact_;
    out.exact_ = out.exact_ && ex;
    return out;
}

// Re-expand an exact polynomial about `point`: returns g(u) = f(point + u).
// This is the only path that accepts constant terms in the substitution.
template <typename T>
BasicJet<T> recenter(const BasicJet<T>& f, const std::vector<T>& point) {
    if (static_cast<int>(point.size()) != f.nvars()) throw JetError("jet_recenter: point length mismatch");
    if (!f.exact_) throw JetError("jet_recenter: target is a truncated series, tail unknown");
    const int n = f.nvars();
    const int D = f.degree_bound();
    BasicJet<T> out(n, D);
    for (std::size_t s = 0; s < f.size(); ++s) {
        T c = f.coeff_at(s);
        if (c == T(0)) continue;
        const auto& e = f.monomial(s);
        BasicJet<T> term = BasicJet<T>::constant(n, D, c);
        for (int v = 0; v < n; ++v)
            if (e[v] > 0) term = term * BasicJet<T>::variable(n, D, v, point[v]).pow(e[v]);
        out = out + term;
    }
    return out;
}

template <typename T>
BasicJet<T> jet_add(const BasicJet<T>& a, const BasicJet<T>& b) { return add(a, b); }
template <typename T>
BasicJet<T> jet_mul(const BasicJet<T>& a, const BasicJet<T>& b) { return mul(a, b); }
template <typename T>
BasicJet<T> jet_diff(const BasicJet<T>& a, int var) { return a.diff(var); }
template <typename T>
T jet_eval(const BasicJet<T>& a, const std::vector<T>& p) { return a.eval(p); }

}  // namespace canard
