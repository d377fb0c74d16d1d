#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "allee.hpp"
#include "errors.hpp"

namespace canard {

using Vec2 = std::array<double, 2>;
using PlanarField = std::function<Vec2(const Vec2&)>;

enum class Direction { Forward, Reversed };

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double t_max = 1;
    Direction direction = Direction::Forward;
};

inline void validate(const IntegratorOptions& o) {
    if (!(o.rel_tol > 0 && o.rel_tol <= 1e-2) || !(o.abs_tol > 0 && o.abs_tol <= 1e-2))
        throw std::invalid_argument("integrator tolerances must lie in (0, 1e-2]");
    if (!(o.t_max > 0)) throw std::invalid_argument("integrator t_max must be positive");
    if (!(o.max_step > 0)) throw std::invalid_argument("integrator max_step must be positive");
}

// One accepted step with its Dormand-Prince continuous extension.
struct DenseSegment {
    double t0 = 0, h = 0;
    std::array<Vec2, 5> rc{};

    double t1() const { return t0 + h; }
    Vec2 at(double t) const {
        const double th = (t - t0) / h, th1 = 1 - th;
        Vec2 y;
        for (int i = 0; i < 2; ++i)
            y[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
        return y;
    }
};

// Dormand-Prince 5(4) with PI step control. A streak of rejected steps tightens
// the tolerances (at most twice) and raises the stiffness warning.
class DormandPrince {
public:
    DormandPrince(PlanarField f, Vec2 y0, IntegratorOptions o) : f_(std::move(f)), y_(y0), o_(o) {
        validate(o_);
        if (!std::isfinite(y0[0]) || !std::isfinite(y0[1])) throw std::invalid_argument("initial point must be finite");
        sign_ = o_.direction == Direction::Reversed ? -1.0 : 1.0;
        k1_ = eval(y_);
        h_ = initial_step();
    }

    double t() const { return t_; }
    const Vec2& y() const { return y_; }
    bool done() const { return t_ >= o_.t_max; }
    bool stiffness_warning() const { return stiff_; }
    long accepted() const { return accepted_; }
    long rejected() const { return rejected_; }
    const DenseSegment& last() const { return seg_; }
    Vec2 field(const Vec2& y) const { return eval(y); }

    // Advances by one accepted step. Returns false once t_max is reached.
    bool step() {
        if (done()) return false;
        int streak = 0;
        for (;;) {
            double h = std::min({h_, o_.max_step, o_.t_max - t_});
            if (h < 1e-14 * std::max(1.0, std::abs(t_)))
                throw NumericalFailure("integrator step size underflow at t = " + std::to_string(t_));
            std::array<Vec2, 7> k;
            Vec2 y1, err;
            attempt(h, k, y1, err);
            double e = 0;
            for (int i = 0; i < 2; ++i) {
                const double sc = abs_tol_ * tighten_ + rel_tol_ * tighten_ * std::max(std::abs(y_[i]), std::abs(y1[i]));
                e += (err[i] / sc) * (err[i] / sc);
            }
            e = std::sqrt(e / 2);
            if (!std::isfinite(e)) e = 1e10;
            if (e <= 1) {
                double fac = e == 0 ? 10 : 0.9 * std::pow(e, -0.17) * std::pow(e_old_, 0.04);
                fac = std::clamp(fac, 0.2, 10.0);
                if (last_rejected_) fac = std::min(fac, 1.0);
                e_old_ = std::max(e, 1e-4);
                dense(h, k, y1);
                t_ += h;
                y_ = y1;
                k1_ = k[6];
                h_ = h * fac;
                ++accepted_;
                last_rejected_ = false;
                return true;
            }
            ++rejected_;
            last_rejected_ = true;
            h_ = h * std::max(0.2, 0.9 * std::pow(e, -0.2));
            if (++streak >= 12 && tighten_ > 1e-2) {
                stiff_ = true;
                tighten_ *= 0.1;
                streak = 0;
            }
        }
    }

private:
    Vec2 eval(const Vec2& y) const {
        Vec2 v = f_(y);
        if (!std::isfinite(v[0]) || !std::isfinite(v[1]))
            throw NumericalFailure("field evaluation failed at (" + std::to_string(y[0]) + ", " +
                                   std::to_string(y[1]) + ")");
        return {sign_ * v[0], sign_ * v[1]};
    }

    double initial_step() const {
        double d0 = 0, d1 = 0;
        for (int i = 0; i < 2; ++i) {
            const double sc = o_.abs_tol + o_.rel_tol * std::abs(y_[i]);
            d0 = std::max(d0, std::abs(y_[i]) / sc);
            d1 = std::max(d1, std::abs(k1_[i]) / sc);
        }
        double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        return std::min({h, o_.max_step, o_.t_max});
    }

    void attempt(double h, std::array<Vec2, 7>& k, Vec2& y1, Vec2& err) const {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                                b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                                e6 = 22.0 / 525, e7 = -1.0 / 40;
        auto comb = [&](std::initializer_list<std::pair<double, int>> terms) {
            Vec2 v = y_;
            for (auto [c, j] : terms)
                for (int i = 0; i < 2; ++i) v[i] += h * c * k[j][i];
            return v;
        };
        k[0] = k1_;
        k[1] = eval(comb({{a21, 0}}));
        k[2] = eval(comb({{a31, 0}, {a32, 1}}));
        k[3] = eval(comb({{a41, 0}, {a42, 1}, {a43, 2}}));
        k[4] = eval(comb({{a51, 0}, {a52, 1}, {a53, 2}, {a54, 3}}));
        k[5] = eval(comb({{a61, 0}, {a62, 1}, {a63, 2}, {a64, 3}, {a65, 4}}));
        y1 = comb({{b1, 0}, {b3, 2}, {b4, 3}, {b5, 4}, {b6, 5}});
        k[6] = eval(y1);
        for (int i = 0; i < 2; ++i)
            err[i] = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
    }

    void dense(double h, const std::array<Vec2, 7>& k, const Vec2& y1) {
        static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                                d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                                d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
        seg_.t0 = t_;
        seg_.h = h;
        for (int i = 0; i < 2; ++i) {
            const double dy = y1[i] - y_[i], bspl = h * k[0][i] - dy;
            seg_.rc[0][i] = y_[i];
            seg_.rc[1][i] = dy;
            seg_.rc[2][i] = bspl;
            seg_.rc[3][i] = dy - h * k[6][i] - bspl;
            seg_.rc[4][i] = h * (d1 * k[0][i] + d3 * k[2][i] + d4 * k[3][i] + d5 * k[4][i] + d6 * k[5][i] +
                                 d7 * k[6][i]);
        }
    }

    PlanarField f_;
    Vec2 y_;
    IntegratorOptions o_;
    double sign_ = 1;
    double rel_tol_ = o_.rel_tol, abs_tol_ = o_.abs_tol, tighten_ = 1;
    double t_ = 0, h_ = 0, e_old_ = 1e-4;
    Vec2 k1_{};
    DenseSegment seg_;
    bool stiff_ = false, last_rejected_ = false;
    long accepted_ = 0, rejected_ = 0;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec2> y;
    std::vector<DenseSegment> segments;
    bool stiffness_warning = false;
    long rejected = 0;

    Vec2 at(double time) const {
        if (segments.empty() || time < segments.front().t0 || time > segments.back().t1())
            throw std::out_of_range("trajectory: time outside the integrated range");
        auto it = std::upper_bound(segments.begin(), segments.end(), time,
                                   [](double v, const DenseSegment& s) { return v < s.t1(); });
        if (it == segments.end()) --it;
        return it->at(time);
    }
};

inline Trajectory integrate(const PlanarField& field, Vec2 x0, const IntegratorOptions& opts) {
    DormandPrince dp(field, x0, opts);
    Trajectory tr;
    tr.t.push_back(0);
    tr.y.push_back(x0);
    while (dp.step()) {
        tr.t.push_back(dp.t());
        tr.y.push_back(dp.y());
        tr.segments.push_back(dp.last());
    }
    tr.stiffness_warning = dp.stiffness_warning();
    tr.rejected = dp.rejected();
    return tr;
}

// Vertical ray {x = x0, y < base_y} (below) or {x = x0, y > base_y} (above),
// crossed with sign(dx/dt) = crossing.
struct Section {
    double x0 = 0;
    double base_y = 0;
    bool below = true;
    int crossing = +1;

    bool on_ray(double y) const { return below ? y < base_y : y > base_y; }
};

struct SectionHit {
    double y = 0;
    double t = 0;
};

inline constexpr double default_section_time_tol = 1e-10;

// First same-direction crossing of the ray after leaving the start point.
inline SectionHit first_hit(const PlanarField& field, Vec2 start, const Section& sec, const IntegratorOptions& opts) {
    DormandPrince dp(field, start, opts);
    auto g = [&](const Vec2& v) { return sec.crossing * (v[0] - sec.x0); };
    double g0 = g(start);
    while (dp.step()) {
        const double g1 = g(dp.y());
        if (g0 < 0 && g1 >= 0) {
            const auto& seg = dp.last();
            double t;
            if (g1 == 0) {
                t = seg.t1();
            } else {
                boost::uintmax_t it = 200;
                auto tol = [](double a, double b) { return std::abs(b - a) <= default_section_time_tol; };
                auto r = boost::math::tools::toms748_solve([&](double s) { return g(seg.at(s)); }, seg.t0, seg.t1(),
                                                           g0, g1, tol, it);
                t = 0.5 * (r.first + r.second);
            }
            const Vec2 p = seg.at(t);
            if (sec.on_ray(p[1])) {
                const Vec2 v = dp.field(p);
                if (std::abs(v[0]) <= 1e-12 * std::max(std::hypot(v[0], v[1]), 1e-300))
                    throw NumericalFailure("tangential section crossing");
                return {p[1], t};
            }
        }
        g0 = g1;
    }
    throw NumericalFailure("no return to the section within t_max");
}

inline double return_map(const PlanarField& field, const Section& sec, double y0, const IntegratorOptions& opts) {
    return first_hit(field, {sec.x0, y0}, sec, opts).y;
}

enum class Stability { Stable, Unstable, Neutral };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "Stable";
        case Stability::Unstable: return "Unstable";
        case Stability::Neutral: return "Neutral";
    }
    return "?";
}

inline Stability stability_from_multiplier(double mu) {
    if (std::abs(std::abs(mu) - 1) <= 1e-4) return Stability::Neutral;
    return std::abs(mu) < 1 ? Stability::Stable : Stability::Unstable;
}

class BracketInvalid : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CycleResult {
    Vec2 section_point{};
    double period = 0;
    double multiplier = 0;          // forward-time convention
    double multiplier_integrated = 0;  // in the direction actually integrated
    double residual = 0;            // |P(y*) - y*|
    Stability stability = Stability::Neutral;
    bool converged = false;
    int iterations = 0;
};

// Bisection on d(y) = P(y) - y. In reversed time the returned multiplier is the
// reciprocal of the one measured, i.e. the forward-time return-map derivative.
inline CycleResult find_cycle(const PlanarField& field, const Section& sec, std::pair<double, double> bracket,
                              const IntegratorOptions& opts, double y_tol = 1e-10) {
    auto [lo, hi] = bracket;
    if (!(lo < hi)) std::swap(lo, hi);
    if (!sec.on_ray(lo) || !sec.on_ray(hi)) throw BracketInvalid("bracket ends must lie on the section ray");
    const double width = hi - lo;
    auto d = [&](double y) { return return_map(field, sec, y, opts) - y; };
    double dlo = d(lo), dhi = d(hi);
    if (!(dlo * dhi < 0))
    {
        char msg[160];
        std::snprintf(msg, sizeof msg, "displacement has the same sign at both bracket ends (d(lo) = %.3e, d(hi) = %.3e)",
                      dlo, dhi);
        throw BracketInvalid(msg);
    }
    CycleResult R;
    while (hi - lo > y_tol && R.iterations < 200) {
        const double mid = 0.5 * (lo + hi);
        const double dm = d(mid);
        ++R.iterations;
        if (dm == 0) {
            lo = hi = mid;
            break;
        }
        if ((dm < 0) == (dlo < 0)) {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    const double ys = 0.5 * (lo + hi);
    auto hit = first_hit(field, {sec.x0, ys}, sec, opts);
    R.section_point = {sec.x0, ys};
    R.period = hit.t;
    R.residual = std::abs(hit.y - ys);
    const double step = 1e-5 * width;
    R.multiplier_integrated =
        (return_map(field, sec, ys + step, opts) - return_map(field, sec, ys - step, opts)) / (2 * step);
    R.multiplier = opts.direction == Direction::Reversed ? 1 / R.multiplier_integrated : R.multiplier_integrated;
    R.stability = stability_from_multiplier(R.multiplier);
    R.converged = R.residual < 1e-8;
    return R;
}

inline PlanarField allee_field(const AlleeParams& p) {
    return [p](const Vec2& v) -> Vec2 {
        const double x = v[0], y = v[1];
        if (p.m + x == 0) return {std::numeric_limits<double>::quiet_NaN(), 0};
        return {allee_f(p, x, y), allee_g(p, x, y)};
    };
}

struct OnsetEstimate {
    double beta = 0;
    double lambda = 0;  // consistent beta -> lambda conversion
    double trace_below = 0, trace_above = 0;
};

inline double e4_trace(const AlleeParams& p) {
    auto R = equilibria(p);
    if (!R.E4) throw std::domain_error("E4 does not exist at beta = " + std::to_string(p.beta));
    return R.E4->trace;
}

// Trace of E4 scanned over [beta_lo, beta_hi], then bracketed root refinement.
inline OnsetEstimate hopf_onset_scan(const AlleeParams& p, double beta_lo, double beta_hi, int steps) {
    if (steps < 1 || !(beta_lo < beta_hi)) throw std::invalid_argument("hopf_onset_scan: bad beta range");
    auto tr = [&](double b) {
        AlleeParams q = p;
        q.beta = b;
        return e4_trace(q);
    };
    double b0 = beta_lo, t0 = tr(b0);
    for (int k = 1; k <= steps; ++k) {
        const double b1 = beta_lo + (beta_hi - beta_lo) * k / steps, t1 = tr(b1);
        if (t0 * t1 <= 0) {
            boost::uintmax_t it = 200;
            auto tol = boost::math::tools::eps_tolerance<double>(52);
            auto r = boost::math::tools::toms748_solve(tr, b0, b1, t0, t1, tol, it);
            OnsetEstimate e;
            e.beta = 0.5 * (r.first + r.second);
            e.lambda = lambda_from_beta(p, e.beta);
            const double db = 1e-6 * (beta_hi - beta_lo);
            e.trace_below = tr(e.beta - db);
            e.trace_above = tr(e.beta + db);
            return e;
        }
        b0 = b1;
        t0 = t1;
    }
    throw std::domain_error("hopf_onset_scan: trace of E4 does not change sign in range");
}

}  // namespace canard
