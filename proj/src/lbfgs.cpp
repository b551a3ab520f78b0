#include "mvhand/solver.hpp"

#include <cmath>
#include <deque>

namespace mvhand {

void SolverOptions::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("learning_rate must be positive");
    }
    if (max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (!(window_overlap > 0 && window_overlap < window_size)) {
        throw InvalidArgument("window_overlap must satisfy 0 < overlap < window_size");
    }
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
        throw InvalidArgument("Wolfe parameters must satisfy 0 < c1 < c2 < 1");
    }
    if (history_size < 1) throw InvalidArgument("history_size must be >= 1");
    if (!(bound_halfwidth_mm > 0.0)) {
        throw InvalidArgument("bound_halfwidth_mm must be positive");
    }
}

namespace {

void check_finite(double f, const Eigen::VectorXd& g, int iter) {
    if (std::isfinite(f) && g.allFinite()) return;
    throw NonFiniteObjective("objective or gradient non-finite at iteration " +
                             std::to_string(iter));
}

struct LinePoint {
    double t = 0.0;
    double f = 0.0;
    double slope = 0.0; // grad(x + t d) . d
};

class LineEval {
public:
    LineEval(const Objective& obj, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
             int iter)
        : obj_(obj), x_(x), d_(d), iter_(iter), xt_(x.size()), g_(x.size()) {}

    LinePoint at(double t) {
        xt_ = x_ + t * d_;
        const double f = obj_(xt_, g_);
        check_finite(f, g_, iter_);
        return {t, f, g_.dot(d_)};
    }

    const Eigen::VectorXd& last_x() const { return xt_; }
    const Eigen::VectorXd& last_grad() const { return g_; }

private:
    const Objective& obj_;
    const Eigen::VectorXd& x_;
    const Eigen::VectorXd& d_;
    int iter_;
    Eigen::VectorXd xt_;
    Eigen::VectorXd g_;
};

// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), or NaN when
// the interpolation degenerates (caller bisects instead).
double cubic_min(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = gb - ga + 2.0 * d2;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return b - (b - a) * (gb + d2 - d1) / denom;
}

struct SearchResult {
    bool ok = false;
    LinePoint point;
};

// Strong Wolfe line search (bracket then zoom), capped at t_max for bound
// feasibility. If the cap is reached while the slope is still negative the
// capped point is accepted on sufficient decrease alone.
SearchResult wolfe_search(LineEval& eval, double f0, double slope0, double t0,
                          double t_max, double c1, double c2) {
    const auto armijo = [&](const LinePoint& p) {
        return p.f <= f0 + c1 * p.t * slope0;
    };
    const auto curvature = [&](const LinePoint& p) {
        return std::abs(p.slope) <= -c2 * slope0;
    };

    auto zoom = [&](LinePoint lo, LinePoint hi) -> SearchResult {
        for (int j = 0; j < 60; ++j) {
            const double width = hi.t - lo.t;
            if (std::abs(width) < 1e-16 * std::max(1.0, std::abs(lo.t))) break;
            double t = cubic_min(lo.t, lo.f, lo.slope, hi.t, hi.f, hi.slope);
            const double margin = 0.1 * std::abs(width);
            const double t_lo = std::min(lo.t, hi.t) + margin;
            const double t_hi = std::max(lo.t, hi.t) - margin;
            if (!std::isfinite(t) || t < t_lo || t > t_hi) t = lo.t + 0.5 * width;

            const LinePoint p = eval.at(t);
            if (!armijo(p) || p.f >= lo.f) {
                hi = p;
            } else {
                if (curvature(p)) return {true, p};
                if (p.slope * (hi.t - lo.t) >= 0.0) hi = lo;
                lo = p;
            }
        }
        // Interval collapsed: fall back to the best sufficient-decrease point.
        if (armijo(lo) && lo.t > 0.0) return {true, eval.at(lo.t)};
        return {};
    };

    LinePoint prev{0.0, f0, slope0};
    double t = std::min(t0, t_max);
    for (int i = 0; i < 50; ++i) {
        const LinePoint p = eval.at(t);
        if (!armijo(p) || (i > 0 && p.f >= prev.f)) return zoom(prev, p);
        if (curvature(p)) return {true, p};
        if (p.slope >= 0.0) return zoom(p, prev);
        if (t >= t_max) return {true, p}; // feasibility cap, decrease holds
        prev = p;
        t = std::min(2.0 * t, t_max);
    }
    return {};
}

} // namespace

Eigen::VectorXd lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                               const SolverOptions& opts, LbfgsReport* report,
                               const Bounds* bounds) {
    opts.validate();
    const auto n = x0.size();
    if (bounds && (bounds->lower.size() != n || bounds->upper.size() != n)) {
        throw InvalidArgument("bounds do not match the variable count");
    }

    Eigen::VectorXd x = x0;
    if (bounds) x = x.cwiseMax(bounds->lower).cwiseMin(bounds->upper);

    Eigen::VectorXd g(n);
    double f = objective(x, g);
    check_finite(f, g, 0);

    LbfgsReport rep;
    rep.initial_objective = f;
    rep.termination = "max_iterations";

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    // Zero the direction components that would push an at-bound coordinate
    // further outside; movement along those coordinates is infeasible.
    const auto project = [&](Eigen::VectorXd& d) {
        if (!bounds) return;
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((x[i] <= bounds->lower[i] && d[i] < 0.0) ||
                (x[i] >= bounds->upper[i] && d[i] > 0.0)) {
                d[i] = 0.0;
            }
        }
    };

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        Eigen::VectorXd g_proj = -g;
        project(g_proj);
        if (g_proj.lpNorm<Eigen::Infinity>() <= 1e-12) {
            rep.converged = true;
            rep.termination = "gradient";
            break;
        }

        // Two-loop recursion for d = -H g.
        Eigen::VectorXd d = -g;
        if (!s_hist.empty()) {
            const size_t m = s_hist.size();
            std::vector<double> alpha(m);
            Eigen::VectorXd q = g;
            for (size_t k = m; k-- > 0;) {
                alpha[k] = rho_hist[k] * s_hist[k].dot(q);
                q -= alpha[k] * y_hist[k];
            }
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
            for (size_t k = 0; k < m; ++k) {
                const double beta = rho_hist[k] * y_hist[k].dot(q);
                q += (alpha[k] - beta) * s_hist[k];
            }
            d = -q;
        }

        project(d);
        double slope0 = g.dot(d);
        if (!(slope0 < 0.0)) {
            // Not a descent direction (stale curvature); restart from
            // projected steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = g_proj;
            slope0 = g.dot(d);
            if (!(slope0 < 0.0)) {
                rep.termination = "line_search";
                break;
            }
        }

        double t_max = std::numeric_limits<double>::infinity();
        if (bounds) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (d[i] > 0.0) {
                    t_max = std::min(t_max, (bounds->upper[i] - x[i]) / d[i]);
                } else if (d[i] < 0.0) {
                    t_max = std::min(t_max, (bounds->lower[i] - x[i]) / d[i]);
                }
            }
            if (!(t_max > 0.0)) {
                rep.termination = "line_search";
                break;
            }
        }

        const double t0 =
            (iter == 1 ? std::min(1.0, 1.0 / g.lpNorm<1>()) : 1.0) * opts.learning_rate;

        LineEval eval(objective, x, d, iter);
        const SearchResult sr = wolfe_search(eval, f, slope0, t0, t_max,
                                             opts.wolfe_c1, opts.wolfe_c2);
        if (!sr.ok) {
            rep.termination = "line_search";
            break;
        }

        Eigen::VectorXd x_new = x + sr.point.t * d;
        if (bounds) x_new = x_new.cwiseMax(bounds->lower).cwiseMin(bounds->upper);
        const Eigen::VectorXd g_new = eval.last_grad();

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.history_size) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        rep.steps.push_back({sr.point.t, f, slope0, sr.point.f, sr.point.slope});
        ++rep.iterations;

        const double drop = f - sr.point.f;
        const double f_prev = f;
        x = x_new;
        g = g_new;
        f = sr.point.f;

        if (std::abs(drop) <= opts.tolerance * std::max(1.0, std::abs(f_prev))) {
            rep.converged = true;
            rep.termination = "tolerance";
            break;
        }
    }

    rep.final_objective = f;
    if (report) *report = rep;
    return x;
}

} // namespace mvhand
