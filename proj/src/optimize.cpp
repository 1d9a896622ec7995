#include "cavityq/optimize.hpp"

#include "cavityq/error.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace cavityq {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

struct Pair {
    std::vector<double> s, y;  // step and change of the ascent gradient
    double rho = 0.0;
};

// Two-loop recursion for the minimization of -f: returns an ascent direction.
std::vector<double> lbfgs_direction(const std::vector<double>& g, const std::deque<Pair>& hist) {
    std::vector<double> q = g;
    std::vector<double> a(hist.size());
    for (std::size_t k = hist.size(); k-- > 0;) {
        a[k] = hist[k].rho * dot(hist[k].s, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= a[k] * hist[k].y[i];
    }
    const auto& last = hist.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const double b = hist[k].rho * dot(hist[k].y, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += hist[k].s[i] * (a[k] - b);
    }
    return q;
}

} // namespace

OptimizeResult maximize(const Objective& f, std::vector<double> x0, const OptimizeOptions& options) {
    if (!(options.initial_step > 0.0)) fail(ErrorKind::Argument, "optimizer step must be positive");
    if (!(options.shrink > 0.0 && options.shrink < 1.0)) fail(ErrorKind::Argument, "optimizer shrink must lie in (0, 1)");
    if (!(options.grow > 1.0)) fail(ErrorKind::Argument, "optimizer growth factor must exceed 1");

    OptimizeResult r;
    r.x = std::move(x0);
    std::vector<double> g(r.x.size(), 0.0);
    r.value = f(r.x, &g);
    if (!std::isfinite(r.value) || !finite(g)) fail(ErrorKind::Numeric, "objective is not finite at the starting point");
    r.trace.push_back({0, r.value, 0.0});
    if (r.value >= options.target) {
        r.converged = true;
        return r;
    }

    // Step lengths are remembered separately for raw-gradient directions and
    // for quasi-Newton directions, whose natural length is 1.
    double gradient_step = options.initial_step;
    std::deque<Pair> hist;
    std::vector<double> dir = g, g_new(r.x.size()), trial(r.x.size()), best_x;
    bool raw_gradient = true;

    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        if (!(dot(g, dir) > 0.0)) {
            dir = g;
            raw_gradient = true;
            if (!(dot(g, dir) > 0.0)) break;
        }

        double best = r.value;
        const auto try_step = [&](double len) {
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = r.x[i] + len * dir[i];
            const double v = f(trial, nullptr);
            if (std::isfinite(v) && v > best) {
                best = v;
                best_x = trial;
                return true;
            }
            return false;
        };

        // Backtrack until the value improves, then keep growing the step
        // while it still improves. A failed non-gradient direction falls back
        // to the raw gradient once.
        bool accepted = false;
        double s = 0.0;
        for (;;) {
            s = raw_gradient ? gradient_step : 1.0;
            while (s > options.min_step) {
                if (try_step(s)) {
                    accepted = true;
                    break;
                }
                s *= options.shrink;
            }
            if (accepted || raw_gradient) break;
            dir = g;
            raw_gradient = true;
            hist.clear();
        }
        if (!accepted) break;
        for (int k = 0; k < options.max_expansions && try_step(s * options.grow); ++k) s *= options.grow;
        if (raw_gradient) gradient_step = s;

        const double v = f(best_x, &g_new);
        if (!finite(g_new)) fail(ErrorKind::Numeric, "objective gradient is not finite");

        Pair pr;
        pr.s.resize(r.x.size());
        pr.y.resize(r.x.size());
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            pr.s[i] = best_x[i] - r.x[i];
            pr.y[i] = g[i] - g_new[i];
        }
        r.x = best_x;
        r.value = v;
        r.iterations = it;
        r.trace.push_back({it, v, s});
        if (v >= options.target) {
            r.converged = true;
            break;
        }

        switch (options.direction) {
        case SearchDirection::Steepest:
            dir = g_new;
            raw_gradient = true;
            break;
        case SearchDirection::ConjugateGradient: {
            const double denom = dot(g, g);
            double beta = denom > 0.0 ? (dot(g_new, g_new) - dot(g_new, g)) / denom : 0.0;
            if (!(beta > 0.0)) beta = 0.0;
            for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = g_new[i] + beta * dir[i];
            raw_gradient = true;
            break;
        }
        case SearchDirection::Lbfgs: {
            const double sy = dot(pr.s, pr.y);
            if (sy > 1e-300 && options.memory > 0) {
                pr.rho = 1.0 / sy;
                hist.push_back(std::move(pr));
                if (hist.size() > options.memory) hist.pop_front();
            }
            if (hist.empty()) {
                dir = g_new;
                raw_gradient = true;
            } else {
                dir = lbfgs_direction(g_new, hist);
                raw_gradient = false;
            }
            break;
        }
        }
        g = g_new;
    }
    return r;
}

} // namespace cavityq
