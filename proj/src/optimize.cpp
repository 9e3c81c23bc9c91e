#include "pclbench/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace pclbench::opt {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::grad_tol: return "grad_tol";
        case StopReason::rel_f_tol: return "rel_f_tol";
        case StopReason::max_iters: return "max_iters";
        case StopReason::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

std::vector<double> two_loop_direction(const std::deque<CurvaturePair>& history,
                                       std::span<const double> g) {
    std::vector<double> q(g.begin(), g.end());
    if (history.empty()) {
        for (double& v : q) v = -v;
        return q;
    }
    std::vector<double> alpha(history.size());
    for (size_t i = history.size(); i-- > 0;) {
        const auto& p = history[i];
        alpha[i] = p.rho * dot(p.s, q);
        for (size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * p.y[k];
    }
    const auto& last = history.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
    for (size_t i = 0; i < history.size(); ++i) {
        const auto& p = history[i];
        double beta = p.rho * dot(p.y, q);
        for (size_t k = 0; k < q.size(); ++k) q[k] += (alpha[i] - beta) * p.s[k];
    }
    for (double& v : q) v = -v;
    return q;
}

namespace {

struct LineSearchOutcome {
    bool ok = false;
    double alpha = 0.0;
    double f = 0.0;
    std::vector<double> g;
    double dphi = 0.0;
};

// Strong-Wolfe line search (bracket + zoom with bisection). A non-finite
// objective value is treated like a too-long step.
LineSearchOutcome line_search(const Objective& f_and_g, std::span<const double> z,
                              std::span<const double> d, double f0, double dphi0,
                              const LbfgsSettings& st) {
    LineSearchOutcome out;
    const size_t n = z.size();
    std::vector<double> trial(n);
    std::vector<double> grad;

    auto eval = [&](double a, double& f, double& dphi) {
        for (size_t i = 0; i < n; ++i) trial[i] = z[i] + a * d[i];
        f = f_and_g(trial, grad);
        dphi = std::isfinite(f) ? dot(grad, d) : 0.0;
    };

    int evals = 0;
    double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    double a = st.initial_step;

    double lo = -1.0, hi = -1.0, f_lo = 0.0, dphi_lo = 0.0;
    bool bracketed = false;

    while (evals < st.max_line_search) {
        double f_a, dphi_a;
        eval(a, f_a, dphi_a);
        ++evals;
        if (!std::isfinite(f_a)) {
            a = 0.5 * (a_prev + a);
            continue;
        }
        if (f_a > f0 + st.wolfe_c1 * a * dphi0 || (evals > 1 && f_a >= f_prev)) {
            lo = a_prev;
            f_lo = f_prev;
            dphi_lo = dphi_prev;
            hi = a;
            bracketed = true;
            break;
        }
        if (std::abs(dphi_a) <= -st.wolfe_c2 * dphi0) {
            out.ok = true;
            out.alpha = a;
            out.f = f_a;
            out.g = grad;
            out.dphi = dphi_a;
            return out;
        }
        if (dphi_a >= 0.0) {
            lo = a;
            f_lo = f_a;
            dphi_lo = dphi_a;
            hi = a_prev;
            bracketed = true;
            break;
        }
        a_prev = a;
        f_prev = f_a;
        dphi_prev = dphi_a;
        a *= 2.0;
    }
    if (!bracketed) return out;

    while (evals < st.max_line_search) {
        double m = 0.5 * (lo + hi);
        double f_m, dphi_m;
        eval(m, f_m, dphi_m);
        ++evals;
        if (!std::isfinite(f_m)) {
            hi = m;
            continue;
        }
        if (f_m > f0 + st.wolfe_c1 * m * dphi0 || f_m >= f_lo) {
            hi = m;
        } else {
            if (std::abs(dphi_m) <= -st.wolfe_c2 * dphi0) {
                out.ok = true;
                out.alpha = m;
                out.f = f_m;
                out.g = grad;
                out.dphi = dphi_m;
                return out;
            }
            if (dphi_m * (hi - lo) >= 0.0) hi = lo;
            lo = m;
            f_lo = f_m;
            dphi_lo = dphi_m;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    (void)dphi_lo;
    return out;
}

}  // namespace

MinimizeResult minimize(const Objective& f_and_g, std::vector<double> z0,
                        const LbfgsSettings& settings,
                        const std::function<double(std::span<const double>)>& aux_metric,
                        const std::function<void(std::span<const double>)>& on_accept) {
    if (!(settings.wolfe_c1 > 0.0 && settings.wolfe_c1 < settings.wolfe_c2 &&
          settings.wolfe_c2 < 1.0))
        throw std::invalid_argument("minimize: need 0 < c1 < c2 < 1");

    MinimizeResult res;
    res.z = std::move(z0);
    std::vector<double> g;
    double f = f_and_g(res.z, g);
    if (!std::isfinite(f)) throw std::invalid_argument("minimize: non-finite loss at z0");
    if (on_accept) on_accept(res.z);

    std::deque<CurvaturePair> history;
    res.stop_reason = StopReason::max_iters;

    for (int iter = 1; iter <= settings.max_iters; ++iter) {
        std::vector<double> d = two_loop_direction(history, g);
        double dphi0 = dot(g, d);
        if (dphi0 > 0.0) {  // not a descent direction; drop the history
            history.clear();
            d = two_loop_direction(history, g);
            dphi0 = dot(g, d);
        }

        double f_new, alpha, dphi_alpha;
        std::vector<double> g_new;
        if (norm2(d) == 0.0) {
            // Stationary point: accept a no-op step and let the stopping
            // criteria decide.
            f_new = f;
            g_new = g;
            alpha = 0.0;
            dphi_alpha = 0.0;
        } else {
            LineSearchOutcome ls = line_search(f_and_g, res.z, d, f, dphi0, settings);
            if (!ls.ok && !history.empty()) {
                // Retry once along steepest descent.
                history.clear();
                d = two_loop_direction(history, g);
                dphi0 = dot(g, d);
                ls = line_search(f_and_g, res.z, d, f, dphi0, settings);
            }
            if (!ls.ok) {
                res.stop_reason = StopReason::line_search_failed;
                res.iterations = iter - 1;
                res.loss = f;
                return res;
            }
            alpha = ls.alpha;
            f_new = ls.f;
            g_new = std::move(ls.g);
            dphi_alpha = ls.dphi;
            std::vector<double> s(res.z.size()), y(res.z.size());
            for (size_t i = 0; i < res.z.size(); ++i) {
                s[i] = alpha * d[i];
                res.z[i] += s[i];
                y[i] = g_new[i] - g[i];
            }
            double sy = dot(s, y);
            if (sy > 1e-12 * norm2(s) * norm2(y)) {
                history.push_back({std::move(s), std::move(y), 1.0 / sy});
                if (static_cast<int>(history.size()) > settings.memory) history.pop_front();
            }
        }
        if (on_accept) on_accept(res.z);

        TraceRecord rec;
        rec.iter = iter;
        rec.loss = f_new;
        rec.grad_norm = norm2(g_new);
        rec.step_len = alpha;
        rec.aux_error = aux_metric ? aux_metric(res.z) : 0.0;
        rec.phi0 = f;
        rec.dphi0 = dphi0;
        rec.phi_alpha = f_new;
        rec.dphi_alpha = dphi_alpha;
        res.trace.records.push_back(rec);

        const double denom = std::abs(f) > 0.0 ? std::abs(f) : 1.0;
        const bool rel_f_stop = std::abs(f_new - f) <= settings.rel_f_tol * denom;
        f = f_new;
        g = std::move(g_new);
        res.iterations = iter;
        if (rel_f_stop) {
            res.stop_reason = StopReason::rel_f_tol;
            break;
        }
        if (rec.grad_norm < settings.grad_tol) {
            res.stop_reason = StopReason::grad_tol;
            break;
        }
    }
    res.loss = f;
    return res;
}

}  // namespace pclbench::opt
