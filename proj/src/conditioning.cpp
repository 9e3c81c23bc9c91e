#include "pclbench/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace pclbench::cond {

DenseMatrix DenseMatrix::zero(int rows, int cols) {
    return {rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols, 0.0)};
}

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix m = zero(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m = zero(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m.at(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

DenseMatrix assemble_A_lambda(const DenseMatrix& a, std::span<const double> y, double lambda) {
    if (a.rows != a.cols) throw std::invalid_argument("assemble_A_lambda: A must be square");
    if (static_cast<int>(y.size()) != a.rows)
        throw std::invalid_argument("assemble_A_lambda: y length mismatch");
    if (!(lambda > 0.0)) throw std::invalid_argument("assemble_A_lambda: lambda must be positive");
    const int n = a.rows;
    const double s = std::sqrt(lambda);
    DenseMatrix m = DenseMatrix::zero(2 * n, n + 1);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) m.at(n + r, c) = s * a.at(r, c);
    for (int r = 0; r < n; ++r) m.at(n + r, n) = -s * y[static_cast<size_t>(r)];
    return m;
}

namespace {

Svd jacobi_svd_tall(DenseMatrix x) {
    const int m = x.rows, k = x.cols;
    DenseMatrix v = DenseMatrix::identity(k);
    const double tol = 1e-15;
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (int i = 0; i < k - 1; ++i)
            for (int j = i + 1; j < k; ++j) {
                double aii = 0.0, ajj = 0.0, aij = 0.0;
                for (int r = 0; r < m; ++r) {
                    aii += x.at(r, i) * x.at(r, i);
                    ajj += x.at(r, j) * x.at(r, j);
                    aij += x.at(r, i) * x.at(r, j);
                }
                if (std::abs(aij) <= tol * std::sqrt(aii * ajj)) continue;
                rotated = true;
                const double zeta = (ajj - aii) / (2.0 * aij);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (int r = 0; r < m; ++r) {
                    const double xi = x.at(r, i), xj = x.at(r, j);
                    x.at(r, i) = cs * xi - sn * xj;
                    x.at(r, j) = sn * xi + cs * xj;
                }
                for (int r = 0; r < k; ++r) {
                    const double vi = v.at(r, i), vj = v.at(r, j);
                    v.at(r, i) = cs * vi - sn * vj;
                    v.at(r, j) = sn * vi + cs * vj;
                }
            }
        if (!rotated) break;
    }

    Svd out;
    out.singular_values.resize(static_cast<size_t>(k));
    out.u = DenseMatrix::zero(m, k);
    out.v = DenseMatrix::zero(k, k);
    std::vector<int> order(static_cast<size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> norms(static_cast<size_t>(k), 0.0);
    for (int c = 0; c < k; ++c) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += x.at(r, c) * x.at(r, c);
        norms[static_cast<size_t>(c)] = std::sqrt(s);
    }
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return norms[static_cast<size_t>(a)] > norms[static_cast<size_t>(b)]; });
    for (int c = 0; c < k; ++c) {
        const int src = order[static_cast<size_t>(c)];
        const double s = norms[static_cast<size_t>(src)];
        out.singular_values[static_cast<size_t>(c)] = s;
        for (int r = 0; r < m; ++r) out.u.at(r, c) = s > 0.0 ? x.at(r, src) / s : 0.0;
        for (int r = 0; r < k; ++r) out.v.at(r, c) = v.at(r, src);
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t = DenseMatrix::zero(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
    return t;
}

}  // namespace

Svd jacobi_svd(const DenseMatrix& m) {
    if (m.rows >= m.cols) return jacobi_svd_tall(m);
    Svd s = jacobi_svd_tall(transpose(m));
    std::swap(s.u, s.v);
    return s;
}

double condition_number(const DenseMatrix& m) {
    Svd s = jacobi_svd(m);
    const double smax = s.singular_values.front();
    const double smin = s.singular_values.back();
    if (smin < 1e-14 * smax) throw std::runtime_error("condition_number: rank deficient");
    return smax / smin;
}

std::vector<TheoremRow> verify_theorem(const ConditioningStudy& study) {
    for (size_t k = 1; k < study.lambdas.size(); ++k)
        if (study.lambdas[k] <= study.lambdas[k - 1])
            throw std::invalid_argument("verify_theorem: lambda list must increase");
    const double kappa_a = condition_number(study.a);
    std::vector<TheoremRow> rows;
    rows.reserve(study.lambdas.size());
    for (double lambda : study.lambdas) {
        TheoremRow row;
        row.lambda = lambda;
        row.kappa_a_lambda = condition_number(assemble_A_lambda(study.a, study.y, lambda));
        row.kappa_a_squared = kappa_a * kappa_a;
        row.ratio = row.kappa_a_lambda / row.kappa_a_squared;
        rows.push_back(row);
    }
    return rows;
}

void write_theorem_csv(std::span<const TheoremRow> rows, std::ostream& out) {
    out << "lambda,kappa_A_lambda,kappa_A_squared,ratio\n";
    char buf[256];
    for (const TheoremRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.lambda, r.kappa_a_lambda,
                      r.kappa_a_squared, r.ratio);
        out << buf;
    }
}

namespace {

bool cholesky_ok(const DenseMatrix& a) {
    const int n = a.rows;
    DenseMatrix l = a;
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < c; ++r) {
            double s = l.at(c, r);
            for (int k = 0; k < r; ++k) s -= l.at(c, k) * l.at(r, k);
            l.at(c, r) = s / l.at(r, r);
        }
        double d = l.at(c, c);
        for (int k = 0; k < c; ++k) d -= l.at(c, k) * l.at(c, k);
        if (d <= 0.0) return false;
        l.at(c, c) = std::sqrt(d);
    }
    return true;
}

}  // namespace

SecularResult secular_check(const DenseMatrix& a, std::span<const double> y, double lambda) {
    if (a.rows != a.cols) throw std::invalid_argument("secular_check: A must be square");
    const int n = a.rows;
    double scale = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            scale = std::max(scale, std::abs(a.at(r, c)));
            if (std::abs(a.at(r, c) - a.at(c, r)) > 1e-12 * std::max(1.0, scale))
                throw std::invalid_argument("secular_check: A must be symmetric");
        }
    if (!cholesky_ok(a)) throw std::invalid_argument("secular_check: A must be positive definite");
    if (!(lambda > 0.0)) throw std::invalid_argument("secular_check: lambda must be positive");

    const Svd svd = jacobi_svd(a);
    double s = 0.0;
    for (double v : y) s += v * v;

    // alpha = -Sigma U^T y.
    std::vector<double> alpha(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int r = 0; r < n; ++r) dot += svd.u.at(r, i) * y[static_cast<size_t>(r)];
        alpha[static_cast<size_t>(i)] = -svd.singular_values[static_cast<size_t>(i)] * dot;
    }

    SecularResult res;
    const double alpha_floor = 1e-14 * std::max(1.0, scale);
    std::vector<double> poles;
    std::vector<double> weights;  // alpha_i^2 for the active poles
    double alpha_sq_total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = svd.singular_values[static_cast<size_t>(i)] *
                             svd.singular_values[static_cast<size_t>(i)] +
                         1.0 / lambda;
        if (std::abs(alpha[static_cast<size_t>(i)]) <= alpha_floor) {
            res.degenerate = true;
            res.eigenvalues.push_back(d);  // decoupled: d is an exact eigenvalue
        } else {
            poles.push_back(d);
            weights.push_back(alpha[static_cast<size_t>(i)] * alpha[static_cast<size_t>(i)]);
            alpha_sq_total += weights.back();
        }
        res.poles.push_back(d);
    }
    std::sort(res.poles.begin(), res.poles.end());
    // Sort active poles with their weights.
    {
        std::vector<size_t> order(poles.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t x, size_t z) { return poles[x] < poles[z]; });
        std::vector<double> ps, ws;
        for (size_t k : order) {
            ps.push_back(poles[k]);
            ws.push_back(weights[k]);
        }
        poles = std::move(ps);
        weights = std::move(ws);
    }

    auto secular = [&](double x) {
        double val = s - x;
        for (size_t i = 0; i < poles.size(); ++i) val -= weights[i] / (poles[i] - x);
        return val;
    };

    res.sign_change_confirmed = true;
    auto bisect = [&](double lo, double hi) {
        double flo = secular(lo), fhi = secular(hi);
        if (!(flo > 0.0 && fhi < 0.0)) {
            res.sign_change_confirmed = false;
            return 0.5 * (lo + hi);
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (secular(mid) > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    if (poles.empty()) {
        // f(x) = s - x: single root at s (flagged boundary case when s = 0).
        res.eigenvalues.push_back(s);
        res.brackets.emplace_back(s - 1.0, s + 1.0);
        if (s == 0.0) res.degenerate = true;
    } else {
        const size_t q = poles.size();
        // Leftmost root, below the smallest pole: expand until f > 0.
        {
            const double hi = poles[0] - 1e-12 * std::max(1.0, std::abs(poles[0]));
            double step = std::max(1.0, std::abs(poles[0]));
            double lo = poles[0] - step;
            while (secular(lo) <= 0.0 && step < 1e20) {
                step *= 2.0;
                lo = poles[0] - step;
            }
            res.brackets.emplace_back(lo, hi);
            res.eigenvalues.push_back(bisect(lo, hi));
        }
        // One root between consecutive poles.
        for (size_t i = 0; i + 1 < q; ++i) {
            const double gap = poles[i + 1] - poles[i];
            double dlo = 1e-3 * gap;
            while (secular(poles[i] + dlo) <= 0.0 && dlo > 1e-18 * gap) dlo *= 0.5;
            double dhi = 1e-3 * gap;
            while (secular(poles[i + 1] - dhi) >= 0.0 && dhi > 1e-18 * gap) dhi *= 0.5;
            const double lo = poles[i] + dlo;
            const double hi = poles[i + 1] - dhi;
            res.brackets.emplace_back(lo, hi);
            res.eigenvalues.push_back(bisect(lo, hi));
        }
        // Rightmost root, above the largest pole. The bound
        // s + sum(alpha^2) + 1 makes the sign negative there.
        {
            double dlo = 1e-3 * std::max(1.0, std::abs(poles[q - 1]));
            while (secular(poles[q - 1] + dlo) <= 0.0 && dlo > 1e-18) dlo *= 0.5;
            const double lo = poles[q - 1] + dlo;
            const double hi = std::max(poles[q - 1] + 1.0, s + alpha_sq_total + 1.0);
            res.brackets.emplace_back(lo, hi);
            res.eigenvalues.push_back(bisect(lo, hi));
        }
    }

    std::sort(res.eigenvalues.begin(), res.eigenvalues.end());
    res.positive_definite = res.eigenvalues.front() > 0.0;
    return res;
}

}  // namespace pclbench::cond
