#include "pclbench/iga.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pclbench::iga {

KnotVector make_knot_vector(std::vector<double> knots, int degree) {
    if (degree < 0) throw std::invalid_argument("knot vector: negative degree");
    const int n = static_cast<int>(knots.size()) - degree - 1;
    if (n < degree + 1) throw std::invalid_argument("knot vector: too few knots");
    for (size_t k = 1; k < knots.size(); ++k)
        if (knots[k] < knots[k - 1]) throw std::invalid_argument("knot vector: not nondecreasing");
    for (int k = 0; k <= degree; ++k) {
        if (knots[static_cast<size_t>(k)] != knots[0] ||
            knots[knots.size() - 1 - static_cast<size_t>(k)] != knots.back())
            throw std::invalid_argument("knot vector: not open (clamped)");
    }
    return {std::move(knots), degree};
}

int find_span(const KnotVector& kv, double xi) {
    const int p = kv.degree;
    const int n = kv.num_basis();
    const auto& u = kv.knots;
    if (xi >= u[static_cast<size_t>(n)]) return n - 1;
    if (xi <= u[static_cast<size_t>(p)]) return p;
    int lo = p, hi = n;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (xi < u[static_cast<size_t>(mid)])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

BasisDerivatives basis_derivatives(const KnotVector& kv, double xi, int order) {
    if (order < 0 || order > 2) throw std::invalid_argument("basis_derivatives: order must be 0..2");
    const int p = kv.degree;
    const int span = find_span(kv, xi);
    const auto& u = kv.knots;
    const int nd = std::min(order, p);

    // Triangular table of basis values and knot differences.
    std::vector<std::vector<double>> ndu(static_cast<size_t>(p) + 1,
                                         std::vector<double>(static_cast<size_t>(p) + 1, 0.0));
    std::vector<double> left(static_cast<size_t>(p) + 1, 0.0), right(static_cast<size_t>(p) + 1, 0.0);
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<size_t>(j)] = xi - u[static_cast<size_t>(span + 1 - j)];
        right[static_cast<size_t>(j)] = u[static_cast<size_t>(span + j)] - xi;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[static_cast<size_t>(j)][static_cast<size_t>(r)] =
                right[static_cast<size_t>(r + 1)] + left[static_cast<size_t>(j - r)];
            const double temp = ndu[static_cast<size_t>(r)][static_cast<size_t>(j - 1)] /
                                ndu[static_cast<size_t>(j)][static_cast<size_t>(r)];
            ndu[static_cast<size_t>(r)][static_cast<size_t>(j)] =
                saved + right[static_cast<size_t>(r + 1)] * temp;
            saved = left[static_cast<size_t>(j - r)] * temp;
        }
        ndu[static_cast<size_t>(j)][static_cast<size_t>(j)] = saved;
    }

    BasisDerivatives out;
    out.first = span - p;
    out.ders.assign(static_cast<size_t>(p) + 1, {0.0, 0.0, 0.0});
    for (int k = 0; k <= p; ++k)
        out.ders[static_cast<size_t>(k)][0] = ndu[static_cast<size_t>(k)][static_cast<size_t>(p)];

    // Derivative sweep (two alternating rows of combination coefficients).
    std::vector<std::vector<double>> a(2, std::vector<double>(static_cast<size_t>(p) + 1, 0.0));
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0].assign(static_cast<size_t>(p) + 1, 0.0);
        a[1].assign(static_cast<size_t>(p) + 1, 0.0);
        a[0][0] = 1.0;
        for (int k = 1; k <= nd; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[static_cast<size_t>(s2)][0] =
                    a[static_cast<size_t>(s1)][0] / ndu[static_cast<size_t>(pk + 1)][static_cast<size_t>(rk)];
                d = a[static_cast<size_t>(s2)][0] * ndu[static_cast<size_t>(rk)][static_cast<size_t>(pk)];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = r - 1 <= pk ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[static_cast<size_t>(s2)][static_cast<size_t>(j)] =
                    (a[static_cast<size_t>(s1)][static_cast<size_t>(j)] -
                     a[static_cast<size_t>(s1)][static_cast<size_t>(j - 1)]) /
                    ndu[static_cast<size_t>(pk + 1)][static_cast<size_t>(rk + j)];
                d += a[static_cast<size_t>(s2)][static_cast<size_t>(j)] *
                     ndu[static_cast<size_t>(rk + j)][static_cast<size_t>(pk)];
            }
            if (r <= pk) {
                a[static_cast<size_t>(s2)][static_cast<size_t>(k)] =
                    -a[static_cast<size_t>(s1)][static_cast<size_t>(k - 1)] /
                    ndu[static_cast<size_t>(pk + 1)][static_cast<size_t>(r)];
                d += a[static_cast<size_t>(s2)][static_cast<size_t>(k)] *
                     ndu[static_cast<size_t>(r)][static_cast<size_t>(pk)];
            }
            out.ders[static_cast<size_t>(r)][static_cast<size_t>(k)] = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= nd; ++k) {
        for (int j = 0; j <= p; ++j) out.ders[static_cast<size_t>(j)][static_cast<size_t>(k)] *= factor;
        factor *= (p - k);
    }
    return out;
}

double bspline_basis(const KnotVector& kv, int i, double xi, int deriv_order) {
    if (i < 0 || i >= kv.num_basis()) throw std::invalid_argument("bspline_basis: index out of range");
    if (xi < 0.0 || xi > 1.0) throw std::invalid_argument("bspline_basis: xi outside [0,1]");
    if (deriv_order > kv.degree) return 0.0;
    BasisDerivatives b = basis_derivatives(kv, xi, deriv_order);
    if (i < b.first || i > b.first + kv.degree) return 0.0;
    return b.ders[static_cast<size_t>(i - b.first)][static_cast<size_t>(deriv_order)];
}

std::vector<double> greville(const KnotVector& kv) {
    if (kv.degree == 0) throw std::invalid_argument("greville: degree must be positive");
    std::vector<double> g(static_cast<size_t>(kv.num_basis()));
    for (int i = 0; i < kv.num_basis(); ++i) {
        double s = 0.0;
        for (int k = 1; k <= kv.degree; ++k) s += kv.knots[static_cast<size_t>(i + k)];
        g[static_cast<size_t>(i)] = s / kv.degree;
    }
    return g;
}

NurbsSurface make_surface(KnotVector u_kv, KnotVector v_kv, std::vector<double> weights,
                          std::vector<Point2> control_points) {
    NurbsSurface s;
    s.u_kv = std::move(u_kv);
    s.v_kv = std::move(v_kv);
    s.weights = std::move(weights);
    s.control_points = std::move(control_points);
    const size_t expect = static_cast<size_t>(s.nu()) * static_cast<size_t>(s.nv());
    if (s.weights.size() != expect || s.control_points.size() != expect)
        throw std::invalid_argument("make_surface: control net size mismatch");
    for (double w : s.weights)
        if (!(w > 0.0)) throw std::invalid_argument("make_surface: weights must be positive");
    return s;
}

SurfacePoint nurbs_eval(const NurbsSurface& s, double xi, double eta, int order) {
    const BasisDerivatives bu = basis_derivatives(s.u_kv, xi, std::min(order, 2));
    const BasisDerivatives bv = basis_derivatives(s.v_kv, eta, std::min(order, 2));

    // Homogeneous sums: slot order 00,10,01,20,11,02 (d_xi^a d_eta^b).
    double aw_x[6] = {}, aw_y[6] = {}, w[6] = {};
    static constexpr int kA[6] = {0, 1, 0, 2, 1, 0};
    static constexpr int kB[6] = {0, 0, 1, 0, 1, 2};
    for (int a = 0; a <= s.u_kv.degree; ++a)
        for (int b = 0; b <= s.v_kv.degree; ++b) {
            const int gi = bu.first + a;
            const int gj = bv.first + b;
            const int g = s.index(gi, gj);
            const double wt = s.weights[static_cast<size_t>(g)];
            const Point2 cp = s.control_points[static_cast<size_t>(g)];
            for (int slot = 0; slot < 6; ++slot) {
                const double psi = bu.ders[static_cast<size_t>(a)][static_cast<size_t>(kA[slot])] *
                                   bv.ders[static_cast<size_t>(b)][static_cast<size_t>(kB[slot])] * wt;
                w[slot] += psi;
                aw_x[slot] += psi * cp.x;
                aw_y[slot] += psi * cp.y;
            }
        }

    auto combine = [&](const double* aw) {
        std::array<double, 6> r{};
        r[0] = aw[0] / w[0];
        r[1] = (aw[1] - w[1] * r[0]) / w[0];
        r[2] = (aw[2] - w[2] * r[0]) / w[0];
        r[3] = (aw[3] - 2.0 * w[1] * r[1] - w[3] * r[0]) / w[0];
        r[4] = (aw[4] - w[1] * r[2] - w[2] * r[1] - w[4] * r[0]) / w[0];
        r[5] = (aw[5] - 2.0 * w[2] * r[2] - w[5] * r[0]) / w[0];
        return r;
    };
    const auto rx = combine(aw_x);
    const auto ry = combine(aw_y);

    SurfacePoint out;
    out.p = {rx[0], ry[0]};
    out.d_xi = {rx[1], ry[1]};
    out.d_eta = {rx[2], ry[2]};
    out.d_xixi = {rx[3], ry[3]};
    out.d_xieta = {rx[4], ry[4]};
    out.d_etaeta = {rx[5], ry[5]};
    return out;
}

namespace {

struct Homogeneous {
    double wx, wy, w;
};

// Boehm single-knot insertion applied along the u direction.
NurbsSurface insert_knot_u(const NurbsSurface& s, double t) {
    const int p = s.u_kv.degree;
    const int n = s.nu(), m = s.nv();
    const auto& u = s.u_kv.knots;
    const int span = find_span(s.u_kv, t);

    std::vector<double> new_knots = u;
    new_knots.insert(new_knots.begin() + span + 1, t);

    auto hom = [&](int i, int j) {
        const int g = s.index(i, j);
        const double w = s.weights[static_cast<size_t>(g)];
        const Point2 cp = s.control_points[static_cast<size_t>(g)];
        return Homogeneous{cp.x * w, cp.y * w, w};
    };

    std::vector<double> weights(static_cast<size_t>(n + 1) * static_cast<size_t>(m));
    std::vector<Point2> points(weights.size());
    for (int j = 0; j < m; ++j)
        for (int a = 0; a <= n; ++a) {
            Homogeneous q;
            if (a <= span - p) {
                q = hom(a, j);
            } else if (a >= span + 1) {
                q = hom(a - 1, j);
            } else {
                const double alpha =
                    (t - u[static_cast<size_t>(a)]) / (u[static_cast<size_t>(a + p)] - u[static_cast<size_t>(a)]);
                Homogeneous hi = hom(a, j), lo = hom(a - 1, j);
                q = {alpha * hi.wx + (1.0 - alpha) * lo.wx, alpha * hi.wy + (1.0 - alpha) * lo.wy,
                     alpha * hi.w + (1.0 - alpha) * lo.w};
            }
            const size_t g = static_cast<size_t>(j) * static_cast<size_t>(n + 1) + static_cast<size_t>(a);
            weights[g] = q.w;
            points[g] = {q.wx / q.w, q.wy / q.w};
        }
    return make_surface(make_knot_vector(std::move(new_knots), p), s.v_kv, std::move(weights),
                        std::move(points));
}

NurbsSurface transpose_surface(const NurbsSurface& s) {
    NurbsSurface t;
    t.u_kv = s.v_kv;
    t.v_kv = s.u_kv;
    t.weights.resize(s.weights.size());
    t.control_points.resize(s.control_points.size());
    for (int i = 0; i < s.nu(); ++i)
        for (int j = 0; j < s.nv(); ++j) {
            t.weights[static_cast<size_t>(t.index(j, i))] = s.weights[static_cast<size_t>(s.index(i, j))];
            t.control_points[static_cast<size_t>(t.index(j, i))] =
                s.control_points[static_cast<size_t>(s.index(i, j))];
        }
    return t;
}

std::vector<double> span_midpoints(const KnotVector& kv) {
    std::vector<double> mids;
    for (size_t k = 0; k + 1 < kv.knots.size(); ++k)
        if (kv.knots[k + 1] > kv.knots[k]) mids.push_back(0.5 * (kv.knots[k] + kv.knots[k + 1]));
    return mids;
}

}  // namespace

NurbsSurface h_refine(const NurbsSurface& s) {
    NurbsSurface out = s;
    for (double t : span_midpoints(out.u_kv)) out = insert_knot_u(out, t);
    out = transpose_surface(out);
    for (double t : span_midpoints(out.u_kv)) out = insert_knot_u(out, t);
    return transpose_surface(out);
}

NurbsSurface load_mesh(std::istream& in) {
    std::string tag;
    int p = 0, q = 0;
    in >> tag >> p >> q;
    if (tag != "degrees" || !in) throw std::runtime_error("mesh: expected 'degrees p q'");
    in.ignore();

    auto read_knots = [&](int degree) {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("mesh: missing knot vector");
        std::istringstream ss(line);
        std::vector<double> knots;
        double v;
        while (ss >> v) knots.push_back(v);
        return make_knot_vector(std::move(knots), degree);
    };
    KnotVector u_kv = read_knots(p);
    KnotVector v_kv = read_knots(q);

    int n = 0, m = 0;
    in >> n >> m;
    if (!in || n != u_kv.num_basis() || m != v_kv.num_basis())
        throw std::runtime_error("mesh: control net dimensions disagree with knot vectors");
    std::vector<double> weights(static_cast<size_t>(n) * static_cast<size_t>(m));
    std::vector<Point2> points(weights.size());
    for (size_t g = 0; g < weights.size(); ++g) {
        if (!(in >> weights[g] >> points[g].x >> points[g].y))
            throw std::runtime_error("mesh: truncated control point list");
    }
    return make_surface(std::move(u_kv), std::move(v_kv), std::move(weights), std::move(points));
}

NurbsSurface load_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("mesh: cannot open " + path);
    return load_mesh(in);
}

void save_mesh(const NurbsSurface& s, std::ostream& out) {
    char buf[512];
    out << "degrees " << s.u_kv.degree << " " << s.v_kv.degree << "\n";
    auto write_knots = [&](const KnotVector& kv) {
        for (size_t k = 0; k < kv.knots.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", kv.knots[k]);
            out << (k ? " " : "") << buf;
        }
        out << "\n";
    };
    write_knots(s.u_kv);
    write_knots(s.v_kv);
    out << s.nu() << " " << s.nv() << "\n";
    for (size_t g = 0; g < s.weights.size(); ++g) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", s.weights[g], s.control_points[g].x,
                      s.control_points[g].y);
        out << buf << "\n";
    }
}

NurbsSurface builtin_mesh(const std::string& name) {
    if (name == "square") {
        KnotVector kv = make_knot_vector({0, 0, 0, 1, 1, 1}, 2);
        std::vector<double> w(9, 1.0);
        std::vector<Point2> cp{{-1, 1}, {-1, 0}, {-1, -1}, {0, 1}, {0, 0},
                               {0, -1}, {1, 1},  {1, 0},   {1, -1}};
        return make_surface(kv, kv, std::move(w), std::move(cp));
    }
    if (name == "pipe") {
        KnotVector u_kv = make_knot_vector({0, 0, 1, 1}, 1);
        KnotVector v_kv = make_knot_vector({0, 0, 0, 1, 1, 1}, 2);
        const double r2 = std::sqrt(2.0) / 2.0;
        std::vector<double> w{1, 1, r2, r2, 1, 1};
        std::vector<Point2> cp{{1, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}};
        return make_surface(std::move(u_kv), std::move(v_kv), std::move(w), std::move(cp));
    }
    throw std::invalid_argument("builtin_mesh: unknown mesh '" + name + "'");
}

namespace {

// Rows of the second-order chain-rule system relating parametric to physical
// derivatives; shared by every basis function at one collocation point.
struct ChainRule {
    double g[2][2];     // [dxi][x,y] first-derivative map
    double det;
    double t[3][3];     // second-order coefficient matrix (LU-factored in place)
    int piv[3];
    Point2 sxx, sxy, syy;  // geometry second derivatives

    explicit ChainRule(const SurfacePoint& sp) {
        g[0][0] = sp.d_xi.x;
        g[0][1] = sp.d_xi.y;
        g[1][0] = sp.d_eta.x;
        g[1][1] = sp.d_eta.y;
        det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if (std::abs(det) < 1e-14)
            throw std::runtime_error("build_collocation: singular geometry Jacobian");
        sxx = sp.d_xixi;
        sxy = sp.d_xieta;
        syy = sp.d_etaeta;

        const double xs = sp.d_xi.x, ys = sp.d_xi.y, xe = sp.d_eta.x, ye = sp.d_eta.y;
        double m[3][3] = {{xs * xs, 2.0 * xs * ys, ys * ys},
                          {xs * xe, xs * ye + xe * ys, ys * ye},
                          {xe * xe, 2.0 * xe * ye, ye * ye}};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t[r][c] = m[r][c];
        // 3x3 LU with partial pivoting.
        for (int k = 0; k < 3; ++k) {
            int pr = k;
            for (int r = k + 1; r < 3; ++r)
                if (std::abs(t[r][k]) > std::abs(t[pr][k])) pr = r;
            piv[k] = pr;
            if (pr != k)
                for (int c = 0; c < 3; ++c) std::swap(t[k][c], t[pr][c]);
            if (std::abs(t[k][k]) < 1e-14)
                throw std::runtime_error("build_collocation: singular second-order chain rule");
            for (int r = k + 1; r < 3; ++r) {
                t[r][k] /= t[k][k];
                for (int c = k + 1; c < 3; ++c) t[r][c] -= t[r][k] * t[k][c];
            }
        }
    }

    void first(double r_xi, double r_eta, double& r_x, double& r_y) const {
        r_x = (g[1][1] * r_xi - g[0][1] * r_eta) / det;
        r_y = (-g[1][0] * r_xi + g[0][0] * r_eta) / det;
    }

    void second(double r_xixi, double r_xieta, double r_etaeta, double r_x, double r_y,
                double& r_xx, double& r_xy, double& r_yy) const {
        double b[3] = {r_xixi - r_x * sxx.x - r_y * sxx.y, r_xieta - r_x * sxy.x - r_y * sxy.y,
                       r_etaeta - r_x * syy.x - r_y * syy.y};
        for (int k = 0; k < 3; ++k)
            if (piv[k] != k) std::swap(b[k], b[piv[k]]);
        for (int r = 1; r < 3; ++r)
            for (int c = 0; c < r; ++c) b[r] -= t[r][c] * b[c];
        for (int r = 2; r >= 0; --r) {
            for (int c = r + 1; c < 3; ++c) b[r] -= t[r][c] * b[c];
            b[r] /= t[r][r];
        }
        r_xx = b[0];
        r_xy = b[1];
        r_yy = b[2];
    }
};

}  // namespace

CollocationSpace build_collocation(const NurbsSurface& s) {
    CollocationSpace space;
    space.surface = s;
    space.greville_u = greville(s.u_kv);
    space.greville_v = greville(s.v_kv);
    const int nu = s.nu(), nv = s.nv();
    const int total = nu * nv;
    space.points.resize(static_cast<size_t>(total));

    std::vector<sp::Triplet> tm, tdx, tdy, tdxx, tdxy, tdyy;
    const size_t per_point = static_cast<size_t>((s.u_kv.degree + 1) * (s.v_kv.degree + 1));
    tm.reserve(per_point * static_cast<size_t>(total));

    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            const int row = s.index(i, j);
            const double xi = space.greville_u[static_cast<size_t>(i)];
            const double eta = space.greville_v[static_cast<size_t>(j)];
            const SurfacePoint sp_pt = nurbs_eval(s, xi, eta, 2);
            space.points[static_cast<size_t>(row)] = sp_pt.p;
            const ChainRule chain(sp_pt);

            const BasisDerivatives bu = basis_derivatives(s.u_kv, xi, std::min(2, s.u_kv.degree));
            const BasisDerivatives bv = basis_derivatives(s.v_kv, eta, std::min(2, s.v_kv.degree));

            // Weight-function sums over the local support.
            double wsum[6] = {};
            static constexpr int kA[6] = {0, 1, 0, 2, 1, 0};
            static constexpr int kB[6] = {0, 0, 1, 0, 1, 2};
            for (int a = 0; a <= s.u_kv.degree; ++a)
                for (int b = 0; b <= s.v_kv.degree; ++b) {
                    const double wt = s.weights[static_cast<size_t>(s.index(bu.first + a, bv.first + b))];
                    for (int slot = 0; slot < 6; ++slot)
                        wsum[slot] += bu.ders[static_cast<size_t>(a)][static_cast<size_t>(kA[slot])] *
                                      bv.ders[static_cast<size_t>(b)][static_cast<size_t>(kB[slot])] * wt;
                }

            for (int a = 0; a <= s.u_kv.degree; ++a)
                for (int b = 0; b <= s.v_kv.degree; ++b) {
                    const int col = s.index(bu.first + a, bv.first + b);
                    const double wt = s.weights[static_cast<size_t>(col)];
                    double psi[6];
                    for (int slot = 0; slot < 6; ++slot)
                        psi[slot] = bu.ders[static_cast<size_t>(a)][static_cast<size_t>(kA[slot])] *
                                    bv.ders[static_cast<size_t>(b)][static_cast<size_t>(kB[slot])] * wt;

                    // Rational (NURBS) derivatives by the quotient rule.
                    const double r0 = psi[0] / wsum[0];
                    const double r_xi = (psi[1] - wsum[1] * r0) / wsum[0];
                    const double r_eta = (psi[2] - wsum[2] * r0) / wsum[0];
                    const double r_xixi = (psi[3] - 2.0 * wsum[1] * r_xi - wsum[3] * r0) / wsum[0];
                    const double r_xieta =
                        (psi[4] - wsum[1] * r_eta - wsum[2] * r_xi - wsum[4] * r0) / wsum[0];
                    const double r_etaeta = (psi[5] - 2.0 * wsum[2] * r_eta - wsum[5] * r0) / wsum[0];

                    double r_x, r_y, r_xx, r_xy, r_yy;
                    chain.first(r_xi, r_eta, r_x, r_y);
                    chain.second(r_xixi, r_xieta, r_etaeta, r_x, r_y, r_xx, r_xy, r_yy);

                    tm.push_back({row, col, r0});
                    tdx.push_back({row, col, r_x});
                    tdy.push_back({row, col, r_y});
                    tdxx.push_back({row, col, r_xx});
                    tdxy.push_back({row, col, r_xy});
                    tdyy.push_back({row, col, r_yy});
                }

            const bool on_boundary = i == 0 || i == nu - 1 || j == 0 || j == nv - 1;
            if (on_boundary) {
                space.boundary.push_back(row);
                // Outward normal from the boundary tangent, corner points get
                // the normalized average of both incident edge normals.
                double nx = 0.0, ny = 0.0;
                auto accumulate = [&](Point2 tangent, Point2 inward) {
                    const double len = std::hypot(tangent.x, tangent.y);
                    if (len < 1e-14)
                        throw std::runtime_error("build_collocation: zero-length boundary tangent");
                    double cx = tangent.y / len, cy = -tangent.x / len;
                    if (cx * inward.x + cy * inward.y > 0.0) {
                        cx = -cx;
                        cy = -cy;
                    }
                    nx += cx;
                    ny += cy;
                };
                if (i == 0) accumulate(sp_pt.d_eta, sp_pt.d_xi);
                if (i == nu - 1) accumulate(sp_pt.d_eta, {-sp_pt.d_xi.x, -sp_pt.d_xi.y});
                if (j == 0) accumulate(sp_pt.d_xi, sp_pt.d_eta);
                if (j == nv - 1) accumulate(sp_pt.d_xi, {-sp_pt.d_eta.x, -sp_pt.d_eta.y});
                const double len = std::hypot(nx, ny);
                space.boundary_normals.push_back({nx / len, ny / len});
            } else {
                space.interior.push_back(row);
            }
        }

    space.ops.value_map = sp::SparseMatrix::from_triplets(total, total, std::move(tm));
    space.ops.dx = sp::SparseMatrix::from_triplets(total, total, std::move(tdx));
    space.ops.dy = sp::SparseMatrix::from_triplets(total, total, std::move(tdy));
    space.ops.dxx = sp::SparseMatrix::from_triplets(total, total, std::move(tdxx));
    space.ops.dxy = sp::SparseMatrix::from_triplets(total, total, std::move(tdxy));
    space.ops.dyy = sp::SparseMatrix::from_triplets(total, total, std::move(tdyy));
    space.ops.has_second = true;
    return space;
}

sp::SparseMatrix normal_derivative_matrix(const CollocationSpace& space) {
    std::vector<sp::Triplet> t;
    for (size_t k = 0; k < space.boundary.size(); ++k) {
        const int row = space.boundary[k];
        const Point2 n = space.boundary_normals[k];
        auto cols = space.ops.dx.row_cols(row);
        auto vals = space.ops.dx.row_values(row);
        for (size_t e = 0; e < cols.size(); ++e)
            t.push_back({static_cast<int>(k), cols[e], n.x * vals[e]});
        cols = space.ops.dy.row_cols(row);
        vals = space.ops.dy.row_values(row);
        for (size_t e = 0; e < cols.size(); ++e)
            t.push_back({static_cast<int>(k), cols[e], n.y * vals[e]});
    }
    return sp::SparseMatrix::from_triplets(static_cast<int>(space.boundary.size()), space.size(),
                                           std::move(t));
}

std::vector<double> boundary_normal_derivative(const CollocationSpace& space,
                                               std::span<const double> c) {
    return sp::spmv(normal_derivative_matrix(space), c);
}

}  // namespace pclbench::iga
