#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pclbench/iga.hpp"
#include "support/oracles.hpp"

using namespace pclbench;

namespace {

// Coefficients whose field interpolates `f` at the collocation points. For
// polynomials inside the space this is the exact representation.
std::vector<double> interpolate(const iga::CollocationSpace& space,
                                const std::function<double(double, double)>& f) {
    std::vector<double> samples(static_cast<size_t>(space.size()));
    for (int g = 0; g < space.size(); ++g)
        samples[static_cast<size_t>(g)] = f(space.points[static_cast<size_t>(g)].x,
                                            space.points[static_cast<size_t>(g)].y);
    return sp::solve(sp::factorize(space.ops.value_map), samples);
}

iga::NurbsSurface refined(const std::string& name, int levels) {
    auto s = iga::builtin_mesh(name);
    for (int k = 0; k < levels; ++k) s = iga::h_refine(s);
    return s;
}

}  // namespace

TEST_CASE("Bernstein quadratics at 0.3") {
    auto kv = iga::make_knot_vector({0, 0, 0, 1, 1, 1}, 2);
    CHECK(iga::bspline_basis(kv, 0, 0.3, 0) == doctest::Approx(0.49).epsilon(1e-14));
    CHECK(iga::bspline_basis(kv, 1, 0.3, 0) == doctest::Approx(0.42).epsilon(1e-14));
    CHECK(iga::bspline_basis(kv, 2, 0.3, 0) == doctest::Approx(0.09).epsilon(1e-14));
    CHECK_THROWS_AS(iga::bspline_basis(kv, 3, 0.3, 0), std::invalid_argument);
}

TEST_CASE("partition of unity and derivative sums") {
    auto kv = iga::make_knot_vector({0, 0, 0, 0.2, 0.35, 0.5, 0.5, 0.8, 1, 1, 1}, 2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        double xi = unit(rng);
        double s0 = 0.0, s1 = 0.0;
        for (int i = 0; i < kv.num_basis(); ++i) {
            s0 += iga::bspline_basis(kv, i, xi, 0);
            s1 += iga::bspline_basis(kv, i, xi, 1);
        }
        CHECK(std::abs(s0 - 1.0) <= 1e-12);
        CHECK(std::abs(s1) <= 1e-10);
    }
    // Endpoints are interpolatory for open knot vectors.
    CHECK(iga::bspline_basis(kv, 0, 0.0, 0) == doctest::Approx(1.0));
    CHECK(iga::bspline_basis(kv, kv.num_basis() - 1, 1.0, 0) == doctest::Approx(1.0));
}

TEST_CASE("greville abscissae") {
    auto kv2 = iga::make_knot_vector({0, 0, 0, 1, 1, 1}, 2);
    CHECK(iga::greville(kv2) == std::vector<double>{0.0, 0.5, 1.0});
    auto kv1 = iga::make_knot_vector({0, 0, 1, 1}, 1);
    CHECK(iga::greville(kv1) == std::vector<double>{0.0, 1.0});

    auto refined_kv = iga::make_knot_vector({0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1}, 2);
    auto g = iga::greville(refined_kv);
    for (size_t k = 1; k < g.size(); ++k) CHECK(g[k] > g[k - 1]);
}

TEST_CASE("square mesh geometry is affine with unit-2 scaling") {
    auto s = iga::builtin_mesh("square");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        auto pt = iga::nurbs_eval(s, unit(rng), unit(rng));
        const double j00 = std::abs(pt.d_xi.x) + std::abs(pt.d_xi.y);
        const double j11 = std::abs(pt.d_eta.x) + std::abs(pt.d_eta.y);
        CHECK(j00 == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(j11 == doctest::Approx(2.0).epsilon(1e-13));
        // One parametric direction moves x, the other y.
        CHECK(std::abs(pt.d_xi.x * pt.d_eta.x + pt.d_xi.y * pt.d_eta.y) <= 1e-13);
        CHECK(std::abs(pt.d_xixi.x) + std::abs(pt.d_xixi.y) <= 1e-12);
        CHECK(pt.p.x >= -1.0 - 1e-12);
        CHECK(pt.p.x <= 1.0 + 1e-12);
    }
}

TEST_CASE("pipe inner edge lies on the unit circle") {
    auto s = iga::builtin_mesh("pipe");
    for (int k = 0; k <= 40; ++k) {
        double eta = k / 40.0;
        auto pt = iga::nurbs_eval(s, 0.0, eta);
        CHECK(std::abs(std::hypot(pt.p.x, pt.p.y) - 1.0) <= 1e-10);
        auto po = iga::nurbs_eval(s, 1.0, eta);
        CHECK(std::abs(std::hypot(po.p.x, po.p.y) - 2.0) <= 1e-10);
    }
}

TEST_CASE("constant surface has zero first derivatives") {
    auto kv = iga::make_knot_vector({0, 0, 0, 1, 1, 1}, 2);
    std::vector<double> w(9, 1.0);
    std::vector<iga::Point2> cp(9, {0.7, -0.2});
    auto s = iga::make_surface(kv, kv, std::move(w), std::move(cp));
    auto pt = iga::nurbs_eval(s, 0.37, 0.82);
    CHECK(std::abs(pt.d_xi.x) <= 1e-14);
    CHECK(std::abs(pt.d_eta.y) <= 1e-14);
}

TEST_CASE("h_refine preserves geometry and grows the knot vector") {
    for (const char* name : {"square", "pipe"}) {
        auto s = iga::builtin_mesh(name);
        auto r = iga::h_refine(s);
        CHECK(r.u_kv.knots.size() == s.u_kv.knots.size() + 1);
        bool has_mid = false;
        for (double k : r.u_kv.knots) has_mid = has_mid || k == 0.5;
        CHECK(has_mid);
        for (double w : r.weights) CHECK(w > 0.0);

        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b) {
                double xi = a / 4.0, eta = b / 4.0;
                auto p0 = iga::nurbs_eval(s, xi, eta).p;
                auto p1 = iga::nurbs_eval(r, xi, eta).p;
                CHECK(std::abs(p0.x - p1.x) <= 1e-12);
                CHECK(std::abs(p0.y - p1.y) <= 1e-12);
            }

        // Refining the refined surface keeps the geometry too.
        auto rr = iga::h_refine(r);
        CHECK(rr.u_kv.knots.size() == r.u_kv.knots.size() + 2);
        auto p0 = iga::nurbs_eval(s, 0.3, 0.6).p;
        auto p2 = iga::nurbs_eval(rr, 0.3, 0.6).p;
        CHECK(std::abs(p0.x - p2.x) <= 1e-12);
        CHECK(std::abs(p0.y - p2.y) <= 1e-12);
    }
}

TEST_CASE("collocation reproduces polynomials through second derivatives") {
    auto space = iga::build_collocation(refined("square", 2));
    struct Mono {
        int a, b;
    };
    for (Mono mono : {Mono{0, 0}, Mono{1, 0}, Mono{0, 1}, Mono{1, 1}, Mono{2, 0}, Mono{2, 2}}) {
        auto f = [&](double x, double y) { return std::pow(x, mono.a) * std::pow(y, mono.b); };
        auto dfx = [&](double x, double y) {
            return mono.a == 0 ? 0.0 : mono.a * std::pow(x, mono.a - 1) * std::pow(y, mono.b);
        };
        auto dfxx = [&](double x, double y) {
            return mono.a < 2 ? 0.0
                              : mono.a * (mono.a - 1) * std::pow(x, mono.a - 2) * std::pow(y, mono.b);
        };
        auto dfxy = [&](double x, double y) {
            return (mono.a == 0 || mono.b == 0)
                       ? 0.0
                       : mono.a * mono.b * std::pow(x, mono.a - 1) * std::pow(y, mono.b - 1);
        };
        auto c = interpolate(space, f);
        auto vals = sp::spmv(space.ops.value_map, c);
        auto vx = sp::spmv(space.ops.dx, c);
        auto vxx = sp::spmv(space.ops.dxx, c);
        auto vxy = sp::spmv(space.ops.dxy, c);
        for (int g = 0; g < space.size(); ++g) {
            double x = space.points[static_cast<size_t>(g)].x;
            double y = space.points[static_cast<size_t>(g)].y;
            CHECK(std::abs(vals[static_cast<size_t>(g)] - f(x, y)) <= 1e-9);
            CHECK(std::abs(vx[static_cast<size_t>(g)] - dfx(x, y)) <= 1e-9);
            CHECK(std::abs(vxx[static_cast<size_t>(g)] - dfxx(x, y)) <= 1e-9);
            CHECK(std::abs(vxy[static_cast<size_t>(g)] - dfxy(x, y)) <= 1e-9);
        }
    }
}

TEST_CASE("M_xx applied to x^2 gives 2 at interior points") {
    auto space = iga::build_collocation(iga::builtin_mesh("square"));
    auto c = interpolate(space, [](double x, double) { return x * x; });
    auto vxx = sp::spmv(space.ops.dxx, c);
    for (int g : space.interior) CHECK(vxx[static_cast<size_t>(g)] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("constant coefficients: M rows sum to the constant, M_x rows to zero") {
    auto space = iga::build_collocation(refined("pipe", 1));
    std::vector<double> c(static_cast<size_t>(space.size()), 3.25);
    auto vals = sp::spmv(space.ops.value_map, c);
    auto vx = sp::spmv(space.ops.dx, c);
    for (int g = 0; g < space.size(); ++g) {
        CHECK(vals[static_cast<size_t>(g)] == doctest::Approx(3.25).epsilon(1e-12));
        CHECK(std::abs(vx[static_cast<size_t>(g)]) <= 1e-10);
    }
    // Local support: row sparsity of M bounded by (p+1)(q+1), and the
    // rational basis values are nonnegative.
    const int bound = (space.surface.u_kv.degree + 1) * (space.surface.v_kv.degree + 1);
    for (int r = 0; r < space.size(); ++r)
        CHECK(static_cast<int>(space.ops.value_map.row_cols(r).size()) <= bound);
    for (double v : space.ops.value_map.values()) CHECK(v >= -1e-14);
}

TEST_CASE("manufactured Helmholtz residual shrinks with refinement") {
    const double k = 0.5;
    auto g_fun = [](double x, double y) { return 5.0 * x * x + 2.0 * y * y; };
    auto u_star = [](double x, double y) { return std::sin(x) * std::cos(y); };
    auto f_src = [&](double x, double y) {
        return -2.0 * std::sin(x) * std::cos(y) + k * k * g_fun(x, y) * u_star(x, y);
    };

    std::vector<double> resid;
    for (int level : {2, 3, 4}) {
        auto space = iga::build_collocation(refined("square", level));
        auto c = interpolate(space, u_star);
        auto lap = sp::add(space.ops.dxx, space.ops.dyy);
        auto lu = sp::spmv(lap, c);
        auto mu = sp::spmv(space.ops.value_map, c);
        double worst = 0.0;
        for (int g : space.interior) {
            double x = space.points[static_cast<size_t>(g)].x;
            double y = space.points[static_cast<size_t>(g)].y;
            double r = lu[static_cast<size_t>(g)] + k * k * g_fun(x, y) * mu[static_cast<size_t>(g)] -
                       f_src(x, y);
            worst = std::max(worst, std::abs(r));
        }
        resid.push_back(worst);
    }
    CHECK(resid[1] < resid[0]);
    CHECK(resid[2] < resid[1]);
    CHECK(resid[2] < 0.25 * resid[0]);
}

TEST_CASE("boundary normal derivative on the square") {
    auto space = iga::build_collocation(refined("square", 1));

    std::vector<double> c_const(static_cast<size_t>(space.size()), 1.0);
    for (double v : iga::boundary_normal_derivative(space, c_const)) CHECK(std::abs(v) <= 1e-11);

    auto c = interpolate(space, [](double x, double) { return x; });
    auto dn = iga::boundary_normal_derivative(space, c);
    for (size_t b = 0; b < space.boundary.size(); ++b) {
        const auto pt = space.points[static_cast<size_t>(space.boundary[b])];
        const bool corner = (std::abs(std::abs(pt.x) - 1.0) <= 1e-12) &&
                            (std::abs(std::abs(pt.y) - 1.0) <= 1e-12);
        if (corner) continue;  // averaged normal at corners
        if (std::abs(pt.x - 1.0) <= 1e-12)
            CHECK(dn[b] == doctest::Approx(1.0).epsilon(1e-10));
        else if (std::abs(pt.x + 1.0) <= 1e-12)
            CHECK(dn[b] == doctest::Approx(-1.0).epsilon(1e-10));
        else
            CHECK(std::abs(dn[b]) <= 1e-10);
    }
}

TEST_CASE("pipe radial normal derivative is +-1 on the circular edges") {
    // The radial coordinate is 1 + xi on this annulus, which the space
    // represents exactly, so the only error left is roundoff at any level.
    double prev_err = std::numeric_limits<double>::infinity();
    for (int level : {1, 2, 3}) {
        auto space = iga::build_collocation(refined("pipe", level));
        auto c = interpolate(space, [](double x, double y) { return std::hypot(x, y); });
        auto dn = iga::boundary_normal_derivative(space, c);
        double err = 0.0;
        for (size_t b = 0; b < space.boundary.size(); ++b) {
            const int g = space.boundary[b];
            const auto pt = space.points[static_cast<size_t>(g)];
            const double r = std::hypot(pt.x, pt.y);
            const bool inner = std::abs(r - 1.0) <= 1e-9;
            const bool outer = std::abs(r - 2.0) <= 1e-9;
            if (!inner && !outer) continue;  // straight edges
            // Skip the corners shared with the straight edges.
            if (std::abs(pt.x) <= 1e-9 || std::abs(pt.y) <= 1e-9) continue;
            err = std::max(err, std::abs(dn[b] - (outer ? 1.0 : -1.0)));
        }
        CHECK(err <= std::max(prev_err * 1.5, 1e-9));
        prev_err = err;
    }
    CHECK(prev_err < 1e-9);
}

TEST_CASE("mesh files round trip and builtins match the reference tables") {
    auto pipe = iga::builtin_mesh("pipe");
    CHECK(pipe.weights[2] == std::sqrt(2.0) / 2.0);
    CHECK(pipe.u_kv.degree == 1);
    CHECK(pipe.v_kv.degree == 2);
    CHECK(pipe.control_points[3].x == 2.0);
    CHECK(pipe.control_points[3].y == 2.0);

    std::stringstream ss;
    iga::save_mesh(pipe, ss);
    auto back = iga::load_mesh(ss);
    CHECK(back.weights == pipe.weights);
    CHECK(back.u_kv.knots == pipe.u_kv.knots);
    for (size_t g = 0; g < pipe.control_points.size(); ++g) {
        CHECK(back.control_points[g].x == pipe.control_points[g].x);
        CHECK(back.control_points[g].y == pipe.control_points[g].y);
    }

    CHECK_THROWS_AS(iga::builtin_mesh("torus"), std::invalid_argument);
}
