#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pclbench/jacprop.hpp"
#include "pclbench/sparse.hpp"

namespace pclbench::iga {

/// Open knot vector on [0,1] with its polynomial degree.
struct KnotVector {
    std::vector<double> knots;
    int degree = 0;

    int num_basis() const { return static_cast<int>(knots.size()) - degree - 1; }
};

/// Validates monotonicity and the open (clamped) end conditions.
KnotVector make_knot_vector(std::vector<double> knots, int degree);

int find_span(const KnotVector& kv, double xi);

/// Values and derivatives (up to `order` <= 2) of the degree+1 basis
/// functions that are nonzero at xi. ders[k][d] is the d-th derivative of
/// basis function (first + k).
struct BasisDerivatives {
    int first = 0;
    std::vector<std::array<double, 3>> ders;
};
BasisDerivatives basis_derivatives(const KnotVector& kv, double xi, int order);

/// Single Cox-de Boor basis value or derivative (right-continuous at
/// interior knots, closed at xi = 1).
double bspline_basis(const KnotVector& kv, int i, double xi, int deriv_order);

/// Greville abscissae: averages of degree consecutive interior knots.
std::vector<double> greville(const KnotVector& kv);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Tensor-product NURBS surface. Control points and weights are stored with
/// the u index fastest: g = j * nu + i.
struct NurbsSurface {
    KnotVector u_kv;
    KnotVector v_kv;
    std::vector<double> weights;
    std::vector<Point2> control_points;

    int nu() const { return u_kv.num_basis(); }
    int nv() const { return v_kv.num_basis(); }
    int size() const { return nu() * nv(); }
    int index(int i, int j) const { return j * nu() + i; }
};

NurbsSurface make_surface(KnotVector u_kv, KnotVector v_kv, std::vector<double> weights,
                          std::vector<Point2> control_points);

/// Geometry map value and parametric derivatives up to second order.
struct SurfacePoint {
    Point2 p, d_xi, d_eta, d_xixi, d_xieta, d_etaeta;
};
SurfacePoint nurbs_eval(const NurbsSurface& s, double xi, double eta, int order = 2);

/// Knot insertion at every interior span midpoint in both directions; the
/// geometry map is unchanged.
NurbsSurface h_refine(const NurbsSurface& s);

/// Mesh text format: `degrees p q`, the two knot vectors, `n m`, then
/// n*m lines `w x y` with the u index fastest.
NurbsSurface load_mesh(std::istream& in);
NurbsSurface load_mesh_file(const std::string& path);
void save_mesh(const NurbsSurface& s, std::ostream& out);

/// Built-in meshes: "square" (biquadratic [-1,1]^2) and "pipe" (quarter
/// annulus with inner radius 1, outer radius 2).
NurbsSurface builtin_mesh(const std::string& name);

/// Greville-point collocation data: physical evaluation operators for
/// values and derivatives, interior/boundary classification, and outward
/// normals along the boundary.
struct CollocationSpace {
    NurbsSurface surface;
    std::vector<double> greville_u, greville_v;
    std::vector<Point2> points;             // physical images, u index fastest
    std::vector<int> interior;              // global point indices
    std::vector<int> boundary;
    std::vector<Point2> boundary_normals;   // aligned with `boundary`
    jacprop::DiscretizationOperators ops;   // M, d/dx, d/dy, and second derivatives

    int size() const { return static_cast<int>(points.size()); }
};

CollocationSpace build_collocation(const NurbsSurface& s);

/// Rows of d/dn at the boundary collocation points (|boundary| x N).
sp::SparseMatrix normal_derivative_matrix(const CollocationSpace& space);

/// d(u_c)/dn at the boundary points, in `boundary` order.
std::vector<double> boundary_normal_derivative(const CollocationSpace& space,
                                               std::span<const double> c);

}  // namespace pclbench::iga
