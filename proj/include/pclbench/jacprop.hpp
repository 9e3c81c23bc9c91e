#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pclbench/sparse.hpp"

namespace pclbench::jacprop {

/// Values at the discretization's evaluation points together with the sparse
/// Jacobian of those values with respect to the coefficient vector. Fields
/// are immutable values; all operations below are pure.
struct Field {
    std::vector<double> values;
    sp::SparseMatrix jacobian;  // n_points x n_coefficients

    int points() const { return static_cast<int>(values.size()); }
    int coefficients() const { return jacobian.cols(); }
};

struct VectorField {
    Field x;
    Field y;
};

/// Point-space maps of the discretization: M turns coefficients into point
/// values; the derivative maps act on point values of any field.
struct DiscretizationOperators {
    sp::SparseMatrix value_map;  // M
    sp::SparseMatrix dx;         // M_x
    sp::SparseMatrix dy;         // M_y
    sp::SparseMatrix dxx;        // optional second-derivative maps
    sp::SparseMatrix dxy;
    sp::SparseMatrix dyy;
    bool has_second = false;
};

Field from_coefficients(const DiscretizationOperators& ops, std::span<const double> c);

/// Field with no coefficient dependence (zero Jacobian).
Field constant(std::vector<double> values, int n_coefficients);

/// f with values L f.values and Jacobian L J_f, for a linear point-space map L.
Field apply(const sp::SparseMatrix& op, const Field& f);

VectorField grad(const DiscretizationOperators& ops, const Field& f);
Field div(const DiscretizationOperators& ops, const VectorField& v);

Field add(const Field& f, const Field& g);
Field sub(const Field& f, const Field& g);
Field neg(const Field& f);
Field add_scalar(const Field& f, double s);
Field mul(const Field& f, const Field& g);
VectorField mul(const Field& f, const VectorField& v);

/// Pointwise phi(f) with Jacobian diag(phi'(f)) J_f.
Field unary(const Field& f, const std::function<double(double)>& phi,
            const std::function<double(double)>& dphi);

/// Test instrumentation: when set, every operation reports its name in
/// execution order. Not meant for concurrent use.
void set_trace_hook(std::function<void(const char*)> hook);

}  // namespace pclbench::jacprop
