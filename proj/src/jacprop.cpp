#include "pclbench/jacprop.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace pclbench::jacprop {

namespace {

std::function<void(const char*)>& trace_hook() {
    static std::function<void(const char*)> hook;
    return hook;
}

void trace(const char* name) {
    if (trace_hook()) trace_hook()(name);
}

void check_same_shape(const Field& f, const Field& g, const char* what) {
    if (f.values.size() != g.values.size() || f.jacobian.cols() != g.jacobian.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

void set_trace_hook(std::function<void(const char*)> hook) { trace_hook() = std::move(hook); }

Field from_coefficients(const DiscretizationOperators& ops, std::span<const double> c) {
    if (static_cast<int>(c.size()) != ops.value_map.cols())
        throw std::invalid_argument("from_coefficients: coefficient length mismatch");
    trace("from_coefficients");
    return {sp::spmv(ops.value_map, c), ops.value_map};
}

Field constant(std::vector<double> values, int n_coefficients) {
    sp::SparseMatrix zero(static_cast<int>(values.size()), n_coefficients);
    return {std::move(values), std::move(zero)};
}

Field apply(const sp::SparseMatrix& op, const Field& f) {
    if (op.cols() != f.points()) throw std::invalid_argument("apply: operator/field mismatch");
    trace("apply");
    return {sp::spmv(op, f.values), sp::matmul(op, f.jacobian)};
}

VectorField grad(const DiscretizationOperators& ops, const Field& f) {
    if (ops.dx.rows() == 0 || ops.dy.rows() == 0)
        throw std::invalid_argument("grad: missing derivative operators");
    trace("grad");
    return {apply(ops.dx, f), apply(ops.dy, f)};
}

Field div(const DiscretizationOperators& ops, const VectorField& v) {
    if (ops.dx.rows() == 0 || ops.dy.rows() == 0)
        throw std::invalid_argument("div: missing derivative operators");
    trace("div");
    Field dvx = apply(ops.dx, v.x);
    Field dvy = apply(ops.dy, v.y);
    return add(dvx, dvy);
}

Field add(const Field& f, const Field& g) {
    check_same_shape(f, g, "add");
    trace("add");
    Field out;
    out.values.resize(f.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) out.values[i] = f.values[i] + g.values[i];
    out.jacobian = sp::add(f.jacobian, g.jacobian);
    return out;
}

Field sub(const Field& f, const Field& g) {
    check_same_shape(f, g, "sub");
    trace("sub");
    Field out;
    out.values.resize(f.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) out.values[i] = f.values[i] - g.values[i];
    out.jacobian = sp::add(f.jacobian, sp::scale(g.jacobian, -1.0));
    return out;
}

Field neg(const Field& f) {
    trace("neg");
    Field out;
    out.values.resize(f.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) out.values[i] = -f.values[i];
    out.jacobian = sp::scale(f.jacobian, -1.0);
    return out;
}

Field add_scalar(const Field& f, double s) {
    trace("add_scalar");
    Field out = f;
    for (double& v : out.values) v += s;
    return out;  // Jacobian unchanged
}

Field mul(const Field& f, const Field& g) {
    check_same_shape(f, g, "mul");
    trace("mul");
    Field out;
    out.values.resize(f.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) out.values[i] = f.values[i] * g.values[i];
    // Product rule: diag(g) J_f + diag(f) J_g.
    out.jacobian = sp::add(sp::diag_left_mul(g.values, f.jacobian),
                           sp::diag_left_mul(f.values, g.jacobian));
    return out;
}

VectorField mul(const Field& f, const VectorField& v) {
    return {mul(f, v.x), mul(f, v.y)};
}

Field unary(const Field& f, const std::function<double(double)>& phi,
            const std::function<double(double)>& dphi) {
    trace("unary");
    Field out;
    out.values.resize(f.values.size());
    std::vector<double> slope(f.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) {
        out.values[i] = phi(f.values[i]);
        slope[i] = dphi(f.values[i]);
        if (!std::isfinite(out.values[i]))
            throw std::domain_error("unary: function value not finite");
    }
    out.jacobian = sp::diag_left_mul(slope, f.jacobian);
    return out;
}

}  // namespace pclbench::jacprop
