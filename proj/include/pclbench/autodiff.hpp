#pragma once

#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "pclbench/sparse.hpp"

namespace pclbench::ad {

enum class Op {
    constant,
    add,
    sub,
    mul,
    div,
    neg,
    exp,
    log,
    sin,
    cos,
    tanh,
    power,
    sum,
    dot,
    matvec,
    gather,
    scatter_add,
};

/// One tape entry. Values are vectors; a scalar is a vector of length 1.
/// Binary elementwise ops broadcast a length-1 operand.
struct Node {
    Op op = Op::constant;
    std::vector<int> parents;
    std::vector<double> value;
    double exponent = 0.0;                                   // power
    std::vector<int> indices;                                // gather / scatter_add
    std::shared_ptr<const sp::SparseMatrix> matrix;          // matvec
};

/// Computational-graph record for scalar-output reverse-mode differentiation.
/// Inputs come first; every node's parents precede it. Single writer; reads
/// of a finished tape are safe from any thread.
class Tape {
public:
    int add_input(std::vector<double> value);
    int add_scalar_input(double value) { return add_input({value}); }

    int constant(std::vector<double> value);
    int constant(double value) { return constant(std::vector<double>{value}); }

    int record(Op op, std::span<const int> parents);
    int record_power(int x, double exponent);
    int record_matvec(std::shared_ptr<const sp::SparseMatrix> a, int x);
    int record_gather(int x, std::vector<int> indices);
    int record_scatter_add(int x, std::vector<int> indices, int out_size);

    int add(int a, int b) { return record(Op::add, std::array{a, b}); }
    int sub(int a, int b) { return record(Op::sub, std::array{a, b}); }
    int mul(int a, int b) { return record(Op::mul, std::array{a, b}); }
    int div(int a, int b) { return record(Op::div, std::array{a, b}); }
    int neg(int a) { return record(Op::neg, std::array{a}); }
    int exp(int a) { return record(Op::exp, std::array{a}); }
    int log(int a) { return record(Op::log, std::array{a}); }
    int sin(int a) { return record(Op::sin, std::array{a}); }
    int cos(int a) { return record(Op::cos, std::array{a}); }
    int tanh(int a) { return record(Op::tanh, std::array{a}); }
    int sum(int a) { return record(Op::sum, std::array{a}); }
    int dot(int a, int b) { return record(Op::dot, std::array{a, b}); }

    int record(Op op, std::initializer_list<int> parents) {
        return record(op, std::span<const int>(parents.begin(), parents.size()));
    }
    template <size_t N>
    int record(Op op, const std::array<int, N>& parents) {
        return record(op, std::span<const int>(parents.data(), N));
    }

    const std::vector<double>& value(int id) const { return nodes_.at(static_cast<size_t>(id)).value; }
    double scalar_value(int id) const;
    const Node& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }

    int size() const { return static_cast<int>(nodes_.size()); }
    int input_count() const { return input_count_; }
    bool is_input(int id) const { return id >= 0 && id < input_count_; }

    void set_output(int id);
    int output() const;

private:
    int push(Node n);
    std::vector<Node> nodes_;
    int input_count_ = 0;
    int output_ = -1;
};

struct GradStats {
    size_t edges_visited = 0;
};

/// Gradient of the (scalar) output with respect to the requested inputs,
/// flattened in request order. One backward sweep; each reachable graph
/// edge is visited exactly once.
std::vector<double> reverse_grad(const Tape& tape, std::span<const int> wrt_inputs,
                                 GradStats* stats = nullptr);

/// Number of graph edges reachable from the output (test instrumentation).
size_t reachable_edges(const Tape& tape);

/// Convenience handle for writing expressions against a tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

inline Var operator+(Var a, Var b) { return {a.tape, a.tape->add(a.id, b.id)}; }
inline Var operator-(Var a, Var b) { return {a.tape, a.tape->sub(a.id, b.id)}; }
inline Var operator*(Var a, Var b) { return {a.tape, a.tape->mul(a.id, b.id)}; }
inline Var operator/(Var a, Var b) { return {a.tape, a.tape->div(a.id, b.id)}; }
inline Var operator-(Var a) { return {a.tape, a.tape->neg(a.id)}; }
inline Var operator+(Var a, double c) { return {a.tape, a.tape->add(a.id, a.tape->constant(c))}; }
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return {a.tape, a.tape->sub(a.id, a.tape->constant(c))}; }
inline Var operator-(double c, Var a) { return {a.tape, a.tape->sub(a.tape->constant(c), a.id)}; }
inline Var operator*(Var a, double c) { return {a.tape, a.tape->mul(a.id, a.tape->constant(c))}; }
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return {a.tape, a.tape->div(a.id, a.tape->constant(c))}; }
inline Var exp(Var a) { return {a.tape, a.tape->exp(a.id)}; }
inline Var log(Var a) { return {a.tape, a.tape->log(a.id)}; }
inline Var sin(Var a) { return {a.tape, a.tape->sin(a.id)}; }
inline Var cos(Var a) { return {a.tape, a.tape->cos(a.id)}; }
inline Var tanh(Var a) { return {a.tape, a.tape->tanh(a.id)}; }
inline Var pow(Var a, double e) { return {a.tape, a.tape->record_power(a.id, e)}; }
inline Var sum(Var a) { return {a.tape, a.tape->sum(a.id)}; }
inline Var dot(Var a, Var b) { return {a.tape, a.tape->dot(a.id, b.id)}; }

}  // namespace pclbench::ad
