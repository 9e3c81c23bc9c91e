#include "pclbench/autodiff.hpp"

#include <cmath>
#include <string>

namespace pclbench::ad {

namespace {

size_t broadcast_size(const std::vector<double>& a, const std::vector<double>& b,
                      const char* what) {
    if (a.size() == b.size()) return a.size();
    if (a.size() == 1) return b.size();
    if (b.size() == 1) return a.size();
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

inline double at(const std::vector<double>& v, size_t i) { return v.size() == 1 ? v[0] : v[i]; }

}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::add_input(std::vector<double> value) {
    if (static_cast<int>(nodes_.size()) != input_count_)
        throw std::logic_error("add_input: inputs must be recorded before other nodes");
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    ++input_count_;
    return push(std::move(n));
}

int Tape::constant(std::vector<double> value) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    return push(std::move(n));
}

double Tape::scalar_value(int id) const {
    const auto& v = value(id);
    if (v.size() != 1) throw std::invalid_argument("scalar_value: node is not scalar");
    return v[0];
}

void Tape::set_output(int id) {
    if (id < 0 || id >= size()) throw std::invalid_argument("set_output: bad node index");
    output_ = id;
}

int Tape::output() const {
    if (output_ >= 0) return output_;
    if (nodes_.empty()) throw std::logic_error("output: empty tape");
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::record(Op op, std::span<const int> parents) {
    for (int p : parents)
        if (p < 0 || p >= size()) throw std::invalid_argument("record: parent not on tape");

    Node n;
    n.op = op;
    n.parents.assign(parents.begin(), parents.end());
    auto check_arity = [&](size_t k, const char* what) {
        if (parents.size() != k) throw std::invalid_argument(std::string(what) + ": wrong arity");
    };

    switch (op) {
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div: {
            check_arity(2, "binary op");
            const auto& a = value(parents[0]);
            const auto& b = value(parents[1]);
            const char* names[] = {"add", "sub", "mul", "div"};
            size_t m = broadcast_size(a, b, names[static_cast<int>(op) - static_cast<int>(Op::add)]);
            n.value.resize(m);
            for (size_t i = 0; i < m; ++i) {
                double x = at(a, i), y = at(b, i);
                switch (op) {
                    case Op::add: n.value[i] = x + y; break;
                    case Op::sub: n.value[i] = x - y; break;
                    case Op::mul: n.value[i] = x * y; break;
                    default: n.value[i] = x / y; break;
                }
            }
            break;
        }
        case Op::neg:
        case Op::exp:
        case Op::log:
        case Op::sin:
        case Op::cos:
        case Op::tanh: {
            check_arity(1, "unary op");
            const auto& a = value(parents[0]);
            n.value.resize(a.size());
            for (size_t i = 0; i < a.size(); ++i) {
                double x = a[i];
                switch (op) {
                    case Op::neg: n.value[i] = -x; break;
                    case Op::exp: n.value[i] = std::exp(x); break;
                    case Op::log:
                        if (x <= 0.0) throw std::domain_error("log: nonpositive argument");
                        n.value[i] = std::log(x);
                        break;
                    case Op::sin: n.value[i] = std::sin(x); break;
                    case Op::cos: n.value[i] = std::cos(x); break;
                    default: n.value[i] = std::tanh(x); break;
                }
            }
            break;
        }
        case Op::sum: {
            check_arity(1, "sum");
            const auto& a = value(parents[0]);
            double s = 0.0;
            for (double x : a) s += x;
            n.value = {s};
            break;
        }
        case Op::dot: {
            check_arity(2, "dot");
            const auto& a = value(parents[0]);
            const auto& b = value(parents[1]);
            if (a.size() != b.size()) throw std::invalid_argument("dot: shape mismatch");
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            n.value = {s};
            break;
        }
        case Op::constant:
        case Op::power:
        case Op::matvec:
        case Op::gather:
        case Op::scatter_add:
            throw std::invalid_argument("record: primitive requires its dedicated entry point");
    }
    return push(std::move(n));
}

int Tape::record_power(int x, double exponent) {
    if (x < 0 || x >= size()) throw std::invalid_argument("power: parent not on tape");
    const bool integral = exponent == std::floor(exponent);
    Node n;
    n.op = Op::power;
    n.parents = {x};
    n.exponent = exponent;
    const auto& a = value(x);
    n.value.resize(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        if (!integral && a[i] <= 0.0)
            throw std::domain_error("power: non-integer exponent requires positive base");
        n.value[i] = std::pow(a[i], exponent);
    }
    return push(std::move(n));
}

int Tape::record_matvec(std::shared_ptr<const sp::SparseMatrix> a, int x) {
    if (x < 0 || x >= size()) throw std::invalid_argument("matvec: parent not on tape");
    if (!a) throw std::invalid_argument("matvec: null matrix");
    Node n;
    n.op = Op::matvec;
    n.parents = {x};
    n.value = sp::spmv(*a, value(x));
    n.matrix = std::move(a);
    return push(std::move(n));
}

int Tape::record_gather(int x, std::vector<int> indices) {
    if (x < 0 || x >= size()) throw std::invalid_argument("gather: parent not on tape");
    const auto& a = value(x);
    Node n;
    n.op = Op::gather;
    n.parents = {x};
    n.value.resize(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        int k = indices[i];
        if (k < 0 || k >= static_cast<int>(a.size()))
            throw std::invalid_argument("gather: index out of range");
        n.value[i] = a[static_cast<size_t>(k)];
    }
    n.indices = std::move(indices);
    return push(std::move(n));
}

int Tape::record_scatter_add(int x, std::vector<int> indices, int out_size) {
    if (x < 0 || x >= size()) throw std::invalid_argument("scatter_add: parent not on tape");
    const auto& a = value(x);
    if (indices.size() != a.size())
        throw std::invalid_argument("scatter_add: index count must match value count");
    Node n;
    n.op = Op::scatter_add;
    n.parents = {x};
    n.value.assign(static_cast<size_t>(out_size), 0.0);
    for (size_t i = 0; i < indices.size(); ++i) {
        int k = indices[i];
        if (k < 0 || k >= out_size) throw std::invalid_argument("scatter_add: index out of range");
        n.value[static_cast<size_t>(k)] += a[i];
    }
    n.indices = std::move(indices);
    return push(std::move(n));
}

namespace {

// Accumulate adj into the slot for parent p, handling a broadcast parent.
void accumulate(std::vector<double>& slot, const std::vector<double>& parent_value, size_t i,
                double adj) {
    if (parent_value.size() == 1)
        slot[0] += adj;
    else
        slot[i] += adj;
}

}  // namespace

std::vector<double> reverse_grad(const Tape& tape, std::span<const int> wrt_inputs,
                                 GradStats* stats) {
    const int out = tape.output();
    if (tape.value(out).size() != 1)
        throw std::invalid_argument("reverse_grad: output node is not scalar");
    for (int i : wrt_inputs)
        if (!tape.is_input(i)) throw std::invalid_argument("reverse_grad: index is not an input");

    const int n = tape.size();
    std::vector<char> live(static_cast<size_t>(n), 0);
    live[static_cast<size_t>(out)] = 1;
    for (int i = out; i >= 0; --i) {
        if (!live[static_cast<size_t>(i)]) continue;
        for (int p : tape.node(i).parents) live[static_cast<size_t>(p)] = 1;
    }

    std::vector<std::vector<double>> adjoint(static_cast<size_t>(n));
    auto adj_of = [&](int id) -> std::vector<double>& {
        auto& a = adjoint[static_cast<size_t>(id)];
        if (a.empty()) a.assign(tape.value(id).size(), 0.0);
        return a;
    };
    adj_of(out)[0] = 1.0;

    size_t edges = 0;
    for (int i = out; i >= 0; --i) {
        if (!live[static_cast<size_t>(i)]) continue;
        const Node& nd = tape.node(i);
        if (nd.parents.empty()) continue;
        const auto& adj = adjoint[static_cast<size_t>(i)];
        if (adj.empty()) continue;
        edges += nd.parents.size();

        switch (nd.op) {
            case Op::add: {
                const auto& a = tape.value(nd.parents[0]);
                const auto& b = tape.value(nd.parents[1]);
                auto& ga = adj_of(nd.parents[0]);
                auto& gb = adj_of(nd.parents[1]);
                for (size_t k = 0; k < adj.size(); ++k) {
                    accumulate(ga, a, k, adj[k]);
                    accumulate(gb, b, k, adj[k]);
                }
                break;
            }
            case Op::sub: {
                const auto& a = tape.value(nd.parents[0]);
                const auto& b = tape.value(nd.parents[1]);
                auto& ga = adj_of(nd.parents[0]);
                auto& gb = adj_of(nd.parents[1]);
                for (size_t k = 0; k < adj.size(); ++k) {
                    accumulate(ga, a, k, adj[k]);
                    accumulate(gb, b, k, -adj[k]);
                }
                break;
            }
            case Op::mul: {
                const auto& a = tape.value(nd.parents[0]);
                const auto& b = tape.value(nd.parents[1]);
                auto& ga = adj_of(nd.parents[0]);
                auto& gb = adj_of(nd.parents[1]);
                for (size_t k = 0; k < adj.size(); ++k) {
                    accumulate(ga, a, k, adj[k] * at(b, k));
                    accumulate(gb, b, k, adj[k] * at(a, k));
                }
                break;
            }
            case Op::div: {
                const auto& a = tape.value(nd.parents[0]);
                const auto& b = tape.value(nd.parents[1]);
                auto& ga = adj_of(nd.parents[0]);
                auto& gb = adj_of(nd.parents[1]);
                for (size_t k = 0; k < adj.size(); ++k) {
                    double bk = at(b, k);
                    accumulate(ga, a, k, adj[k] / bk);
                    accumulate(gb, b, k, -adj[k] * at(a, k) / (bk * bk));
                }
                break;
            }
            case Op::neg: {
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < adj.size(); ++k) ga[k] -= adj[k];
                break;
            }
            case Op::exp: {
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < adj.size(); ++k) ga[k] += adj[k] * nd.value[k];
                break;
            }
            case Op::log: {
                const auto& a = tape.value(nd.parents[0]);
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < adj.size(); ++k) ga[k] += adj[k] / a[k];
                break;
            }
            case Op::sin: {
                const auto& a = tape.value(nd.parents[0]);
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < adj.size(); ++k) ga[k] += adj[k] * std::cos(a[k]);
                break;
            }
            case Op::cos: {
                const auto& a = tape.value(nd.parents[0]);
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < adj.size(); ++k) ga[k] -= adj[k] * std::sin(a[k]);
                break;
            }
            case Op::tanh: {
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < adj.size(); ++k)
                    ga[k] += adj[k] * (1.0 - nd.value[k] * nd.value[k]);
                break;
            }
            case Op::power: {
                const auto& a = tape.value(nd.parents[0]);
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < adj.size(); ++k)
                    ga[k] += adj[k] * nd.exponent * std::pow(a[k], nd.exponent - 1.0);
                break;
            }
            case Op::sum: {
                auto& ga = adj_of(nd.parents[0]);
                for (double& g : ga) g += adj[0];
                break;
            }
            case Op::dot: {
                const auto& a = tape.value(nd.parents[0]);
                const auto& b = tape.value(nd.parents[1]);
                auto& ga = adj_of(nd.parents[0]);
                auto& gb = adj_of(nd.parents[1]);
                for (size_t k = 0; k < a.size(); ++k) {
                    ga[k] += adj[0] * b[k];
                    gb[k] += adj[0] * a[k];
                }
                break;
            }
            case Op::matvec: {
                auto& ga = adj_of(nd.parents[0]);
                auto atv = sp::spmv_transpose(*nd.matrix, adj);
                for (size_t k = 0; k < ga.size(); ++k) ga[k] += atv[k];
                break;
            }
            case Op::gather: {
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < nd.indices.size(); ++k)
                    ga[static_cast<size_t>(nd.indices[k])] += adj[k];
                break;
            }
            case Op::scatter_add: {
                auto& ga = adj_of(nd.parents[0]);
                for (size_t k = 0; k < nd.indices.size(); ++k)
                    ga[k] += adj[static_cast<size_t>(nd.indices[k])];
                break;
            }
            case Op::constant:
                break;
        }
    }
    if (stats) stats->edges_visited = edges;

    std::vector<double> grad;
    for (int i : wrt_inputs) {
        const auto& a = adjoint[static_cast<size_t>(i)];
        if (a.empty())
            grad.insert(grad.end(), tape.value(i).size(), 0.0);
        else
            grad.insert(grad.end(), a.begin(), a.end());
    }
    return grad;
}

size_t reachable_edges(const Tape& tape) {
    const int out = tape.output();
    std::vector<char> live(static_cast<size_t>(tape.size()), 0);
    live[static_cast<size_t>(out)] = 1;
    size_t edges = 0;
    for (int i = out; i >= 0; --i) {
        if (!live[static_cast<size_t>(i)]) continue;
        for (int p : tape.node(i).parents) live[static_cast<size_t>(p)] = 1;
        edges += tape.node(i).parents.size();
    }
    return edges;
}

}  // namespace pclbench::ad
