#include "pclbench/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pclbench::nn {

MLP::MLP(std::vector<int> layer_sizes, bool output_squash)
    : layer_sizes_(std::move(layer_sizes)), squash_(output_squash) {
    if (layer_sizes_.size() < 2) throw std::invalid_argument("MLP: need at least two layers");
    for (int w : layer_sizes_)
        if (w <= 0) throw std::invalid_argument("MLP: layer width must be positive");
    for (size_t l = 0; l + 1 < layer_sizes_.size(); ++l)
        param_count_ += layer_sizes_[l] * layer_sizes_[l + 1] + layer_sizes_[l + 1];
}

void MLP::check_theta(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != param_count_)
        throw std::invalid_argument("MLP: parameter vector length mismatch");
}

std::vector<double> MLP::forward(std::span<const double> theta, std::span<const double> u) const {
    check_theta(theta);
    if (input_width() != 1) throw std::invalid_argument("MLP: batched forward expects scalar input");
    const size_t batch = u.size();
    std::vector<double> act(u.begin(), u.end());
    std::vector<double> next;
    size_t off = 0;
    for (size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        const int nin = layer_sizes_[l];
        const int nout = layer_sizes_[l + 1];
        const bool last = l + 2 == layer_sizes_.size();
        next.assign(batch * static_cast<size_t>(nout), 0.0);
        for (int j = 0; j < nout; ++j) {
            const double* w = theta.data() + off + static_cast<size_t>(j) * nin;
            const double b = theta[off + static_cast<size_t>(nin) * nout + static_cast<size_t>(j)];
            for (size_t s = 0; s < batch; ++s) {
                double z = b;
                for (int k = 0; k < nin; ++k)
                    z += w[k] * act[s * static_cast<size_t>(nin) + static_cast<size_t>(k)];
                if (!last) {
                    z = std::tanh(z);
                } else if (squash_) {
                    z = 0.5 * (std::tanh(z) + 1.0);
                    // tanh saturates in double precision; keep the interval open
                    z = std::min(std::max(z, std::numeric_limits<double>::min()),
                                 std::nextafter(1.0, 0.0));
                }
                next[s * static_cast<size_t>(nout) + static_cast<size_t>(j)] = z;
            }
        }
        act.swap(next);
        off += static_cast<size_t>(nin) * nout + static_cast<size_t>(nout);
    }
    return act;
}

std::vector<double> MLP::input_derivative(std::span<const double> theta,
                                          std::span<const double> u) const {
    check_theta(theta);
    if (input_width() != 1)
        throw std::invalid_argument("MLP: input_derivative expects scalar input");
    const size_t batch = u.size();
    std::vector<double> act(u.begin(), u.end());
    std::vector<double> dact(batch, 1.0);  // d(act)/du
    std::vector<double> next, dnext;
    size_t off = 0;
    for (size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        const int nin = layer_sizes_[l];
        const int nout = layer_sizes_[l + 1];
        const bool last = l + 2 == layer_sizes_.size();
        next.assign(batch * static_cast<size_t>(nout), 0.0);
        dnext.assign(batch * static_cast<size_t>(nout), 0.0);
        for (int j = 0; j < nout; ++j) {
            const double* w = theta.data() + off + static_cast<size_t>(j) * nin;
            const double b = theta[off + static_cast<size_t>(nin) * nout + static_cast<size_t>(j)];
            for (size_t s = 0; s < batch; ++s) {
                double z = b, dz = 0.0;
                for (int k = 0; k < nin; ++k) {
                    z += w[k] * act[s * static_cast<size_t>(nin) + static_cast<size_t>(k)];
                    dz += w[k] * dact[s * static_cast<size_t>(nin) + static_cast<size_t>(k)];
                }
                if (!last) {
                    double t = std::tanh(z);
                    next[s * static_cast<size_t>(nout) + static_cast<size_t>(j)] = t;
                    dnext[s * static_cast<size_t>(nout) + static_cast<size_t>(j)] = (1.0 - t * t) * dz;
                } else if (squash_) {
                    double t = std::tanh(z);
                    next[s * static_cast<size_t>(nout) + static_cast<size_t>(j)] = 0.5 * (t + 1.0);
                    dnext[s * static_cast<size_t>(nout) + static_cast<size_t>(j)] =
                        0.5 * (1.0 - t * t) * dz;
                } else {
                    next[s * static_cast<size_t>(nout) + static_cast<size_t>(j)] = z;
                    dnext[s * static_cast<size_t>(nout) + static_cast<size_t>(j)] = dz;
                }
            }
        }
        act.swap(next);
        dact.swap(dnext);
        off += static_cast<size_t>(nin) * nout + static_cast<size_t>(nout);
    }
    return dact;
}

namespace {

// splitmix64; keeps initialization identical across platforms.
struct Rng {
    std::uint64_t state;
    double uniform() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
};

}  // namespace

std::vector<double> MLP::init_params(std::uint64_t seed) const {
    Rng rng{seed};
    std::vector<double> theta(static_cast<size_t>(param_count_), 0.0);
    size_t off = 0;
    for (size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        const int nin = layer_sizes_[l];
        const int nout = layer_sizes_[l + 1];
        const double bound = std::sqrt(6.0 / (nin + nout));
        for (int k = 0; k < nin * nout; ++k)
            theta[off + static_cast<size_t>(k)] = bound * (2.0 * rng.uniform() - 1.0);
        // biases stay zero
        off += static_cast<size_t>(nin) * nout + static_cast<size_t>(nout);
    }
    return theta;
}

std::vector<int> MLP::tape_forward(ad::Tape& tape, int theta_node,
                                   std::span<const double> u) const {
    if (static_cast<int>(tape.value(theta_node).size()) != param_count_)
        throw std::invalid_argument("tape_forward: theta node length mismatch");
    if (input_width() != 1) throw std::invalid_argument("tape_forward: scalar input expected");

    std::vector<int> act{tape.constant(std::vector<double>(u.begin(), u.end()))};
    int off = 0;
    for (size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        const int nin = layer_sizes_[l];
        const int nout = layer_sizes_[l + 1];
        const bool last = l + 2 == layer_sizes_.size();
        std::vector<int> next(static_cast<size_t>(nout));
        for (int j = 0; j < nout; ++j) {
            int z = tape.record_gather(theta_node, {off + nin * nout + j});  // bias
            for (int k = 0; k < nin; ++k) {
                int w = tape.record_gather(theta_node, {off + j * nin + k});
                z = tape.add(z, tape.mul(w, act[static_cast<size_t>(k)]));
            }
            if (!last)
                z = tape.tanh(z);
            else if (squash_)
                z = tape.mul(tape.add(tape.tanh(z), tape.constant(1.0)), tape.constant(0.5));
            next[static_cast<size_t>(j)] = z;
        }
        act.swap(next);
        off += nin * nout + nout;
    }
    return act;
}

std::string MLP::to_json(std::span<const double> theta) const {
    check_theta(theta);
    nlohmann::json j;
    j["layer_sizes"] = layer_sizes_;
    j["output_squash"] = squash_;
    j["theta"] = std::vector<double>(theta.begin(), theta.end());
    return j.dump(2);
}

std::vector<double> MLP::params_from_json(const std::string& text) const {
    nlohmann::json j = nlohmann::json::parse(text);
    auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (sizes != layer_sizes_)
        throw std::invalid_argument("params_from_json: architecture mismatch");
    auto theta = j.at("theta").get<std::vector<double>>();
    check_theta(theta);
    return theta;
}

}  // namespace pclbench::nn
