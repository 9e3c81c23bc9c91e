#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pclbench/autodiff.hpp"

namespace pclbench::nn {

/// Fully-connected network with tanh hidden activations and an identity (or
/// optionally squashed) output layer. Parameters are a flat vector: per
/// layer, weights in row-major order (out x in) followed by biases.
class MLP {
public:
    MLP(std::vector<int> layer_sizes, bool output_squash = false);

    int param_count() const { return param_count_; }
    int input_width() const { return layer_sizes_.front(); }
    int output_width() const { return layer_sizes_.back(); }
    const std::vector<int>& layer_sizes() const { return layer_sizes_; }
    bool output_squash() const { return squash_; }

    /// Batched forward pass: u has B entries, result is B x output_width
    /// stored row-major per sample.
    std::vector<double> forward(std::span<const double> theta, std::span<const double> u) const;

    /// Analytic d(output)/du for each sample and output, same layout as forward.
    std::vector<double> input_derivative(std::span<const double> theta,
                                         std::span<const double> u) const;

    /// Glorot-uniform hidden weights, zero biases; reproducible for a seed.
    std::vector<double> init_params(std::uint64_t seed) const;

    /// Records the forward pass over a batch on the tape. theta_node is a
    /// vector input node holding the flat parameters; returns one vector
    /// node id per network output (each of batch length).
    std::vector<int> tape_forward(ad::Tape& tape, int theta_node,
                                  std::span<const double> u) const;

    std::string to_json(std::span<const double> theta) const;
    std::vector<double> params_from_json(const std::string& text) const;

private:
    void check_theta(std::span<const double> theta) const;
    std::vector<int> layer_sizes_;
    bool squash_ = false;
    int param_count_ = 0;
};

}  // namespace pclbench::nn
