#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "switching/types.hpp"

namespace switching {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { relu, tanh, identity };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

struct Architecture {
    int input_dim = 0;
    std::vector<int> hidden;
    std::vector<Activation> activations;  // one per hidden layer
    int output_dim = 1;

    void validate() const;
    [[nodiscard]] int param_count() const;
    bool operator==(const Architecture&) const = default;
};

// Stored forward pass: a[0] is the input block, a[l+1] the activation of
// hidden layer l; z[l] the pre-activation of hidden layer l.
struct MlpWorkspace {
    std::vector<MatrixXd> a;
    std::vector<MatrixXd> z;
};

// Fully connected network with linear output layer. Parameters live in one
// flat vector (per layer: column-major W, then b) so optimizers and
// checkpoints can treat them opaquely.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(Architecture arch);

    [[nodiscard]] const Architecture& arch() const { return arch_; }
    [[nodiscard]] int param_count() const { return arch_.param_count(); }

    // uniform(-1, 1) / sqrt(fan_in) weights, zero biases
    [[nodiscard]] VectorXd init_params(std::uint64_t seed) const;

    // inputs (input_dim x M) -> outputs (output_dim x M)
    void forward(const VectorXd& params, const MatrixXd& inputs, MatrixXd& outputs,
                 MlpWorkspace* ws = nullptr) const;

    // Accumulates sum_m weights[m] * d outputs(row_select[m], m) / d params
    // into grad (resized and zeroed here). row_select may be empty when
    // output_dim == 1.
    void backward_weighted(const VectorXd& params, const MlpWorkspace& ws,
                           const VectorXd& weights, const std::vector<int>& row_select,
                           VectorXd& grad) const;

    void check_params(const VectorXd& params) const;

private:
    Architecture arch_;
    std::vector<int> widths_;     // input, hidden..., output
    std::vector<int> w_offsets_;  // per layer: offset of W, then b follows
};

}  // namespace switching
