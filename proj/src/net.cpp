#include "switching/net.hpp"

#include <cmath>

#include "switching/rng.hpp"

namespace switching {

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ValidationError("unknown activation: " + name);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        default: return "identity";
    }
}

void Architecture::validate() const {
    if (input_dim < 1) throw ValidationError("net: input_dim must be positive");
    if (output_dim < 1) throw ValidationError("net: output_dim must be positive");
    if (activations.size() != hidden.size())
        throw ValidationError("net: need one activation per hidden layer");
    for (int w : hidden)
        if (w < 1) throw ValidationError("net: hidden widths must be positive");
}

int Architecture::param_count() const {
    int count = 0;
    int in = input_dim;
    for (int w : hidden) {
        count += w * in + w;
        in = w;
    }
    count += output_dim * in + output_dim;
    return count;
}

Mlp::Mlp(Architecture arch) : arch_(std::move(arch)) {
    arch_.validate();
    widths_.push_back(arch_.input_dim);
    for (int w : arch_.hidden) widths_.push_back(w);
    widths_.push_back(arch_.output_dim);
    int offset = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        w_offsets_.push_back(offset);
        offset += widths_[l + 1] * widths_[l] + widths_[l + 1];
    }
}

void Mlp::check_params(const VectorXd& params) const {
    if (params.size() != param_count())
        throw ValidationError("net: parameter vector length " + std::to_string(params.size()) +
                              " does not match architecture (" +
                              std::to_string(param_count()) + ")");
}

VectorXd Mlp::init_params(std::uint64_t seed) const {
    VectorXd params = VectorXd::Zero(param_count());
    std::mt19937_64 rng = make_engine(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const int rows = widths_[l + 1], cols = widths_[l];
        const double scale = 1.0 / std::sqrt(double(cols));
        double* w = params.data() + w_offsets_[l];
        for (int k = 0; k < rows * cols; ++k) w[k] = scale * uni(rng);
        // biases stay zero
    }
    return params;
}

void Mlp::forward(const VectorXd& params, const MatrixXd& inputs, MatrixXd& outputs,
                  MlpWorkspace* ws) const {
    check_params(params);
    if (inputs.rows() != arch_.input_dim)
        throw ValidationError("net: input row count does not match input_dim");
    const int M = static_cast<int>(inputs.cols());
    const int L = static_cast<int>(arch_.hidden.size());

    if (ws) {
        ws->a.assign(L + 1, MatrixXd());
        ws->z.assign(L, MatrixXd());
        ws->a[0] = inputs;
    }

    MatrixXd cur = inputs;
    for (int l = 0; l < L; ++l) {
        const int rows = widths_[l + 1], cols = widths_[l];
        Eigen::Map<const MatrixXd> W(params.data() + w_offsets_[l], rows, cols);
        Eigen::Map<const VectorXd> b(params.data() + w_offsets_[l] + rows * cols, rows);
        MatrixXd z = (W * cur).colwise() + b;
        if (ws) ws->z[l] = z;
        switch (arch_.activations[l]) {
            case Activation::relu: cur = z.cwiseMax(0.0); break;
            case Activation::tanh: cur = z.array().tanh().matrix(); break;
            case Activation::identity: cur = std::move(z); break;
        }
        if (ws) ws->a[l + 1] = cur;
    }
    const int rows = widths_[L + 1], cols = widths_[L];
    Eigen::Map<const MatrixXd> W(params.data() + w_offsets_[L], rows, cols);
    Eigen::Map<const VectorXd> b(params.data() + w_offsets_[L] + rows * cols, rows);
    outputs = (W * cur).colwise() + b;
    (void)M;
}

void Mlp::backward_weighted(const VectorXd& params, const MlpWorkspace& ws,
                            const VectorXd& weights, const std::vector<int>& row_select,
                            VectorXd& grad) const {
    check_params(params);
    const int L = static_cast<int>(arch_.hidden.size());
    const int M = static_cast<int>(ws.a[0].cols());
    if (weights.size() != M)
        throw ValidationError("net: one weight per sample required");
    if (arch_.output_dim > 1 && static_cast<int>(row_select.size()) != M)
        throw ValidationError("net: row_select required for multi-output networks");

    grad.setZero(param_count());

    MatrixXd delta = MatrixXd::Zero(arch_.output_dim, M);
    if (arch_.output_dim == 1) {
        delta.row(0) = weights.transpose();
    } else {
        for (int m = 0; m < M; ++m) delta(row_select[m], m) = weights[m];
    }

    for (int l = L; l >= 0; --l) {
        const int rows = widths_[l + 1], cols = widths_[l];
        Eigen::Map<const MatrixXd> W(params.data() + w_offsets_[l], rows, cols);
        Eigen::Map<MatrixXd> gW(grad.data() + w_offsets_[l], rows, cols);
        Eigen::Map<VectorXd> gb(grad.data() + w_offsets_[l] + rows * cols, rows);

        gW.noalias() = delta * ws.a[l].transpose();
        gb = delta.rowwise().sum();

        if (l == 0) break;
        MatrixXd back = W.transpose() * delta;
        switch (arch_.activations[l - 1]) {
            case Activation::relu:
                delta = (ws.z[l - 1].array() > 0.0).select(back.array(), 0.0).matrix();
                break;
            case Activation::tanh:
                delta = (back.array() * (1.0 - ws.a[l].array().square())).matrix();
                break;
            case Activation::identity:
                delta = std::move(back);
                break;
        }
    }
}

}  // namespace switching
