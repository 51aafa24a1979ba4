#pragma once

#include <Eigen/Core>
#include <vector>

namespace tabret {

// Gated recurrent unit:
//   z = sigmoid(W_z e + U_z h_prev + b_z)
//   r = sigmoid(W_r e + U_r h_prev + b_r)
//   h~ = tanh(W_h e + U_h (r . h_prev) + b_h)
//   h = z . h~ + (1 - z) . h_prev
struct GruParams {
    Eigen::MatrixXd Wz, Uz, Wr, Ur, Wh, Uh;
    Eigen::VectorXd bz, br, bh;

    int input_dim() const { return static_cast<int>(Wz.cols()); }
    int hidden_dim() const { return static_cast<int>(Wz.rows()); }
    bool empty() const { return Wz.size() == 0; }
};

struct GruGrads {
    Eigen::MatrixXd Wz, Uz, Wr, Ur, Wh, Uh;
    Eigen::VectorXd bz, br, bh;

    static GruGrads zeros_like(const GruParams& p);
};

struct GruStepCache {
    Eigen::VectorXd input, h_prev, z, r, h_tilde, r_h_prev, h;
};

Eigen::VectorXd gru_step(const GruParams& params, const Eigen::VectorXd& input,
                         const Eigen::VectorXd& h_prev);

GruStepCache gru_step_cached(const GruParams& params, const Eigen::VectorXd& input,
                             const Eigen::VectorXd& h_prev);

// Accumulates parameter gradients for one step and returns the gradients
// flowing to h_prev and to the input.
void gru_step_backward(const GruParams& params, const GruStepCache& cache, const Eigen::VectorXd& dh,
                       GruGrads& grads, Eigen::VectorXd& dh_prev, Eigen::VectorXd& dinput);

struct GruRunCache {
    std::vector<GruStepCache> steps;

    const Eigen::VectorXd& final_state() const { return steps.back().h; }
};

// Runs the cell over a non-empty input sequence from a zero initial state.
GruRunCache gru_run(const GruParams& params, const std::vector<Eigen::VectorXd>& inputs);

// Backpropagates a gradient on the final state through the whole run;
// dinputs is resized and filled position by position.
void gru_run_backward(const GruParams& params, const GruRunCache& run, const Eigen::VectorXd& dfinal,
                      GruGrads& grads, std::vector<Eigen::VectorXd>& dinputs);

}  // namespace tabret
