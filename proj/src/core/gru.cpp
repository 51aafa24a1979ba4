#include "core/gru.hpp"

#include "core/common.hpp"

namespace tabret {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::VectorXd& x) {
    return 1.0 / (1.0 + (-x.array()).exp());
}

}  // namespace

GruGrads GruGrads::zeros_like(const GruParams& p) {
    GruGrads g;
    g.Wz = Eigen::MatrixXd::Zero(p.Wz.rows(), p.Wz.cols());
    g.Uz = Eigen::MatrixXd::Zero(p.Uz.rows(), p.Uz.cols());
    g.Wr = Eigen::MatrixXd::Zero(p.Wr.rows(), p.Wr.cols());
    g.Ur = Eigen::MatrixXd::Zero(p.Ur.rows(), p.Ur.cols());
    g.Wh = Eigen::MatrixXd::Zero(p.Wh.rows(), p.Wh.cols());
    g.Uh = Eigen::MatrixXd::Zero(p.Uh.rows(), p.Uh.cols());
    g.bz = Eigen::VectorXd::Zero(p.bz.size());
    g.br = Eigen::VectorXd::Zero(p.br.size());
    g.bh = Eigen::VectorXd::Zero(p.bh.size());
    return g;
}

GruStepCache gru_step_cached(const GruParams& params, const Eigen::VectorXd& input,
                             const Eigen::VectorXd& h_prev) {
    if (input.size() != params.input_dim() || h_prev.size() != params.hidden_dim()) {
        fail(ErrorKind::InvalidArgument, "gru_step: input/state dimensions do not match parameters");
    }
    GruStepCache cache;
    cache.input = input;
    cache.h_prev = h_prev;
    cache.z = sigmoid(params.Wz * input + params.Uz * h_prev + params.bz);
    cache.r = sigmoid(params.Wr * input + params.Ur * h_prev + params.br);
    cache.r_h_prev = cache.r.array() * h_prev.array();
    cache.h_tilde = (params.Wh * input + params.Uh * cache.r_h_prev + params.bh).array().tanh();
    cache.h = cache.z.array() * cache.h_tilde.array() + (1.0 - cache.z.array()) * h_prev.array();
    return cache;
}

Eigen::VectorXd gru_step(const GruParams& params, const Eigen::VectorXd& input,
                         const Eigen::VectorXd& h_prev) {
    return gru_step_cached(params, input, h_prev).h;
}

void gru_step_backward(const GruParams& params, const GruStepCache& cache, const Eigen::VectorXd& dh,
                       GruGrads& grads, Eigen::VectorXd& dh_prev, Eigen::VectorXd& dinput) {
    Eigen::VectorXd dz = dh.array() * (cache.h_tilde - cache.h_prev).array();
    Eigen::VectorXd dh_tilde = dh.array() * cache.z.array();
    dh_prev = (dh.array() * (1.0 - cache.z.array())).matrix();

    Eigen::VectorXd da_h = dh_tilde.array() * (1.0 - cache.h_tilde.array().square());
    grads.Wh += da_h * cache.input.transpose();
    grads.Uh += da_h * cache.r_h_prev.transpose();
    grads.bh += da_h;
    Eigen::VectorXd drh = params.Uh.transpose() * da_h;
    Eigen::VectorXd dr = drh.array() * cache.h_prev.array();
    dh_prev.array() += drh.array() * cache.r.array();

    Eigen::VectorXd da_r = dr.array() * cache.r.array() * (1.0 - cache.r.array());
    grads.Wr += da_r * cache.input.transpose();
    grads.Ur += da_r * cache.h_prev.transpose();
    grads.br += da_r;
    dh_prev += params.Ur.transpose() * da_r;

    Eigen::VectorXd da_z = dz.array() * cache.z.array() * (1.0 - cache.z.array());
    grads.Wz += da_z * cache.input.transpose();
    grads.Uz += da_z * cache.h_prev.transpose();
    grads.bz += da_z;
    dh_prev += params.Uz.transpose() * da_z;

    dinput = params.Wz.transpose() * da_z + params.Wr.transpose() * da_r + params.Wh.transpose() * da_h;
}

GruRunCache gru_run(const GruParams& params, const std::vector<Eigen::VectorXd>& inputs) {
    if (inputs.empty()) fail(ErrorKind::InvalidArgument, "gru_run: empty input sequence");
    GruRunCache run;
    run.steps.reserve(inputs.size());
    Eigen::VectorXd h = Eigen::VectorXd::Zero(params.hidden_dim());
    for (const auto& input : inputs) {
        run.steps.push_back(gru_step_cached(params, input, h));
        h = run.steps.back().h;
    }
    return run;
}

void gru_run_backward(const GruParams& params, const GruRunCache& run, const Eigen::VectorXd& dfinal,
                      GruGrads& grads, std::vector<Eigen::VectorXd>& dinputs) {
    dinputs.assign(run.steps.size(), Eigen::VectorXd());
    Eigen::VectorXd dh = dfinal;
    for (size_t i = run.steps.size(); i-- > 0;) {
        Eigen::VectorXd dh_prev, dinput;
        gru_step_backward(params, run.steps[i], dh, grads, dh_prev, dinput);
        dinputs[i] = std::move(dinput);
        dh = std::move(dh_prev);
    }
}

}  // namespace tabret
