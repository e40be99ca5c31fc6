#include "lstm.h"

namespace undf::internal {

namespace {

Eigen::ArrayXXd Sigmoid(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

}  // namespace

void LstmForward(const LstmWeights& w, const std::vector<const Eigen::MatrixXd*>& inputs,
                 const Eigen::MatrixXd& h0, LstmTrace* trace) {
  const Eigen::Index h = w.w_hh.cols();
  const Eigen::Index n = h0.cols();
  trace->h0 = h0;
  trace->gates.resize(inputs.size());
  trace->cell.resize(inputs.size());
  trace->hidden.resize(inputs.size());

  Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(h, n);
  const Eigen::MatrixXd* h_prev = &trace->h0;
  Eigen::MatrixXd pre(4 * h, n);
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    pre.noalias() = w.w_ih * *inputs[s];
    pre.noalias() += w.w_hh * *h_prev;
    pre.colwise() += w.bias.col(0);

    Eigen::MatrixXd& gates = trace->gates[s];
    gates.resize(4 * h, n);
    gates.topRows(2 * h) = Sigmoid(pre.topRows(2 * h).array()).matrix();
    gates.middleRows(2 * h, h) = pre.middleRows(2 * h, h).array().tanh().matrix();
    gates.bottomRows(h) = Sigmoid(pre.bottomRows(h).array()).matrix();

    const auto i = gates.topRows(h).array();
    const auto f = gates.middleRows(h, h).array();
    const auto g = gates.middleRows(2 * h, h).array();
    const auto o = gates.bottomRows(h).array();
    trace->cell[s] = (f * c_prev.array() + i * g).matrix();
    trace->hidden[s] = (o * trace->cell[s].array().tanh()).matrix();
    c_prev = trace->cell[s];
    h_prev = &trace->hidden[s];
  }
}

void LstmBackward(const LstmWeights& w, const std::vector<const Eigen::MatrixXd*>& inputs,
                  const LstmTrace& trace, const std::vector<Eigen::MatrixXd>& d_hidden,
                  LstmGrads grads, Eigen::MatrixXd* d_h0,
                  std::vector<Eigen::MatrixXd>* d_inputs) {
  const Eigen::Index h = w.w_hh.cols();
  const Eigen::Index n = trace.h0.cols();
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(h, n);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(h, n);
  Eigen::MatrixXd d_pre(4 * h, n);
  const Eigen::MatrixXd zero_cell = Eigen::MatrixXd::Zero(h, n);
  if (d_inputs != nullptr) d_inputs->resize(inputs.size());

  for (std::size_t k = inputs.size(); k-- > 0;) {
    const auto& gates = trace.gates[k];
    const auto i = gates.topRows(h).array();
    const auto f = gates.middleRows(h, h).array();
    const auto g = gates.middleRows(2 * h, h).array();
    const auto o = gates.bottomRows(h).array();
    const Eigen::ArrayXXd tanh_c = trace.cell[k].array().tanh();
    const Eigen::MatrixXd& c_prev = k > 0 ? trace.cell[k - 1] : zero_cell;
    const Eigen::MatrixXd& h_prev = k > 0 ? trace.hidden[k - 1] : trace.h0;

    const Eigen::ArrayXXd dh = (d_hidden[k] + dh_next).array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tanh_c.square());

    d_pre.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
    d_pre.middleRows(h, h) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
    d_pre.middleRows(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
    d_pre.bottomRows(h) = (dh * tanh_c * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();

    grads.w_ih.noalias() += d_pre * inputs[k]->transpose();
    grads.w_hh.noalias() += d_pre * h_prev.transpose();
    grads.bias += d_pre.rowwise().sum();
    if (d_inputs != nullptr) (*d_inputs)[k].noalias() = w.w_ih.transpose() * d_pre;
    dh_next.noalias() = w.w_hh.transpose() * d_pre;
  }
  if (d_h0 != nullptr) *d_h0 = dh_next;
}

}  // namespace undf::internal
