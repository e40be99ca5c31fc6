#pragma once

// Column-batched LSTM used by the mask estimators. Every column of the
// input matrices is an independent sequence; steps are given in processing
// order (a backward-direction layer simply receives them reversed).

#include <vector>

#include <Eigen/Core>

namespace undf::internal {

struct LstmWeights {
  const Eigen::MatrixXd& w_ih;  // 4H x in
  const Eigen::MatrixXd& w_hh;  // 4H x H
  const Eigen::MatrixXd& bias;  // 4H x 1
};

struct LstmTrace {
  Eigen::MatrixXd h0;
  std::vector<Eigen::MatrixXd> gates;   // activated i, f, g, o stacked (4H x N)
  std::vector<Eigen::MatrixXd> cell;    // H x N
  std::vector<Eigen::MatrixXd> hidden;  // H x N
};

struct LstmGrads {
  Eigen::MatrixXd& w_ih;
  Eigen::MatrixXd& w_hh;
  Eigen::MatrixXd& bias;
};

// Zero initial cell state; h0 may be zero or conditioning-derived.
void LstmForward(const LstmWeights& w, const std::vector<const Eigen::MatrixXd*>& inputs,
                 const Eigen::MatrixXd& h0, LstmTrace* trace);

// d_hidden[s] is dL/dh at step s (processing order). Accumulates into
// `grads`; writes dL/dh0 and dL/dx_s when the pointers are non-null.
void LstmBackward(const LstmWeights& w, const std::vector<const Eigen::MatrixXd*>& inputs,
                  const LstmTrace& trace, const std::vector<Eigen::MatrixXd>& d_hidden,
                  LstmGrads grads, Eigen::MatrixXd* d_h0,
                  std::vector<Eigen::MatrixXd>* d_inputs = nullptr);

}  // namespace undf::internal
