#pragma once

#include <functional>
#include <string>

#include "laros/problem.hpp"

namespace laros {

enum class StopReason { Residual, Certified, IterationCap };
const char* to_string(StopReason r);

struct SolveReport {
  int outer_iters = 0;
  long inner_iters = 0;
  double wall_seconds = 0.0;
  double certify_seconds = 0.0;
  StopReason stop_reason = StopReason::IterationCap;
  bool certified = false;
  double residual = 0.0;   // outer stopping quantity at exit
  double objective = 0.0;  // ||X1||_* + theta ||X2||_1 at the returned iterate

  // "(59,325,9.36s,0.00s)": outer iterations, total inner iterations, wall
  // seconds, certification seconds.
  std::string tuple() const;
};

// Early-termination hook called by the outer loops every few iterations with
// the current iterate and the scalar multiplier estimate (z1 resp. y1);
// returning true stops the solve with StopReason::Certified.
using Certifier = std::function<bool(const PairedVariable& X, double lambda_hint)>;

struct SolveResult {
  PairedVariable X;
  DualPoint dual;  // final multiplier (z for the primal loop, y for the dual)
  SolveReport report;
};

}  // namespace laros
