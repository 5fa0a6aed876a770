#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmiql/qmodel.hpp"

namespace lmiql {

/// One solve (or LSPI evaluation step) inside a training run.
struct SolveLogEntry {
  /// Line-search penalty for LMI-QL, iteration index otherwise.
  double key = 0.0;
  std::string status;
  /// Objective of the solved program without the trace penalty.
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// l1 Bellman cost of the extracted parameters.
  double upper_bound = std::numeric_limits<double>::quiet_NaN();
  /// max_k (t_k - |z_k|) at the returned point.
  double epigraph_gap = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  std::string method;
  QParams params;
  /// Policy the method hands to evaluation (greedy policy of params when defined).
  AffinePolicy policy;
  /// Guaranteed lower bound on the l1 Bellman problem (LMI-QL only, NaN otherwise).
  double relaxed_cost = std::numeric_limits<double>::quiet_NaN();
  double upper_bound_cost = std::numeric_limits<double>::quiet_NaN();
  double selected_lambda = std::numeric_limits<double>::quiet_NaN();
  std::vector<SolveLogEntry> solve_log;
  /// Number of extracted S matrices whose eigenvalues were lifted to the margin.
  int s_clipped = 0;
  /// Iterations whose S_uu was indefinite (LSPI keeps the previous policy on those).
  int indefinite_iterations = 0;
  bool rank_deficient_data = false;
};

/// Training could not produce any parameters; carries the per-solve statuses.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::vector<SolveLogEntry> log)
      : std::runtime_error(what), log_(std::move(log)) {}
  const std::vector<SolveLogEntry>& log() const { return log_; }

 private:
  std::vector<SolveLogEntry> log_;
};

}  // namespace lmiql
