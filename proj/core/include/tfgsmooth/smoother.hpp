#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "tfgsmooth/imu_dynamics.hpp"
#include "tfgsmooth/parametrization.hpp"

namespace tfgsmooth {

struct SolverConfig {
  int max_iterations = 50;
  double cost_tolerance = 1e-8;    // relative cost change
  double step_tolerance = 1e-10;   // absolute norm of the stacked correction
  double lm_initial_lambda = 1e-4; // 0 selects plain Gauss-Newton
  std::size_t window_size = 5;
};

/// IMU samples between two consecutive states.
struct ImuSegment {
  std::vector<ImuSample> samples;
  double t_end = 0.0;
};

/// Identity dynamics x_{i+1} = x_i with process covariance Q.
struct RandomWalk {
  Mat15 Q = Mat15::Identity();
};

using DynamicsFactor = std::variant<ImuSegment, RandomWalk>;

struct WindowState {
  double t = 0.0;
  TfgElement estimate;
};

/// Gaussian prior on the oldest state: x ~ mean "+" N(0, covariance) in the
/// window's parametrization. The residual p0 = local(kind, mean, estimate)
/// is weighted by prior_weight(kind, p0, covariance).
struct PriorFactor {
  TfgElement mean;
  Mat15 covariance = Mat15::Identity();
};

struct PositionFactor {
  std::size_t state = 0;
  Vec3 y = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
};

/// Fixed-lag problem. Single owner, no shared state.
struct Window {
  Parametrization kind = Parametrization::kTfg;
  Vec3 gravity = kDefaultGravity;
  ProcessNoise noise;
  std::vector<WindowState> states;
  PriorFactor prior;                     // anchored at states.front()
  std::vector<DynamicsFactor> dynamics;  // dynamics[i] links states i and i+1
  std::vector<PositionFactor> positions;

  /// Throws InputError if the factor counts or indices are inconsistent.
  void check() const;
};

/// Transition of dynamics factor i evaluated at the current estimate of
/// state i.
StepTransition transition(const Window& w, std::size_t i);

/// Residual r(xi) ~= r + sum_j J_j xi_{state_j} with covariance C.
struct ResidualBlock {
  Eigen::VectorXd r;
  std::vector<std::pair<std::size_t, Eigen::MatrixXd>> jacobians;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd information;
};

struct LinearizedProblem {
  std::size_t num_states = 0;
  std::vector<ResidualBlock> blocks;

  /// sum r^T C^-1 r at the linearization point.
  double cost() const;
  /// H = sum J^T C^-1 J and g = sum J^T C^-1 r over the stacked tangent.
  void normal_equations(Eigen::MatrixXd& H, Eigen::VectorXd& g) const;
};

/// Builds the prior, dynamics and position residuals at the current
/// estimates. Position rows use H = [0 0 R 0 0]. Throws NumericalError on a
/// covariance that is not positive definite.
LinearizedProblem linearize(const Window& w);

/// Nonlinear cost of the window at its current estimates.
double cost(const Window& w);

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  /// Cost before the first iteration followed by the cost after every
  /// accepted step.
  std::vector<double> cost_trace;
};

/// Levenberg-Marquardt with Marquardt scaling (lambda * diag(H)); lambda is
/// divided by 10 on acceptance and multiplied by 10 on rejection. Throws
/// SolverError when the damped normal equations cannot be factorized.
SolveReport solve(Window& w, const SolverConfig& cfg);

/// Schur-complements the oldest state out of the linearized problem and
/// re-expresses the result as a prior on the next state.
void marginalize_oldest(Window& w);

/// Block of the inverse information matrix for state `index`.
Mat15 covariance_at(const Window& w, std::size_t index);

/// Drives a Window through the usual ingest cycle: append a state predicted
/// from the IMU, attach measurements, solve, then marginalize down to the
/// configured size.
class SlidingWindowSmoother {
 public:
  SlidingWindowSmoother(Parametrization kind, const SolverConfig& cfg, const ProcessNoise& noise,
                        const Vec3& gravity = kDefaultGravity);

  void initialize(double t, const TfgElement& estimate, const PriorFactor& prior);

  /// Appends a state at segment.t_end whose initial estimate is the IMU
  /// prediction from the newest state.
  void add_state(ImuSegment segment);
  /// Appends a state linked by identity dynamics.
  void add_state(double t, const RandomWalk& walk);

  void add_position(const Vec3& y, const Mat3& covariance);

  /// Solves, then marginalizes until the window fits cfg.window_size.
  SolveReport update();

  const Window& window() const { return window_; }
  Window& window() { return window_; }
  const SolverConfig& config() const { return cfg_; }

 private:
  Window window_;
  SolverConfig cfg_;
};

}  // namespace tfgsmooth
