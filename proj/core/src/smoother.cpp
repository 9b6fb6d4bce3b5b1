#include "tfgsmooth/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "tfgsmooth/errors.hpp"

namespace tfgsmooth {

namespace {

Eigen::MatrixXd information_of(const Eigen::MatrixXd& C, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + " covariance is not positive definite");
  }
  const Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(C.rows(), C.cols()));
  return 0.5 * (W + W.transpose());
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void Window::check() const {
  if (states.empty()) throw InputError("window has no states");
  if (dynamics.size() + 1 != states.size()) {
    throw InputError("window needs exactly one dynamics factor between consecutive states");
  }
  for (const auto& pf : positions) {
    if (pf.state >= states.size()) throw InputError("position factor references a missing state");
  }
}

StepTransition transition(const Window& w, std::size_t i) {
  const TfgElement& xi = w.states[i].estimate;
  return std::visit(
      Overloaded{
          [&](const ImuSegment& seg) {
            return compound(w.kind, xi, seg.samples, seg.t_end, w.gravity, w.noise);
          },
          [&](const RandomWalk& rw) { return StepTransition{Mat15::Identity(), rw.Q, xi}; }},
      w.dynamics[i]);
}

double LinearizedProblem::cost() const {
  double c = 0.0;
  for (const auto& b : blocks) c += b.r.dot(b.information * b.r);
  return c;
}

void LinearizedProblem::normal_equations(Eigen::MatrixXd& H, Eigen::VectorXd& g) const {
  const Eigen::Index n = static_cast<Eigen::Index>(num_states) * kStateDim;
  H.setZero(n, n);
  g.setZero(n);
  for (const auto& b : blocks) {
    for (const auto& [i, Ji] : b.jacobians) {
      const Eigen::MatrixXd JtW = Ji.transpose() * b.information;
      const auto oi = static_cast<Eigen::Index>(i) * kStateDim;
      g.segment(oi, kStateDim) += JtW * b.r;
      for (const auto& [j, Jj] : b.jacobians) {
        const auto oj = static_cast<Eigen::Index>(j) * kStateDim;
        H.block(oi, oj, kStateDim, kStateDim) += JtW * Jj;
      }
    }
  }
}

namespace {

// Covariances of every factor, evaluated once and held fixed while the
// solver iterates so that it minimizes a fixed-weight least-squares cost.
struct FactorWeights {
  Eigen::MatrixXd prior_cov, prior_info;
  std::vector<Eigen::MatrixXd> dyn_cov, dyn_info;
  std::vector<Eigen::MatrixXd> pos_info;
};

Tangent prior_residual(const Window& w) {
  return local_coordinates(w.kind, w.prior.mean, w.states.front().estimate);
}

Eigen::MatrixXd position_jacobian(const TfgElement& x) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(3, kStateDim);
  H.block<3, 3>(0, kPos) = x.R;
  return H;
}

StepTransition mean_transition(const Window& w, std::size_t i) {
  const TfgElement& xi = w.states[i].estimate;
  return std::visit(
      Overloaded{[&](const ImuSegment& seg) {
                   return compound_jacobian(w.kind, xi, seg.samples, seg.t_end, w.gravity);
                 },
                 [&](const RandomWalk&) { return StepTransition{Mat15::Identity(), Mat15::Zero(), xi}; }},
      w.dynamics[i]);
}

TfgElement predict(const Window& w, std::size_t i) {
  const TfgElement& xi = w.states[i].estimate;
  return std::visit(
      Overloaded{[&](const ImuSegment& seg) {
                   return propagate_stream(xi, seg.samples, seg.t_end, w.gravity);
                 },
                 [&](const RandomWalk&) { return xi; }},
      w.dynamics[i]);
}

FactorWeights weights_of(const LinearizedProblem& lp, const Window& w) {
  FactorWeights fw;
  fw.prior_cov = lp.blocks[0].covariance;
  fw.prior_info = lp.blocks[0].information;
  const std::size_t n_dyn = w.dynamics.size();
  for (std::size_t i = 0; i < n_dyn; ++i) {
    fw.dyn_cov.push_back(lp.blocks[1 + i].covariance);
    fw.dyn_info.push_back(lp.blocks[1 + i].information);
  }
  for (std::size_t k = 0; k < w.positions.size(); ++k) {
    fw.pos_info.push_back(lp.blocks[1 + n_dyn + k].information);
  }
  return fw;
}

// Same residuals and Jacobians as linearize, with the covariances taken
// from fw instead of being recomputed at the current estimates.
LinearizedProblem linearize_with(const Window& w, const FactorWeights& fw) {
  LinearizedProblem lp;
  lp.num_states = w.states.size();
  const Eigen::MatrixXd I15 = Eigen::MatrixXd::Identity(kStateDim, kStateDim);
  {
    ResidualBlock b;
    b.r = prior_residual(w);
    b.jacobians.emplace_back(0, I15);
    b.covariance = fw.prior_cov;
    b.information = fw.prior_info;
    lp.blocks.push_back(std::move(b));
  }
  for (std::size_t i = 0; i + 1 < w.states.size(); ++i) {
    const StepTransition tr = mean_transition(w, i);
    ResidualBlock b;
    b.r = local_coordinates(w.kind, tr.predicted, w.states[i + 1].estimate);
    b.jacobians.emplace_back(i, -Eigen::MatrixXd(tr.F));
    b.jacobians.emplace_back(i + 1, I15);
    b.covariance = fw.dyn_cov[i];
    b.information = fw.dyn_info[i];
    lp.blocks.push_back(std::move(b));
  }
  for (std::size_t k = 0; k < w.positions.size(); ++k) {
    const PositionFactor& pf = w.positions[k];
    const TfgElement& x = w.states[pf.state].estimate;
    ResidualBlock b;
    b.r = x.p - pf.y;
    b.jacobians.emplace_back(pf.state, position_jacobian(x));
    b.covariance = pf.covariance;
    b.information = fw.pos_info[k];
    lp.blocks.push_back(std::move(b));
  }
  return lp;
}

double cost_with(const Window& w, const FactorWeights& fw) {
  const Tangent p0 = prior_residual(w);
  double c = p0.dot(fw.prior_info * p0);
  for (std::size_t i = 0; i + 1 < w.states.size(); ++i) {
    const Tangent r = local_coordinates(w.kind, predict(w, i), w.states[i + 1].estimate);
    c += r.dot(fw.dyn_info[i] * r);
  }
  for (std::size_t k = 0; k < w.positions.size(); ++k) {
    const PositionFactor& pf = w.positions[k];
    const Vec3 r = w.states[pf.state].estimate.p - pf.y;
    c += r.dot(fw.pos_info[k] * r);
  }
  return c;
}

}  // namespace

LinearizedProblem linearize(const Window& w) {
  w.check();
  LinearizedProblem lp;
  lp.num_states = w.states.size();
  const Eigen::MatrixXd I15 = Eigen::MatrixXd::Identity(kStateDim, kStateDim);

  {
    const Tangent p0 = prior_residual(w);
    ResidualBlock b;
    b.r = p0;
    b.jacobians.emplace_back(0, I15);
    b.covariance = prior_weight(w.kind, p0, w.prior.covariance);
    b.information = information_of(b.covariance, "prior");
    lp.blocks.push_back(std::move(b));
  }

  for (std::size_t i = 0; i + 1 < w.states.size(); ++i) {
    const StepTransition tr = transition(w, i);
    ResidualBlock b;
    b.r = local_coordinates(w.kind, tr.predicted, w.states[i + 1].estimate);
    b.jacobians.emplace_back(i, -Eigen::MatrixXd(tr.F));
    b.jacobians.emplace_back(i + 1, I15);
    b.covariance = tr.Q;
    b.information = information_of(b.covariance, "process");
    lp.blocks.push_back(std::move(b));
  }

  for (const auto& pf : w.positions) {
    const TfgElement& x = w.states[pf.state].estimate;
    ResidualBlock b;
    b.r = x.p - pf.y;
    b.jacobians.emplace_back(pf.state, position_jacobian(x));
    b.covariance = pf.covariance;
    b.information = information_of(b.covariance, "position");
    lp.blocks.push_back(std::move(b));
  }
  return lp;
}

double cost(const Window& w) { return linearize(w).cost(); }

SolveReport solve(Window& w, const SolverConfig& cfg) {
  SolveReport report;
  LinearizedProblem lp = linearize(w);
  const FactorWeights weights = weights_of(lp, w);
  double current = lp.cost();
  report.initial_cost = current;
  report.cost_trace.push_back(current);

  double lambda = cfg.lm_initial_lambda;
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  bool relinearize = false;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (current == 0.0) {
      report.converged = true;
      break;
    }
    report.iterations = it + 1;
    if (relinearize) {
      lp = linearize_with(w, weights);
      relinearize = false;
    }
    lp.normal_equations(H, g);
    Eigen::MatrixXd A = H;
    A.diagonal() += lambda * H.diagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
      throw SolverError(it, "normal equations are not positive definite");
    }
    const Eigen::VectorXd step = -llt.solve(g);
    if (!step.allFinite()) throw SolverError(it, "non-finite correction");

    if (step.norm() < cfg.step_tolerance) {
      report.converged = true;
      break;
    }

    Window candidate = w;
    for (std::size_t i = 0; i < w.states.size(); ++i) {
      candidate.states[i].estimate =
          retract(w.kind, w.states[i].estimate,
                  step.segment<kStateDim>(static_cast<Eigen::Index>(i) * kStateDim));
    }
    double next = std::numeric_limits<double>::infinity();
    try {
      next = cost_with(candidate, weights);
    } catch (const DomainError&) {
      // Candidate crossed a logarithm branch cut; treat as a rejected step.
    }

    if (next < current) {
      const double rel = (current - next) / std::max(current, 1e-300);
      w = std::move(candidate);
      current = next;
      report.cost_trace.push_back(current);
      relinearize = true;
      lambda /= 10.0;
      if (rel < cfg.cost_tolerance) {
        report.converged = true;
        break;
      }
    } else {
      if (lambda == 0.0) {
        // Gauss-Newton cannot make progress from here.
        report.converged = (next - current) <= cfg.cost_tolerance * std::max(current, 1e-300);
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  report.final_cost = current;
  return report;
}

void marginalize_oldest(Window& w) {
  if (w.states.size() < 2) throw InputError("marginalize_oldest: window needs two states");
  const LinearizedProblem lp = linearize(w);

  // Only blocks that touch state 0 enter the marginal; they involve at most
  // states 0 and 1 on a chain.
  Eigen::Matrix<double, 30, 30> H = Eigen::Matrix<double, 30, 30>::Zero();
  Eigen::Matrix<double, 30, 1> g = Eigen::Matrix<double, 30, 1>::Zero();
  for (const auto& b : lp.blocks) {
    const bool touches_oldest = std::any_of(b.jacobians.begin(), b.jacobians.end(),
                                            [](const auto& j) { return j.first == 0; });
    if (!touches_oldest) continue;
    for (const auto& [i, Ji] : b.jacobians) {
      const Eigen::MatrixXd JtW = Ji.transpose() * b.information;
      const auto oi = static_cast<Eigen::Index>(i) * kStateDim;
      g.segment<kStateDim>(oi) += JtW * b.r;
      for (const auto& [j, Jj] : b.jacobians) {
        const auto oj = static_cast<Eigen::Index>(j) * kStateDim;
        H.block<kStateDim, kStateDim>(oi, oj) += JtW * Jj;
      }
    }
  }

  const Mat15 H00 = H.topLeftCorner<15, 15>();
  const Mat15 H01 = H.topRightCorner<15, 15>();
  const Mat15 H11 = H.bottomRightCorner<15, 15>();
  Eigen::LLT<Mat15> llt00(H00);
  if (llt00.info() != Eigen::Success) {
    throw NumericalError("marginalize_oldest: singular block of the oldest state");
  }
  Mat15 Hm = H11 - H01.transpose() * llt00.solve(H01);
  Hm = 0.5 * (Hm + Hm.transpose());
  const Vec15 gm = g.tail<15>() - H01.transpose() * llt00.solve(g.head<15>());

  Eigen::LLT<Mat15> lltm(Hm);
  if (lltm.info() != Eigen::Success) {
    throw NumericalError("marginalize_oldest: marginal information is not positive definite");
  }
  Mat15 P = lltm.solve(Mat15::Identity());
  P = 0.5 * (P + P.transpose());
  const Tangent offset = P * gm;

  // Choose (mean, covariance) so that the next linearization at the current
  // estimate reproduces exactly this marginal.
  const TfgElement& x1 = w.states[1].estimate;
  PriorFactor prior;
  prior.mean = anchor_at_offset(w.kind, x1, offset);
  const Mat15 J = prior_jacobian(w.kind, offset);
  prior.covariance = J * P * J.transpose();
  prior.covariance = 0.5 * (prior.covariance + prior.covariance.transpose());

  w.prior = prior;
  w.states.erase(w.states.begin());
  w.dynamics.erase(w.dynamics.begin());
  std::vector<PositionFactor> kept;
  kept.reserve(w.positions.size());
  for (auto pf : w.positions) {
    if (pf.state == 0) continue;
    --pf.state;
    kept.push_back(pf);
  }
  w.positions = std::move(kept);
}

Mat15 covariance_at(const Window& w, std::size_t index) {
  if (index >= w.states.size()) throw InputError("covariance_at: index out of range");
  const LinearizedProblem lp = linearize(w);
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  lp.normal_equations(H, g);
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance_at: information matrix is not positive definite");
  }
  const auto n = H.rows();
  const auto o = static_cast<Eigen::Index>(index) * kStateDim;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, kStateDim);
  E.block(o, 0, kStateDim, kStateDim).setIdentity();
  const Eigen::MatrixXd cols = llt.solve(E);
  Mat15 C = cols.block(o, 0, kStateDim, kStateDim);
  return 0.5 * (C + C.transpose());
}

SlidingWindowSmoother::SlidingWindowSmoother(Parametrization kind, const SolverConfig& cfg,
                                             const ProcessNoise& noise, const Vec3& gravity)
    : cfg_(cfg) {
  if (cfg.window_size < 2) throw InputError("window_size must be at least 2");
  window_.kind = kind;
  window_.gravity = gravity;
  window_.noise = noise;
}

void SlidingWindowSmoother::initialize(double t, const TfgElement& estimate,
                                       const PriorFactor& prior) {
  window_.states = {WindowState{t, estimate}};
  window_.prior = prior;
  window_.dynamics.clear();
  window_.positions.clear();
}

void SlidingWindowSmoother::add_state(ImuSegment segment) {
  if (window_.states.empty()) throw InputError("add_state before initialize");
  if (segment.samples.empty()) throw InputError("add_state: empty IMU segment");
  const double t = segment.t_end;
  if (!(t > window_.states.back().t)) throw InputError("add_state: time must increase");
  const TfgElement predicted =
      propagate_stream(window_.states.back().estimate, segment.samples, segment.t_end,
                       window_.gravity);
  window_.states.push_back({t, predicted});
  window_.dynamics.emplace_back(std::move(segment));
}

void SlidingWindowSmoother::add_state(double t, const RandomWalk& walk) {
  if (window_.states.empty()) throw InputError("add_state before initialize");
  if (!(t > window_.states.back().t)) throw InputError("add_state: time must increase");
  window_.states.push_back({t, window_.states.back().estimate});
  window_.dynamics.emplace_back(walk);
}

void SlidingWindowSmoother::add_position(const Vec3& y, const Mat3& covariance) {
  if (window_.states.empty()) throw InputError("add_position before initialize");
  window_.positions.push_back({window_.states.size() - 1, y, covariance});
}

SolveReport SlidingWindowSmoother::update() {
  SolveReport report = solve(window_, cfg_);
  while (window_.states.size() > cfg_.window_size) marginalize_oldest(window_);
  return report;
}

}  // namespace tfgsmooth
