#include "lmc/overdamped.hpp"

#include <cmath>

namespace lmc {

void od_step(const Potential& U, ChainState& s, double delta, Vector& grad, Noise noise) {
  if (!(delta > 0)) throw DomainError("od_step: delta must be positive");
  checked_gradient(U, s.x, grad);
  s.x -= delta * grad;
  if (noise == Noise::on) {
    const double scale = std::sqrt(2.0 * delta);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) s.x(i) += scale * s.rng.gaussian();
  }
  ++s.step_index;
}

void od_step(const Potential& U, ChainState& s, double delta, Noise noise) {
  Vector g(s.x.size());
  od_step(U, s, delta, g, noise);
}

OdEnsemble::OdEnsemble(const Potential& U, const Vector& x0, std::size_t members, std::uint64_t seed) : U_(U) {
  require(members >= 1, "ensemble size must be positive");
  require(x0.size() == U.dim(), "x0 has the wrong dimension");
  if (!x0.allFinite()) throw DomainError("x0 has non-finite coordinates");
  chains_.reserve(members);
  for (std::size_t i = 0; i < members; ++i) chains_.push_back({x0, 0, RngStream(seed, i)});
}

void OdEnsemble::advance(double delta, std::uint64_t steps, Noise noise) {
  parallel_for(chains_.size(), [&](std::size_t i) {
    Vector g(U_.dim());
    for (std::uint64_t k = 0; k < steps; ++k) od_step(U_, chains_[i], delta, g, noise);
  });
  steps_ += steps;
}

Matrix OdEnsemble::positions() const {
  Matrix X(chains_.size(), U_.dim());
  for (std::size_t i = 0; i < chains_.size(); ++i) X.row(i) = chains_[i].x.transpose();
  return X;
}

std::vector<std::string> start_warnings(const Potential& U, const Vector& x0) {
  std::vector<std::string> w;
  if (x0.norm() > U.R())
    w.push_back("precondition: |x0| = " + std::to_string(x0.norm()) + " exceeds R = " + std::to_string(U.R()) +
                "; the convergence guarantee does not apply");
  return w;
}

SampleRun od_run(const Potential& U, const Vector& x0, const OverdampedPlan& plan, std::size_t ensemble,
                 std::uint64_t seed) {
  SampleRun out;
  out.warnings = start_warnings(U, x0);
  OdEnsemble ens(U, x0, ensemble, seed);
  ens.advance(plan.delta, plan.steps());
  out.x = ens.positions();
  return out;
}

}  // namespace lmc
