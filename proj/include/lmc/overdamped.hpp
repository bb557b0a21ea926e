#pragma once

#include "lmc/plan.hpp"
#include "lmc/potentials.hpp"

#include <functional>
#include <string>
#include <vector>

namespace lmc {

enum class Noise { on, off };

struct ChainState {
  Vector x;
  std::uint64_t step_index = 0;
  RngStream rng;
};

/// One overdamped step: x ← x − δ∇U(x) + √(2δ) ξ. `grad` is scratch space of length d.
void od_step(const Potential& U, ChainState& s, double delta, Vector& grad, Noise noise = Noise::on);
void od_step(const Potential& U, ChainState& s, double delta, Noise noise = Noise::on);

/// Output of an ensemble run: one row per member.
struct SampleRun {
  Matrix x;
  Matrix u;  // velocities (underdamped, when requested)
  std::vector<std::string> warnings;
};

/// Independent chains from a common start. Member i draws from stream (seed, i),
/// so results do not depend on the thread layout.
class OdEnsemble {
 public:
  OdEnsemble(const Potential& U, const Vector& x0, std::size_t members, std::uint64_t seed);
  void advance(double delta, std::uint64_t steps, Noise noise = Noise::on);
  Matrix positions() const;
  std::uint64_t steps_taken() const { return steps_; }
  std::size_t size() const { return chains_.size(); }

 private:
  const Potential& U_;
  std::vector<ChainState> chains_;
  std::uint64_t steps_ = 0;
};

/// Runs `ensemble` chains for plan.n steps from x0. ‖x0‖ > R adds a warning.
SampleRun od_run(const Potential& U, const Vector& x0, const OverdampedPlan& plan, std::size_t ensemble,
                 std::uint64_t seed);

std::vector<std::string> start_warnings(const Potential& U, const Vector& x0);

}  // namespace lmc
