#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gtsolve/continuation.hpp"
#include "gtsolve/ipa.hpp"

namespace gtsolve {

// High level driver: pick a start, trace the path, restart with a fresh
// randomized start when a trace fails or records nothing.
struct SolveConfig {
  TraceConfig trace;
  int max_restarts = 10;
  std::uint64_t seed = 1;
  // Run the iterated linearization first and either return its answer
  // directly (when it already meets the regret tolerance) or start the path
  // at the preimage of its best profile.
  bool ipa_quickstart = false;
  IpaConfig ipa;
  // Optional custom start constructor; defaults to the randomized
  // bonus-dominated start.
  std::function<PathState(const GameView&, std::mt19937_64&)> start_factory;
};

struct SolveResult {
  std::vector<EquilibriumRecord> equilibria;  // deduplicated across attempts
  TraceStatus last_status = TraceStatus::ReachedThreshold;
  int restarts = 0;        // attempts beyond the first
  long steps = 0;          // summed over attempts
  int ipa_iterations = 0;  // 0 unless the quickstart ran
  bool quickstart_direct = false;  // quickstart alone met the tolerance
};

SolveResult solve_game(const GameView& view, const SolveConfig& cfg = {});

}  // namespace gtsolve
