#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfap/scenario.hpp"

namespace rfap::scenario {

/// The seven highway manoeuvre classes, in catalogue order. Class ids used
/// throughout are 1-based positions in this list.
enum class ManeuverClass : int {
  EgoLaneChangeRight = 1,
  EgoLaneChangeLeft = 2,
  CutInFromLeft = 3,
  CutOutToLeft = 4,
  CutInFromRight = 5,
  Following = 6,
  CutOutToRight = 7,
};

const std::vector<std::string>& maneuver_class_names();

struct GeneratorConfig {
  std::uint64_t seed = 0;
  int n_per_class = 10;
  GridConfig grid;
  std::vector<int> class_list{1, 2, 3, 4, 5, 6, 7};
};

/// Generates straight-road scenarios: constant-speed longitudinal motion,
/// sigmoid lateral ramps for lane changes, jitter on speeds, gaps, ramp
/// timing and lane width. Grids are ego-centred per frame with the heading
/// fixed by the ego's direction of travel. Every sample lands in `labeled`
/// tagged with its catalogue class id; deterministic given the seed.
ScenarioDataset generate_synthetic(const GeneratorConfig& config);

}  // namespace rfap::scenario
