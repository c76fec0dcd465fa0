#pragma once

#include <cstddef>
#include <string>

#include "rfap/scenario.hpp"

namespace rfap::scenario {

struct IngestResult {
  ScenarioDataset dataset;   // all samples unlabelled, ground truth unknown
  std::size_t triggered = 0; // scenarios emitted
  std::size_t skipped = 0;   // triggers dropped for insufficient history
};

/// Extracts one scenario tensor per ego track from highD-layout CSV files.
/// t_0 is the first frame where the track has a leader and THW < threshold
/// (strict); frames are sampled at t_0 - {1.5, 1.0, 0.5, 0}s (per grid
/// config), rasterised ego-centred with the heading fixed by the ego's
/// direction of travel. Tracks without enough history are skipped and
/// counted.
IngestResult ingest_highd(const std::string& tracks_file, const std::string& recording_meta_file,
                          const GridConfig& config, double thw_threshold);

}  // namespace rfap::scenario
