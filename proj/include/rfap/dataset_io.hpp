#pragma once

#include <string>

#include "rfap/scenario.hpp"

namespace rfap::scenario {

/// Persists a dataset as <dir>/manifest.json plus <dir>/data.bin, the latter
/// holding all tensors back to back as row-major little-endian 32-bit floats
/// with frames outermost. Sample order: labelled first, then unlabelled.
void save_dataset(const ScenarioDataset& dataset, const std::string& dir);

ScenarioDataset load_dataset(const std::string& dir);

}  // namespace rfap::scenario
