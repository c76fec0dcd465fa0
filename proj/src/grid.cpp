#include "rfap/grid.hpp"

#include <cmath>

#include "rfap/common.hpp"

namespace rfap::scenario {

void GridConfig::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("grid: rows and cols must be positive");
  if (cell_width <= 0.0 || cell_length <= 0.0)
    throw ConfigError("grid: cell dimensions must be positive");
  if (n_timesteps < 2) throw ConfigError("grid: n_timesteps must be >= 2");
  if (dt <= 0.0) throw ConfigError("grid: dt must be positive");
}

GridConfig GridConfig::highd_default() {
  GridConfig g;
  g.rows = 30;
  g.cols = 200;
  g.cell_width = 0.5;
  g.cell_length = 1.0;
  g.n_timesteps = 4;
  g.dt = 0.5;
  return g;
}

double cell_center_lat(const GridConfig& config, int i) {
  return config.span_lateral() / 2.0 - (i + 0.5) * config.cell_width;
}

double cell_center_lon(const GridConfig& config, int j) {
  return (j + 0.5) * config.cell_length - config.span_longitudinal() / 2.0;
}

OccupancyGrid build_grid_frame(const std::vector<ObjectBox>& objects, const EgoPose& ego,
                               const GridConfig& config, double sensor_range_lon,
                               double sensor_range_lat) {
  config.validate();
  if (!std::isfinite(ego.lon) || !std::isfinite(ego.lat))
    throw DataError("build_grid_frame: non-finite ego pose");
  for (const auto& o : objects) {
    if (!std::isfinite(o.lon) || !std::isfinite(o.lat) || !std::isfinite(o.length) ||
        !std::isfinite(o.width))
      throw DataError("build_grid_frame: non-finite object pose");
  }

  OccupancyGrid grid(config.rows, config.cols, 0.0);
  for (int i = 0; i < config.rows; ++i) {
    const double lat = cell_center_lat(config, i);
    for (int j = 0; j < config.cols; ++j) {
      const double lon = cell_center_lon(config, j);
      if (std::abs(lon) > sensor_range_lon || std::abs(lat) > sensor_range_lat) {
        grid.at(i, j) = 0.5;
        continue;
      }
      for (const auto& o : objects) {
        const double rel_lon = o.lon - ego.lon;
        const double rel_lat = o.lat - ego.lat;
        if (std::abs(lon - rel_lon) <= o.length / 2.0 &&
            std::abs(lat - rel_lat) <= o.width / 2.0) {
          grid.at(i, j) = 1.0;
          break;
        }
      }
    }
  }
  return grid;
}

}  // namespace rfap::scenario
