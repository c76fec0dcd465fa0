#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace rfap::scenario {

/// Geometry of the discretised space-time representation. Rows are lateral
/// (I cells of cell_width metres), columns longitudinal (J cells of
/// cell_length metres); a scenario stacks n_timesteps grids dt seconds apart.
struct GridConfig {
  int rows = 16;              // I
  int cols = 64;              // J
  double cell_width = 0.75;   // m, lateral extent of one cell
  double cell_length = 1.5;   // m, longitudinal extent of one cell
  int n_timesteps = 4;        // N_ts
  double dt = 0.5;            // s

  double span_lateral() const { return rows * cell_width; }
  double span_longitudinal() const { return cols * cell_length; }
  std::size_t cells_per_frame() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::size_t cells_total() const { return cells_per_frame() * n_timesteps; }

  void validate() const;  // throws ConfigError

  /// Paper-scale configuration used for highD ingestion: 30x200 cells over
  /// 15m x 200m at 0.5m x 1m, four frames 0.5s apart.
  static GridConfig highd_default();
};

/// A single occupancy grid. Raw construction only emits the three cell
/// states: 0 free, 0.5 unknown, 1 occupied. Stored row-major (rows x cols).
struct OccupancyGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  OccupancyGrid() = default;
  OccupancyGrid(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
};

/// Axis-aligned rectangle: centre (lon, lat) in metres, longitudinal extent
/// `length`, lateral extent `width`. Object and ego poses share one frame;
/// the rasteriser works on the difference, so passing ego = (0, 0) means the
/// boxes are already ego-relative.
struct ObjectBox {
  double lon = 0.0;
  double lat = 0.0;
  double length = 0.0;
  double width = 0.0;
};

struct EgoPose {
  double lon = 0.0;
  double lat = 0.0;
};

/// Rasterises objects into one grid. A cell is occupied when its centre lies
/// inside an object rectangle (boundaries inclusive); cells whose centre is
/// beyond the sensor range are unknown (0.5); everything else is free.
/// Sensor range defaults to unlimited. Non-finite poses are rejected.
OccupancyGrid build_grid_frame(const std::vector<ObjectBox>& objects, const EgoPose& ego,
                               const GridConfig& config,
                               double sensor_range_lon = std::numeric_limits<double>::infinity(),
                               double sensor_range_lat = std::numeric_limits<double>::infinity());

/// Centre coordinates of cell (i, j) in the ego frame; the grid is centred
/// on the ego, row 0 is the leftmost lateral band, column 0 the rearmost.
double cell_center_lat(const GridConfig& config, int i);
double cell_center_lon(const GridConfig& config, int j);

}  // namespace rfap::scenario
