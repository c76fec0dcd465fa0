#include "rfap/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "rfap/common.hpp"

namespace rfap::scenario {

const std::vector<std::string>& maneuver_class_names() {
  static const std::vector<std::string> names{
      "ego-lane-change-right", "ego-lane-change-left", "cut-in-from-left",
      "cut-out-to-left",       "cut-in-from-right",    "following",
      "cut-out-to-right",
  };
  return names;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Lateral lane-change ramp from lat0 to lat0 + delta, centred at tc with
// time constant tau. tc/tau are chosen so the ramp is essentially complete
// inside the scenario window.
struct LateralRamp {
  double lat0 = 0.0;
  double delta = 0.0;
  double tc = 0.0;
  double tau = 1.0;
  double at(double t) const { return lat0 + delta * sigmoid((t - tc) / tau); }
};

struct Vehicle {
  double lon0 = 0.0;      // longitudinal position at t0, world frame
  double speed = 0.0;
  LateralRamp lateral;    // delta = 0 for straight driving
  double length = 4.6;
  double width = 1.9;

  double lon(double t) const { return lon0 + speed * t; }  // t relative to t0
  double lat(double t) const { return lateral.at(t); }
};

double uni(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vehicle make_vehicle(Rng& rng, double lon0, double speed, double lat0) {
  Vehicle v;
  v.lon0 = lon0;
  v.speed = speed;
  v.lateral.lat0 = lat0;
  v.length = uni(rng, 4.0, 5.2);
  v.width = uni(rng, 1.8, 2.1);
  return v;
}

void add_ramp(Rng& rng, Vehicle& v, double delta) {
  v.lateral.delta = delta;
  v.lateral.tc = uni(rng, -0.95, -0.55);  // relative to t0
  v.lateral.tau = uni(rng, 0.10, 0.15);
}

ScenarioTensor render_scenario(const std::vector<Vehicle>& vehicles, const Vehicle& ego,
                               const GridConfig& grid) {
  ScenarioTensor tensor;
  const double window = (grid.n_timesteps - 1) * grid.dt;
  for (int k = 0; k < grid.n_timesteps; ++k) {
    const double t = -window + k * grid.dt;  // ... t_{-1}, t_0
    std::vector<ObjectBox> boxes;
    boxes.push_back({0.0, 0.0, ego.length, ego.width});  // ego at grid centre
    for (const auto& v : vehicles) {
      boxes.push_back({v.lon(t) - ego.lon(t), v.lat(t) - ego.lat(t), v.length, v.width});
    }
    tensor.frames.push_back(build_grid_frame(boxes, EgoPose{0.0, 0.0}, grid));
  }
  return tensor;
}

ScenarioTensor synthesize_one(ManeuverClass cls, Rng& rng, const GridConfig& grid) {
  const double lane_width = uni(rng, 3.3, 3.9);
  const double v_ego = 30.0 * uni(rng, 0.8, 1.2);

  Vehicle ego = make_vehicle(rng, 0.0, v_ego, 0.0);
  std::vector<Vehicle> others;

  auto add_bystander = [&] {
    const double side = (std::uniform_int_distribution<int>(0, 1)(rng) == 0) ? 1.0 : -1.0;
    double lon = uni(rng, 12.0, 38.0) * ((std::uniform_int_distribution<int>(0, 1)(rng) == 0)
                                             ? 1.0
                                             : -1.0);
    others.push_back(make_vehicle(rng, lon, v_ego + uni(rng, -3.0, 3.0), side * lane_width));
  };

  switch (cls) {
    case ManeuverClass::EgoLaneChangeRight:
    case ManeuverClass::EgoLaneChangeLeft: {
      const double dir = (cls == ManeuverClass::EgoLaneChangeLeft) ? 1.0 : -1.0;
      add_ramp(rng, ego, dir * lane_width);
      others.push_back(
          make_vehicle(rng, uni(rng, 18.0, 38.0), v_ego + uni(rng, -2.5, 0.5), 0.0));
      break;
    }
    case ManeuverClass::CutInFromLeft:
    case ManeuverClass::CutInFromRight: {
      const double from = (cls == ManeuverClass::CutInFromLeft) ? 1.0 : -1.0;
      Vehicle cutter = make_vehicle(rng, uni(rng, 10.0, 20.0), v_ego + uni(rng, -2.0, 1.0),
                                    from * lane_width);
      add_ramp(rng, cutter, -from * lane_width);
      others.push_back(cutter);
      others.push_back(
          make_vehicle(rng, uni(rng, 32.0, 48.0), v_ego + uni(rng, -2.5, 0.5), 0.0));
      break;
    }
    case ManeuverClass::CutOutToLeft:
    case ManeuverClass::CutOutToRight: {
      const double to = (cls == ManeuverClass::CutOutToLeft) ? 1.0 : -1.0;
      Vehicle leader =
          make_vehicle(rng, uni(rng, 15.0, 30.0), v_ego + uni(rng, -1.5, 1.5), 0.0);
      add_ramp(rng, leader, to * lane_width);
      others.push_back(leader);
      // Slow vehicle further ahead, the usual reason for the cut-out.
      others.push_back(
          make_vehicle(rng, uni(rng, 45.0, 60.0), v_ego + uni(rng, -5.0, -2.0), 0.0));
      break;
    }
    case ManeuverClass::Following: {
      others.push_back(
          make_vehicle(rng, uni(rng, 15.0, 32.0), v_ego + uni(rng, -1.5, 0.5), 0.0));
      break;
    }
  }
  add_bystander();

  return render_scenario(others, ego, grid);
}

}  // namespace

ScenarioDataset generate_synthetic(const GeneratorConfig& config) {
  if (config.class_list.empty()) throw ConfigError("generate_synthetic: empty class_list");
  if (config.n_per_class < 1) throw ConfigError("generate_synthetic: n_per_class must be >= 1");
  config.grid.validate();
  const auto& names = maneuver_class_names();
  for (int c : config.class_list) {
    if (c < 1 || c > static_cast<int>(names.size()))
      throw ConfigError("generate_synthetic: unknown class id " + std::to_string(c));
  }

  ScenarioDataset out;
  out.grid = config.grid;
  out.class_names = names;
  out.num_labeled_classes = static_cast<int>(names.size());
  out.q_truth = 0;
  for (int c : config.class_list) {
    for (int n = 0; n < config.n_per_class; ++n) {
      Rng rng = make_stream(config.seed,
                            0x5CE0 + static_cast<std::uint64_t>(c) * 1000003u + n);
      out.labeled.emplace_back(synthesize_one(static_cast<ManeuverClass>(c), rng, config.grid),
                               c);
    }
  }
  return out;
}

}  // namespace rfap::scenario
