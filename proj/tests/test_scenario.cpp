#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "rfap/dataset_io.hpp"
#include "rfap/highd.hpp"
#include "rfap/synthetic.hpp"

using namespace rfap;
using namespace rfap::scenario;

namespace {

GridConfig small_grid() {
  GridConfig g;
  g.rows = 16;
  g.cols = 64;
  g.cell_width = 0.75;
  g.cell_length = 1.5;
  g.n_timesteps = 4;
  g.dt = 0.5;
  return g;
}

// Brute-force point-in-rectangle reference for the rasteriser.
OccupancyGrid rasterize_oracle(const std::vector<ObjectBox>& objects, const GridConfig& g) {
  OccupancyGrid grid(g.rows, g.cols, 0.0);
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) {
      const double lat = cell_center_lat(g, i);
      const double lon = cell_center_lon(g, j);
      for (const auto& o : objects) {
        if (lon >= o.lon - o.length / 2 && lon <= o.lon + o.length / 2 &&
            lat >= o.lat - o.width / 2 && lat <= o.lat + o.width / 2)
          grid.at(i, j) = 1.0;
      }
    }
  }
  return grid;
}

std::size_t occupied_count(const OccupancyGrid& g) {
  std::size_t n = 0;
  for (double v : g.values) n += (v == 1.0);
  return n;
}

ScenarioTensor ramp_tensor() {
  // 4 frames with a distinct constant fill each, so permutations are visible.
  ScenarioTensor t;
  for (int k = 0; k < 4; ++k) t.frames.emplace_back(2, 3, 0.25 * k);
  return t;
}

std::filesystem::path fixture_dir() {
  auto dir = std::filesystem::temp_directory_path() / "rfap_scenario_fixtures";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_fixture(const std::string& name, const std::string& content) {
  const auto path = fixture_dir() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

const char* kMetaCsv = "id,frameRate,locationId\n1,2,1\n";

}  // namespace

// ---------------------------------------------------------------------------
// Rasterisation
// ---------------------------------------------------------------------------

TEST_CASE("empty scene with full visibility is all free") {
  const auto grid = build_grid_frame({}, EgoPose{}, small_grid());
  for (double v : grid.values) CHECK(v == 0.0);
}

TEST_CASE("single centred object matches the point-in-rectangle oracle") {
  const GridConfig g = small_grid();
  const std::vector<ObjectBox> objects{{10.0, 1.0, 4.0, 2.0}};
  const auto grid = build_grid_frame(objects, EgoPose{}, g);
  const auto expect = rasterize_oracle(objects, g);
  CHECK(grid.values == expect.values);
  CHECK(occupied_count(grid) > 0);
}

TEST_CASE("object entirely outside the span matches the empty scene") {
  const GridConfig g = small_grid();
  const auto with_far = build_grid_frame({{500.0, 0.0, 4.0, 2.0}}, EgoPose{}, g);
  const auto empty = build_grid_frame({}, EgoPose{}, g);
  CHECK(with_far.values == empty.values);
}

TEST_CASE("non-finite pose is rejected") {
  CHECK_THROWS_AS(
      build_grid_frame({{std::nan(""), 0.0, 4.0, 2.0}}, EgoPose{}, small_grid()),
      DataError);
  CHECK_THROWS_AS(build_grid_frame({}, EgoPose{0.0, INFINITY}, small_grid()), DataError);
}

TEST_CASE("cells beyond the sensor range are unknown") {
  const GridConfig g = small_grid();
  const auto grid = build_grid_frame({}, EgoPose{}, g, /*range_lon=*/10.0, /*range_lat=*/3.0);
  bool has_unknown = false;
  for (int i = 0; i < g.rows; ++i)
    for (int j = 0; j < g.cols; ++j) {
      const bool outside = std::abs(cell_center_lon(g, j)) > 10.0 ||
                           std::abs(cell_center_lat(g, i)) > 3.0;
      CHECK(grid.at(i, j) == (outside ? 0.5 : 0.0));
      has_unknown |= outside;
    }
  CHECK(has_unknown);
}

TEST_CASE("occupied count is invariant under whole-cell longitudinal shifts") {
  const GridConfig g = small_grid();
  Rng rng = make_stream(11, 0);
  std::uniform_real_distribution<double> lon(-20.0, 20.0), lat(-3.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<ObjectBox> objects{{lon(rng), lat(rng), 4.2, 1.9}};
    const auto base = build_grid_frame(objects, EgoPose{}, g);
    for (int cells = -3; cells <= 3; ++cells) {
      auto shifted = objects;
      shifted[0].lon += cells * g.cell_length;
      const auto moved = build_grid_frame(shifted, EgoPose{}, g);
      CHECK(occupied_count(moved) == occupied_count(base));
    }
  }
}

// ---------------------------------------------------------------------------
// Permutations and temporal shuffling
// ---------------------------------------------------------------------------

TEST_CASE("permutation enumeration is the lexicographic bijection") {
  CHECK(PermutationLabel::from_index(1).order == std::array<int, 4>{1, 2, 3, 4});
  CHECK(PermutationLabel::from_index(2).order == std::array<int, 4>{1, 2, 4, 3});
  CHECK(PermutationLabel::from_index(24).order == std::array<int, 4>{4, 3, 2, 1});
  std::set<std::array<int, 4>> seen;
  for (int c = 1; c <= 24; ++c) {
    const auto p = PermutationLabel::from_index(c);
    CHECK(PermutationLabel::from_order(p.order).index == c);
    seen.insert(p.order);
  }
  CHECK(seen.size() == 24);
  CHECK_THROWS_AS(PermutationLabel::from_index(0), ConfigError);
  CHECK_THROWS_AS(PermutationLabel::from_index(25), ConfigError);
}

TEST_CASE("identity permutation reproduces the input") {
  const auto t = ramp_tensor();
  const auto out = shuffle_temporal(t, PermutationLabel::from_index(1));
  for (int k = 0; k < 4; ++k) CHECK(out.frames[k].values == t.frames[k].values);
}

TEST_CASE("order (4,2,3,1) moves frame 4 into slot 1") {
  const auto t = ramp_tensor();
  const auto perm = PermutationLabel::from_order({4, 2, 3, 1});
  const auto out = shuffle_temporal(t, perm);
  CHECK(out.frames[0].values == t.frames[3].values);
  CHECK(out.frames[1].values == t.frames[1].values);
  CHECK(out.frames[2].values == t.frames[2].values);
  CHECK(out.frames[3].values == t.frames[0].values);
}

TEST_CASE("a permutation followed by its inverse is the identity") {
  const auto t = ramp_tensor();
  const auto perm = PermutationLabel::from_order({3, 1, 4, 2});
  const auto back = shuffle_temporal(shuffle_temporal(t, perm), perm.inverse());
  for (int k = 0; k < 4; ++k) CHECK(back.frames[k].values == t.frames[k].values);
}

TEST_CASE("shuffling is a group action under composition") {
  const auto t = ramp_tensor();
  Rng rng = make_stream(5, 0);
  std::uniform_int_distribution<int> draw(1, 24);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = PermutationLabel::from_index(draw(rng));
    const auto q = PermutationLabel::from_index(draw(rng));
    const auto two_steps = shuffle_temporal(shuffle_temporal(t, p), q);
    const auto one_step = shuffle_temporal(t, PermutationLabel::compose(p, q));
    for (int k = 0; k < 4; ++k) CHECK(two_steps.frames[k].values == one_step.frames[k].values);
  }
}

TEST_CASE("shuffling rejects tensors without exactly 4 frames") {
  ScenarioTensor t;
  for (int k = 0; k < 3; ++k) t.frames.emplace_back(2, 2, 0.0);
  CHECK_THROWS_AS(shuffle_temporal(t, PermutationLabel::from_index(2)), ShapeError);
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

TEST_CASE("degenerate augmentation parameters are the identity") {
  const auto t = ramp_tensor();
  const auto out = augment(t, AugmentParams{0.0, 0.0, 123});
  for (int k = 0; k < 4; ++k) CHECK(out.frames[k].values == t.frames[k].values);
}

TEST_CASE("augmentation is deterministic given the seed") {
  const auto t = ramp_tensor();
  const AugmentParams params{0.1, 0.05, 42};
  const auto a = augment(t, params);
  const auto b = augment(t, params);
  for (int k = 0; k < 4; ++k) CHECK(a.frames[k].values == b.frames[k].values);
  const auto c = augment(t, AugmentParams{0.1, 0.05, 43});
  bool any_diff = false;
  for (int k = 0; k < 4; ++k) any_diff |= (a.frames[k].values != c.frames[k].values);
  CHECK(any_diff);
}

TEST_CASE("noise on an all-zero tensor has near-zero pre-clip mean") {
  ScenarioTensor t;
  for (int k = 0; k < 4; ++k) t.frames.emplace_back(16, 64, 0.0);
  const double sigma = 0.05;
  AugmentTrace trace;
  const auto out = augment(t, AugmentParams{0.0, sigma, 7}, &trace);
  REQUIRE(trace.pre_clip.size() == t.cell_count());
  double mean = 0;
  for (double v : trace.pre_clip) mean += v;
  mean /= static_cast<double>(trace.pre_clip.size());
  const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(trace.pre_clip.size()));
  CHECK(std::abs(mean) < bound);
  for (const auto& f : out.frames)
    for (double v : f.values) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("erased patch covers roughly the requested fraction with value 0.5") {
  ScenarioTensor t;
  for (int k = 0; k < 4; ++k) t.frames.emplace_back(16, 64, 1.0);
  const auto out = augment(t, AugmentParams{0.1, 0.0, 3});
  std::size_t unknown = 0;
  for (const auto& f : out.frames)
    for (double v : f.values) unknown += (v == 0.5);
  const double frac = static_cast<double>(unknown) / static_cast<double>(t.cell_count());
  CHECK(frac > 0.02);
  CHECK(frac < 0.3);
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace {
ScenarioDataset tiny_dataset(int per_class, int classes) {
  ScenarioDataset d;
  d.grid = small_grid();
  d.num_labeled_classes = classes;
  for (int c = 1; c <= classes; ++c)
    for (int n = 0; n < per_class; ++n) {
      ScenarioTensor t;
      for (int k = 0; k < 4; ++k)
        t.frames.emplace_back(2, 2, static_cast<double>(c * 1000 + n) / 100000.0);
      d.labeled.emplace_back(std::move(t), c);
    }
  return d;
}
}  // namespace

TEST_CASE("70 samples split (0.7, 0.1, 0.2) into sizes (49, 7, 14)") {
  const auto d = tiny_dataset(10, 7);
  const auto split = split_dataset(d, SplitRatios{0.7, 0.1, 0.2}, 9);
  CHECK(split.train.labeled.size() == 49);
  CHECK(split.val.labeled.size() == 7);
  CHECK(split.test.labeled.size() == 14);
}

TEST_CASE("ratios (1, 0, 0) put the whole dataset into train") {
  const auto d = tiny_dataset(5, 3);
  const auto split = split_dataset(d, SplitRatios{1.0, 0.0, 0.0}, 1);
  CHECK(split.train.labeled.size() == d.labeled.size());
  CHECK(split.val.labeled.empty());
  CHECK(split.test.labeled.empty());
}

TEST_CASE("the three parts partition the dataset for any seed") {
  const auto d = tiny_dataset(7, 4);
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 12345ull}) {
    const auto split = split_dataset(d, SplitRatios{0.7, 0.1, 0.2}, seed);
    std::multiset<double> original, recombined;
    for (const auto& s : d.labeled) original.insert(s.tensor.frames[0].values[0]);
    for (const auto* part : {&split.train, &split.val, &split.test})
      for (const auto& s : part->labeled) recombined.insert(s.tensor.frames[0].values[0]);
    CHECK(original == recombined);
  }
}

TEST_CASE("split is deterministic given the seed") {
  const auto d = tiny_dataset(6, 3);
  const auto a = split_dataset(d, SplitRatios{0.7, 0.1, 0.2}, 5);
  const auto b = split_dataset(d, SplitRatios{0.7, 0.1, 0.2}, 5);
  REQUIRE(a.train.labeled.size() == b.train.labeled.size());
  for (std::size_t k = 0; k < a.train.labeled.size(); ++k)
    CHECK(a.train.labeled[k].tensor.frames[0].values ==
          b.train.labeled[k].tensor.frames[0].values);
}

TEST_CASE("a class smaller than the number of split parts is a stratification error") {
  const auto d = tiny_dataset(2, 2);
  CHECK_THROWS_AS(split_dataset(d, SplitRatios{0.7, 0.1, 0.2}, 3), ConfigError);
}

TEST_CASE("ratios must sum to one") {
  const auto d = tiny_dataset(5, 2);
  CHECK_THROWS_AS(split_dataset(d, SplitRatios{0.5, 0.1, 0.2}, 3), ConfigError);
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

TEST_CASE("generator yields n_per_class tensors per class, bit-identical across runs") {
  GeneratorConfig cfg;
  cfg.seed = 1;
  cfg.n_per_class = 10;
  cfg.grid = small_grid();
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  REQUIRE(a.labeled.size() == 70);
  std::vector<int> per_class(8, 0);
  for (const auto& s : a.labeled) ++per_class[static_cast<std::size_t>(s.label())];
  for (int c = 1; c <= 7; ++c) CHECK(per_class[static_cast<std::size_t>(c)] == 10);
  for (std::size_t k = 0; k < a.labeled.size(); ++k)
    for (int f = 0; f < 4; ++f)
      CHECK(a.labeled[k].tensor.frames[f].values == b.labeled[k].tensor.frames[f].values);
}

TEST_CASE("raw generator output only contains the three cell states") {
  GeneratorConfig cfg;
  cfg.seed = 3;
  cfg.n_per_class = 4;
  cfg.grid = small_grid();
  const auto d = generate_synthetic(cfg);
  for (const auto& s : d.labeled)
    for (const auto& f : s.tensor.frames)
      for (double v : f.values) CHECK((v == 0.0 || v == 0.5 || v == 1.0));
}

TEST_CASE("empty class list is a config error") {
  GeneratorConfig cfg;
  cfg.class_list.clear();
  CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
}

namespace {
// Lateral centroid (metres) of occupied cells in a longitudinal/lateral box.
double region_lat_centroid(const OccupancyGrid& frame, const GridConfig& g, double lon_min,
                           double lat_min, double lat_max, bool* found) {
  double sum = 0;
  int n = 0;
  for (int i = 0; i < g.rows; ++i)
    for (int j = 0; j < g.cols; ++j) {
      const double lat = cell_center_lat(g, i);
      const double lon = cell_center_lon(g, j);
      if (frame.at(i, j) == 1.0 && lon > lon_min && lat > lat_min && lat < lat_max) {
        sum += lat;
        ++n;
      }
    }
  *found = n > 0;
  return n ? sum / n : 0.0;
}
}  // namespace

TEST_CASE("following: leader stays in the same lateral cells across all frames") {
  GeneratorConfig cfg;
  cfg.seed = 21;
  cfg.n_per_class = 8;
  cfg.grid = small_grid();
  cfg.class_list = {static_cast<int>(ManeuverClass::Following)};
  const auto d = generate_synthetic(cfg);
  for (const auto& s : d.labeled) {
    std::set<int> rows_first;
    for (int f = 0; f < 4; ++f) {
      std::set<int> rows;
      for (int i = 0; i < cfg.grid.rows; ++i)
        for (int j = 0; j < cfg.grid.cols; ++j) {
          const double lat = cell_center_lat(cfg.grid, i);
          if (s.tensor.frames[f].at(i, j) == 1.0 && cell_center_lon(cfg.grid, j) > 4.0 &&
              std::abs(lat) < 1.8)
            rows.insert(i);
        }
      REQUIRE(!rows.empty());
      if (f == 0)
        rows_first = rows;
      else
        CHECK(rows == rows_first);
    }
  }
}

TEST_CASE("ego lane change left: the former leader shifts right by about a lane width") {
  GeneratorConfig cfg;
  cfg.seed = 22;
  cfg.n_per_class = 8;
  cfg.grid = small_grid();
  cfg.class_list = {static_cast<int>(ManeuverClass::EgoLaneChangeLeft)};
  const auto d = generate_synthetic(cfg);
  for (const auto& s : d.labeled) {
    bool found0 = false, found3 = false;
    const double lat0 =
        region_lat_centroid(s.tensor.frames[0], cfg.grid, 4.0, -2.0, 2.0, &found0);
    const double lat3 =
        region_lat_centroid(s.tensor.frames[3], cfg.grid, 4.0, -5.8, -1.6, &found3);
    REQUIRE(found0);
    REQUIRE(found3);
    const double shift = lat3 - lat0;  // leftward ego move = rightward apparent shift
    CHECK(shift < -2.6);
    CHECK(shift > -4.7);
  }
}

// ---------------------------------------------------------------------------
// highD ingestion
// ---------------------------------------------------------------------------

namespace {

// Two-vehicle fixture at 2 fps: ego track 1 follows leader track 2. THW
// values per frame are explicit; positions advance 15 m per frame.
std::string tracks_csv(const std::vector<double>& thw_per_frame) {
  std::string csv = "frame,id,x,y,width,height,laneId,precedingId,thw\n";
  for (std::size_t f = 1; f <= thw_per_frame.size(); ++f) {
    const double ego_x = 100.0 + 15.0 * (f - 1);
    const double lead_x = ego_x + 30.0;
    csv += std::to_string(f) + ",1," + std::to_string(ego_x) + ",10.0,5.0,2.0,2,2," +
           std::to_string(thw_per_frame[f - 1]) + "\n";
    csv += std::to_string(f) + ",2," + std::to_string(lead_x) + ",10.0,5.0,2.0,2,0,0.0\n";
  }
  return csv;
}

GridConfig ingest_grid() {
  GridConfig g = small_grid();
  return g;
}

}  // namespace

TEST_CASE("a track whose minimum THW is exactly the threshold never triggers") {
  const auto tracks = write_fixture("thw_exact.csv", tracks_csv({5.0, 4.5, 4.0, 4.0, 4.0}));
  const auto meta = write_fixture("meta.csv", kMetaCsv);
  const auto result = ingest_highd(tracks, meta, ingest_grid(), 4.0);
  CHECK(result.triggered == 0);
  CHECK(result.dataset.unlabeled.empty());
}

TEST_CASE("THW crossing the threshold emits exactly one tensor anchored at that frame") {
  // THW drops below 4 at frame 4; 2 fps and dt = 0.5 s need frames 1..4.
  const auto tracks = write_fixture("thw_cross.csv", tracks_csv({5.0, 4.6, 4.2, 3.8, 3.5, 3.2}));
  const auto meta = write_fixture("meta.csv", kMetaCsv);
  const auto result = ingest_highd(tracks, meta, ingest_grid(), 4.0);
  REQUIRE(result.triggered == 1);
  REQUIRE(result.dataset.unlabeled.size() == 1);
  CHECK(result.skipped == 0);
  const auto& tensor = result.dataset.unlabeled[0];
  REQUIRE(tensor.n_frames() == 4);
  // The leader sits 30 m ahead at every sampled frame (same speed), so the
  // occupied band ahead of the ego must be identical across frames.
  for (int f = 1; f < 4; ++f) CHECK(tensor.frames[f].values == tensor.frames[0].values);
  for (const auto& frame : tensor.frames)
    for (double v : frame.values) CHECK((v == 0.0 || v == 0.5 || v == 1.0));
}

TEST_CASE("a trigger without enough history is skipped and counted") {
  const auto tracks = write_fixture("thw_early.csv", tracks_csv({3.0, 3.0, 3.0, 3.0}));
  const auto meta = write_fixture("meta.csv", kMetaCsv);
  const auto result = ingest_highd(tracks, meta, ingest_grid(), 4.0);
  CHECK(result.triggered == 0);
  CHECK(result.skipped == 1);
}

TEST_CASE("empty tracks file yields an empty dataset without errors") {
  const auto tracks = write_fixture("empty.csv", "");
  const auto meta = write_fixture("meta.csv", kMetaCsv);
  const auto result = ingest_highd(tracks, meta, ingest_grid(), 4.0);
  CHECK(result.dataset.unlabeled.empty());
  CHECK(result.skipped == 0);
}

TEST_CASE("header-only tracks file yields an empty dataset") {
  const auto tracks =
      write_fixture("header_only.csv", "frame,id,x,y,width,height,laneId,precedingId,thw\n");
  const auto meta = write_fixture("meta.csv", kMetaCsv);
  const auto result = ingest_highd(tracks, meta, ingest_grid(), 4.0);
  CHECK(result.dataset.unlabeled.empty());
}

TEST_CASE("malformed row reports the line number") {
  const auto tracks = write_fixture(
      "malformed.csv",
      "frame,id,x,y,width,height,laneId,precedingId,thw\n1,1,100.0,10.0,5.0,2.0,2,2,3.0\n"
      "2,1,not_a_number,10.0,5.0,2.0,2,2,3.0\n");
  const auto meta = write_fixture("meta.csv", kMetaCsv);
  try {
    ingest_highd(tracks, meta, ingest_grid(), 4.0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("missing required column is a schema error") {
  const auto tracks = write_fixture(
      "missing_col.csv", "frame,id,x,y,width,height,laneId,precedingId\n1,1,0,0,1,1,2,0\n");
  const auto meta = write_fixture("meta.csv", kMetaCsv);
  try {
    ingest_highd(tracks, meta, ingest_grid(), 4.0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("thw") != std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Dataset persistence
// ---------------------------------------------------------------------------

TEST_CASE("dataset save/load round trip preserves tensors, labels and metadata") {
  GeneratorConfig cfg;
  cfg.seed = 4;
  cfg.n_per_class = 3;
  cfg.grid = small_grid();
  auto d = generate_synthetic(cfg);
  auto partitioned = partition_by_classes(d, {1, 2, 3, 4}, {5, 6, 7});

  const auto dir = (fixture_dir() / "roundtrip").string();
  save_dataset(partitioned, dir);
  const auto loaded = load_dataset(dir);

  REQUIRE(loaded.labeled.size() == partitioned.labeled.size());
  REQUIRE(loaded.unlabeled.size() == partitioned.unlabeled.size());
  CHECK(loaded.num_labeled_classes == 4);
  CHECK(loaded.q_truth == 3);
  CHECK(loaded.unlabeled_truth == partitioned.unlabeled_truth);
  for (std::size_t k = 0; k < loaded.labeled.size(); ++k) {
    CHECK(loaded.labeled[k].label() == partitioned.labeled[k].label());
    for (int f = 0; f < 4; ++f)
      for (std::size_t c = 0; c < loaded.labeled[k].tensor.frames[f].values.size(); ++c)
        CHECK(loaded.labeled[k].tensor.frames[f].values[c] ==
              doctest::Approx(partitioned.labeled[k].tensor.frames[f].values[c]).epsilon(1e-7));
  }
}

TEST_CASE("partition_by_classes renumbers and hides ground truth") {
  GeneratorConfig cfg;
  cfg.seed = 5;
  cfg.n_per_class = 2;
  cfg.grid = small_grid();
  const auto d = generate_synthetic(cfg);
  const auto p = partition_by_classes(d, {2, 3, 6, 7}, {5, 1, 4});
  CHECK(p.num_labeled_classes == 4);
  CHECK(p.q_truth == 3);
  CHECK(p.labeled.size() == 8);
  CHECK(p.unlabeled.size() == 6);
  for (const auto& s : p.labeled) CHECK((s.label() >= 1 && s.label() <= 4));
  for (int t : p.unlabeled_truth) CHECK((t >= 1 && t <= 3));
  CHECK_THROWS_AS(partition_by_classes(d, {1, 2}, {2, 3}), ConfigError);
}
