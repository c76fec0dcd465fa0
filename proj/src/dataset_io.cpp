#include "rfap/dataset_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rfap/common.hpp"

namespace rfap::scenario {

using nlohmann::json;

namespace {

void append_tensor(std::ofstream& out, const ScenarioTensor& t) {
  for (const auto& frame : t.frames) {
    for (double v : frame.values) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
  }
}

ScenarioTensor read_tensor(std::ifstream& in, const GridConfig& grid) {
  ScenarioTensor t;
  for (int k = 0; k < grid.n_timesteps; ++k) {
    OccupancyGrid g(grid.rows, grid.cols);
    for (auto& v : g.values) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), sizeof(float));
      v = static_cast<double>(f);
    }
    t.frames.push_back(std::move(g));
  }
  if (!in) throw DataError("dataset blob truncated");
  return t;
}

json grid_to_json(const GridConfig& g) {
  return json{{"rows", g.rows},
              {"cols", g.cols},
              {"cell_width", g.cell_width},
              {"cell_length", g.cell_length},
              {"n_timesteps", g.n_timesteps},
              {"dt", g.dt}};
}

GridConfig grid_from_json(const json& j) {
  GridConfig g;
  g.rows = j.at("rows").get<int>();
  g.cols = j.at("cols").get<int>();
  g.cell_width = j.at("cell_width").get<double>();
  g.cell_length = j.at("cell_length").get<double>();
  g.n_timesteps = j.at("n_timesteps").get<int>();
  g.dt = j.at("dt").get<double>();
  return g;
}

}  // namespace

void save_dataset(const ScenarioDataset& dataset, const std::string& dir) {
  dataset.validate();
  std::filesystem::create_directories(dir);
  const auto blob_path = std::filesystem::path(dir) / "data.bin";
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw DataError("cannot write " + blob_path.string());

  json samples = json::array();
  int id = 0;
  for (const auto& s : dataset.labeled) {
    append_tensor(blob, s.tensor);
    samples.push_back({{"id", id++}, {"kind", "labeled"}, {"label", s.label()}});
  }
  for (std::size_t i = 0; i < dataset.unlabeled.size(); ++i) {
    append_tensor(blob, dataset.unlabeled[i]);
    json rec{{"id", id++}, {"kind", "unlabeled"}};
    if (!dataset.unlabeled_truth.empty()) rec["truth"] = dataset.unlabeled_truth[i];
    samples.push_back(rec);
  }
  blob.close();

  json manifest{{"format", "rfap-dataset-v1"},
                {"dtype", "f32le"},
                {"layout", "frames,rows,cols"},
                {"blob", "data.bin"},
                {"grid", grid_to_json(dataset.grid)},
                {"class_names", dataset.class_names},
                {"k", dataset.num_labeled_classes},
                {"q_truth", dataset.q_truth},
                {"samples", samples}};
  std::ofstream mf(std::filesystem::path(dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
}

ScenarioDataset load_dataset(const std::string& dir) {
  const auto manifest_path = std::filesystem::path(dir) / "manifest.json";
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("cannot open " + manifest_path.string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed dataset manifest: " + std::string(e.what()));
  }

  ScenarioDataset out;
  out.grid = grid_from_json(manifest.at("grid"));
  out.class_names = manifest.at("class_names").get<std::vector<std::string>>();
  out.num_labeled_classes = manifest.at("k").get<int>();
  out.q_truth = manifest.at("q_truth").get<int>();

  const auto blob_path =
      std::filesystem::path(dir) / manifest.at("blob").get<std::string>();
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw DataError("cannot open " + blob_path.string());

  for (const auto& rec : manifest.at("samples")) {
    ScenarioTensor t = read_tensor(blob, out.grid);
    if (rec.at("kind") == "labeled") {
      out.labeled.emplace_back(std::move(t), rec.at("label").get<int>());
    } else {
      out.unlabeled.push_back(std::move(t));
      if (rec.contains("truth")) out.unlabeled_truth.push_back(rec.at("truth").get<int>());
    }
  }
  out.validate();
  return out;
}

}  // namespace rfap::scenario
