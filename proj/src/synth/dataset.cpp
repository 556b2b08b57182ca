// SPDX-License-Identifier: Apache-2.0
#include "bevseg/synth/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace bevseg::synth {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<uint8_t> pack_bits(const float* plane, size_t cells) {
  std::vector<uint8_t> out(plane_stride_bytes(cells), 0);
  for (size_t i = 0; i < cells; ++i)
    if (plane[i] != 0.0f) out[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
  return out;
}

namespace {

json grid_to_json(const geometry::GridSpec& g) {
  return json{{"x_min", g.x_min}, {"x_max", g.x_max}, {"y_min", g.y_min},
              {"y_max", g.y_max}, {"resolution", g.resolution}};
}

geometry::GridSpec grid_from_json(const json& j) {
  return geometry::GridSpec::from_ranges(j.at("x_min"), j.at("x_max"), j.at("y_min"),
                                         j.at("y_max"), j.at("resolution"));
}

json polar_to_json(const geometry::PolarSpec& p) {
  return json{{"range_bins", p.range_bins},
              {"azimuth_bins", p.azimuth_bins},
              {"max_range", p.max_range},
              {"fov", p.fov}};
}

geometry::PolarSpec polar_from_json(const json& j) {
  geometry::PolarSpec p;
  p.range_bins = j.at("range_bins");
  p.azimuth_bins = j.at("azimuth_bins");
  p.max_range = j.at("max_range");
  p.fov = j.at("fov");
  p.validate();
  return p;
}

json cam_to_json(const geometry::CameraModel& c) {
  return json{{"fov", c.fov},
              {"image_width", c.image_width},
              {"image_height", c.image_height},
              {"virtual_height", c.virtual_height},
              {"camera_height", c.camera_height}};
}

geometry::CameraModel cam_from_json(const json& j) {
  geometry::CameraModel c;
  c.fov = j.at("fov");
  c.image_width = j.at("image_width");
  c.image_height = j.at("image_height");
  c.virtual_height = j.at("virtual_height");
  c.camera_height = j.at("camera_height");
  c.validate();
  return c;
}

std::string sample_stem(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", id);
  return buf;
}

void write_mask_file(const std::string& path, const std::vector<std::vector<uint8_t>>& planes,
                     int rows, int cols) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("dataset: cannot write " + path);
  os.write("BVMK", 4);
  const uint32_t np = static_cast<uint32_t>(planes.size()), r = rows, c = cols;
  os.write(reinterpret_cast<const char*>(&np), 4);
  os.write(reinterpret_cast<const char*>(&r), 4);
  os.write(reinterpret_cast<const char*>(&c), 4);
  for (const auto& p : planes)
    os.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size()));
}

std::vector<std::vector<uint8_t>> read_mask_file(const std::string& path, int* rows, int* cols) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("dataset: cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::string(magic, 4) != "BVMK") throw IoError("dataset: bad mask magic in " + path);
  uint32_t np = 0, r = 0, c = 0;
  is.read(reinterpret_cast<char*>(&np), 4);
  is.read(reinterpret_cast<char*>(&r), 4);
  is.read(reinterpret_cast<char*>(&c), 4);
  const size_t stride = plane_stride_bytes(static_cast<size_t>(r) * c);
  std::vector<std::vector<uint8_t>> planes(np, std::vector<uint8_t>(stride));
  for (auto& p : planes) is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(stride));
  if (!is) throw IoError("dataset: truncated mask " + path);
  if (rows) *rows = static_cast<int>(r);
  if (cols) *cols = static_cast<int>(c);
  return planes;
}

}  // namespace

std::string DatasetManifest::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["recipe"] = json::parse(recipe_json);
  j["recipe_hash"] = recipe_hash;
  j["base_seed"] = base_seed;
  j["n"] = n;
  j["class_names"] = class_names;
  j["train_ids"] = train_ids;
  j["val_ids"] = val_ids;
  j["class_freq_cart"] = class_freq_cart;
  j["class_freq_polar"] = class_freq_polar;
  j["grid"] = grid_to_json(grid);
  j["polar"] = polar_to_json(polar);
  j["camera"] = cam_to_json(camera);
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  const json j = json::parse(text);
  DatasetManifest m;
  m.schema_version = j.at("schema_version");
  require(m.schema_version == 1, "manifest: unsupported schema version");
  m.recipe_json = j.at("recipe").dump();
  m.recipe_hash = j.at("recipe_hash");
  m.base_seed = j.at("base_seed");
  m.n = j.at("n");
  m.class_names = j.at("class_names").get<std::vector<std::string>>();
  m.train_ids = j.at("train_ids").get<std::vector<int>>();
  m.val_ids = j.at("val_ids").get<std::vector<int>>();
  m.class_freq_cart = j.at("class_freq_cart").get<std::vector<double>>();
  m.class_freq_polar = j.at("class_freq_polar").get<std::vector<double>>();
  m.grid = grid_from_json(j.at("grid"));
  m.polar = polar_from_json(j.at("polar"));
  m.camera = cam_from_json(j.at("camera"));
  return m;
}

uint64_t DatasetManifest::build_hash() const {
  uint64_t h = fnv1a64(recipe_json);
  h = fnv1a64(&base_seed, sizeof base_seed, h);
  h = fnv1a64(&n, sizeof n, h);
  const std::string gs = grid_to_json(grid).dump() + polar_to_json(polar).dump() +
                         cam_to_json(camera).dump();
  return fnv1a64(gs.data(), gs.size(), h);
}

BuildResult build_dataset(const SceneRecipe& recipe, const geometry::CameraModel& cam,
                          const geometry::GridSpec& gspec, const geometry::PolarSpec& pspec,
                          int n, uint64_t seed, const std::string& root) {
  require(n >= 1, "build_dataset: n must be >= 1");
  recipe.validate();

  DatasetManifest m;
  m.recipe_json = recipe.to_json();
  m.recipe_hash = hex64(recipe.hash());
  m.base_seed = seed;
  m.n = n;
  m.class_names = recipe.classes;
  m.grid = gspec;
  m.polar = pspec;
  m.camera = cam;
  for (int id = 0; id < n; ++id)
    (id % 10 == 9 ? m.val_ids : m.train_ids).push_back(id);

  const fs::path rootp(root);
  const fs::path manifest_path = rootp / "manifest.json";
  if (fs::exists(manifest_path)) {
    std::ifstream is(manifest_path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    DatasetManifest old = DatasetManifest::from_json(text);
    if (old.build_hash() == m.build_hash()) return {old, true};
    throw IoError("build_dataset: " + root + " holds a dataset with a different build hash");
  }
  fs::create_directories(rootp / "train");
  fs::create_directories(rootp / "val");

  const geometry::Warper warper(gspec, pspec, cam);
  const int K = static_cast<int>(recipe.classes.size());
  std::vector<double> freq_cart(K, 0.0), freq_polar(K, 0.0);
  int64_t train_count = 0;

  for (int id = 0; id < n; ++id) {
    const SceneSample s = generate_scene(recipe, cam, gspec, Rng::mix(seed, id));
    const bool is_val = id % 10 == 9;
    const fs::path dir = rootp / (is_val ? "val" : "train");
    const std::string stem = sample_stem(id);

    save_png(s.image, (dir / (stem + ".png")).string());

    std::vector<std::vector<uint8_t>> planes;
    const size_t cells = s.bev.cells();
    for (int k = 0; k < K; ++k) planes.push_back(pack_bits(s.bev.channel(k), cells));
    std::vector<float> visf(cells);
    for (size_t i = 0; i < cells; ++i) visf[i] = s.visibility[i];
    planes.push_back(pack_bits(visf.data(), cells));
    write_mask_file((dir / (stem + ".mask")).string(), planes, gspec.rows, gspec.cols);

    json meta;
    meta["id"] = id;
    meta["seed"] = s.seed;
    meta["camera"] = cam_to_json(cam);
    std::ofstream ms(dir / (stem + ".json"));
    ms << meta.dump(2) << "\n";

    if (!is_val) {
      const geometry::PolarBevMap pm = warper.cart_to_polar(s.bev);
      for (int k = 0; k < K; ++k) {
        double sc = 0, sp = 0;
        for (size_t i = 0; i < cells; ++i) sc += s.bev.channel(k)[i];
        for (size_t i = 0; i < pm.cells(); ++i)
          sp += pm.data[static_cast<size_t>(k) * pm.cells() + i];
        freq_cart[k] += sc / static_cast<double>(cells);
        freq_polar[k] += sp / static_cast<double>(pm.cells());
      }
      ++train_count;
    }
  }
  for (int k = 0; k < K; ++k) {
    m.class_freq_cart.push_back(freq_cart[k] / std::max<int64_t>(1, train_count));
    m.class_freq_polar.push_back(freq_polar[k] / std::max<int64_t>(1, train_count));
  }

  std::ofstream os(manifest_path);
  if (!os) throw IoError("build_dataset: cannot write manifest");
  os << m.to_json() << "\n";
  return {m, false};
}

DatasetManifest load_manifest(const std::string& root) {
  std::ifstream is(fs::path(root) / "manifest.json");
  if (!is) throw IoError("dataset: no manifest under " + root);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return DatasetManifest::from_json(text);
}

SceneSample load_sample(const std::string& root, const DatasetManifest& m, int id) {
  const bool is_val = id % 10 == 9;
  const fs::path dir = fs::path(root) / (is_val ? "val" : "train");
  const std::string stem = sample_stem(id);
  SceneSample s;
  s.cam = m.camera;
  s.image = load_png((dir / (stem + ".png")).string());
  int rows = 0, cols = 0;
  const auto planes = read_mask_file((dir / (stem + ".mask")).string(), &rows, &cols);
  require(rows == m.grid.rows && cols == m.grid.cols, "dataset: mask dims mismatch");
  const int K = static_cast<int>(m.class_names.size());
  require(static_cast<int>(planes.size()) == K + 1, "dataset: plane count mismatch");
  s.bev = geometry::BevMap(m.grid, K);
  const size_t cells = s.bev.cells();
  for (int k = 0; k < K; ++k)
    for (size_t i = 0; i < cells; ++i)
      s.bev.channel(k)[i] = get_bit(planes[k], 0, i) ? 1.0f : 0.0f;
  s.visibility.assign(cells, 0);
  for (size_t i = 0; i < cells; ++i) s.visibility[i] = get_bit(planes[K], 0, i);
  std::ifstream ms(dir / (stem + ".json"));
  if (ms) {
    json meta = json::parse(ms);
    s.seed = meta.value("seed", 0ull);
  }
  return s;
}

TrainData load_training_data(const std::string& root, const geometry::PolarSpec& pspec) {
  TrainData d;
  d.manifest = load_manifest(root);
  d.grid = d.manifest.grid;
  d.polar = pspec;
  d.camera = d.manifest.camera;
  const int K = d.num_classes();
  const geometry::Warper warper(d.grid, pspec, d.camera);
  const size_t cells = static_cast<size_t>(d.grid.rows) * d.grid.cols;
  const size_t pcells = static_cast<size_t>(pspec.range_bins) * pspec.azimuth_bins;

  std::vector<double> freq(K, 0.0), rfreq(K, 0.0);
  auto load_split = [&](const std::vector<int>& ids, TrainSamples& out, bool accumulate) {
    for (int id : ids) {
      SceneSample s = load_sample(root, d.manifest, id);
      out.ids.push_back(id);
      out.images.push_back(std::move(s.image.data));

      std::vector<uint8_t> cart;
      for (int k = 0; k < K; ++k) {
        auto p = pack_bits(s.bev.channel(k), cells);
        cart.insert(cart.end(), p.begin(), p.end());
      }
      out.cart_bits.push_back(std::move(cart));

      std::vector<float> visf(cells);
      for (size_t i = 0; i < cells; ++i) visf[i] = s.visibility[i];
      out.vis_bits.push_back(pack_bits(visf.data(), cells));

      const geometry::PolarBevMap pm = warper.cart_to_polar(s.bev);
      std::vector<uint8_t> pol;
      for (int k = 0; k < K; ++k) {
        auto p = pack_bits(pm.data.data() + static_cast<size_t>(k) * pcells, pcells);
        pol.insert(pol.end(), p.begin(), p.end());
        if (accumulate) {
          double sp = 0;
          for (size_t i = 0; i < pcells; ++i) sp += pm.data[static_cast<size_t>(k) * pcells + i];
          freq[k] += sp / static_cast<double>(pcells);
        }
      }
      out.polar_bits.push_back(std::move(pol));

      std::vector<float> raster(pcells);
      std::vector<uint8_t> ras;
      for (int k = 0; k < K; ++k) {
        geometry::resample_plane_nearest(s.bev.channel(k), d.grid.rows, d.grid.cols, raster.data(),
                                         pspec.range_bins, pspec.azimuth_bins);
        auto p = pack_bits(raster.data(), pcells);
        ras.insert(ras.end(), p.begin(), p.end());
        if (accumulate) {
          double sr = 0;
          for (size_t i = 0; i < pcells; ++i) sr += raster[i];
          rfreq[k] += sr / static_cast<double>(pcells);
        }
      }
      out.raster_bits.push_back(std::move(ras));
    }
  };
  load_split(d.manifest.train_ids, d.train, true);
  load_split(d.manifest.val_ids, d.val, false);
  for (int k = 0; k < K; ++k) {
    d.polar_freq.push_back(freq[k] / std::max<size_t>(1, d.train.ids.size()));
    d.raster_freq.push_back(rfreq[k] / std::max<size_t>(1, d.train.ids.size()));
  }
  return d;
}

}  // namespace bevseg::synth
