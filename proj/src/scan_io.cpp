#include "ood3d/scan_io.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ood3d/errors.hpp"
#include "ood3d/parallel.hpp"

namespace ood3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kBlobMagic[4] = {'O', 'O', 'D', 'B'};
constexpr std::uint8_t kBlobVersion = 1;

void write_exact(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_exact(std::ifstream& in, void* data, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ParseError("truncated blob file: " + path);
  }
}

std::size_t dims_product(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (const std::uint32_t d : dims) n *= d;
  return n;
}

template <typename Scalar>
void save_blob_impl(const std::vector<std::uint32_t>& dims, const std::vector<Scalar>& data,
                    std::uint8_t dtype, const std::string& path) {
  if (dims_product(dims) != data.size()) throw IoError("blob dims do not match payload: " + path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open blob for writing: " + path);
  write_exact(out, kBlobMagic, 4);
  write_exact(out, &kBlobVersion, 1);
  write_exact(out, &dtype, 1);
  const std::uint16_t ndim = static_cast<std::uint16_t>(dims.size());
  write_exact(out, &ndim, 2);
  for (const std::uint32_t d : dims) write_exact(out, &d, 4);
  write_exact(out, data.data(), data.size() * sizeof(Scalar));
  if (!out) throw IoError("failed writing blob: " + path);
}

template <typename Scalar>
void load_blob_impl(const std::string& path, std::uint8_t want_dtype,
                    std::vector<std::uint32_t>& dims, std::vector<Scalar>& data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open blob: " + path);
  char magic[4];
  read_exact(in, magic, 4, path);
  if (std::memcmp(magic, kBlobMagic, 4) != 0) throw ParseError("bad blob magic in " + path);
  std::uint8_t version = 0;
  std::uint8_t dtype = 0;
  std::uint16_t ndim = 0;
  read_exact(in, &version, 1, path);
  read_exact(in, &dtype, 1, path);
  read_exact(in, &ndim, 2, path);
  if (version != kBlobVersion) throw ParseError("unsupported blob version in " + path);
  if (dtype != want_dtype) throw ParseError("unexpected blob dtype in " + path);
  dims.resize(ndim);
  for (std::uint16_t i = 0; i < ndim; ++i) read_exact(in, &dims[i], 4, path);
  data.resize(dims_product(dims));
  read_exact(in, data.data(), data.size() * sizeof(Scalar), path);
}

json box_to_json(const Box3D& b) {
  return json::array({b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw});
}

Box3D box_from_json(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 7) {
    throw SchemaError("box must be a 7-element array in " + context);
  }
  Box3D b;
  b.cx = j[0].get<double>();
  b.cy = j[1].get<double>();
  b.cz = j[2].get<double>();
  b.l = j[3].get<double>();
  b.w = j[4].get<double>();
  b.h = j[5].get<double>();
  b.yaw = j[6].get<double>();
  return checked_box(b);
}

std::string sidecar_path(const std::string& scan_path, const char* kind) {
  fs::path p(scan_path);
  return p.stem().string() + "." + kind + ".blob";
}

json feature_map_meta(const FeatureMap& m, const std::string& blob_rel) {
  json j;
  j["blob"] = blob_rel;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["dim"] = m.dim;
  j["origin"] = json::array({m.origin_x, m.origin_y});
  j["cell_size"] = m.cell_size;
  return j;
}

FeatureMap feature_map_from_meta(const json& j, const fs::path& dir, const std::string& scan_id) {
  FeatureMap m;
  m.rows = j.at("rows").get<int>();
  m.cols = j.at("cols").get<int>();
  m.dim = j.at("dim").get<int>();
  const auto& origin = j.at("origin");
  m.origin_x = origin.at(0).get<double>();
  m.origin_y = origin.at(1).get<double>();
  m.cell_size = j.at("cell_size").get<double>();
  const std::string blob_rel = j.at("blob").get<std::string>();
  const BlobF32 blob = load_blob_f32((dir / blob_rel).string());
  if (blob.dims.size() != 3 || blob.dims[0] != static_cast<std::uint32_t>(m.rows) ||
      blob.dims[1] != static_cast<std::uint32_t>(m.cols) ||
      blob.dims[2] != static_cast<std::uint32_t>(m.dim)) {
    throw SchemaError("feature map blob dims disagree with JSON metadata in scan " + scan_id);
  }
  m.data = blob.data;
  return m;
}

}  // namespace

void save_blob(const BlobF32& blob, const std::string& path) {
  save_blob_impl(blob.dims, blob.data, 0, path);
}

void save_blob(const BlobF64& blob, const std::string& path) {
  save_blob_impl(blob.dims, blob.data, 1, path);
}

BlobF32 load_blob_f32(const std::string& path) {
  BlobF32 b;
  load_blob_impl(path, 0, b.dims, b.data);
  return b;
}

BlobF64 load_blob_f64(const std::string& path) {
  BlobF64 b;
  load_blob_impl(path, 1, b.dims, b.data);
  return b;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest ") + path + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.known_classes = j.at("known_classes").get<std::vector<std::string>>();
    m.open_classes = j.at("open_classes").get<std::vector<std::string>>();
    m.scan_paths = j.at("scan_paths").get<std::vector<std::string>>();
    m.intensity_mean = j.at("intensity_stats").at("mean").get<double>();
    m.intensity_std = j.at("intensity_stats").at("std").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest ") + path + ": " + e.what());
  }
  if (m.known_classes.empty() || m.open_classes.empty()) {
    throw SchemaError("manifest class lists must be non-empty: " + path);
  }
  std::set<std::string> seen(m.known_classes.begin(), m.known_classes.end());
  if (seen.size() != m.known_classes.size()) {
    throw SchemaError("duplicate known class in manifest: " + path);
  }
  for (const auto& c : m.open_classes) {
    if (!seen.insert(c).second) {
      throw SchemaError("class '" + c + "' appears in both partitions: " + path);
    }
  }
  if (!(m.intensity_std > 0.0)) throw SchemaError("intensity std must be > 0: " + path);
  m.base_dir = fs::path(path).parent_path().string();
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  json j;
  j["name"] = manifest.name;
  j["known_classes"] = manifest.known_classes;
  j["open_classes"] = manifest.open_classes;
  j["scan_paths"] = manifest.scan_paths;
  j["intensity_stats"] = {{"mean", manifest.intensity_mean}, {"std", manifest.intensity_std}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing manifest: " + path);
}

Scan load_scan(const std::string& path, const DatasetManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scan: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scan ") + path + ": " + e.what());
  }

  const fs::path dir = fs::path(path).parent_path();
  Scan scan;
  try {
    scan.scan_id = j.at("scan_id").get<std::string>();

    const auto& points = j.at("points");
    if (points.is_array()) {
      scan.cloud.points.reserve(points.size());
      for (const auto& p : points) {
        if (!p.is_array() || p.size() != 4) {
          throw SchemaError("point must be [x,y,z,intensity] in scan " + scan.scan_id);
        }
        scan.cloud.points.push_back({p[0].get<float>(), p[1].get<float>(), p[2].get<float>(),
                                     p[3].get<float>()});
      }
    } else {
      const std::string blob_rel = points.at("blob").get<std::string>();
      const std::size_t count = points.at("count").get<std::size_t>();
      const BlobF32 blob = load_blob_f32((dir / blob_rel).string());
      if (blob.dims.size() != 2 || blob.dims[0] != count || blob.dims[1] != 4) {
        throw SchemaError("points blob dims disagree with JSON count in scan " + scan.scan_id);
      }
      scan.cloud.points.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        scan.cloud.points[i] = {blob.data[i * 4], blob.data[i * 4 + 1], blob.data[i * 4 + 2],
                                blob.data[i * 4 + 3]};
      }
    }

    for (const auto& g : j.at("ground_truth")) {
      GroundTruthObject gt;
      gt.box = box_from_json(g.at("box"), "ground truth of scan " + scan.scan_id);
      const std::string cls = g.at("class").get<std::string>();
      gt.class_id = manifest.class_index(cls);
      if (gt.class_id < 0) {
        throw SchemaError("unknown class name '" + cls + "' in scan " + scan.scan_id);
      }
      gt.is_open = manifest.is_open_class(gt.class_id);
      if (g.contains("point_indices")) {
        gt.point_indices = g.at("point_indices").get<std::vector<std::int64_t>>();
      }
      scan.ground_truth.push_back(std::move(gt));
    }

    BlobF32 emb_blob;
    std::size_t emb_dim = 0;
    if (j.contains("embeddings")) {
      const auto& meta = j.at("embeddings");
      emb_blob = load_blob_f32((dir / meta.at("blob").get<std::string>()).string());
      emb_dim = meta.at("dim").get<std::size_t>();
      if (emb_blob.dims.size() != 2 || emb_blob.dims[1] != emb_dim) {
        throw SchemaError("embeddings blob dims malformed in scan " + scan.scan_id);
      }
    }

    for (const auto& d : j.at("detections")) {
      Detection det;
      det.box = box_from_json(d.at("box"), "detection of scan " + scan.scan_id);
      det.score = d.at("score").get<double>();
      det.logits = d.at("logits").get<std::vector<double>>();
      det.predicted_class = d.at("predicted_class").get<int>();
      const auto& emb = d.at("embedding");
      if (emb.is_array()) {
        det.embedding = emb.get<std::vector<float>>();
      } else {
        const std::size_t offset = emb.at("blob_offset").get<std::size_t>();
        if (offset + emb_dim > emb_blob.data.size()) {
          throw SchemaError("embedding blob_offset out of range in scan " + scan.scan_id);
        }
        det.embedding.assign(emb_blob.data.begin() + static_cast<std::ptrdiff_t>(offset),
                             emb_blob.data.begin() + static_cast<std::ptrdiff_t>(offset + emb_dim));
      }
      if (d.contains("ood_score")) det.ood_score = d.at("ood_score").get<double>();
      if (d.contains("logit_samples")) {
        det.logit_samples = d.at("logit_samples").get<std::vector<std::vector<double>>>();
      }
      scan.detections.push_back(std::move(det));
    }

    if (j.contains("feature_map_low")) {
      scan.feature_map_low = feature_map_from_meta(j.at("feature_map_low"), dir, scan.scan_id);
    }
    if (j.contains("feature_map_high")) {
      scan.feature_map_high = feature_map_from_meta(j.at("feature_map_high"), dir, scan.scan_id);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scan ") + path + ": " + e.what());
  }

  validate_scan(scan, manifest);
  return scan;
}

void save_scan(const Scan& scan, const DatasetManifest& manifest, const std::string& path,
               const SaveOptions& opts) {
  validate_scan(scan, manifest);
  const fs::path dir = fs::path(path).parent_path();

  json j;
  j["scan_id"] = scan.scan_id;

  const bool points_blob = opts.points == Placement::Blob ||
                           (opts.points == Placement::Auto && scan.cloud.size() > 2048);
  if (points_blob) {
    BlobF32 blob;
    blob.dims = {static_cast<std::uint32_t>(scan.cloud.size()), 4};
    blob.data.reserve(scan.cloud.size() * 4);
    for (const Point& p : scan.cloud.points) {
      blob.data.push_back(p.x);
      blob.data.push_back(p.y);
      blob.data.push_back(p.z);
      blob.data.push_back(p.intensity);
    }
    const std::string rel = sidecar_path(path, "points");
    save_blob(blob, (dir / rel).string());
    j["points"] = {{"blob", rel}, {"count", scan.cloud.size()}};
  } else {
    json arr = json::array();
    for (const Point& p : scan.cloud.points) {
      arr.push_back(json::array({p.x, p.y, p.z, p.intensity}));
    }
    j["points"] = std::move(arr);
  }

  json gts = json::array();
  for (const auto& g : scan.ground_truth) {
    json gj;
    gj["box"] = box_to_json(g.box);
    gj["class"] = manifest.class_name(g.class_id);
    if (g.point_indices) gj["point_indices"] = *g.point_indices;
    gts.push_back(std::move(gj));
  }
  j["ground_truth"] = std::move(gts);

  // Blob-backed embeddings require one shared width; fall back to inline
  // arrays otherwise.
  std::size_t emb_dim = scan.detections.empty() ? 0 : scan.detections.front().embedding.size();
  bool uniform = emb_dim > 0;
  std::size_t emb_total = 0;
  for (const auto& d : scan.detections) {
    uniform = uniform && d.embedding.size() == emb_dim;
    emb_total += d.embedding.size();
  }
  const bool emb_blob = uniform && !scan.detections.empty() &&
                        (opts.embeddings == Placement::Blob ||
                         (opts.embeddings == Placement::Auto && emb_total > 4096));
  if (emb_blob) {
    BlobF32 blob;
    blob.dims = {static_cast<std::uint32_t>(scan.detections.size()),
                 static_cast<std::uint32_t>(emb_dim)};
    for (const auto& d : scan.detections) {
      blob.data.insert(blob.data.end(), d.embedding.begin(), d.embedding.end());
    }
    const std::string rel = sidecar_path(path, "emb");
    save_blob(blob, (dir / rel).string());
    j["embeddings"] = {{"blob", rel}, {"count", scan.detections.size()}, {"dim", emb_dim}};
  }

  json dets = json::array();
  std::size_t emb_offset = 0;
  for (const auto& d : scan.detections) {
    json dj;
    dj["box"] = box_to_json(d.box);
    dj["score"] = d.score;
    dj["logits"] = d.logits;
    dj["predicted_class"] = d.predicted_class;
    if (emb_blob) {
      dj["embedding"] = {{"blob_offset", emb_offset}};
      emb_offset += emb_dim;
    } else {
      dj["embedding"] = d.embedding;
    }
    if (d.ood_score) dj["ood_score"] = *d.ood_score;
    if (!d.logit_samples.empty()) dj["logit_samples"] = d.logit_samples;
    dets.push_back(std::move(dj));
  }
  j["detections"] = std::move(dets);

  if (scan.feature_map_low) {
    const std::string rel = sidecar_path(path, "fmlow");
    BlobF32 blob;
    blob.dims = {static_cast<std::uint32_t>(scan.feature_map_low->rows),
                 static_cast<std::uint32_t>(scan.feature_map_low->cols),
                 static_cast<std::uint32_t>(scan.feature_map_low->dim)};
    blob.data = scan.feature_map_low->data;
    save_blob(blob, (dir / rel).string());
    j["feature_map_low"] = feature_map_meta(*scan.feature_map_low, rel);
  }
  if (scan.feature_map_high) {
    const std::string rel = sidecar_path(path, "fmhigh");
    BlobF32 blob;
    blob.dims = {static_cast<std::uint32_t>(scan.feature_map_high->rows),
                 static_cast<std::uint32_t>(scan.feature_map_high->cols),
                 static_cast<std::uint32_t>(scan.feature_map_high->dim)};
    blob.data = scan.feature_map_high->data;
    save_blob(blob, (dir / rel).string());
    j["feature_map_high"] = feature_map_meta(*scan.feature_map_high, rel);
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot write scan: " + path);
  out << j.dump() << "\n";
  if (!out) throw IoError("failed writing scan: " + path);
}

std::string resolve_scan_path(const DatasetManifest& manifest, std::size_t index) {
  const fs::path p(manifest.scan_paths.at(index));
  if (p.is_absolute() || manifest.base_dir.empty()) return p.string();
  return (fs::path(manifest.base_dir) / p).string();
}

std::vector<Scan> load_scans(const DatasetManifest& manifest) {
  std::vector<Scan> scans(manifest.scan_paths.size());
  std::vector<std::string> errors(manifest.scan_paths.size());
  parallel_for(static_cast<std::int64_t>(manifest.scan_paths.size()), [&](std::int64_t i) {
    const std::size_t idx = static_cast<std::size_t>(i);
    try {
      scans[idx] = load_scan(resolve_scan_path(manifest, idx), manifest);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw IoError(err);
  }
  std::set<std::string> ids;
  for (const auto& s : scans) {
    if (!ids.insert(s.scan_id).second) {
      throw SchemaError("duplicate scan_id in dataset: " + s.scan_id);
    }
  }
  return scans;
}

DatasetManifest filter_open_subset(const DatasetManifest& manifest) {
  std::vector<unsigned char> keep(manifest.scan_paths.size(), 0);
  std::vector<std::string> errors(manifest.scan_paths.size());
  parallel_for(static_cast<std::int64_t>(manifest.scan_paths.size()), [&](std::int64_t i) {
    const std::size_t idx = static_cast<std::size_t>(i);
    try {
      const Scan scan = load_scan(resolve_scan_path(manifest, idx), manifest);
      keep[idx] = scan.has_open_gt() ? 1 : 0;
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw IoError(err);
  }
  DatasetManifest out = manifest;
  out.scan_paths.clear();
  for (std::size_t i = 0; i < manifest.scan_paths.size(); ++i) {
    if (keep[i]) out.scan_paths.push_back(manifest.scan_paths[i]);
  }
  return out;
}

}  // namespace ood3d
