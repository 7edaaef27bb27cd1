#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ood3d/types.hpp"

namespace ood3d {

// Sidecar binary container: "OODB" magic, u8 version, u8 dtype
// (0 = f32, 1 = f64), u16 ndim, ndim x u32 dims, then the payload as
// little-endian scalars in row-major order. Scan sidecars are f32 per the
// dataset contract; the model writer uses the f64 variant.
struct BlobF32 {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

struct BlobF64 {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
};

void save_blob(const BlobF32& blob, const std::string& path);
void save_blob(const BlobF64& blob, const std::string& path);
BlobF32 load_blob_f32(const std::string& path);
BlobF64 load_blob_f64(const std::string& path);

enum class Placement {
  Auto,    // inline small payloads, blob large ones
  Inline,  // force JSON arrays
  Blob,    // force the sidecar
};

struct SaveOptions {
  Placement points = Placement::Auto;
  Placement embeddings = Placement::Auto;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// One scan per JSON file. Feature maps always live in sidecar blobs;
// points and embeddings follow SaveOptions. Numbers survive a
// save-then-load round trip bit-identically.
Scan load_scan(const std::string& path, const DatasetManifest& manifest);
void save_scan(const Scan& scan, const DatasetManifest& manifest, const std::string& path,
               const SaveOptions& opts = {});

// Absolute-ish path of the i-th scan, resolved against the manifest dir.
std::string resolve_scan_path(const DatasetManifest& manifest, std::size_t index);

// All scans in manifest order. Loads in parallel; fails on duplicate
// scan ids.
std::vector<Scan> load_scans(const DatasetManifest& manifest);

// Keeps exactly the scans with at least one open ground-truth object.
DatasetManifest filter_open_subset(const DatasetManifest& manifest);

}  // namespace ood3d
