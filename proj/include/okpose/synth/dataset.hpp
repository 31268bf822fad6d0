#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "okpose/synth/scene.hpp"

namespace okpose::synth {

struct DatasetCounts {
    int train = 0;
    int val = 0;
    int test = 0;
};

/// Renders `counts` scenes per split into `dir` (train/, val/, test/), writing
/// u8 images, u16 depth maps, u8 hand masks, one JSONL truth line per sample,
/// the camera calibration, and a manifest. Two runs with the same seed and
/// options produce byte-identical files; the three splits use disjoint
/// substreams of the seed.
void make_dataset(const std::string& dir, uint64_t seed, const DatasetCounts& counts,
                  const SceneOptions& opt = {});

struct SampleRecord {
    std::string image_path;
    std::string depth_path;
    std::string mask_path;
    SceneTruth truth;
};

struct DatasetInfo {
    int format_version = 0;
    uint64_t seed = 0;
    int width = 0;
    int height = 0;
    std::map<std::string, int> counts;
};

DatasetInfo read_manifest(const std::string& dir);
geom::CameraCalibration load_dataset_calibration(const std::string& dir);
std::vector<SampleRecord> load_split(const std::string& dir, const std::string& split);

}  // namespace okpose::synth
