#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "okpose/nn/layers.hpp"

namespace okpose::nn {

/// FNV-1a over a byte range.
uint64_t fnv1a(const void* data, size_t n, uint64_t h = 14695981039346656037ull);

/// Order-sensitive checksum of all parameter payloads (raw little-endian f32
/// bytes, prefixed by each name). Used for determinism checks and to verify
/// that a frozen backbone was not touched by later training stages.
uint64_t param_checksum(const std::vector<NamedParam>& params);

/// Writes a model snapshot: a small self-describing header (tensor names and
/// shapes, the seed, and free-form hyperparameters) followed by raw
/// little-endian float32 blocks and a trailing whole-file checksum.
void save_checkpoint(const std::string& path, const std::vector<NamedParam>& params,
                     uint64_t seed, const std::map<std::string, double>& hyperparams);

struct CheckpointInfo {
    uint64_t seed = 0;
    std::map<std::string, double> hyperparams;
};

/// Restores parameter values in place. The parameter list must match the file
/// exactly (same names, same shapes, same order); the first mismatch is
/// reported by tensor name. A corrupted file fails the checksum test.
CheckpointInfo load_checkpoint(const std::string& path, std::vector<NamedParam>& params);

/// Reads only the header (no tensor payloads).
CheckpointInfo read_checkpoint_info(const std::string& path);

}  // namespace okpose::nn
