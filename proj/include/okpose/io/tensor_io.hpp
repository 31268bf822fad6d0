#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "okpose/image.hpp"

namespace okpose::io {

/// On-disk dtype tags for the raw tensor container.
enum class Dtype : uint8_t { f32 = 1, u16 = 2, u8 = 3 };

/// A tensor loaded from disk: dims plus a flat little-endian payload.
struct TensorFile {
    Dtype dtype = Dtype::f32;
    std::vector<uint32_t> dims;
    std::vector<uint8_t> bytes;  // payload exactly as stored

    size_t count() const;  // product of dims
};

void save_tensor_f32(const std::string& path, const std::vector<uint32_t>& dims,
                     const std::vector<float>& data);
void save_tensor_u16(const std::string& path, const std::vector<uint32_t>& dims,
                     const std::vector<uint16_t>& data);
void save_tensor_u8(const std::string& path, const std::vector<uint32_t>& dims,
                    const std::vector<uint8_t>& data);
TensorFile load_tensor(const std::string& path);

std::vector<float> as_f32(const TensorFile& t);
std::vector<uint16_t> as_u16(const TensorFile& t);

/// Image adapters: images are stored as [C,H,W] u8 (round(v*255), clamped),
/// depth maps as [H,W] u16 raw units.
void save_image_u8(const std::string& path, const Image& img);
Image load_image_u8(const std::string& path);
void save_depth_u16(const std::string& path, const DepthImage& depth);
DepthImage load_depth_u16(const std::string& path);

}  // namespace okpose::io
