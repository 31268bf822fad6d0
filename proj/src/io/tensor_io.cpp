#include "okpose/io/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace okpose::io {

namespace {

constexpr char kMagic[8] = {'O', 'K', 'P', 'T', 'E', 'N', 'S', '0'};

size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::f32: return 4;
        case Dtype::u16: return 2;
        case Dtype::u8: return 1;
    }
    throw std::invalid_argument("tensor file: unknown dtype tag");
}

void write_u32(std::ofstream& f, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void save_raw(const std::string& path, Dtype dtype, const std::vector<uint32_t>& dims,
              const void* data, size_t n_bytes) {
    if (dims.empty()) throw std::invalid_argument("tensor file: empty dims");
    size_t count = 1;
    for (uint32_t d : dims) {
        if (d == 0) throw std::invalid_argument("tensor file: zero dim");
        count *= d;
    }
    if (count * dtype_size(dtype) != n_bytes) {
        throw std::invalid_argument("tensor file: dims do not match payload size");
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("tensor file: cannot open for writing: " + path);
    f.write(kMagic, 8);
    const uint8_t meta[2] = {static_cast<uint8_t>(dtype), static_cast<uint8_t>(dims.size())};
    f.write(reinterpret_cast<const char*>(meta), 2);
    for (uint32_t d : dims) write_u32(f, d);
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n_bytes));
    if (!f) throw std::runtime_error("tensor file: write failed: " + path);
}

}  // namespace

size_t TensorFile::count() const {
    size_t c = 1;
    for (uint32_t d : dims) c *= d;
    return c;
}

void save_tensor_f32(const std::string& path, const std::vector<uint32_t>& dims,
                     const std::vector<float>& data) {
    save_raw(path, Dtype::f32, dims, data.data(), data.size() * 4);
}

void save_tensor_u16(const std::string& path, const std::vector<uint32_t>& dims,
                     const std::vector<uint16_t>& data) {
    save_raw(path, Dtype::u16, dims, data.data(), data.size() * 2);
}

void save_tensor_u8(const std::string& path, const std::vector<uint32_t>& dims,
                    const std::vector<uint8_t>& data) {
    save_raw(path, Dtype::u8, dims, data.data(), data.size());
}

TensorFile load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("tensor file: cannot open: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("tensor file: bad magic in " + path);
    }
    uint8_t meta[2];
    f.read(reinterpret_cast<char*>(meta), 2);
    if (!f || meta[0] < 1 || meta[0] > 3 || meta[1] == 0) {
        throw std::runtime_error("tensor file: bad header in " + path);
    }
    TensorFile t;
    t.dtype = static_cast<Dtype>(meta[0]);
    t.dims.resize(meta[1]);
    for (auto& d : t.dims) {
        uint8_t b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        d = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
            (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
        if (!f || d == 0) throw std::runtime_error("tensor file: bad dims in " + path);
    }
    t.bytes.resize(t.count() * dtype_size(t.dtype));
    f.read(reinterpret_cast<char*>(t.bytes.data()), static_cast<std::streamsize>(t.bytes.size()));
    if (!f) throw std::runtime_error("tensor file: truncated payload in " + path);
    f.peek();
    if (!f.eof()) throw std::runtime_error("tensor file: trailing bytes in " + path);
    return t;
}

std::vector<float> as_f32(const TensorFile& t) {
    if (t.dtype != Dtype::f32) throw std::runtime_error("tensor file: dtype is not f32");
    std::vector<float> out(t.count());
    std::memcpy(out.data(), t.bytes.data(), t.bytes.size());
    return out;
}

std::vector<uint16_t> as_u16(const TensorFile& t) {
    if (t.dtype != Dtype::u16) throw std::runtime_error("tensor file: dtype is not u16");
    std::vector<uint16_t> out(t.count());
    std::memcpy(out.data(), t.bytes.data(), t.bytes.size());
    return out;
}

void save_image_u8(const std::string& path, const Image& img) {
    std::vector<uint8_t> q(img.data.size());
    for (size_t i = 0; i < q.size(); ++i) {
        const float v = std::clamp(img.data[i], 0.0f, 1.0f);
        q[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    save_tensor_u8(path,
                   {static_cast<uint32_t>(img.c), static_cast<uint32_t>(img.h),
                    static_cast<uint32_t>(img.w)},
                   q);
}

Image load_image_u8(const std::string& path) {
    const auto t = load_tensor(path);
    if (t.dtype != Dtype::u8 || t.dims.size() != 3) {
        throw std::runtime_error("image file: expected [C,H,W] u8: " + path);
    }
    Image img(static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]),
              static_cast<int>(t.dims[0]));
    for (size_t i = 0; i < t.bytes.size(); ++i) {
        img.data[i] = static_cast<float>(t.bytes[i]) / 255.0f;
    }
    return img;
}

void save_depth_u16(const std::string& path, const DepthImage& depth) {
    save_tensor_u16(path, {static_cast<uint32_t>(depth.h), static_cast<uint32_t>(depth.w)},
                    depth.units);
}

DepthImage load_depth_u16(const std::string& path) {
    const auto t = load_tensor(path);
    if (t.dtype != Dtype::u16 || t.dims.size() != 2) {
        throw std::runtime_error("depth file: expected [H,W] u16: " + path);
    }
    DepthImage d(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    d.units = as_u16(t);
    return d;
}

}  // namespace okpose::io
