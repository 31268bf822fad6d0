#include "okpose/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace okpose::augment {

void AugmentConfig::validate() const {
    if (scales.empty()) throw std::invalid_argument("augment: scales must be nonempty");
    for (const int s : scales) {
        if (s != 1 && s != 2 && s != 4 && s != 8) {
            throw std::invalid_argument("augment: scale " + std::to_string(s) +
                                        " outside {1,2,4,8}");
        }
    }
    if (!(brightness_lo > 0.0) || !(brightness_hi >= brightness_lo)) {
        throw std::invalid_argument("augment: invalid brightness range");
    }
    if (noise_sigma < 0.0) throw std::invalid_argument("augment: negative noise sigma");
    if (rotation_jitter_deg < 0.0) throw std::invalid_argument("augment: negative jitter");
    if (p_glove < 0.0 || p_glove > 1.0) throw std::invalid_argument("augment: p_glove range");
    if (p_glove > 0.0 && glove_colors.empty()) {
        throw std::invalid_argument("augment: p_glove > 0 needs glove colors");
    }
}

Image lowres_lowlight(const Image& img, int s, double b, nn::Rng& rng, double sigma) {
    if (s != 1 && s != 2 && s != 4 && s != 8) {
        throw std::invalid_argument("lowres_lowlight: scale " + std::to_string(s) +
                                    " outside {1,2,4,8}");
    }
    if (img.h < s || img.w < s) {
        throw std::invalid_argument("lowres_lowlight: image " + std::to_string(img.h) + "x" +
                                    std::to_string(img.w) + " smaller than scale " +
                                    std::to_string(s));
    }
    const int lh = (img.h + s - 1) / s;
    const int lw = (img.w + s - 1) / s;
    std::vector<float> low(static_cast<size_t>(img.c) * lh * lw);
    for (int ch = 0; ch < img.c; ++ch) {
        for (int ly = 0; ly < lh; ++ly) {
            const int y1 = std::min((ly + 1) * s, img.h);
            for (int lx = 0; lx < lw; ++lx) {
                const int x1 = std::min((lx + 1) * s, img.w);
                double acc = 0.0;
                int count = 0;
                for (int y = ly * s; y < y1; ++y) {
                    for (int x = lx * s; x < x1; ++x) {
                        acc += static_cast<float>(static_cast<double>(img.at(ch, y, x)) * b);
                        ++count;
                    }
                }
                low[(static_cast<size_t>(ch) * lh + ly) * lw + lx] =
                    std::min(static_cast<float>(acc / count), 1.0f);
            }
        }
    }
    if (sigma > 0.0) {
        // One draw per low-res pixel, channel-plane row-major order.
        for (auto& v : low) v += static_cast<float>(rng.normal(0.0, sigma));
    }
    Image out(img.h, img.w, img.c);
    for (int ch = 0; ch < img.c; ++ch) {
        for (int y = 0; y < img.h; ++y) {
            const float* lrow = low.data() + (static_cast<size_t>(ch) * lh + y / s) * lw;
            for (int x = 0; x < img.w; ++x) {
                out.at(ch, y, x) = std::clamp(lrow[x / s], 0.0f, 1.0f);
            }
        }
    }
    return out;
}

Image glove_overlay(const Image& img, const Image& mask, const std::array<float, 3>& color,
                    float alpha) {
    if (img.c != 3) throw std::invalid_argument("glove_overlay: expects a 3-channel image");
    if (mask.h != img.h || mask.w != img.w || mask.c != 1) {
        throw std::invalid_argument("glove_overlay: mask shape mismatch");
    }
    if (!(alpha > 0.0f) || alpha > 1.0f) {
        throw std::invalid_argument("glove_overlay: alpha must be in (0, 1]");
    }
    Image out = img;
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            if (mask.at(0, y, x) <= 0.5f) continue;
            for (int ch = 0; ch < 3; ++ch) {
                out.at(ch, y, x) = (1.0f - alpha) * img.at(ch, y, x) + alpha * color[ch];
            }
        }
    }
    return out;
}

AugmentParams sample_augmentation(const AugmentConfig& cfg, nn::Rng& rng) {
    cfg.validate();
    AugmentParams p;
    p.s = cfg.scales[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(cfg.scales.size()) - 1))];
    p.b = rng.uniform(cfg.brightness_lo, cfg.brightness_hi);
    p.rotation_deg = rng.uniform(-cfg.rotation_jitter_deg, cfg.rotation_jitter_deg);
    p.sigma = cfg.noise_sigma;
    const bool glove_drawn = rng.bernoulli(cfg.p_glove);
    // Color pick happens unconditionally so the draw count stays fixed.
    const int color_idx =
        cfg.glove_colors.empty()
            ? 0
            : rng.uniform_int(0, static_cast<int>(cfg.glove_colors.size()) - 1);
    p.glove = glove_drawn && !cfg.glove_colors.empty();
    if (p.glove) p.glove_color = cfg.glove_colors[static_cast<size_t>(color_idx)];
    return p;
}

std::string AugmentParams::to_line() const {
    std::ostringstream os;
    os.precision(17);
    os << "s=" << s << " b=" << b << " rot_deg=" << rotation_deg << " sigma=" << sigma
       << " glove=" << (glove ? 1 : 0) << " color=" << glove_color[0] << "," << glove_color[1]
       << "," << glove_color[2];
    return os.str();
}

AugmentParams AugmentParams::from_line(const std::string& line) {
    AugmentParams p;
    std::istringstream is(line);
    std::string tok;
    int seen = 0;
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("augment params: malformed token '" + tok + "'");
        }
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "s") {
            p.s = std::stoi(val);
        } else if (key == "b") {
            p.b = std::stod(val);
        } else if (key == "rot_deg") {
            p.rotation_deg = std::stod(val);
        } else if (key == "sigma") {
            p.sigma = std::stod(val);
        } else if (key == "glove") {
            p.glove = val == "1";
        } else if (key == "color") {
            std::istringstream cs(val);
            std::string part;
            for (int i = 0; i < 3; ++i) {
                if (!std::getline(cs, part, ',')) {
                    throw std::runtime_error("augment params: bad color triple");
                }
                p.glove_color[static_cast<size_t>(i)] = std::stof(part);
            }
        } else {
            throw std::runtime_error("augment params: unknown key '" + key + "'");
        }
        ++seen;
    }
    if (seen != 6) throw std::runtime_error("augment params: expected 6 fields");
    return p;
}

}  // namespace okpose::augment
