#include "okpose/train/trainers.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "okpose/eval/metrics.hpp"
#include "okpose/landmark/heatmap.hpp"
#include "okpose/nn/checkpoint.hpp"
#include "okpose/nn/optim.hpp"

namespace okpose::train {

namespace {

/// Cosine decay from cfg.lr to cfg.lr * lr_floor_frac over the run.
float lr_at(const TrainConfig& cfg, int step) {
    const float floor = cfg.lr * cfg.lr_floor_frac;
    const double t = cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 1.0;
    return floor + 0.5f * (cfg.lr - floor) * static_cast<float>(1.0 + std::cos(t * M_PI));
}

/// Tracks the loss stream and enforces the divergence contract.
class LossWatch {
public:
    LossWatch(const TrainConfig& cfg) : cfg_(cfg) {}

    void observe(double loss, int step) {
        if (!std::isfinite(loss) ||
            (step >= cfg_.divergence_grace && loss > cfg_.divergence_limit)) {
            throw std::runtime_error("training diverged at seed " + std::to_string(cfg_.seed) +
                                     " step " + std::to_string(step) + ": loss " +
                                     std::to_string(loss));
        }
        report.losses.push_back(loss);
        if (cfg_.log_every > 0 && step % cfg_.log_every == 0) {
            std::printf("step %d loss %.5f\n", step, loss);
            std::fflush(stdout);
        }
    }

    TrainReport finish() {
        report.steps = static_cast<int>(report.losses.size());
        if (!report.losses.empty()) {
            report.first_loss = report.losses.front();
            const int tail = std::min<int>(50, report.steps);
            double s = 0.0;
            for (int i = report.steps - tail; i < report.steps; ++i) s += report.losses[i];
            report.final_loss = s / tail;
        }
        return report;
    }

    TrainReport report;

private:
    const TrainConfig& cfg_;
};

void check_budget(const TrainConfig& cfg) {
    if (cfg.scenes <= 0) throw std::invalid_argument("training needs at least one scene");
    if (cfg.steps <= 0) throw std::invalid_argument("training needs at least one step");
}

/// Scenes are regenerated from their substream on every visit instead of
/// being cached: a render is an order of magnitude cheaper than a training
/// step, and nothing scales with the pool size.
synth::SceneSample scene_at(const TrainConfig& cfg, const nn::Rng& base, int index) {
    auto rng = base.substream("scene/" + std::to_string(index % cfg.scenes));
    return synth::render_scene(rng, cfg.scene_opt);
}

int pick_hand(const synth::SceneSample& scene, int step) {
    const int nh = static_cast<int>(scene.truth.hands.size());
    if (nh == 0) throw std::runtime_error("rendered scene contains no hands");
    return step % nh;
}

/// Cuts the next crop for a crop-stage step, jittered when augmentation is on.
CropSample next_crop(const synth::SceneSample& scene, int hand,
                     const geom::CameraCalibration& calib, const TrainConfig& cfg,
                     const augment::AugmentConfig& aug_cfg, nn::Rng& aug_rng,
                     nn::Rng& noise_rng) {
    if (!cfg.augment) return make_crop_sample(scene, hand, calib);
    const auto params = augment::sample_augmentation(aug_cfg, aug_rng);
    return make_crop_sample(scene, hand, calib, params, &noise_rng);
}

}  // namespace

augment::AugmentConfig crop_augment_config() {
    augment::AugmentConfig c;
    c.scales = {1, 2, 4};
    c.brightness_lo = 0.8;
    c.brightness_hi = 1.35;
    c.noise_sigma = 0.02;
    c.rotation_jitter_deg = 10.0;
    c.glove_colors = {{0.16f, 0.28f, 0.75f}, {0.92f, 0.92f, 0.95f}, {0.10f, 0.10f, 0.12f}};
    c.p_glove = 0.35;
    return c;
}

augment::AugmentConfig fusion_augment_config() {
    // The fusion stages train against the full degradation envelope, harsh
    // included, so the comparison between the latent-feature gesture head and
    // the keypoint-based classifier happens in-distribution where regressed
    // coordinates genuinely lose information.
    augment::AugmentConfig c = crop_augment_config();
    c.scales = {1, 2, 4, 8};
    c.brightness_hi = 1.8;
    c.noise_sigma = 0.08;
    c.p_glove = 0.5;
    return c;
}

TrainReport train_detector(detect::DetectorNet& net, const TrainConfig& cfg) {
    if (cfg.grid.image_w() != cfg.scene_opt.width || cfg.grid.image_h() != cfg.scene_opt.height) {
        throw std::invalid_argument("detector grid covers " +
                                    std::to_string(cfg.grid.image_w()) + "x" +
                                    std::to_string(cfg.grid.image_h()) + " but scenes are " +
                                    std::to_string(cfg.scene_opt.width) + "x" +
                                    std::to_string(cfg.scene_opt.height));
    }
    check_budget(cfg);
    nn::Rng base(cfg.seed, "train-detector");
    nn::Adam opt(net.params(), cfg.lr);
    LossWatch watch(cfg);
    for (int step = 0; step < cfg.steps; ++step) {
        const auto scene = scene_at(cfg, base, step);
        auto raw = net.forward(image_to_tensor(scene.rgb));
        auto loss =
            detector_loss(raw, synth::to_detection_truth(scene.truth), cfg.grid, cfg.pos_weight)
                .total;
        watch.observe(nn::loss_value_hi(*loss), step);
        opt.zero_grad();
        nn::backward(loss);
        opt.set_lr(lr_at(cfg, step));
        opt.step();
    }
    return watch.finish();
}

TrainReport train_landmark(landmark::LandmarkNet& net, const TrainConfig& cfg) {
    check_budget(cfg);
    nn::Rng base(cfg.seed, "train-landmark");
    const auto calib = synth::scene_calibration(cfg.scene_opt.width, cfg.scene_opt.height);
    const auto aug_cfg = crop_augment_config();
    nn::Rng aug_rng(cfg.seed, "train-landmark-aug");
    nn::Rng noise_rng(cfg.seed, "train-landmark-noise");

    nn::Adam opt(net.params(), cfg.lr);
    LossWatch watch(cfg);
    for (int step = 0; step < cfg.steps; ++step) {
        const auto scene = scene_at(cfg, base, step);
        const int h = pick_hand(scene, step);
        const auto crop = next_crop(scene, h, calib, cfg, aug_cfg, aug_rng, noise_rng);
        auto target = landmark::encode_heatmap(crop.lm_crop, crop.rgb.w);
        target = nn::reshape(target, {1, target->dim(0), target->dim(1), target->dim(2)});
        auto pred = net.forward(image_to_tensor(crop.rgb));
        auto loss = nn::mse_loss(pred, target);
        watch.observe(nn::loss_value_hi(*loss), step);
        opt.zero_grad();
        nn::backward(loss);
        opt.set_lr(lr_at(cfg, step));
        opt.step();
    }
    return watch.finish();
}

nn::TensorPtr heatmaps_for(const landmark::LandmarkNet* source, const CropSample& crop) {
    if (source == nullptr) {
        auto hm = landmark::encode_heatmap(crop.lm_crop, crop.rgb.w);
        return nn::reshape(hm, {1, hm->dim(0), hm->dim(1), hm->dim(2)});
    }
    nn::NoGradGuard guard;
    return source->forward(image_to_tensor(crop.rgb));
}

TrainReport train_pose(pose::PoseGestureNet& net, const landmark::LandmarkNet* heatmap_source,
                       const TrainConfig& cfg) {
    check_budget(cfg);
    nn::Rng base(cfg.seed, "train-pose");
    const auto calib = synth::scene_calibration(cfg.scene_opt.width, cfg.scene_opt.height);
    const auto aug_cfg = fusion_augment_config();
    nn::Rng aug_rng(cfg.seed, "train-pose-aug");
    nn::Rng noise_rng(cfg.seed, "train-pose-noise");

    nn::Adam opt(net.backbone_params(), cfg.lr);
    LossWatch watch(cfg);
    for (int step = 0; step < cfg.steps; ++step) {
        const auto scene = scene_at(cfg, base, step);
        const int h = pick_hand(scene, step);
        const auto crop = next_crop(scene, h, calib, cfg, aug_cfg, aug_rng, noise_rng);
        auto out = net.forward(image_to_tensor(crop.rgb), heatmaps_for(heatmap_source, crop));
        auto lm_loss = nn::mse_loss(out.landmarks3d, flatten_landmarks3d(crop.lm3d_norm));
        auto tr_loss = nn::mse_loss(out.cam_translation, translation_to_tensor(crop.translation));
        auto loss = nn::add(lm_loss, nn::scale(tr_loss, static_cast<float>(cfg.translation_weight)));
        watch.observe(nn::loss_value_hi(*loss), step);
        opt.zero_grad();
        nn::backward(loss);
        opt.set_lr(lr_at(cfg, step));
        opt.step();
    }
    return watch.finish();
}

TrainReport train_gesture(pose::PoseGestureNet& net, const landmark::LandmarkNet* heatmap_source,
                          const TrainConfig& cfg) {
    check_budget(cfg);
    nn::Rng base(cfg.seed, "train-gesture");
    const auto calib = synth::scene_calibration(cfg.scene_opt.width, cfg.scene_opt.height);
    const auto aug_cfg = fusion_augment_config();
    nn::Rng aug_rng(cfg.seed, "train-gesture-aug");
    nn::Rng noise_rng(cfg.seed, "train-gesture-noise");

    // Freeze the backbone: gradients stop at the feature tensors and the
    // optimizer only ever sees the gesture head. The checksum guards against
    // any accidental write.
    auto backbone = net.backbone_params();
    const uint64_t before = nn::param_checksum(backbone);
    for (auto& p : backbone) p.tensor->requires_grad = false;

    nn::Adam opt(net.gesture_head_params(), cfg.lr);
    LossWatch watch(cfg);
    try {
        for (int step = 0; step < cfg.steps; ++step) {
            const auto scene = scene_at(cfg, base, step);
            const int h = pick_hand(scene, step);
            const auto crop = next_crop(scene, h, calib, cfg, aug_cfg, aug_rng, noise_rng);
            auto out =
                net.forward(image_to_tensor(crop.rgb), heatmaps_for(heatmap_source, crop));
            auto target = nn::Tensor::from({1, 1}, {crop.okay ? 1.0f : 0.0f});
            auto loss = nn::bce_with_logits(out.gesture_logit, target);
            watch.observe(nn::loss_value_hi(*loss), step);
            opt.zero_grad();
            nn::backward(loss);
            opt.set_lr(lr_at(cfg, step));
            opt.step();
        }
    } catch (...) {
        for (auto& p : backbone) p.tensor->requires_grad = true;
        throw;
    }
    for (auto& p : backbone) p.tensor->requires_grad = true;
    if (nn::param_checksum(backbone) != before) {
        throw std::logic_error("frozen backbone changed during gesture training");
    }
    return watch.finish();
}

KeypointGestureProbe::KeypointGestureProbe(nn::Rng& rng)
    : fc1(geom::kNumHandLandmarks * 3, 96, rng), fc2(96, 1, rng) {}

nn::TensorPtr KeypointGestureProbe::forward(const nn::TensorPtr& lm63) const {
    return fc2(nn::relu(fc1(lm63)));
}

std::vector<nn::NamedParam> KeypointGestureProbe::params() const {
    std::vector<nn::NamedParam> out;
    fc1.collect("probe.fc1", out);
    fc2.collect("probe.fc2", out);
    return out;
}

TrainReport train_keypoint_gesture(KeypointGestureProbe& probe, const pose::PoseGestureNet& net,
                                   const landmark::LandmarkNet* heatmap_source,
                                   const TrainConfig& cfg) {
    check_budget(cfg);
    nn::Rng base(cfg.seed, "train-gesture");  // same crops the latent head trains on
    const auto calib = synth::scene_calibration(cfg.scene_opt.width, cfg.scene_opt.height);
    const auto aug_cfg = fusion_augment_config();
    nn::Rng aug_rng(cfg.seed, "train-gesture-aug");
    nn::Rng noise_rng(cfg.seed, "train-gesture-noise");

    nn::Adam opt(probe.params(), cfg.lr);
    LossWatch watch(cfg);
    for (int step = 0; step < cfg.steps; ++step) {
        const auto scene = scene_at(cfg, base, step);
        const int h = pick_hand(scene, step);
        const auto crop = next_crop(scene, h, calib, cfg, aug_cfg, aug_rng, noise_rng);
        nn::TensorPtr lm63;
        {
            nn::NoGradGuard guard;
            lm63 = net.forward(image_to_tensor(crop.rgb), heatmaps_for(heatmap_source, crop))
                       .landmarks3d;
        }
        auto target = nn::Tensor::from({1, 1}, {crop.okay ? 1.0f : 0.0f});
        auto loss = nn::bce_with_logits(probe.forward(lm63), target);
        watch.observe(nn::loss_value_hi(*loss), step);
        opt.zero_grad();
        nn::backward(loss);
        opt.set_lr(lr_at(cfg, step));
        opt.step();
    }
    return watch.finish();
}

double evaluate_detector(const detect::DetectorNet& net, const detect::GridSpec& grid,
                         uint64_t seed, int n, const synth::SceneOptions& opt,
                         double conf_thresh, double nms_iou) {
    nn::NoGradGuard guard;
    nn::Rng base(seed, "eval-detector");
    std::vector<eval::ImageDetections> images;
    for (int i = 0; i < n; ++i) {
        auto rng = base.substream("scene/" + std::to_string(i));
        const auto sample = synth::render_scene(rng, opt);
        eval::ImageDetections img;
        img.gts = synth::to_detection_truth(sample.truth);
        auto raw = net.forward(image_to_tensor(sample.rgb));
        img.dets = detect::nms(detect::decode(*raw, grid, conf_thresh), nms_iou);
        images.push_back(std::move(img));
    }
    return eval::mean_average_precision(images, 0.5);
}

double evaluate_detector_on_train_pool(const detect::DetectorNet& net, const TrainConfig& cfg,
                                       double conf_thresh, double nms_iou) {
    nn::NoGradGuard guard;
    nn::Rng base(cfg.seed, "train-detector");
    std::vector<eval::ImageDetections> images;
    for (int i = 0; i < cfg.scenes; ++i) {
        const auto sample = scene_at(cfg, base, i);
        eval::ImageDetections img;
        img.gts = synth::to_detection_truth(sample.truth);
        auto raw = net.forward(image_to_tensor(sample.rgb));
        img.dets = detect::nms(detect::decode(*raw, cfg.grid, conf_thresh), nms_iou);
        images.push_back(std::move(img));
    }
    return eval::mean_average_precision(images, 0.5);
}

namespace {

/// Fixed sensor-degradation recipes for robustness evaluation. Level 1:
/// moderate downsampling, brightening, read noise, and a glove half the time
/// (roughly the training-augmentation envelope). Level 2: harsh — heavier
/// downsampling, stronger brightening and noise, glove always; deliberately
/// beyond the training envelope.
augment::AugmentParams degradation_params(nn::Rng& rng, int level) {
    static const std::array<std::array<float, 3>, 3> colors = {
        {{0.16f, 0.28f, 0.75f}, {0.92f, 0.92f, 0.95f}, {0.10f, 0.10f, 0.12f}}};
    augment::AugmentParams p;
    if (level >= 2) {
        p.s = rng.bernoulli(0.5) ? 4 : 8;
        p.b = rng.uniform(1.4f, 1.8f);
        p.sigma = rng.uniform(0.06f, 0.12f);
        p.glove = true;
    } else {
        p.s = rng.bernoulli(0.5) ? 2 : 4;
        p.b = rng.uniform(1.2f, 1.5f);
        p.sigma = rng.uniform(0.02f, 0.05f);
        p.glove = rng.bernoulli(0.5);
    }
    p.rotation_deg = 0.0;
    p.glove_color = colors[static_cast<size_t>(rng.uniform_int(0, 2))];
    return p;
}

template <typename Fn>
void for_each_eval_crop(uint64_t seed, int n, const synth::SceneOptions& opt, int degrade,
                        Fn&& fn) {
    nn::Rng base(seed, "eval-crops");
    nn::Rng deg_rng(seed, "eval-crops-degrade");
    const auto calib = synth::scene_calibration(opt.width, opt.height);
    for (int i = 0; i < n; ++i) {
        auto rng = base.substream("scene/" + std::to_string(i));
        const auto sample = synth::render_scene(rng, opt);
        for (int h = 0; h < static_cast<int>(sample.truth.hands.size()); ++h) {
            if (degrade <= 0) {
                fn(make_crop_sample(sample, h, calib), sample.truth.hands[h]);
            } else {
                const auto params = degradation_params(deg_rng, degrade);
                fn(make_crop_sample(sample, h, calib, params, &deg_rng),
                   sample.truth.hands[h]);
            }
        }
    }
}

}  // namespace

double evaluate_landmark_pck(const landmark::LandmarkNet& net, uint64_t seed, int n,
                             int degrade, const synth::SceneOptions& opt) {
    nn::NoGradGuard guard;
    std::vector<std::pair<geom::HandLandmarks2D, geom::HandLandmarks2D>> pairs;
    for_each_eval_crop(seed, n, opt, degrade,
                       [&](const CropSample& crop, const synth::HandTruth&) {
                           auto hm = net.forward(image_to_tensor(crop.rgb));
                           hm = nn::reshape(hm, {hm->dim(1), hm->dim(2), hm->dim(3)});
                           pairs.push_back(
                               {landmark::decode_heatmap(*hm, crop.rgb.w), crop.lm_crop});
                       });
    return eval::pck(pairs, 0.2);
}

double evaluate_pose_rmse(const pose::PoseGestureNet& net,
                          const landmark::LandmarkNet* heatmap_source, uint64_t seed, int n,
                          const synth::SceneOptions& opt) {
    nn::NoGradGuard guard;
    std::vector<std::pair<geom::Point3, geom::Point3>> pairs;
    for_each_eval_crop(
        seed, n, opt, 0, [&](const CropSample& crop, const synth::HandTruth&) {
            auto out = net.forward(image_to_tensor(crop.rgb), heatmaps_for(heatmap_source, crop));
            const auto pred = unflatten_landmarks3d(*out.landmarks3d);
            for (int k = 0; k < geom::kNumHandLandmarks; ++k) {
                pairs.push_back({pred[static_cast<size_t>(k)],
                                 crop.lm3d_norm[static_cast<size_t>(k)]});
            }
        });
    return eval::rmse3d(pairs);
}

double evaluate_gesture_auc(const pose::PoseGestureNet& net,
                            const landmark::LandmarkNet* heatmap_source, uint64_t seed, int n,
                            int degrade, const synth::SceneOptions& opt) {
    nn::NoGradGuard guard;
    std::vector<std::pair<double, int>> scored;
    for_each_eval_crop(
        seed, n, opt, degrade, [&](const CropSample& crop, const synth::HandTruth&) {
            auto out = net.forward(image_to_tensor(crop.rgb), heatmaps_for(heatmap_source, crop));
            scored.push_back({pose::gesture_probability(out), crop.okay ? 1 : 0});
        });
    return eval::auc(scored);
}

double evaluate_keypoint_gesture_auc(const KeypointGestureProbe& probe,
                                     const pose::PoseGestureNet& net,
                                     const landmark::LandmarkNet* heatmap_source, uint64_t seed,
                                     int n, int degrade, const synth::SceneOptions& opt) {
    nn::NoGradGuard guard;
    std::vector<std::pair<double, int>> scored;
    for_each_eval_crop(
        seed, n, opt, degrade, [&](const CropSample& crop, const synth::HandTruth&) {
            auto out = net.forward(image_to_tensor(crop.rgb), heatmaps_for(heatmap_source, crop));
            auto logit = probe.forward(out.landmarks3d);
            const double z = logit->data[0];
            const double prob = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            scored.push_back({prob, crop.okay ? 1 : 0});
        });
    return eval::auc(scored);
}

}  // namespace okpose::train
