#pragma once

#include <cstdint>
#include <vector>

#include "okpose/detect/detector_net.hpp"
#include "okpose/landmark/landmark_net.hpp"
#include "okpose/pose/pose_net.hpp"
#include "okpose/train/data.hpp"
#include "okpose/train/losses.hpp"

namespace okpose::train {

/// Knobs shared by the four training stages. Scenes are rendered in memory
/// from a deterministic stream derived from `seed`, so a (seed, config) pair
/// fully determines the resulting weights.
struct TrainConfig {
    uint64_t seed = 1;
    int scenes = 64;  ///< rendered training scenes backing the sample pool
    int steps = 600;  ///< optimizer steps, one sample per step (round robin)
    float lr = 2e-3f;
    float lr_floor_frac = 0.05f;  ///< cosine decay from lr down to lr * this
    bool augment = false;  ///< crop stages: photometric + rotation augmentation
    synth::SceneOptions scene_opt{};
    detect::GridSpec grid{};         ///< detector stage; must match the scene size
    double pos_weight = 8.0;         ///< detector stage
    double translation_weight = 0.1; ///< pose stage: weight of the translation term
    double divergence_limit = 200.0; ///< abort when the loss exceeds this...
    int divergence_grace = 10;       ///< ...after this many steps
    int log_every = 0;               ///< 0 = silent; otherwise print every n steps
};

struct TrainReport {
    int steps = 0;
    double first_loss = 0.0;
    double final_loss = 0.0;  ///< mean over the last min(50, steps) steps
    std::vector<double> losses;
};

/// Augmentation ranges used by the crop stages when `augment` is on.
augment::AugmentConfig crop_augment_config();

/// Wider envelope used by the pose/gesture stages when cfg.augment is set:
/// adds the heaviest downsampling, stronger brightening and noise, and more
/// frequent gloves, so those stages train across the whole degradation range.
augment::AugmentConfig fusion_augment_config();

/// Full-frame detector training against the composite grid loss.
/// Throws std::runtime_error naming the seed and step if the loss diverges.
TrainReport train_detector(detect::DetectorNet& net, const TrainConfig& cfg);

/// Heatmap regression on oriented hand crops.
TrainReport train_landmark(landmark::LandmarkNet& net, const TrainConfig& cfg);

/// Heatmap input for the two-stream stages: rendered from truth landmarks
/// when `source` is null, otherwise predicted by the landmark network with
/// gradients disabled.
nn::TensorPtr heatmaps_for(const landmark::LandmarkNet* source, const CropSample& crop);

/// First two-stream stage: 3D landmarks + camera translation, gesture head
/// untouched.
TrainReport train_pose(pose::PoseGestureNet& net, const landmark::LandmarkNet* heatmap_source,
                       const TrainConfig& cfg);

/// Second two-stream stage: only the gesture head trains; every backbone
/// parameter is frozen and verified unchanged by checksum.
TrainReport train_gesture(pose::PoseGestureNet& net, const landmark::LandmarkNet* heatmap_source,
                          const TrainConfig& cfg);

/// Baseline gesture classifier over the predicted 3D keypoints instead of the
/// latent feature: same capacity as the latent head (63 -> 96 -> 1). The
/// coordinates form a lossy bottleneck: regression error in the keypoint head
/// corrupts this classifier's input but not the latent feature itself.
struct KeypointGestureProbe {
    nn::Linear fc1, fc2;

    explicit KeypointGestureProbe(nn::Rng& rng);
    nn::TensorPtr forward(const nn::TensorPtr& lm63) const;  ///< [1,63] -> [1,1] logit
    std::vector<nn::NamedParam> params() const;
};

/// Trains the probe on the (frozen) pose network's keypoint predictions over
/// the same crop stream the latent gesture head trains on.
TrainReport train_keypoint_gesture(KeypointGestureProbe& probe, const pose::PoseGestureNet& net,
                                   const landmark::LandmarkNet* heatmap_source,
                                   const TrainConfig& cfg);

/// Separability of the probe's score over held-out crops.
double evaluate_keypoint_gesture_auc(const KeypointGestureProbe& probe,
                                     const pose::PoseGestureNet& net,
                                     const landmark::LandmarkNet* heatmap_source, uint64_t seed,
                                     int n, int degrade = 0,
                                     const synth::SceneOptions& opt = {});

// ---- held-out evaluation ------------------------------------------------
// Each helper renders `n` fresh scenes from a stream independent of training.

/// Mean average precision at IoU 0.5 of decode + suppression output.
double evaluate_detector(const detect::DetectorNet& net, const detect::GridSpec& grid,
                         uint64_t seed, int n, const synth::SceneOptions& opt = {},
                         double conf_thresh = 0.25, double nms_iou = 0.45);

/// Same score measured on the scenes train_detector(cfg) trained on
/// (memorization check: a tiny pool must reach 1.0).
double evaluate_detector_on_train_pool(const detect::DetectorNet& net, const TrainConfig& cfg,
                                       double conf_thresh = 0.25, double nms_iou = 0.45);

/// Landmark accuracy within 0.2 hand sizes. `degrade` selects a fixed
/// sensor-degradation recipe applied to each evaluation crop first: 0 none,
/// 1 moderate (downsample, brightening, noise, sometimes a glove recolor),
/// 2 harsh (heavier downsample/brightening/noise, glove always).
double evaluate_landmark_pck(const landmark::LandmarkNet& net, uint64_t seed, int n,
                             int degrade = 0, const synth::SceneOptions& opt = {});

/// Root-mean-square 3D landmark error in meters over held-out crops.
double evaluate_pose_rmse(const pose::PoseGestureNet& net,
                          const landmark::LandmarkNet* heatmap_source, uint64_t seed, int n,
                          const synth::SceneOptions& opt = {});

/// Separability of the okay-gesture score over held-out crops (both labels
/// are always present: scenes keep a non-gesturing patient hand). `degrade`
/// selects the same recipe levels as evaluate_landmark_pck.
double evaluate_gesture_auc(const pose::PoseGestureNet& net,
                            const landmark::LandmarkNet* heatmap_source, uint64_t seed, int n,
                            int degrade = 0, const synth::SceneOptions& opt = {});

}  // namespace okpose::train
