#include "okpose/synth/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "okpose/io/tensor_io.hpp"

namespace okpose::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json truth_to_json(const SceneTruth& t) {
    json hands = json::array();
    for (const auto& hand : t.hands) {
        json lm2 = json::array(), lm3c = json::array(), lm3n = json::array();
        for (const auto& p : hand.landmarks2d) lm2.push_back({p.x, p.y});
        for (const auto& p : hand.landmarks3d_cam) lm3c.push_back({p.x, p.y, p.z});
        for (const auto& p : hand.landmarks3d_norm) lm3n.push_back({p.x, p.y, p.z});
        hands.push_back({{"lm2d", lm2},
                         {"lm3d_cam", lm3c},
                         {"lm3d_norm", lm3n},
                         {"box", {hand.box.l, hand.box.t, hand.box.r, hand.box.b}},
                         {"roll", hand.roll},
                         {"okay_param", hand.okay_param},
                         {"okay", hand.okay},
                         {"body", hand.body_index},
                         {"o_center", {hand.o_center.x, hand.o_center.y}},
                         {"o_depth_m", hand.o_depth_m}});
    }
    json bodies = json::array();
    for (const auto& body : t.bodies) {
        bodies.push_back({{"box", {body.box.l, body.box.t, body.box.r, body.box.b}},
                          {"technician", body.technician},
                          {"bed_overlap", body.bed_overlap}});
    }
    return {{"hands", hands},
            {"bodies", bodies},
            {"bed", {t.bed.l, t.bed.t, t.bed.r, t.bed.b}},
            {"gesture_present", t.gesture_present},
            {"gesture_hand", t.gesture_hand}};
}

geom::BBox box_from(const json& a) { return {a.at(0), a.at(1), a.at(2), a.at(3)}; }

SceneTruth truth_from_json(const json& j) {
    SceneTruth t;
    for (const auto& jh : j.at("hands")) {
        HandTruth hand;
        const auto& lm2 = jh.at("lm2d");
        const auto& lm3c = jh.at("lm3d_cam");
        const auto& lm3n = jh.at("lm3d_norm");
        if (lm2.size() != hand.landmarks2d.size() || lm3c.size() != hand.landmarks2d.size() ||
            lm3n.size() != hand.landmarks2d.size()) {
            throw std::runtime_error("dataset: truth line has a wrong landmark count");
        }
        for (size_t i = 0; i < hand.landmarks2d.size(); ++i) {
            hand.landmarks2d[i] = {lm2[i].at(0), lm2[i].at(1), 1.0};
            hand.landmarks3d_cam[i] = {lm3c[i].at(0), lm3c[i].at(1), lm3c[i].at(2)};
            hand.landmarks3d_norm[i] = {lm3n[i].at(0), lm3n[i].at(1), lm3n[i].at(2)};
        }
        hand.box = box_from(jh.at("box"));
        hand.roll = jh.at("roll");
        hand.okay_param = jh.at("okay_param");
        hand.okay = jh.at("okay");
        hand.body_index = jh.at("body");
        hand.o_center = {jh.at("o_center").at(0), jh.at("o_center").at(1)};
        hand.o_depth_m = jh.at("o_depth_m");
        t.hands.push_back(hand);
    }
    for (const auto& jb : j.at("bodies")) {
        t.bodies.push_back({box_from(jb.at("box")), jb.at("technician"), jb.at("bed_overlap")});
    }
    t.bed = box_from(j.at("bed"));
    t.gesture_present = j.at("gesture_present");
    t.gesture_hand = j.at("gesture_hand");
    return t;
}

std::string sample_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", index);
    return buf;
}

}  // namespace

void make_dataset(const std::string& dir, uint64_t seed, const DatasetCounts& counts,
                  const SceneOptions& opt) {
    if (counts.train < 0 || counts.val < 0 || counts.test < 0) {
        throw std::invalid_argument("make_dataset: negative sample count");
    }
    fs::create_directories(dir);
    geom::save_calibration((fs::path(dir) / "calibration.txt").string(),
                           scene_calibration(opt.width, opt.height));

    const nn::Rng base(seed);
    const std::pair<const char*, int> splits[] = {
        {"train", counts.train}, {"val", counts.val}, {"test", counts.test}};
    json counts_json;
    for (const auto& [split, n] : splits) {
        const fs::path split_dir = fs::path(dir) / split;
        fs::create_directories(split_dir);
        std::ofstream labels(split_dir / "labels.jsonl", std::ios::trunc);
        if (!labels) throw std::runtime_error("make_dataset: cannot write labels in " + dir);
        for (int i = 0; i < n; ++i) {
            auto rng = base.substream(std::string(split) + "/" + std::to_string(i));
            const auto sample = render_scene(rng, opt);
            const std::string stem = sample_stem(i);
            io::save_image_u8((split_dir / ("img_" + stem + ".tens")).string(), sample.rgb);
            io::save_depth_u16((split_dir / ("depth_" + stem + ".tens")).string(), sample.depth);
            io::save_image_u8((split_dir / ("mask_" + stem + ".tens")).string(),
                              sample.hand_mask);
            labels << truth_to_json(sample.truth).dump() << "\n";
        }
        counts_json[split] = n;
    }

    const json manifest = {{"format_version", kFormatVersion},
                           {"seed", seed},
                           {"width", opt.width},
                           {"height", opt.height},
                           {"with_patient_hand", opt.with_patient_hand},
                           {"p_okay", opt.p_okay},
                           {"counts", counts_json}};
    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << "\n";
    if (!mf) throw std::runtime_error("make_dataset: cannot write manifest in " + dir);
}

DatasetInfo read_manifest(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw std::runtime_error("dataset: missing manifest in " + dir);
    json j;
    f >> j;
    DatasetInfo info;
    info.format_version = j.at("format_version");
    if (info.format_version != kFormatVersion) {
        throw std::runtime_error("dataset: unsupported format version in " + dir);
    }
    info.seed = j.at("seed");
    info.width = j.at("width");
    info.height = j.at("height");
    for (const auto& [k, v] : j.at("counts").items()) info.counts[k] = v;
    return info;
}

geom::CameraCalibration load_dataset_calibration(const std::string& dir) {
    return geom::load_calibration((fs::path(dir) / "calibration.txt").string());
}

std::vector<SampleRecord> load_split(const std::string& dir, const std::string& split) {
    const auto info = read_manifest(dir);
    const auto it = info.counts.find(split);
    if (it == info.counts.end()) throw std::runtime_error("dataset: unknown split " + split);
    const fs::path split_dir = fs::path(dir) / split;
    std::ifstream labels(split_dir / "labels.jsonl");
    if (!labels) throw std::runtime_error("dataset: missing labels in " + split_dir.string());
    std::vector<SampleRecord> out;
    std::string line;
    while (std::getline(labels, line)) {
        if (line.empty()) continue;
        SampleRecord rec;
        rec.truth = truth_from_json(json::parse(line));
        const std::string stem = sample_stem(static_cast<int>(out.size()));
        rec.image_path = (split_dir / ("img_" + stem + ".tens")).string();
        rec.depth_path = (split_dir / ("depth_" + stem + ".tens")).string();
        rec.mask_path = (split_dir / ("mask_" + stem + ".tens")).string();
        out.push_back(std::move(rec));
    }
    if (static_cast<int>(out.size()) != it->second) {
        throw std::runtime_error("dataset: label count does not match manifest for " + split);
    }
    return out;
}

}  // namespace okpose::synth
