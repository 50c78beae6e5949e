// Synthetic demonstration datasets: draw a workpiece and a rule set per
// sample, inject the rules into the reference path, execute it in the
// simulator and serialise the result. Also the 10-column learner features
// and deterministic train/val/test splits.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "skillinject/core_math.hpp"
#include "skillinject/dynamics.hpp"
#include "skillinject/error.hpp"
#include "skillinject/geometry.hpp"
#include "skillinject/io.hpp"
#include "skillinject/random.hpp"
#include "skillinject/rules.hpp"
#include "skillinject/segmentation.hpp"

namespace skillinject {

using ojson = nlohmann::ordered_json;

enum class Split { train, val, test };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

inline Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw InvalidArgument("unknown split '" + std::string(s) + "'");
}

// Active parameters are drawn outside 1.5x the estimator's neutral band.
inline constexpr double kVelocityNeutralLo = 0.85;
inline constexpr double kVelocityNeutralHi = 1.15;
inline constexpr double kTiltMinActive = 0.03;  // rad
inline constexpr std::uint64_t kRetrySalt = 0x9E3779B9ULL;

/// Independent draw per rule kind: target class uniform over
/// {straight, corner, none}; active parameters uniform over their range
/// minus the neutral band. With `single_rule`, exactly one rule (kind
/// uniform) is active on a uniformly chosen class.
inline RuleSet sample_ruleset(Rng& rng, bool single_rule = false) {
    auto draw_velocity = [&] {
        const double lo_len = kVelocityNeutralLo - kVelocityScaleMin;
        const double hi_len = kVelocityScaleMax - kVelocityNeutralHi;
        const double u = rng.uniform(0.0, lo_len + hi_len);
        return u < lo_len ? kVelocityScaleMin + u : kVelocityNeutralHi + (u - lo_len);
    };
    auto draw_tilt = [&] {
        const double mag = rng.uniform(kTiltMinActive, kTiltMax);
        return rng.uniform01() < 0.5 ? -mag : mag;
    };

    RuleSet rs;
    if (single_rule) {
        const bool velocity = rng.below(2) == 0;
        const auto cls = rng.below(2) == 0 ? SegmentClass::straight : SegmentClass::corner;
        rs.rules = {Rule{RuleKind::velocity_scale, velocity ? cls : SegmentClass::none, velocity ? draw_velocity() : 0.0},
                    Rule{RuleKind::orientation_offset, velocity ? SegmentClass::none : cls, velocity ? 0.0 : draw_tilt()}};
        return rs;
    }
    const auto vcls = static_cast<SegmentClass>(rng.below(3));
    const double vparam = vcls != SegmentClass::none ? draw_velocity() : 0.0;
    const auto ocls = static_cast<SegmentClass>(rng.below(3));
    const double oparam = ocls != SegmentClass::none ? draw_tilt() : 0.0;
    rs.rules = {Rule{RuleKind::velocity_scale, vcls, vparam}, Rule{RuleKind::orientation_offset, ocls, oparam}};
    return rs;
}

/// Workpiece with mildly randomised dimensions and a random rigid pose
/// (yaw in [-pi, pi], translation in [-0.2, 0.2] m per axis).
inline Workpiece random_workpiece(GeometryKind kind, Rng& rng) {
    Workpiece w = kind == GeometryKind::l_shape
                      ? make_l_workpiece(rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2), 0.2)
                      : make_window_workpiece(rng.uniform(0.9, 1.2), rng.uniform(1.2, 1.6), 0.1,
                                              1 + static_cast<int>(rng.below(2)));
    w.pose.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    w.pose.translation = {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
    return w;
}

struct GenerationConfig {
    GeometryKind geometry = GeometryKind::l_shape;
    std::size_t n = 100;
    std::uint64_t base_seed = 42;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::size_t cloud_points = 1024;
    bool single_rule = false;
    unsigned workers = 0;  // 0: hardware concurrency
    PathOptions path{};
    SegmentationParams segmentation{};
    InjectionParams injection{};
    BodyParams body{};
    ControllerParams controller{};
    SimParams sim{};
};

/// Everything derived from one sample seed.
struct Sample {
    std::string id;
    GeometryKind geometry = GeometryKind::l_shape;
    std::uint64_t seed = 0;
    Split split = Split::train;
    Workpiece workpiece{GeometryKind::l_shape, LShapeParams{1, 1, 0.2}, {}};
    PointCloud cloud;
    Trajectory trajectory;
    RuleSet rules;
};

/// Deterministic reconstruction of a sample's workpiece, cloud and rules from its seed.
struct SampleDraw {
    Workpiece workpiece;
    PointCloud cloud;
    RuleSet rules;
};

inline SampleDraw draw_sample(GeometryKind kind, std::uint64_t seed, const GenerationConfig& cfg) {
    Rng rng(seed);
    Workpiece w = random_workpiece(kind, rng);
    const std::uint64_t cloud_seed = rng.next_u64();
    RuleSet rules = sample_ruleset(rng, cfg.single_rule);
    return {w, sample_point_cloud(w, cfg.cloud_points, cloud_seed), std::move(rules)};
}

/// Reference path, automatic segmentation, nominal and rule-injected profiles.
struct PreparedPath {
    RawPath path;
    Segmentation segmentation;
    TargetProfile nominal;
    TargetProfile injected;
};

inline PreparedPath prepare_path(const Workpiece& w, const RuleSet& rules, const GenerationConfig& cfg) {
    PreparedPath p;
    p.path = make_reference_path(w, cfg.path);
    p.segmentation = segment_path(p.path, cfg.segmentation);
    p.nominal = nominal_profile(p.path, p.segmentation);
    p.injected = apply_rules(p.path, p.segmentation, rules, cfg.injection);
    return p;
}

inline Sample build_sample(GeometryKind kind, std::string id, std::uint64_t seed, Split split,
                           const GenerationConfig& cfg) {
    auto draw = draw_sample(kind, seed, cfg);
    const auto prepared = prepare_path(draw.workpiece, draw.rules, cfg);
    Sample s;
    s.id = std::move(id);
    s.geometry = kind;
    s.seed = seed;
    s.split = split;
    s.workpiece = draw.workpiece;
    s.cloud = std::move(draw.cloud);
    s.trajectory = simulate(prepared.injected, cfg.body, cfg.controller, cfg.sim);
    s.rules = std::move(draw.rules);
    return s;
}

/// build_sample with the divergence retry policy: on a simulator failure
/// the seed is salted and the sample redrawn, at most three times.
inline Sample build_sample_with_retry(GeometryKind kind, std::string id, std::uint64_t seed, Split split,
                                      const GenerationConfig& cfg) {
    std::uint64_t s = seed;
    for (int attempt = 0;; ++attempt) {
        try {
            return build_sample(kind, id, s, split, cfg);
        } catch (const Divergence&) {
            if (attempt == 3) throw;
        } catch (const SimulationIncomplete&) {
            if (attempt == 3) throw;
        }
        s ^= kRetrySalt;
    }
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

inline constexpr std::size_t kFeatureWidth = 10;
using FeatureRow = std::array<double, kFeatureWidth>;

/// Rows of [dt, vx, vy, vz, 6D rotation]; dt of row 0 is 0.
inline std::vector<FeatureRow> encode_features(const Trajectory& traj) {
    if (traj.size() < 2) throw InvalidArgument("encode_features needs at least 2 samples");
    std::vector<FeatureRow> rows(traj.size());
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const auto& s = traj.samples[j];
        const Rot6D r = quat_to_6d(s.q);
        rows[j] = {j == 0 ? 0.0 : s.t - traj.samples[j - 1].t,
                   s.velocity.x, s.velocity.y, s.velocity.z,
                   r.v[0], r.v[1], r.v[2], r.v[3], r.v[4], r.v[5]};
    }
    return rows;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline ojson to_json(const Rule& r) {
    // inactive rules serialise with param 0
    return ojson{{"kind", to_string(r.kind)}, {"target_class", to_string(r.target_class)},
                 {"param", r.active() ? r.param : 0.0}};
}

inline Rule rule_from_json(const ojson& j) {
    Rule r;
    r.kind = rule_kind_from_string(j.at("kind").get<std::string>());
    const auto cls_key = j.contains("target_class") ? "target_class" : "class";
    r.target_class = segment_class_from_string(j.at(cls_key).get<std::string>());
    r.param = j.at("param").get<double>();
    if (!r.active()) r.param = 0.0;
    return r;
}

inline ojson to_json(const RuleSet& rs) {
    ojson arr = ojson::array();
    for (const auto& r : rs.rules) arr.push_back(to_json(r));
    return arr;
}

inline RuleSet ruleset_from_json(const ojson& j) {
    const ojson& arr = j.is_object() ? j.at("rules") : j;
    if (!arr.is_array()) throw InvalidArgument("rules must be a JSON array");
    RuleSet rs;
    for (const auto& r : arr) rs.rules.push_back(rule_from_json(r));
    rs.validate();
    return rs;
}

inline ojson to_json(const Vec3& v) { return ojson::array({v.x, v.y, v.z}); }
inline Vec3 vec3_from_json(const ojson& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline ojson to_json(const Workpiece& w) {
    ojson j;
    j["kind"] = to_string(w.kind);
    if (w.kind == GeometryKind::l_shape) {
        const auto& p = std::get<LShapeParams>(w.params);
        j["leg_a"] = p.leg_a;
        j["leg_b"] = p.leg_b;
        j["width"] = p.width;
    } else {
        const auto& p = std::get<WindowParams>(w.params);
        j["outer_w"] = p.outer_w;
        j["outer_h"] = p.outer_h;
        j["frame_t"] = p.frame_t;
        j["mullions"] = p.mullions;
    }
    j["pose"] = {{"yaw", w.pose.yaw}, {"translation", to_json(w.pose.translation)}};
    return j;
}

inline Workpiece workpiece_from_json(const ojson& j) {
    const RigidTransform pose{j.at("pose").at("yaw").get<double>(), vec3_from_json(j.at("pose").at("translation"))};
    if (geometry_kind_from_string(j.at("kind").get<std::string>()) == GeometryKind::l_shape)
        return make_l_workpiece(j.at("leg_a").get<double>(), j.at("leg_b").get<double>(), j.at("width").get<double>(),
                                pose);
    return make_window_workpiece(j.at("outer_w").get<double>(), j.at("outer_h").get<double>(),
                                 j.at("frame_t").get<double>(), j.at("mullions").get<int>(), pose);
}

inline ojson to_json(const Sample& s) {
    ojson j;
    j["id"] = s.id;
    j["geometry"] = to_string(s.geometry);
    j["seed"] = s.seed;
    j["split"] = to_string(s.split);
    j["workpiece"] = to_json(s.workpiece);
    ojson cloud = ojson::array();
    for (const auto& p : s.cloud.points) cloud.push_back(to_json(p));
    j["point_cloud"] = std::move(cloud);
    ojson t = ojson::array(), p = ojson::array(), q = ojson::array(), v = ojson::array(), vel = ojson::array(),
          part = ojson::array();
    for (const auto& x : s.trajectory.samples) {
        t.push_back(x.t);
        p.push_back(to_json(x.p));
        q.push_back(ojson::array({x.q.w, x.q.x, x.q.y, x.q.z}));
        v.push_back(x.v);
        vel.push_back(to_json(x.velocity));
        part.push_back(x.part_id);
    }
    j["trajectory"] = {{"t", std::move(t)}, {"p", std::move(p)}, {"q", std::move(q)}, {"v", std::move(v)},
                       {"vel", std::move(vel)}, {"part", std::move(part)}};
    j["rules"] = to_json(s.rules);
    return j;
}

inline Sample sample_from_json(const ojson& j) {
    Sample s;
    s.id = j.at("id").get<std::string>();
    s.geometry = geometry_kind_from_string(j.at("geometry").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.split = split_from_string(j.at("split").get<std::string>());
    s.workpiece = workpiece_from_json(j.at("workpiece"));
    for (const auto& p : j.at("point_cloud")) s.cloud.points.push_back(vec3_from_json(p));
    const auto& t = j.at("trajectory");
    const std::size_t n = t.at("t").size();
    const bool has_vel = t.contains("vel");
    const bool has_part = t.contains("part");
    s.trajectory.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& x = s.trajectory.samples[i];
        x.t = t["t"][i].get<double>();
        x.p = vec3_from_json(t["p"][i]);
        const auto& q = t["q"][i];
        x.q = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
        x.v = t["v"][i].get<double>();
        if (has_vel) x.velocity = vec3_from_json(t["vel"][i]);
        if (has_part) x.part_id = t["part"][i].get<int>();
    }
    s.rules = ruleset_from_json(j.at("rules"));
    return s;
}

inline std::string dump_sample(const Sample& s) { return to_json(s).dump() + "\n"; }

inline Sample load_sample(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open sample '" + file.string() + "'");
    return sample_from_json(ojson::parse(in));
}

// ---------------------------------------------------------------------------
// Splits and manifests
// ---------------------------------------------------------------------------

struct ManifestRecord {
    std::string id;
    std::string path;  // relative to the dataset directory
    Split split = Split::train;
    GeometryKind geometry = GeometryKind::l_shape;
    std::uint64_t seed = 0;
};

struct Manifest {
    std::vector<ManifestRecord> records;

    [[nodiscard]] std::array<std::size_t, 3> split_counts() const {
        std::array<std::size_t, 3> c{};
        for (const auto& r : records) ++c[static_cast<std::size_t>(r.split)];
        return c;
    }
};

/// Exact per-split counts; every n * ratio must be integral and ratios must sum to 1.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
    std::array<std::size_t, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (ratios[i] < 0.0) throw InvalidArgument("split ratios must be non-negative");
        const double exact = static_cast<double>(n) * ratios[i];
        const double rounded = std::round(exact);
        if (std::abs(exact - rounded) > 1e-6) throw InvalidArgument("n * ratio must be an integer for every split");
        out[i] = static_cast<std::size_t>(rounded);
    }
    if (out[0] + out[1] + out[2] != n) throw InvalidArgument("split sizes do not add up to n");
    return out;
}

/// Split per sample index: a seeded shuffle of indices, then contiguous
/// blocks of train / val / test.
inline std::vector<Split> assign_splits(std::size_t n, const std::array<double, 3>& ratios, std::uint64_t base_seed) {
    const auto sizes = split_sizes(n, ratios);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(base_seed);
    rng.shuffle(order);
    std::vector<Split> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[order[k]] = k < sizes[0] ? Split::train : (k < sizes[0] + sizes[1] ? Split::val : Split::test);
    return out;
}

inline std::string sample_id(GeometryKind kind, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return std::string(to_string(kind)) + "_" + buf;
}

inline ojson to_json(const ManifestRecord& r) {
    return ojson{{"id", r.id}, {"path", r.path}, {"split", to_string(r.split)}, {"geometry", to_string(r.geometry)},
                 {"seed", r.seed}};
}

inline ManifestRecord manifest_record_from_json(const ojson& j) {
    return {j.at("id").get<std::string>(), j.at("path").get<std::string>(),
            split_from_string(j.at("split").get<std::string>()),
            geometry_kind_from_string(j.at("geometry").get<std::string>()), j.at("seed").get<std::uint64_t>()};
}

inline Manifest read_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open manifest '" + file.string() + "'");
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        m.records.push_back(manifest_record_from_json(ojson::parse(line)));
    }
    return m;
}

inline void write_manifest(const std::filesystem::path& file, const Manifest& m) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write manifest '" + file.string() + "'");
    for (const auto& r : m.records) out << to_json(r).dump() << '\n';
}

/// Generate `cfg.n` samples into out_dir/samples/<id>.json plus
/// out_dir/manifest.jsonl. Sample i uses seed base_seed ^ i; output is
/// independent of the worker count.
inline Manifest generate_dataset(const GenerationConfig& cfg, const std::filesystem::path& out_dir) {
    const auto splits = assign_splits(cfg.n, cfg.ratios, cfg.base_seed);
    std::filesystem::create_directories(out_dir / "samples");

    Manifest manifest;
    manifest.records.resize(cfg.n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfg.n) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                const std::string id = sample_id(cfg.geometry, i);
                const Sample s = build_sample_with_retry(cfg.geometry, id, cfg.base_seed ^ i, splits[i], cfg);
                const std::string rel = "samples/" + id + ".json";
                std::ofstream out(out_dir / rel, std::ios::binary);
                if (!out) throw IoError("cannot write " + (out_dir / rel).string());
                out << dump_sample(s);
                manifest.records[i] = {id, rel, splits[i], cfg.geometry, s.seed};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    unsigned workers = cfg.workers > 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, cfg.n)));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    write_manifest(out_dir / "manifest.jsonl", manifest);
    return manifest;
}

}  // namespace skillinject
