// skillinject: command-line front end for dataset generation, path
// segmentation, rule injection, simulation, rule estimation and evaluation.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skillinject/skillinject.hpp"

namespace fs = std::filesystem;
using namespace skillinject;

namespace {

// --- shared option groups ---------------------------------------------------

struct GeometryOpts {
    std::string path_csv;
    std::string geometry = "l_shape";
    double leg_a = 1.0, leg_b = 1.0, width = 0.2;
    double outer_w = 1.0, outer_h = 1.4, frame_t = 0.1;
    int mullions = 1;
    double yaw = 0.0;
    std::vector<double> translation{0.0, 0.0, 0.0};

    void add(CLI::App* app) {
        app->add_option("--path", path_csv, "Raw path CSV (x,y,z,roll,pitch,yaw,part_id); overrides the geometry flags");
        app->add_option("--geometry", geometry, "Workpiece kind")
            ->check(CLI::IsMember({"l_shape", "window"}))
            ->capture_default_str();
        app->add_option("--leg-a", leg_a, "L-shape leg along +x, m")->capture_default_str();
        app->add_option("--leg-b", leg_b, "L-shape leg along +y, m")->capture_default_str();
        app->add_option("--width", width, "L-shape member width, m")->capture_default_str();
        app->add_option("--outer-w", outer_w, "Window outer width, m")->capture_default_str();
        app->add_option("--outer-h", outer_h, "Window outer height, m")->capture_default_str();
        app->add_option("--frame-t", frame_t, "Window frame / mullion thickness, m")->capture_default_str();
        app->add_option("--mullions", mullions, "Window vertical mullions")->capture_default_str();
        app->add_option("--yaw", yaw, "Workpiece yaw about +z, rad")->capture_default_str();
        app->add_option("--translation", translation, "Workpiece translation x,y,z in m")
            ->delimiter(',')
            ->expected(3)
            ->capture_default_str();
    }

    [[nodiscard]] Workpiece workpiece() const {
        const RigidTransform pose{yaw, {translation.at(0), translation.at(1), translation.at(2)}};
        if (geometry_kind_from_string(geometry) == GeometryKind::l_shape)
            return make_l_workpiece(leg_a, leg_b, width, pose);
        return make_window_workpiece(outer_w, outer_h, frame_t, mullions, pose);
    }
};

struct PathOpts {
    PathOptions p;

    void add(CLI::App* app) {
        app->add_option("--spacing", p.spacing, "Maximum waypoint spacing, m")->capture_default_str();
        app->add_option("--standoff", p.standoff, "Tool standoff above the surface, m")->capture_default_str();
        app->add_option("--speed", p.nominal_speed, "Nominal tool speed, m/s")->capture_default_str();
        app->add_option("--corner-radius", p.corner_radius, "Centerline fillet radius, m")->capture_default_str();
    }
};

struct SegmentOpts {
    SegmentationParams p;

    void add(CLI::App* app) {
        app->add_option("--window", p.window, "Odd fitting window, waypoints")->capture_default_str();
        app->add_option("--threshold", p.residual_threshold, "RMS line-fit residual threshold, m")
            ->capture_default_str();
        app->add_option("--min-len", p.min_len, "Shortest segment kept, waypoints")->capture_default_str();
    }
};

struct InjectOpts {
    std::string rules_file;
    InjectionParams p;

    void add(CLI::App* app) {
        app->add_option("--rules", rules_file, "Rule set JSON ([{kind,target_class,param}]); empty means no rules");
        app->add_option("--blend-len", p.blend_len, "Blend width at segment boundaries, waypoints")
            ->capture_default_str();
    }
};

struct SimOpts {
    BodyParams body;
    ControllerParams ctrl;
    SimParams sim;
    double inertia = 0.01;

    void add(CLI::App* app) {
        app->add_option("--dt", sim.dt, "Integrator step, s")->capture_default_str();
        app->add_option("--max-steps", sim.max_steps, "Step budget per run (0: derived from the profile)")
            ->capture_default_str();
        app->add_option("--mass", body.mass, "Body mass, kg")->capture_default_str();
        app->add_option("--inertia", inertia, "Principal inertia (isotropic), kg m^2")->capture_default_str();
        app->add_option("--damping", body.linear_damping, "Linear damping, N s/m")->capture_default_str();
        app->add_option("--damping-ori", body.angular_damping, "Angular damping, N m s/rad")->capture_default_str();
        app->add_option("--kp", ctrl.kp_pos, "Position gain, N/m")->capture_default_str();
        app->add_option("--kp-ori", ctrl.kp_ori, "Orientation gain, N m/rad")->capture_default_str();
        app->add_option("--lookahead", ctrl.lookahead_dist, "Lookahead distance, m")->capture_default_str();
    }

    [[nodiscard]] BodyParams resolved_body() const {
        BodyParams b = body;
        b.inertia = {inertia, inertia, inertia};
        return b;
    }
};

// --- config file and echo ---------------------------------------------------

/// Fill options not given on the command line from a flat JSON object whose
/// keys are long flag names without the leading dashes.
void apply_config(CLI::App* app, const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config '" + file + "'");
    const auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    auto text = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    for (const auto& [key, value] : j.items()) {
        if (key == "command") {
            if (value != app->get_name()) throw InvalidArgument("config is for command '" + text(value) + "'");
            continue;
        }
        CLI::Option* opt = key == "config" || key == "help" ? nullptr : app->get_option_no_throw("--" + key);
        if (!opt) throw InvalidArgument("unknown config key '" + key + "'");
        if (opt->count() > 0) continue;  // command line wins
        if (value.is_array()) {
            for (const auto& e : value) opt->add_result(text(e));
        } else {
            opt->add_result(text(value));
        }
        opt->run_callback();
    }
}

nlohmann::ordered_json typed(const std::string& s) {
    auto j = nlohmann::ordered_json::parse(s, nullptr, false);
    if (j.is_discarded() || j.is_object()) return s;
    return j;
}

/// Fully-resolved options of a subcommand, keyed by long flag name. With
/// for_dataset, options that do not affect generated content are dropped.
nlohmann::ordered_json resolved_config(const CLI::App* app, bool for_dataset = false) {
    nlohmann::ordered_json j;
    j["command"] = app->get_name();
    for (const CLI::Option* o : app->get_options()) {
        if (o->get_lnames().empty()) continue;
        const std::string name = o->get_lnames().front();
        if (name == "help" || name == "help-all" || name == "config") continue;
        if (for_dataset && (name == "out" || name == "workers")) continue;
        if (o->count() > 0) {
            const auto& r = o->results();
            if (o->get_items_expected_max() > 1) {
                auto arr = nlohmann::ordered_json::array();
                for (const auto& x : r) arr.push_back(typed(x));
                j[name] = std::move(arr);
            } else if (o->get_expected_max() == 0) {
                j[name] = o->as<bool>();  // flag
            } else {
                j[name] = typed(r.back());
            }
        } else if (o->get_expected_max() == 0) {
            j[name] = false;
        } else {
            const std::string d = o->get_default_str();
            j[name] = d.empty() ? nlohmann::ordered_json(nullptr) : typed(d);
        }
    }
    return j;
}

// --- helpers ----------------------------------------------------------------

RuleSet load_rules(const std::string& file) {
    if (file.empty()) return {};
    std::ifstream in(file);
    if (!in) throw IoError("cannot open rules '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    if (ss.str().find_first_not_of(" \t\r\n") == std::string::npos) return {};
    return ruleset_from_json(ojson::parse(ss.str()));
}

RawPath load_or_build_path(const GeometryOpts& g, const PathOpts& po) {
    if (!g.path_csv.empty()) return read_path_csv(g.path_csv, po.p.nominal_speed);
    return make_reference_path(g.workpiece(), po.p);
}

/// Write to `file`, or to stdout when it is empty or "-".
template <class Fn>
void emit(const std::string& file, Fn&& write) {
    if (file.empty() || file == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open '" + file + "' for writing");
    write(out);
}

ojson to_json(const ClassStats& s) { return ojson{{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}}; }

ojson to_json(const KindEstimate& e) {
    return ojson{{"class", to_string(e.cls)}, {"param", e.param}, {"straight", to_json(e.straight)},
                 {"corner", to_json(e.corner)}};
}

ojson to_json(const RuleEstimate& e) {
    return ojson{{"velocity_scale", to_json(e.velocity)}, {"orientation_offset", to_json(e.orientation)}};
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SKILL_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used, 0);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw InvalidArgument(std::string("SKILL_SEED is not an unsigned integer: '") + env + "'");
    }
    return 42;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("Rule injection into robot skill demonstrations: synthetic data, simulation and estimation.");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string config_file;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON file of flag values (keys are long flag names)");
    };

    // gen
    GenerationConfig gen_cfg;
    std::string gen_geometry = "l_shape";
    std::string gen_out;
    std::vector<double> gen_split{0.8, 0.1, 0.1};
    std::uint64_t gen_seed = 0;
    PathOpts gen_path;
    SegmentOpts gen_seg;
    InjectionParams gen_inject;
    SimOpts gen_sim;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (samples/<id>.json + manifest.jsonl)");
    gen->add_option("--geometry", gen_geometry, "Workpiece kind")
        ->check(CLI::IsMember({"l_shape", "window"}))
        ->capture_default_str();
    gen->add_option("--n", gen_cfg.n, "Number of samples")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Base seed (default: $SKILL_SEED, else 42)");
    gen->add_option("--split", gen_split, "train,val,test ratios")->delimiter(',')->expected(3)->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--cloud-points", gen_cfg.cloud_points, "Point cloud size")->capture_default_str();
    gen->add_flag("--single-rule", gen_cfg.single_rule, "Exactly one active rule per sample")->capture_default_str();
    gen->add_option("--workers", gen_cfg.workers, "Worker threads (0: logical CPU count)")->capture_default_str();
    gen->add_option("--blend-len", gen_inject.blend_len, "Blend width at segment boundaries, waypoints")
        ->capture_default_str();
    gen_path.add(gen);
    gen_seg.add(gen);
    gen_sim.add(gen);
    add_config(gen);

    // simulate
    GeometryOpts sim_geo;
    PathOpts sim_path;
    SegmentOpts sim_seg;
    InjectOpts sim_inject;
    SimOpts sim_sim;
    std::string sim_out;
    auto* simulate_cmd = app.add_subcommand("simulate", "Segment a path, inject rules, simulate; write trajectory CSV");
    sim_geo.add(simulate_cmd);
    sim_path.add(simulate_cmd);
    sim_seg.add(simulate_cmd);
    sim_inject.add(simulate_cmd);
    sim_sim.add(simulate_cmd);
    simulate_cmd->add_option("--out", sim_out, "Trajectory CSV (default: stdout)");
    add_config(simulate_cmd);

    // segment
    GeometryOpts seg_geo;
    PathOpts seg_path;
    SegmentOpts seg_seg;
    std::string seg_out, seg_path_out;
    auto* segment_cmd = app.add_subcommand("segment", "Label path waypoints straight / corner; write labels CSV");
    seg_geo.add(segment_cmd);
    seg_path.add(segment_cmd);
    seg_seg.add(segment_cmd);
    segment_cmd->add_option("--out", seg_out, "Labels CSV (default: stdout)");
    segment_cmd->add_option("--path-out", seg_path_out, "Also write the raw path CSV here");
    add_config(segment_cmd);

    // inject
    GeometryOpts inj_geo;
    PathOpts inj_path;
    SegmentOpts inj_seg;
    InjectOpts inj_inject;
    std::string inj_out;
    auto* inject_cmd = app.add_subcommand("inject", "Segment a path and apply rules; write the target profile CSV");
    inj_geo.add(inject_cmd);
    inj_path.add(inject_cmd);
    inj_seg.add(inject_cmd);
    inj_inject.add(inject_cmd);
    inject_cmd->add_option("--out", inj_out, "Profile CSV (default: stdout)");
    add_config(inject_cmd);

    // estimate
    GeometryOpts est_geo;
    PathOpts est_path;
    SegmentOpts est_seg;
    AlignmentParams est_align;
    EstimationParams est_params;
    std::string est_traj, est_manifest, est_split = "test", est_out;
    auto* estimate_cmd = app.add_subcommand(
        "estimate", "Recover rules from a trajectory CSV, or from every sample of a manifest split (predictions JSONL)");
    estimate_cmd->add_option("--trajectory", est_traj, "Trajectory CSV (single mode)");
    estimate_cmd->add_option("--manifest", est_manifest, "Dataset manifest.jsonl (batch mode)");
    estimate_cmd->add_option("--split", est_split, "Split to estimate in batch mode")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    est_geo.add(estimate_cmd);
    est_path.add(estimate_cmd);
    est_seg.add(estimate_cmd);
    estimate_cmd->add_option("--exclude-boundary", est_align.blend_len, "Waypoints dropped around class boundaries")
        ->capture_default_str();
    estimate_cmd->add_option("--exclude-ends", est_align.end_margin, "Waypoints dropped at both ends of each part")
        ->capture_default_str();
    estimate_cmd->add_option("--min-samples", est_params.min_samples, "Interior samples required per class")
        ->capture_default_str();
    estimate_cmd->add_option("--velocity-threshold", est_params.velocity_threshold, "|ratio - 1| marking an active rule")
        ->capture_default_str();
    estimate_cmd->add_option("--orientation-threshold", est_params.orientation_threshold,
                             "|tilt| in rad marking an active rule")
        ->capture_default_str();
    estimate_cmd->add_option("--out", est_out, "Output file (default: stdout)");
    add_config(estimate_cmd);

    // eval
    std::string ev_pred, ev_manifest, ev_split = "test", ev_out, ev_scatter;
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions JSONL against a manifest split");
    eval_cmd->add_option("--predictions", ev_pred, "Predictions JSONL ({id, rules:[{kind,class,param}]})")->required();
    eval_cmd->add_option("--manifest", ev_manifest, "Dataset manifest.jsonl")->required();
    eval_cmd->add_option("--split", ev_split, "Split to score")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    eval_cmd->add_option("--out", ev_out, "Report JSON (default: stdout)");
    eval_cmd->add_option("--scatter", ev_scatter, "Scatter CSV (default: scatter.csv next to the report)");
    add_config(eval_cmd);

    // scatter
    std::string sc_in, sc_out;
    auto* scatter_cmd = app.add_subcommand("scatter", "Render a scatter CSV as a 4-panel predicted-vs-actual SVG");
    scatter_cmd->add_option("--in", sc_in, "Scatter CSV from eval")->required();
    scatter_cmd->add_option("--out", sc_out, "SVG file (default: stdout)");
    add_config(scatter_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    CLI::App* cmd = app.get_subcommands().front();
    try {
        if (!config_file.empty()) apply_config(cmd, config_file);
        if (cmd == gen && gen->count("--seed") == 0) {
            // record the fallback seed so it appears in the echo
            auto* seed_opt = gen->get_option("--seed");
            seed_opt->add_result(std::to_string(default_seed()));
            seed_opt->run_callback();
        }
        std::cerr << resolved_config(cmd).dump() << '\n';

        if (cmd == gen) {
            gen_cfg.geometry = geometry_kind_from_string(gen_geometry);
            gen_cfg.base_seed = gen_seed;
            gen_cfg.ratios = {gen_split.at(0), gen_split.at(1), gen_split.at(2)};
            gen_cfg.path = gen_path.p;
            gen_cfg.segmentation = gen_seg.p;
            gen_cfg.injection = gen_inject;
            gen_cfg.body = gen_sim.resolved_body();
            gen_cfg.controller = gen_sim.ctrl;
            gen_cfg.sim = gen_sim.sim;
            split_sizes(gen_cfg.n, gen_cfg.ratios);  // validate before touching the filesystem
            const Manifest m = generate_dataset(gen_cfg, gen_out);
            {
                std::ofstream cfg_out(fs::path(gen_out) / "config.json", std::ios::binary);
                cfg_out << resolved_config(gen, true).dump(2) << '\n';
            }
            const auto c = m.split_counts();
            std::cout << "generated " << m.records.size() << " samples in " << gen_out << ": train " << c[0]
                      << ", val " << c[1] << ", test " << c[2] << '\n';
            return 0;
        }

        if (cmd == simulate_cmd) {
            const RawPath path = load_or_build_path(sim_geo, sim_path);
            const auto seg = segment_path(path, sim_seg.p);
            const auto profile = apply_rules(path, seg, load_rules(sim_inject.rules_file), sim_inject.p);
            const auto traj = simulate(profile, sim_sim.resolved_body(), sim_sim.ctrl, sim_sim.sim);
            emit(sim_out, [&](std::ostream& o) { write_trajectory_csv(o, traj); });
            return 0;
        }

        if (cmd == segment_cmd) {
            const RawPath path = load_or_build_path(seg_geo, seg_path);
            const auto seg = segment_path(path, seg_seg.p);
            emit(seg_out, [&](std::ostream& o) { write_labels_csv(o, path, seg.labels); });
            if (!seg_path_out.empty()) write_path_csv(seg_path_out, path);
            return 0;
        }

        if (cmd == inject_cmd) {
            const RawPath path = load_or_build_path(inj_geo, inj_path);
            const auto seg = segment_path(path, inj_seg.p);
            const auto profile = apply_rules(path, seg, load_rules(inj_inject.rules_file), inj_inject.p);
            emit(inj_out, [&](std::ostream& o) { write_profile_csv(o, profile); });
            return 0;
        }

        if (cmd == estimate_cmd) {
            if (est_traj.empty() == est_manifest.empty())
                throw InvalidArgument("estimate needs exactly one of --trajectory or --manifest");
            if (!est_traj.empty()) {
                const RawPath path = load_or_build_path(est_geo, est_path);
                const auto nominal = nominal_profile(path, segment_path(path, est_seg.p));
                const auto e = estimate_rules(read_trajectory_csv(est_traj), nominal, est_align, est_params);
                emit(est_out, [&](std::ostream& o) { o << to_json(e).dump(2) << '\n'; });
                return 0;
            }
            const Manifest m = read_manifest(est_manifest);
            const fs::path root = fs::path(est_manifest).parent_path();
            const Split split = split_from_string(est_split);
            std::ostringstream lines;
            for (const auto& r : m.records) {
                if (r.split != split) continue;
                const Sample s = load_sample(root / r.path);
                const RawPath path = make_reference_path(s.workpiece, est_path.p);
                const auto nominal = nominal_profile(path, segment_path(path, est_seg.p));
                const auto e = estimate_rules(s.trajectory, nominal, est_align, est_params);
                lines << to_json(prediction_from_estimate(r.id, e)).dump() << '\n';
            }
            emit(est_out, [&](std::ostream& o) { o << lines.str(); });
            return 0;
        }

        if (cmd == eval_cmd) {
            const Manifest m = read_manifest(ev_manifest);
            const auto preds = read_predictions(fs::path(ev_pred));
            const auto rep = evaluate_predictions(m, split_from_string(ev_split), preds,
                                                  fs::path(ev_manifest).parent_path());
            emit(ev_out, [&](std::ostream& o) { o << to_json(rep).dump(2) << '\n'; });
            fs::path scatter = ev_scatter;
            if (scatter.empty())
                scatter = (ev_out.empty() || ev_out == "-" ? fs::path(".") : fs::path(ev_out).parent_path()) /
                          "scatter.csv";
            std::ofstream out(scatter, std::ios::binary);
            if (!out) throw IoError("cannot open '" + scatter.string() + "' for writing");
            write_scatter_csv(out, rep.scatter);
            return 0;
        }

        if (cmd == scatter_cmd) {
            std::ifstream in(sc_in);
            if (!in) throw IoError("cannot open '" + sc_in + "'");
            const auto svg = render_scatter_svg(layout_scatter(read_scatter_csv(in)));
            emit(sc_out, [&](std::ostream& o) { o << svg; });
            return 0;
        }
    } catch (const Divergence& e) {
        std::cerr << "error: simulation diverged at step " << e.step() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
