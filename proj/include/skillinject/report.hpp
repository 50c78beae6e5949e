// Evaluation of rule predictions against a generated dataset split, the
// predicted-vs-actual scatter table and its SVG rendering.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "skillinject/dataset.hpp"
#include "skillinject/estimation.hpp"
#include "skillinject/io.hpp"

namespace skillinject {

/// One predicted rule per kind; params are kept as given (not clamped or zeroed).
struct Prediction {
    std::string id;
    std::array<Rule, 2> rules{Rule{RuleKind::velocity_scale, SegmentClass::none, 0.0},
                              Rule{RuleKind::orientation_offset, SegmentClass::none, 0.0}};

    [[nodiscard]] const Rule& get(RuleKind k) const { return rules[static_cast<std::size_t>(k)]; }
};

inline Prediction prediction_from_json(const ojson& j) {
    Prediction p;
    p.id = j.at("id").get<std::string>();
    std::array<bool, 2> seen{};
    for (const auto& r : j.at("rules")) {
        const auto kind = rule_kind_from_string(r.at("kind").get<std::string>());
        const auto k = static_cast<std::size_t>(kind);
        if (seen[k]) throw InvalidArgument("prediction '" + p.id + "' repeats rule kind " + std::string(to_string(kind)));
        seen[k] = true;
        const auto cls_key = r.contains("class") ? "class" : "target_class";
        p.rules[k] = Rule{kind, segment_class_from_string(r.at(cls_key).get<std::string>()), r.at("param").get<double>()};
    }
    if (!seen[0] || !seen[1]) throw InvalidArgument("prediction '" + p.id + "' must contain both rule kinds");
    return p;
}

inline ojson to_json(const Prediction& p) {
    ojson rules = ojson::array();
    for (const auto& r : p.rules)
        rules.push_back({{"kind", to_string(r.kind)}, {"class", to_string(r.target_class)}, {"param", r.param}});
    return ojson{{"id", p.id}, {"rules", std::move(rules)}};
}

inline Prediction prediction_from_estimate(std::string id, const RuleEstimate& e) {
    Prediction p;
    p.id = std::move(id);
    p.rules = {Rule{RuleKind::velocity_scale, e.velocity.cls, e.velocity.param},
               Rule{RuleKind::orientation_offset, e.orientation.cls, e.orientation.param}};
    return p;
}

/// Predictions JSONL, keyed by id. Duplicate ids are an error.
inline std::map<std::string, Prediction> read_predictions(std::istream& in) {
    std::map<std::string, Prediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Prediction p;
        try {
            p = prediction_from_json(ojson::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("predictions line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!out.emplace(p.id, p).second) throw InvalidArgument("duplicate prediction id '" + p.id + "'");
    }
    return out;
}

inline std::map<std::string, Prediction> read_predictions(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open predictions '" + file.string() + "'");
    return read_predictions(in);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct ScatterRow {
    std::string id;
    GeometryKind geometry = GeometryKind::l_shape;
    RuleKind kind = RuleKind::velocity_scale;
    SegmentClass cls = SegmentClass::straight;  // ground-truth target class
    double truth = 0.0;
    double pred = 0.0;
};

struct EvalReport {
    F1Report combined;                 // both rule kinds pooled
    std::array<F1Report, 2> per_kind;  // indexed by RuleKind
    std::optional<double> mae_velocity;     // over samples whose true velocity rule is active
    std::optional<double> mae_orientation;  // rad
    std::size_t n = 0;                      // samples evaluated
    std::vector<ScatterRow> scatter;
};

class MissingPredictions : public Error {
public:
    MissingPredictions(std::vector<std::string> ids)
        : Error(describe(ids)), ids_(std::move(ids)) {}
    [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }

private:
    static std::string describe(const std::vector<std::string>& ids) {
        std::string msg = "missing predictions for " + std::to_string(ids.size()) + " id(s):";
        for (const auto& id : ids) msg += " " + id;
        return msg;
    }
    std::vector<std::string> ids_;
};

/// Score predictions against the ground truth of one (manifest, split) pair.
/// `truth_of` maps a manifest record to its ground-truth rule set.
template <class TruthFn>
EvalReport evaluate_predictions_with(const Manifest& manifest, Split split, const std::map<std::string, Prediction>& preds,
                                TruthFn&& truth_of) {
    std::vector<const ManifestRecord*> records;
    std::vector<std::string> missing;
    for (const auto& r : manifest.records) {
        if (r.split != split) continue;
        if (!preds.contains(r.id))
            missing.push_back(r.id);
        else
            records.push_back(&r);
    }
    if (!missing.empty()) throw MissingPredictions(std::move(missing));
    if (records.empty()) throw InvalidArgument("split '" + std::string(to_string(split)) + "' has no samples");

    EvalReport rep;
    rep.n = records.size();
    std::vector<SegmentClass> pc_all, tc_all;
    std::array<std::vector<SegmentClass>, 2> pc, tc;
    std::array<std::vector<double>, 2> pv, tv;
    std::array<std::vector<bool>, 2> mask;
    for (const auto* r : records) {
        const RuleSet truth = truth_of(*r);
        const Prediction& p = preds.at(r->id);
        for (std::size_t k = 0; k < 2; ++k) {
            const auto kind = static_cast<RuleKind>(k);
            const Rule tr = truth.get(kind);
            const Rule& pr = p.get(kind);
            pc[k].push_back(pr.target_class);
            tc[k].push_back(tr.target_class);
            pc_all.push_back(pr.target_class);
            tc_all.push_back(tr.target_class);
            pv[k].push_back(pr.param);
            tv[k].push_back(tr.param);
            mask[k].push_back(tr.active());
            if (tr.active()) rep.scatter.push_back({r->id, r->geometry, kind, tr.target_class, tr.param, pr.param});
        }
    }
    rep.combined = f1_multiclass(pc_all, tc_all);
    for (std::size_t k = 0; k < 2; ++k) rep.per_kind[k] = f1_multiclass(pc[k], tc[k]);
    auto masked = [&](std::size_t k) -> std::optional<double> {
        if (std::none_of(mask[k].begin(), mask[k].end(), [](bool b) { return b; })) return std::nullopt;
        return mae(pv[k], tv[k], mask[k]);
    };
    rep.mae_velocity = masked(0);
    rep.mae_orientation = masked(1);
    return rep;
}

/// evaluate_predictions reading ground truth from the sample files under `dataset_dir`.
inline EvalReport evaluate_predictions(const Manifest& manifest, Split split,
                                       const std::map<std::string, Prediction>& preds,
                                       const std::filesystem::path& dataset_dir) {
    return evaluate_predictions_with(manifest, split, preds,
                                     [&](const ManifestRecord& r) { return load_sample(dataset_dir / r.path).rules; });
}

inline ojson to_json(const F1Report& f) {
    return ojson{{"straight", f.of(SegmentClass::straight).f1},
                 {"corner", f.of(SegmentClass::corner).f1},
                 {"none", f.of(SegmentClass::none).f1},
                 {"macro", f.macro},
                 {"micro", f.micro}};
}

inline ojson to_json(const EvalReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };
    return ojson{{"f1", to_json(r.combined)},
                 {"macro_f1", r.combined.macro},
                 {"micro_f1", r.combined.micro},
                 {"mae", {{"velocity", opt(r.mae_velocity)}, {"orientation_rad", opt(r.mae_orientation)}}},
                 {"n", r.n},
                 {"per_rule",
                  {{"velocity_scale", {{"f1", to_json(r.per_kind[0])}}},
                   {"orientation_offset", {{"f1", to_json(r.per_kind[1])}}}}}};
}

// ---------------------------------------------------------------------------
// Scatter CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kScatterCsvHeader = "id,geometry,kind,class,truth,pred";

inline void write_scatter_csv(std::ostream& out, const std::vector<ScatterRow>& rows) {
    out << kScatterCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.id << ',' << to_string(r.geometry) << ',' << to_string(r.kind) << ',' << to_string(r.cls) << ','
            << detail::num(r.truth) << ',' << detail::num(r.pred) << '\n';
}

inline std::vector<ScatterRow> read_scatter_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kScatterCsvHeader)
        throw IoError(std::string("scatter CSV must start with header '") + kScatterCsvHeader + "'");
    std::vector<ScatterRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 6) throw IoError("line " + std::to_string(line_no) + ": expected 6 columns");
        try {
            rows.push_back({c[0], geometry_kind_from_string(c[1]), rule_kind_from_string(c[2]),
                            segment_class_from_string(c[3]), detail::parse_double(c[4], line_no),
                            detail::parse_double(c[5], line_no)});
        } catch (const InvalidArgument& e) {
            throw IoError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct ScatterMark {
    double x = 0.0;  // px
    double y = 0.0;  // px
    RuleKind kind = RuleKind::velocity_scale;
};

struct ScatterPanel {
    GeometryKind geometry = GeometryKind::l_shape;
    SegmentClass cls = SegmentClass::straight;
    double left = 0.0, top = 0.0, size = 0.0;  // px, square plot area
    double lo = 0.0, hi = 1.0;                 // shared data range of both axes
    std::vector<ScatterMark> marks;

    [[nodiscard]] double px_x(double v) const { return left + (v - lo) / (hi - lo) * size; }
    [[nodiscard]] double px_y(double v) const { return top + size - (v - lo) / (hi - lo) * size; }
};

struct ScatterLayout {
    double width = 0.0, height = 0.0;
    std::vector<ScatterPanel> panels;  // row-major: l_shape straight, l_shape corner, window straight, window corner
};

struct ScatterStyle {
    double panel_size = 320.0;
    double margin = 60.0;
};

inline ScatterLayout layout_scatter(const std::vector<ScatterRow>& rows, const ScatterStyle& style = {}) {
    if (rows.empty()) throw InvalidArgument("scatter input is empty");
    ScatterLayout L;
    L.width = 2 * style.panel_size + 3 * style.margin;
    L.height = L.width;
    const std::array<GeometryKind, 2> geoms{GeometryKind::l_shape, GeometryKind::window};
    const std::array<SegmentClass, 2> classes{SegmentClass::straight, SegmentClass::corner};
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
            ScatterPanel p;
            p.geometry = geoms[r];
            p.cls = classes[c];
            p.left = style.margin + static_cast<double>(c) * (style.panel_size + style.margin);
            p.top = style.margin + static_cast<double>(r) * (style.panel_size + style.margin);
            p.size = style.panel_size;
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const auto& row : rows) {
                if (row.geometry != p.geometry || row.cls != p.cls) continue;
                lo = std::min({lo, row.truth, row.pred});
                hi = std::max({hi, row.truth, row.pred});
            }
            if (!std::isfinite(lo)) {
                lo = 0.0;
                hi = 1.0;
            }
            const double pad = std::max(0.05 * (hi - lo), 0.05);
            p.lo = lo - pad;
            p.hi = hi + pad;
            for (const auto& row : rows)
                if (row.geometry == p.geometry && row.cls == p.cls)
                    p.marks.push_back({p.px_x(row.truth), p.px_y(row.pred), row.kind});
            L.panels.push_back(std::move(p));
        }
    }
    return L;
}

inline std::string render_scatter_svg(const ScatterLayout& L) {
    std::ostringstream s;
    auto f = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(L.width) << "\" height=\"" << f(L.height)
      << "\" viewBox=\"0 0 " << f(L.width) << ' ' << f(L.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& p : L.panels) {
        const std::string title = std::string(p.geometry == GeometryKind::l_shape ? "L-shape" : "Window") + " " +
                                  std::string(to_string(p.cls));
        s << "<g class=\"panel\" data-geometry=\"" << to_string(p.geometry) << "\" data-class=\"" << to_string(p.cls)
          << "\">\n";
        s << "<rect x=\"" << f(p.left) << "\" y=\"" << f(p.top) << "\" width=\"" << f(p.size) << "\" height=\""
          << f(p.size) << "\" fill=\"none\" stroke=\"black\"/>\n";
        s << "<text x=\"" << f(p.left + p.size / 2) << "\" y=\"" << f(p.top - 10) << "\" text-anchor=\"middle\">"
          << title << "</text>\n";
        s << "<text x=\"" << f(p.left + p.size / 2) << "\" y=\"" << f(p.top + p.size + 32)
          << "\" text-anchor=\"middle\">actual</text>\n";
        s << "<text x=\"" << f(p.left - 40) << "\" y=\"" << f(p.top + p.size / 2) << "\" text-anchor=\"middle\" "
          << "transform=\"rotate(-90 " << f(p.left - 40) << ' ' << f(p.top + p.size / 2) << ")\">predicted</text>\n";
        for (double v : {p.lo, p.hi}) {
            s << "<text x=\"" << f(p.px_x(v)) << "\" y=\"" << f(p.top + p.size + 15)
              << "\" text-anchor=\"middle\">" << f(v) << "</text>\n";
            s << "<text x=\"" << f(p.left - 5) << "\" y=\"" << f(p.px_y(v) + 4) << "\" text-anchor=\"end\">" << f(v)
              << "</text>\n";
        }
        s << "<line class=\"identity\" x1=\"" << f(p.px_x(p.lo)) << "\" y1=\"" << f(p.px_y(p.lo)) << "\" x2=\""
          << f(p.px_x(p.hi)) << "\" y2=\"" << f(p.px_y(p.hi)) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
        for (const auto& m : p.marks) {
            if (m.kind == RuleKind::velocity_scale) {
                s << "<circle cx=\"" << f(m.x) << "\" cy=\"" << f(m.y)
                  << "\" r=\"3.5\" fill=\"none\" stroke=\"#1f77b4\"/>\n";
            } else {
                const double r = 4.5;
                s << "<polygon points=\"" << f(m.x) << ',' << f(m.y - r) << ' ' << f(m.x - r * 0.866) << ','
                  << f(m.y + r / 2) << ' ' << f(m.x + r * 0.866) << ',' << f(m.y + r / 2)
                  << "\" fill=\"none\" stroke=\"#d62728\"/>\n";
            }
        }
        s << "</g>\n";
    }
    const double ly = L.height - 15;
    s << "<circle cx=\"20\" cy=\"" << f(ly - 4) << "\" r=\"3.5\" fill=\"none\" stroke=\"#1f77b4\"/>\n";
    s << "<text x=\"30\" y=\"" << f(ly) << "\">velocity scale</text>\n";
    s << "<polygon points=\"140," << f(ly - 8.5) << " 136.1," << f(ly - 1.75) << " 143.9," << f(ly - 1.75)
      << "\" fill=\"none\" stroke=\"#d62728\"/>\n";
    s << "<text x=\"150\" y=\"" << f(ly) << "\">orientation offset (rad)</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace skillinject
