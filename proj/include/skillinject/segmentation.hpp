// Automatic straight/corner labelling of a path. A fixed-width window of
// waypoints slides along each part; points whose window deviates from a
// straight line by less than a residual threshold are straight.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "skillinject/core_math.hpp"
#include "skillinject/error.hpp"
#include "skillinject/geometry.hpp"
#include "skillinject/segment_class.hpp"

namespace skillinject {

struct SegmentationParams {
    int window = 9;                    // points, odd
    double residual_threshold = 1e-4;  // m
    int min_len = 3;                   // shortest segment kept after merging
};

struct Segment {
    SegmentClass cls;
    std::size_t start;  // inclusive
    std::size_t end;    // inclusive

    [[nodiscard]] std::size_t length() const { return end - start + 1; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

struct Segmentation {
    std::vector<SegmentClass> labels;
    std::vector<Segment> segments;
};

/// Half-open index ranges [begin, end) of consecutive equal part ids.
inline std::vector<std::pair<std::size_t, std::size_t>> part_ranges(const RawPath& path) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= path.size(); ++i) {
        if (i == path.size() || path.waypoints[i].part_id != path.waypoints[begin].part_id) {
            out.emplace_back(begin, i);
            begin = i;
        }
    }
    return out;
}

inline std::vector<SegmentClass> label_points(const RawPath& path, int window, double residual_threshold) {
    if (window < 3 || window % 2 == 0) throw InvalidArgument("window must be an odd integer >= 3");
    const auto half = static_cast<std::size_t>(window / 2);
    std::vector<SegmentClass> labels(path.size(), SegmentClass::straight);
    std::vector<Vec3> buf;
    for (const auto& [begin, end] : part_ranges(path)) {
        if (end - begin < 3) throw InvalidArgument("path part shorter than 3 points");
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t lo = i >= begin + half ? i - half : begin;
            const std::size_t hi = std::min(end - 1, i + half);
            buf.clear();
            for (std::size_t j = lo; j <= hi; ++j) buf.push_back(path.waypoints[j].position);
            double residual = 0.0;
            try {
                residual = principal_axis(buf).residual_rms;
            } catch (const ZeroSpread&) {
                residual = 0.0;  // repeated pose: no curvature evidence
            }
            // exactly at the threshold counts as straight
            labels[i] = residual > residual_threshold ? SegmentClass::corner : SegmentClass::straight;
        }
    }
    return labels;
}

/// Run-length grouping; runs shorter than min_len are absorbed by the
/// preceding run (the first run by the following one).
inline Segmentation group_segments(std::span<const SegmentClass> labels, int min_len) {
    if (labels.empty()) throw InvalidArgument("group_segments needs a non-empty label sequence");
    const auto min_run = static_cast<std::size_t>(std::max(1, min_len));

    std::vector<Segment> runs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (runs.empty() || runs.back().cls != labels[i])
            runs.push_back({labels[i], i, i});
        else
            runs.back().end = i;
    }

    // Absorb short runs into their predecessor until stable, coalescing equal
    // neighbours after each merge. The first run is only merged forward once
    // no other short run is left.
    while (runs.size() > 1) {
        std::size_t i = 1;
        while (i < runs.size() && runs[i].length() >= min_run) ++i;
        if (i < runs.size()) {
            runs[i - 1].end = runs[i].end;
            runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(i));
            if (i < runs.size() && runs[i].cls == runs[i - 1].cls) {
                runs[i - 1].end = runs[i].end;
                runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(i));
            }
        } else if (runs[0].length() < min_run) {
            runs[1].start = runs[0].start;
            runs.erase(runs.begin());
        } else {
            break;
        }
    }

    Segmentation seg;
    seg.labels.resize(labels.size());
    for (const auto& r : runs)
        for (std::size_t i = r.start; i <= r.end; ++i) seg.labels[i] = r.cls;
    seg.segments = std::move(runs);
    return seg;
}

inline Segmentation segment_path(const RawPath& path, const SegmentationParams& p = {}) {
    const auto labels = label_points(path, p.window, p.residual_threshold);
    return group_segments(labels, p.min_len);
}

}  // namespace skillinject
