// Plain-text file formats: trajectory CSV, raw path CSV, segmentation label
// CSV, target profile CSV and whitespace-separated point clouds.

#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "skillinject/dynamics.hpp"
#include "skillinject/error.hpp"
#include "skillinject/geometry.hpp"
#include "skillinject/rules.hpp"
#include "skillinject/segmentation.hpp"

namespace skillinject {

class IoError : public Error {
public:
    using Error::Error;
};

inline constexpr const char* kTrajectoryCsvHeader = "t,px,py,pz,qw,qx,qy,qz,v";
inline constexpr const char* kPathCsvHeader = "x,y,z,roll,pitch,yaw,part_id";

namespace detail {

/// Round-trip exact decimal form of a double (17 significant digits).
inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos)
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
    }
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

// --- trajectory -------------------------------------------------------------

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    using detail::num;
    out << kTrajectoryCsvHeader << '\n';
    for (const auto& s : traj.samples) {
        out << num(s.t) << ',' << num(s.p.x) << ',' << num(s.p.y) << ',' << num(s.p.z) << ',' << num(s.q.w) << ','
            << num(s.q.x) << ',' << num(s.q.y) << ',' << num(s.q.z) << ',' << num(s.v) << '\n';
    }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto out = detail::open_out(path);
    write_trajectory_csv(out, traj);
}

/// Reads the 9-column trajectory CSV. Velocity vectors are not part of the
/// format; they are left zero and part ids are left 0.
inline Trajectory read_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kTrajectoryCsvHeader)
        throw IoError(std::string("trajectory CSV must start with header '") + kTrajectoryCsvHeader + "'");
    Trajectory traj;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 9) throw IoError("line " + std::to_string(line_no) + ": expected 9 columns");
        TrajectorySample s;
        s.t = detail::parse_double(c[0], line_no);
        s.p = {detail::parse_double(c[1], line_no), detail::parse_double(c[2], line_no),
               detail::parse_double(c[3], line_no)};
        s.q = {detail::parse_double(c[4], line_no), detail::parse_double(c[5], line_no),
               detail::parse_double(c[6], line_no), detail::parse_double(c[7], line_no)};
        s.v = detail::parse_double(c[8], line_no);
        traj.samples.push_back(s);
    }
    return traj;
}

inline Trajectory read_trajectory_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return read_trajectory_csv(in);
}

// --- raw path ---------------------------------------------------------------

inline void write_path_csv(std::ostream& out, const RawPath& path) {
    using detail::num;
    out << kPathCsvHeader << '\n';
    for (const auto& w : path.waypoints)
        out << num(w.position.x) << ',' << num(w.position.y) << ',' << num(w.position.z) << ',' << num(w.euler.roll)
            << ',' << num(w.euler.pitch) << ',' << num(w.euler.yaw) << ',' << w.part_id << '\n';
}

inline void write_path_csv(const std::string& file, const RawPath& path) {
    auto out = detail::open_out(file);
    write_path_csv(out, path);
}

inline RawPath read_path_csv(std::istream& in, double nominal_speed) {
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kPathCsvHeader)
        throw IoError(std::string("path CSV must start with header '") + kPathCsvHeader + "'");
    RawPath path;
    path.nominal_speed = nominal_speed;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 7) throw IoError("line " + std::to_string(line_no) + ": expected 7 columns");
        Waypoint w;
        w.position = {detail::parse_double(c[0], line_no), detail::parse_double(c[1], line_no),
                      detail::parse_double(c[2], line_no)};
        w.euler = {detail::parse_double(c[3], line_no), detail::parse_double(c[4], line_no),
                   detail::parse_double(c[5], line_no)};
        w.part_id = static_cast<int>(detail::parse_double(c[6], line_no));
        path.waypoints.push_back(w);
    }
    if (path.waypoints.empty()) throw IoError("path CSV has no waypoints");
    int expect = 0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const int id = path.waypoints[i].part_id;
        if (i > 0 && id == path.waypoints[i - 1].part_id) continue;
        if (id != expect) throw IoError("part ids must be contiguous integers starting at 0");
        ++expect;
    }
    return path;
}

inline RawPath read_path_csv(const std::string& file, double nominal_speed) {
    auto in = detail::open_in(file);
    return read_path_csv(in, nominal_speed);
}

// --- labels / profile / cloud -----------------------------------------------

inline void write_labels_csv(std::ostream& out, const RawPath& path, const std::vector<SegmentClass>& labels) {
    out << "index,part_id,class\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << i << ',' << path.waypoints[i].part_id << ',' << to_string(labels[i]) << '\n';
}

inline void write_profile_csv(std::ostream& out, const TargetProfile& profile) {
    using detail::num;
    out << "index,part_id,class,px,py,pz,qw,qx,qy,qz,speed\n";
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const auto& p = profile.points[i];
        out << i << ',' << p.part_id << ',' << to_string(p.cls) << ',' << num(p.position.x) << ','
            << num(p.position.y) << ',' << num(p.position.z) << ',' << num(p.orientation.w) << ','
            << num(p.orientation.x) << ',' << num(p.orientation.y) << ',' << num(p.orientation.z) << ','
            << num(p.speed) << '\n';
    }
}

inline void write_point_cloud(std::ostream& out, const PointCloud& cloud) {
    using detail::num;
    for (const auto& p : cloud.points) out << num(p.x) << ' ' << num(p.y) << ' ' << num(p.z) << '\n';
}

inline PointCloud read_point_cloud(std::istream& in) {
    PointCloud cloud;
    Vec3 p;
    while (in >> p.x >> p.y >> p.z) cloud.points.push_back(p);
    if (!in.eof()) throw IoError("malformed point cloud text");
    return cloud;
}

}  // namespace skillinject
