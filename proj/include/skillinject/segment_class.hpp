#pragma once

#include <array>
#include <string>
#include <string_view>

#include "skillinject/error.hpp"

namespace skillinject {

/// Geometric segment type. `none` only ever marks a rule as inactive; path
/// labels are straight or corner.
enum class SegmentClass { straight = 0, corner = 1, none = 2 };

inline constexpr std::array<SegmentClass, 3> kAllClasses{SegmentClass::straight, SegmentClass::corner,
                                                         SegmentClass::none};

inline std::string_view to_string(SegmentClass c) {
    switch (c) {
        case SegmentClass::straight: return "straight";
        case SegmentClass::corner: return "corner";
        case SegmentClass::none: return "none";
    }
    return "none";
}

inline SegmentClass segment_class_from_string(std::string_view s) {
    if (s == "straight") return SegmentClass::straight;
    if (s == "corner") return SegmentClass::corner;
    if (s == "none") return SegmentClass::none;
    throw InvalidArgument("unknown segment class '" + std::string(s) + "'");
}

}  // namespace skillinject
