#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace factlp {

//! Slack allowed when deciding whether a constraint row is satisfied.
inline constexpr double kFeasibilityTol = 1e-7;

//! Relative tolerance for comparing objective values between two solvers
//! or two formulations of the same program.
inline constexpr double kObjectiveRelTol = 1e-6;

//! Reduced costs and pivot elements below this magnitude count as zero
//! inside the simplex iteration.
inline constexpr double kPivotTol = 1e-9;

//! Tolerance for flow-conservation checks on edge weightings.
inline constexpr double kFlowTol = 1e-9;

//! Denominators at or below this magnitude trigger the zero branch of the
//! weight reconstruction recursion instead of a division.
inline constexpr double kZeroTol = 1e-12;

//! Compare with a tolerance that acts relatively for large magnitudes and
//! absolutely near zero.
inline bool nearly_equal(double a, double b, double tol) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= tol * scale;
}

//! Render a double compactly: integers without a decimal point, everything
//! else with enough digits to round-trip typical LP data.
inline std::string format_number(double v) {
    if (v == 0.0) return "0"; // avoids "-0"
    if (std::fabs(v) < 1e15 && v == std::floor(v)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace factlp
