#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace evoae::app {

struct FrontPoint {
    std::vector<double> objectives;
    bool feasible = true;
};

/// Reads a front.csv written by the attack command.
std::vector<FrontPoint> read_front_csv(const std::filesystem::path& path);

/// One scatter panel for two objectives, three pairwise panels for three or
/// more. Axis ranges cover every point; infeasible points are drawn hollow.
std::string front_svg(const std::vector<FrontPoint>& points, const std::vector<std::string>& axis_names = {});
void write_front_svg(const std::vector<FrontPoint>& points, const std::filesystem::path& path,
                     const std::vector<std::string>& axis_names = {});

} // namespace evoae::app
