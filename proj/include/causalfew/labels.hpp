#pragma once

#include <array>
#include <string>

namespace causalfew {

// Severity taxonomy at three granularities. The granular score maps onto a
// four-group grade, which collapses to a low/high split.
enum class GleasonScore : int {
    GS_3_4 = 0,
    GS_4_3 = 1,
    GS_4_4 = 2,
    GS_3_5 = 3,
    GS_5_3 = 4,
    GS_4_5 = 5,
    GS_5_4 = 6,
    GS_5_5 = 7,
};

enum class IsupGrade : int { Two = 2, Three = 3, Four = 4, Five = 5 };

enum class TumorGrade : int { LG = 0, HG = 1 };

constexpr int kNumGleasonClasses = 8;
constexpr int kNumIsupClasses = 4;
constexpr int kNumGradeClasses = 2;

// {3+4}->2, {4+3}->3, {4+4, 3+5, 5+3}->4, {4+5, 5+4, 5+5}->5
IsupGrade isup_from_gleason(GleasonScore gs);

// LG iff ISUP 2
TumorGrade grade_from_isup(IsupGrade isup);

std::string to_string(GleasonScore gs);
std::string to_string(IsupGrade isup);
std::string to_string(TumorGrade grade);

GleasonScore gleason_from_string(const std::string& s);

}  // namespace causalfew
