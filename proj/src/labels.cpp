#include "causalfew/labels.hpp"

#include <stdexcept>

namespace causalfew {

IsupGrade isup_from_gleason(GleasonScore gs) {
    switch (gs) {
        case GleasonScore::GS_3_4:
            return IsupGrade::Two;
        case GleasonScore::GS_4_3:
            return IsupGrade::Three;
        case GleasonScore::GS_4_4:
        case GleasonScore::GS_3_5:
        case GleasonScore::GS_5_3:
            return IsupGrade::Four;
        case GleasonScore::GS_4_5:
        case GleasonScore::GS_5_4:
        case GleasonScore::GS_5_5:
            return IsupGrade::Five;
    }
    throw std::invalid_argument("isup_from_gleason: bad score");
}

TumorGrade grade_from_isup(IsupGrade isup) {
    return isup == IsupGrade::Two ? TumorGrade::LG : TumorGrade::HG;
}

std::string to_string(GleasonScore gs) {
    static const std::array<const char*, 8> names = {"3+4", "4+3", "4+4", "3+5",
                                                     "5+3", "4+5", "5+4", "5+5"};
    return names[static_cast<std::size_t>(gs)];
}

std::string to_string(IsupGrade isup) { return std::to_string(static_cast<int>(isup)); }

std::string to_string(TumorGrade grade) { return grade == TumorGrade::LG ? "LG" : "HG"; }

GleasonScore gleason_from_string(const std::string& s) {
    for (int i = 0; i < kNumGleasonClasses; ++i) {
        if (to_string(static_cast<GleasonScore>(i)) == s) return static_cast<GleasonScore>(i);
    }
    throw std::invalid_argument("gleason_from_string: unknown score '" + s + "'");
}

}  // namespace causalfew
