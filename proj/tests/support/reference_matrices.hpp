// Reference 5x5 confusion matrices for the six rating dimensions of the NHS
// GP-review study (rows = predicted star, columns = true star), with the
// reported metric values they must reproduce.
#pragma once

#include <array>
#include <string>

#include "satkit/forest.hpp"

namespace refdata {

struct ReferenceMatrix {
    const char* name;
    std::array<std::array<long long, 5>, 5> counts;
    double accuracy;
};

inline const std::array<ReferenceMatrix, 6>& reference_matrices() {
    static const std::array<ReferenceMatrix, 6> mats = {{
        {"phone access ease",
         {{{14328, 3363, 3081, 1050, 1230},
           {9160, 3630, 3682, 1612, 1694},
           {6182, 3035, 4645, 2439, 5401},
           {3275, 1950, 3463, 3358, 18768},
           {1165, 660, 1507, 2396, 45314}}},
         0.487},
        {"appointment ease",
         {{{39078, 694, 258, 769, 1441},
           {15447, 759, 247, 885, 1553},
           {7531, 574, 454, 1855, 5435},
           {4098, 390, 248, 4318, 19874},
           {2352, 182, 162, 3845, 33939}}},
         0.537},
        {"given dignity & respect",
         {{{20755, 555, 2817, 479, 2192},
           {9651, 570, 2686, 607, 1783},
           {8136, 618, 4377, 1207, 3331},
           {3520, 312, 3219, 1386, 8023},
           {1935, 140, 1537, 812, 65740}}},
         0.634},
        {"involved in care decisions",
         {{{24753, 117, 1049, 669, 2890},
           {9821, 166, 705, 499, 1940},
           {10312, 103, 1310, 955, 3390},
           {7036, 69, 1089, 1124, 9876},
           {3737, 46, 616, 689, 63427}}},
         0.620},
        {"likely to recommend",
         {{{51384, 11, 4, 5, 3207},
           {8455, 57, 1, 2, 1035},
           {4919, 0, 30, 6, 1618},
           {2824, 2, 3, 89, 7491},
           {3801, 1, 3, 23, 61417}}},
         0.772},
        {"up-to-date GP information",
         {{{19701, 82, 997, 1657, 2738},
           {7924, 137, 724, 1233, 1727},
           {9893, 73, 1067, 1788, 3362},
           {8517, 57, 1126, 2392, 10270},
           {3870, 21, 528, 1496, 65008}}},
         0.603},
    }};
    return mats;
}

inline satkit::ConfusionMatrix to_confusion(const ReferenceMatrix& m) {
    satkit::ConfusionMatrix cm;
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 5; ++c) {
            cm.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                m.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    return cm;
}

}  // namespace refdata
