#pragma once

#include <optional>
#include <string_view>

namespace satkit {

enum class Polarity { positive, negative, neutral };

inline std::string_view polarity_name(Polarity p) {
    switch (p) {
        case Polarity::positive: return "positive";
        case Polarity::negative: return "negative";
        default: return "neutral";
    }
}

inline std::optional<Polarity> polarity_from_name(std::string_view name) {
    if (name == "positive") return Polarity::positive;
    if (name == "negative") return Polarity::negative;
    if (name == "neutral") return Polarity::neutral;
    return std::nullopt;
}

}  // namespace satkit
