#include "satkit/porter.hpp"

#include <array>
#include <cstring>

namespace satkit {
namespace {

bool is_consonant(const std::string& w, std::size_t i) {
    switch (w[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !is_consonant(w, i - 1);
        default:
            return true;
    }
}

// m of the prefix w[0, len): the number of vowel-consonant spans in the
// pattern [C](VC)^m[V].
int measure(const std::string& w, std::size_t len) {
    std::size_t i = 0;
    int m = 0;
    while (i < len && is_consonant(w, i)) ++i;
    for (;;) {
        while (i < len && !is_consonant(w, i)) ++i;
        if (i == len) return m;
        ++m;
        while (i < len && is_consonant(w, i)) ++i;
        if (i == len) return m;
    }
}

bool has_vowel(const std::string& w, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
        if (!is_consonant(w, i)) return true;
    }
    return false;
}

bool ends_double_consonant(const std::string& w) {
    const std::size_t n = w.size();
    return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// Prefix of length len ends consonant-vowel-consonant, final consonant not
// w, x, or y.
bool ends_cvc(const std::string& w, std::size_t len) {
    if (len < 3) return false;
    if (!is_consonant(w, len - 3) || is_consonant(w, len - 2) || !is_consonant(w, len - 1)) {
        return false;
    }
    const char c = w[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, const char* suffix) {
    const std::size_t n = std::strlen(suffix);
    return w.size() >= n && w.compare(w.size() - n, n, suffix) == 0;
}

struct Rule {
    const char* suffix;
    const char* replacement;
};

// First string match wins; the measure condition then decides whether the
// replacement happens, but either way no later rule is tried.
void apply_rules(std::string& w, const Rule* rules, std::size_t count, int min_measure) {
    for (std::size_t r = 0; r < count; ++r) {
        const std::size_t n = std::strlen(rules[r].suffix);
        if (w.size() < n || !ends_with(w, rules[r].suffix)) continue;
        const std::size_t stem = w.size() - n;
        if (measure(w, stem) > min_measure) {
            w.replace(stem, n, rules[r].replacement);
        }
        return;
    }
}

void step1a(std::string& w) {
    if (ends_with(w, "sses")) {
        w.erase(w.size() - 2);
    } else if (ends_with(w, "ies")) {
        w.erase(w.size() - 2);
    } else if (ends_with(w, "ss")) {
        // keep
    } else if (ends_with(w, "s")) {
        w.pop_back();
    }
}

void step1b(std::string& w) {
    if (ends_with(w, "eed")) {
        if (measure(w, w.size() - 3) > 0) w.pop_back();
        return;
    }
    bool removed = false;
    if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
        w.erase(w.size() - 2);
        removed = true;
    } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
        w.erase(w.size() - 3);
        removed = true;
    }
    if (!removed) return;
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
        w.push_back('e');
    } else if (ends_double_consonant(w) && w.back() != 'l' && w.back() != 's' && w.back() != 'z') {
        w.pop_back();
    } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
        w.push_back('e');
    }
}

void step1c(std::string& w) {
    if (w.size() > 2 && w.back() == 'y' && is_consonant(w, w.size() - 2)) {
        w.back() = 'i';
    }
}

constexpr Rule kStep2[] = {
    {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
    {"izer", "ize"},    {"bli", "ble"},     {"alli", "al"},   {"entli", "ent"},
    {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
    {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
    {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
    {"logi", "log"},
};

constexpr Rule kStep3[] = {
    {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
    {"ical", "ic"},  {"ful", ""},   {"ness", ""},
};

constexpr Rule kStep4[] = {
    {"al", ""},    {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},
    {"able", ""},  {"ible", ""}, {"ant", ""},  {"ement", ""}, {"ment", ""},
    {"ent", ""},   {"ou", ""},   {"ism", ""},  {"ate", ""}, {"iti", ""},
    {"ous", ""},   {"ive", ""},  {"ize", ""},
};

void step4(std::string& w) {
    // "ion" only counts as a suffix after s or t.
    if (ends_with(w, "ion") && w.size() >= 4) {
        const char before = w[w.size() - 4];
        if (before == 's' || before == 't') {
            if (measure(w, w.size() - 3) > 1) w.erase(w.size() - 3);
            return;
        }
    }
    apply_rules(w, kStep4, std::size(kStep4), 1);
}

void step5a(std::string& w) {
    if (w.back() != 'e') return;
    const std::size_t stem = w.size() - 1;
    const int m = measure(w, stem);
    if (m > 1 || (m == 1 && !ends_cvc(w, stem))) {
        w.pop_back();
    }
}

void step5b(std::string& w) {
    if (w.back() == 'l' && ends_double_consonant(w) && measure(w, w.size()) > 1) {
        w.pop_back();
    }
}

}  // namespace

std::string porter_stem(std::string_view token) {
    std::string w(token);
    if (w.size() < 3) return w;
    for (char c : w) {
        if (c < 'a' || c > 'z') return w;
    }
    step1a(w);
    step1b(w);
    step1c(w);
    apply_rules(w, kStep2, std::size(kStep2), 0);
    apply_rules(w, kStep3, std::size(kStep3), 0);
    step4(w);
    step5a(w);
    step5b(w);
    return w;
}

}  // namespace satkit
