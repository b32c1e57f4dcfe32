#pragma once

#include <string>
#include <string_view>

namespace satkit {

// Porter stemmer for English, with the stemmer author's later revisions to
// the 1980 algorithm: step 2 uses "bli"->"ble" and adds "logi"->"log", and
// step 1c rewrites a terminal y to i only when it follows a consonant that is
// not the word's first letter (happy->happi, enjoy->enjoy).
//
// Expects a lowercased token. Tokens shorter than three characters or
// containing anything outside a-z are returned unchanged.
std::string porter_stem(std::string_view token);

}  // namespace satkit
