#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mtp::tokenize {

/// A matched span of the input, in bytes.
struct WordSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Scans `text` with the metric tokenizer's ordered alternation:
///   "..." strings (backslash escapes), '...' strings, \d+(\.\d+)?,
///   [\w_]+ runs, and otherwise any single non-whitespace character.
/// Whitespace between matches is skipped. The first alternative that matches
/// at a position wins, as in a backtracking regex engine.
std::vector<WordSpan> word_spans(std::string_view text);

std::vector<std::string> word_tokenize(std::string_view text);

}  // namespace mtp::tokenize
