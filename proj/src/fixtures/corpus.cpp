#include "mtp/fixtures/corpus.hpp"

#include <array>
#include <string_view>

#include "mtp/numerics/rng.hpp"

namespace mtp::fixtures {

namespace {

template <std::size_t N>
std::string_view pick(numerics::Rng &rng, const std::array<std::string_view, N> &words) {
    return words[static_cast<std::size_t>(rng.below(N))];
}

constexpr std::array<std::string_view, 8> kAdjectives = {"quick", "lazy", "small", "bright",
                                                          "quiet", "heavy", "golden", "gentle"};
constexpr std::array<std::string_view, 8> kNouns = {"fox", "dog", "farmer", "river", "teacher", "garden", "window", "merchant"};
constexpr std::array<std::string_view, 6> kVerbs = {"watches", "follows", "remembers", "visits", "carries", "admires"};
constexpr std::array<std::string_view, 5> kPlaces = {"in the morning", "near the old bridge", "after the long rain",
                                                     "during the market day", "behind the stone wall"};

std::string sentence(numerics::Rng &rng) {
    std::string s;
    switch (rng.below(3)) {
        case 0:
            s += "the ";
            s += pick(rng, kAdjectives);
            s += ' ';
            s += pick(rng, kNouns);
            s += ' ';
            s += pick(rng, kVerbs);
            s += " the ";
            s += pick(rng, kNouns);
            s += ' ';
            s += pick(rng, kPlaces);
            s += '.';
            break;
        case 1:
            s += pick(rng, kPlaces);
            s += ", a ";
            s += pick(rng, kAdjectives);
            s += ' ';
            s += pick(rng, kNouns);
            s += ' ';
            s += pick(rng, kVerbs);
            s += " every ";
            s += pick(rng, kNouns);
            s += '.';
            break;
        default:
            s += "every ";
            s += pick(rng, kNouns);
            s += " that ";
            s += pick(rng, kVerbs);
            s += " the ";
            s += pick(rng, kAdjectives);
            s += ' ';
            s += pick(rng, kNouns);
            s += " is ";
            s += pick(rng, kAdjectives);
            s += '.';
            break;
    }
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

}  // namespace

std::vector<std::string> toy_corpus(std::uint64_t seed, std::size_t target_bytes) {
    numerics::Rng rng(seed);
    std::vector<std::string> docs;
    std::size_t total = 0;
    while (total < target_bytes) {
        std::string doc;
        const auto sentences = 3 + rng.below(6);
        for (std::uint64_t i = 0; i < sentences; ++i) {
            if (i) doc += ' ';
            doc += sentence(rng);
        }
        doc += '\n';
        total += doc.size();
        docs.push_back(std::move(doc));
    }
    return docs;
}

}  // namespace mtp::fixtures
