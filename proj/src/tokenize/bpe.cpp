#include "mtp/tokenize/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mtp/tokenize/word_tokenizer.hpp"

namespace mtp::tokenize {

namespace {

std::string to_hex(std::string_view bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(kDigits[c >> 4]);
        out.push_back(kDigits[c & 0xF]);
    }
    return out;
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string from_hex(std::string_view hex, std::size_t line) {
    if (hex.empty() || hex.size() % 2 != 0) {
        throw TokenizeError("bpe vocab line " + std::to_string(line) + ": malformed hex string '" + std::string(hex) + "'");
    }
    std::string out;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = hex_value(hex[i]), lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw TokenizeError("bpe vocab line " + std::to_string(line) + ": malformed hex string '" +
                                std::string(hex) + "'");
        }
        out.push_back(static_cast<char>(hi * 16 + lo));
    }
    return out;
}

struct PairHash {
    std::size_t operator()(const std::pair<TokenId, TokenId> &p) const {
        return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.first)) << 32) |
                                          static_cast<std::uint32_t>(p.second));
    }
};

// Replaces every non-overlapping occurrence of (a, b), scanning left to right.
void merge_pair(std::vector<TokenId> &symbols, TokenId a, TokenId b, TokenId merged) {
    std::size_t w = 0;
    for (std::size_t r = 0; r < symbols.size();) {
        if (r + 1 < symbols.size() && symbols[r] == a && symbols[r + 1] == b) {
            symbols[w++] = merged;
            r += 2;
        } else {
            symbols[w++] = symbols[r++];
        }
    }
    symbols.resize(w);
}

}  // namespace

BpeVocab::BpeVocab(std::vector<Merge> merges) {
    tokens_.reserve(kFirstMerge + merges.size());
    for (int b = 0; b < 256; ++b) tokens_.emplace_back(1, static_cast<char>(b));
    for (int i = 0; i < 256; ++i) ids_.emplace(tokens_[static_cast<std::size_t>(i)], i);
    tokens_.emplace_back();  // BOS
    tokens_.emplace_back();  // EOS
    tokens_.emplace_back();  // PAD
    for (std::size_t r = 0; r < merges.size(); ++r) {
        const auto &[left, right] = merges[r];
        const TokenId a = find(left), b = find(right);
        if (a < 0 || b < 0) {
            throw TokenizeError("bpe merge " + std::to_string(r) + " refers to an unknown token");
        }
        const std::string joined = left + right;
        TokenId result = find(joined);
        if (result < 0) {
            result = static_cast<TokenId>(tokens_.size());
            tokens_.push_back(joined);
            ids_.emplace(joined, result);
        }
        pair_ranks_[{a, b}].push_back(static_cast<int>(r));
        rank_result_.push_back(result);
    }
    merges_ = std::move(merges);
}

const std::string &BpeVocab::token_bytes(TokenId id) const {
    if (id < 0 || id >= size() || (id >= kBos && id <= kPad)) {
        throw TokenizeError("bpe: id " + std::to_string(id) + " has no byte string");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

TokenId BpeVocab::find(std::string_view bytes) const {
    auto it = ids_.find(bytes);
    return it == ids_.end() ? -1 : it->second;
}

std::vector<TokenId> BpeVocab::encode_chunk(std::string_view chunk) const {
    std::vector<TokenId> symbols;
    symbols.reserve(chunk.size());
    for (unsigned char c : chunk) symbols.push_back(c);
    // Replays merges in learned order: only ranks after the last applied one
    // are eligible, which is what training did to every chunk.
    int last_rank = -1;
    while (symbols.size() > 1) {
        int best_rank = -1;
        std::pair<TokenId, TokenId> best_pair;
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = pair_ranks_.find({symbols[i], symbols[i + 1]});
            if (it == pair_ranks_.end()) continue;
            auto next = std::upper_bound(it->second.begin(), it->second.end(), last_rank);
            if (next != it->second.end() && (best_rank < 0 || *next < best_rank)) {
                best_rank = *next;
                best_pair = it->first;
            }
        }
        if (best_rank < 0) break;
        merge_pair(symbols, best_pair.first, best_pair.second, rank_result_[static_cast<std::size_t>(best_rank)]);
        last_rank = best_rank;
    }
    return symbols;
}

std::vector<TokenId> BpeVocab::encode(std::string_view text) const {
    if (!is_valid_utf8(text)) throw TokenizeError("bpe_encode: input is not valid UTF-8");
    std::vector<TokenId> ids;
    for (auto chunk : bpe_chunks(text)) {
        auto part = encode_chunk(chunk);
        ids.insert(ids.end(), part.begin(), part.end());
    }
    return ids;
}

std::string BpeVocab::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id < 0 || id >= size()) throw TokenizeError("bpe_decode: unknown id " + std::to_string(id));
        if (id >= kBos && id <= kPad) continue;
        out += tokens_[static_cast<std::size_t>(id)];
    }
    if (!is_valid_utf8(out)) throw TokenizeError("bpe_decode: bytes do not form valid UTF-8");
    return out;
}

std::string BpeVocab::serialize() const {
    std::ostringstream os;
    os << "bpe-vocab v1 " << size() << '\n';
    for (const auto &[left, right] : merges_) os << to_hex(left) << ' ' << to_hex(right) << '\n';
    return os.str();
}

BpeVocab BpeVocab::parse(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    if (!std::getline(is, line)) throw TokenizeError("bpe vocab: empty file");
    std::istringstream header(line);
    std::string magic, version;
    long long declared = -1;
    header >> magic >> version >> declared;
    if (magic != "bpe-vocab" || version != "v1" || declared < kFirstMerge) {
        throw TokenizeError("bpe vocab: bad header '" + line + "'");
    }
    std::vector<Merge> merges;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string a, b, extra;
        fields >> a >> b;
        if (a.empty() || b.empty() || (fields >> extra)) {
            throw TokenizeError("bpe vocab line " + std::to_string(lineno) + ": expected two hex strings");
        }
        merges.emplace_back(from_hex(a, lineno), from_hex(b, lineno));
    }
    BpeVocab vocab(std::move(merges));
    if (vocab.size() != declared) {
        throw TokenizeError("bpe vocab: header declares " + std::to_string(declared) + " tokens, merges give " +
                            std::to_string(vocab.size()));
    }
    return vocab;
}

void BpeVocab::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TokenizeError("cannot write vocab file " + path);
    out << serialize();
}

BpeVocab BpeVocab::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TokenizeError("cannot read vocab file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::vector<std::string_view> bpe_chunks(std::string_view text) {
    std::vector<std::string_view> chunks;
    std::size_t start = 0;
    for (const auto &span : word_spans(text)) {
        chunks.push_back(text.substr(start, span.end - start));
        start = span.end;
    }
    if (start < text.size()) chunks.push_back(text.substr(start));
    return chunks;
}

BpeVocab bpe_train(const std::vector<std::string> &documents, int target_vocab) {
    if (target_vocab <= BpeVocab::kFirstMerge) {
        throw TokenizeError("bpe_train: target vocab must exceed " + std::to_string(BpeVocab::kFirstMerge));
    }
    std::map<std::string, std::int64_t, std::less<>> chunk_counts;
    for (const auto &doc : documents) {
        if (!is_valid_utf8(doc)) throw TokenizeError("bpe_train: document is not valid UTF-8");
        for (auto chunk : bpe_chunks(doc)) ++chunk_counts[std::string(chunk)];
    }
    if (chunk_counts.empty()) throw TokenizeError("bpe_train: empty corpus");

    std::vector<std::vector<TokenId>> words;
    std::vector<std::int64_t> counts;
    for (const auto &[chunk, count] : chunk_counts) {
        std::vector<TokenId> symbols;
        for (unsigned char c : chunk) symbols.push_back(c);
        words.push_back(std::move(symbols));
        counts.push_back(count);
    }

    std::vector<std::string> tokens;
    for (int b = 0; b < 256; ++b) tokens.emplace_back(1, static_cast<char>(b));
    tokens.resize(BpeVocab::kFirstMerge);
    std::map<std::string, TokenId, std::less<>> ids;
    for (int b = 0; b < 256; ++b) ids.emplace(tokens[static_cast<std::size_t>(b)], b);

    std::vector<BpeVocab::Merge> merges;
    while (static_cast<int>(tokens.size()) < target_vocab) {
        std::unordered_map<std::pair<TokenId, TokenId>, std::int64_t, PairHash> pair_counts;
        for (std::size_t w = 0; w < words.size(); ++w) {
            const auto &sym = words[w];
            for (std::size_t i = 0; i + 1 < sym.size(); ++i) pair_counts[{sym[i], sym[i + 1]}] += counts[w];
        }
        std::pair<TokenId, TokenId> best{-1, -1};
        std::int64_t best_count = 1;
        std::string best_bytes;
        for (const auto &[pair, count] : pair_counts) {
            if (count < best_count) continue;
            std::string joined = tokens[static_cast<std::size_t>(pair.first)] + tokens[static_cast<std::size_t>(pair.second)];
            if (count > best_count || best.first < 0 || joined < best_bytes ||
                (joined == best_bytes && pair < best)) {
                best = pair;
                best_count = count;
                best_bytes = std::move(joined);
            }
        }
        if (best.first < 0 || best_count < 2) break;

        TokenId merged;
        if (auto it = ids.find(best_bytes); it != ids.end()) {
            merged = it->second;
        } else {
            merged = static_cast<TokenId>(tokens.size());
            tokens.push_back(best_bytes);
            ids.emplace(best_bytes, merged);
        }
        merges.emplace_back(tokens[static_cast<std::size_t>(best.first)], tokens[static_cast<std::size_t>(best.second)]);
        for (auto &sym : words) merge_pair(sym, best.first, best.second, merged);
    }
    return BpeVocab(std::move(merges));
}

std::vector<TokenId> BpeTokenizer::encode(std::string_view text, bool add_bos, bool add_eos) const {
    auto body = vocab_.encode(text);
    std::vector<TokenId> ids;
    ids.reserve(body.size() + 2);
    if (add_bos) ids.push_back(bos());
    ids.insert(ids.end(), body.begin(), body.end());
    if (add_eos) ids.push_back(eos());
    return ids;
}

std::string BpeTokenizer::decode_lossy(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id >= BpeVocab::kBos && id <= BpeVocab::kPad) continue;
        out += vocab_.token_bytes(id);
    }
    return repair_utf8(out);
}

}  // namespace mtp::tokenize
