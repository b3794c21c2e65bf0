#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtp/tokenize/tokenizer.hpp"

namespace mtp::tokenize {

/// Learned byte-pair vocabulary. Ids 0-255 are single bytes, 256-258 are
/// BOS/EOS/PAD, and later ids are merged tokens in order of first creation.
/// Token byte strings are unique: a merge whose result already exists maps
/// onto the existing id instead of adding one.
class BpeVocab {
   public:
    static constexpr TokenId kBos = 256;
    static constexpr TokenId kEos = 257;
    static constexpr TokenId kPad = 258;
    static constexpr TokenId kFirstMerge = 259;

    using Merge = std::pair<std::string, std::string>;

    /// Rebuilds the token table by replaying `merges` in order. Throws if a
    /// merge refers to a token that does not exist yet.
    explicit BpeVocab(std::vector<Merge> merges = {});

    const std::vector<Merge> &merges() const { return merges_; }
    int size() const { return static_cast<int>(tokens_.size()); }
    /// Byte string of a non-special id.
    const std::string &token_bytes(TokenId id) const;
    /// Id of a byte string, or -1.
    TokenId find(std::string_view bytes) const;

    std::vector<TokenId> encode(std::string_view text) const;
    std::string decode(std::span<const TokenId> ids) const;

    /// `bpe-vocab v1 <size>` then one merge per line as two hex byte strings.
    std::string serialize() const;
    static BpeVocab parse(std::string_view text);
    void save(const std::string &path) const;
    static BpeVocab load(const std::string &path);

   private:
    std::vector<TokenId> encode_chunk(std::string_view chunk) const;

    std::vector<Merge> merges_;
    std::vector<std::string> tokens_;
    std::map<std::string, TokenId, std::less<>> ids_;
    // Ranks at which each id pair is merged (a pair can recur after a merge
    // maps onto an existing token), and the id each rank produces.
    std::map<std::pair<TokenId, TokenId>, std::vector<int>> pair_ranks_;
    std::vector<TokenId> rank_result_;
};

/// Splits text into BPE pre-tokenization chunks: each metric-tokenizer match
/// together with the whitespace preceding it, plus any trailing whitespace as
/// its own chunk. Concatenating the chunks gives back the input.
std::vector<std::string_view> bpe_chunks(std::string_view text);

/// Greedy BPE training: repeatedly merge the most frequent adjacent pair
/// (counted over pre-tokenization chunks) until the vocabulary reaches
/// `target_vocab` ids or no pair occurs at least twice. Ties go to the pair
/// whose merged byte string is lexicographically smallest.
BpeVocab bpe_train(const std::vector<std::string> &documents, int target_vocab);

class BpeTokenizer final : public Tokenizer {
   public:
    explicit BpeTokenizer(BpeVocab vocab) : vocab_(std::move(vocab)) {}
    std::vector<TokenId> encode(std::string_view text, bool add_bos, bool add_eos) const override;
    std::string decode(std::span<const TokenId> ids) const override { return vocab_.decode(ids); }
    std::string decode_lossy(std::span<const TokenId> ids) const override;
    int vocab_size() const override { return vocab_.size(); }
    TokenId bos() const override { return BpeVocab::kBos; }
    TokenId eos() const override { return BpeVocab::kEos; }
    TokenId pad() const override { return BpeVocab::kPad; }
    std::string kind() const override { return "bpe"; }
    const BpeVocab &vocab() const { return vocab_; }

   private:
    BpeVocab vocab_;
};

}  // namespace mtp::tokenize
