#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mtp::tokenize {

using TokenId = std::int32_t;

class TokenizeError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// True iff `text` is well-formed UTF-8 (no overlongs, surrogates or
/// code points above U+10FFFF).
bool is_valid_utf8(std::string_view text);

/// Copy of `bytes` with every byte that does not start a well-formed
/// sequence replaced by U+FFFD.
std::string repair_utf8(std::string_view bytes);

/// Byte-level vocabulary: ids 0-255 are raw bytes, then three specials. The
/// table is padded to 320 entries; ids 259-319 are never produced.
struct ByteVocab {
    static constexpr TokenId kBos = 256;
    static constexpr TokenId kEos = 257;
    static constexpr TokenId kPad = 258;
    static constexpr TokenId kFirstReserved = 259;
    static constexpr TokenId kSize = 320;
};

std::vector<TokenId> byte_encode(std::string_view text, bool add_bos = false, bool add_eos = false);
std::string byte_decode(std::span<const TokenId> ids);

/// Common surface of the byte and BPE tokenizers, used by the data pipeline
/// and the bits-per-byte evaluation.
class Tokenizer {
   public:
    virtual ~Tokenizer() = default;
    virtual std::vector<TokenId> encode(std::string_view text, bool add_bos, bool add_eos) const = 0;
    virtual std::string decode(std::span<const TokenId> ids) const = 0;
    /// Like decode, but model output that splits a character is repaired
    /// instead of rejected.
    virtual std::string decode_lossy(std::span<const TokenId> ids) const = 0;
    virtual int vocab_size() const = 0;
    virtual TokenId bos() const = 0;
    virtual TokenId eos() const = 0;
    virtual TokenId pad() const = 0;
    virtual std::string kind() const = 0;
};

class ByteTokenizer final : public Tokenizer {
   public:
    std::vector<TokenId> encode(std::string_view text, bool add_bos, bool add_eos) const override {
        return byte_encode(text, add_bos, add_eos);
    }
    std::string decode(std::span<const TokenId> ids) const override { return byte_decode(ids); }
    std::string decode_lossy(std::span<const TokenId> ids) const override;
    int vocab_size() const override { return ByteVocab::kSize; }
    TokenId bos() const override { return ByteVocab::kBos; }
    TokenId eos() const override { return ByteVocab::kEos; }
    TokenId pad() const override { return ByteVocab::kPad; }
    std::string kind() const override { return "byte"; }
};

}  // namespace mtp::tokenize
