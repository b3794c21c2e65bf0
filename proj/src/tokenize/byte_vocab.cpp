#include "mtp/tokenize/tokenizer.hpp"

namespace mtp::tokenize {

bool is_valid_utf8(std::string_view text) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += len;
    }
    return true;
}

std::vector<TokenId> byte_encode(std::string_view text, bool add_bos, bool add_eos) {
    if (!is_valid_utf8(text)) throw TokenizeError("byte_encode: input is not valid UTF-8");
    std::vector<TokenId> ids;
    ids.reserve(text.size() + 2);
    if (add_bos) ids.push_back(ByteVocab::kBos);
    for (unsigned char c : text) ids.push_back(c);
    if (add_eos) ids.push_back(ByteVocab::kEos);
    return ids;
}

std::string byte_decode(std::span<const TokenId> ids) {
    std::string out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
        if (id < 0 || id >= ByteVocab::kFirstReserved) {
            throw TokenizeError("byte_decode: id " + std::to_string(id) + " is not a byte or special token");
        }
        if (id < 256) out.push_back(static_cast<char>(id));
    }
    if (!is_valid_utf8(out)) throw TokenizeError("byte_decode: bytes do not form valid UTF-8");
    return out;
}

std::string repair_utf8(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size());
    for (std::size_t i = 0; i < bytes.size();) {
        const auto lead = static_cast<unsigned char>(bytes[i]);
        const std::size_t len = lead < 0x80 ? 1 : lead >> 5 == 0x6 ? 2 : lead >> 4 == 0xE ? 3 : lead >> 3 == 0x1E ? 4 : 0;
        if (len && i + len <= bytes.size() && is_valid_utf8(bytes.substr(i, len))) {
            out.append(bytes.substr(i, len));
            i += len;
        } else {
            out += "\xEF\xBF\xBD";
            ++i;
        }
    }
    return out;
}

std::string ByteTokenizer::decode_lossy(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id < 0 || id >= ByteVocab::kSize) throw TokenizeError("byte_decode: id " + std::to_string(id) + " outside vocab");
        if (id < 256) out.push_back(static_cast<char>(id));
    }
    return repair_utf8(out);
}

}  // namespace mtp::tokenize
