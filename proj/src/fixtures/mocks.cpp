#include "mtp/fixtures/mocks.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace mtp::fixtures {

namespace {

void check_positions(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions, int heads,
                     int k_max, int context, const char *who) {
    if (heads < 1 || heads > k_max) {
        throw FixtureError(std::string(who) + ": asked for " + std::to_string(heads) + " heads, model has " +
                           std::to_string(k_max));
    }
    if (static_cast<std::int64_t>(tokens.size()) > context) {
        throw FixtureError(std::string(who) + ": " + std::to_string(tokens.size()) + " tokens exceed context " +
                           std::to_string(context));
    }
    for (auto p : positions) {
        if (p < 0 || p >= static_cast<std::int32_t>(tokens.size())) {
            throw FixtureError(std::string(who) + ": position " + std::to_string(p) + " outside the input");
        }
    }
}

}  // namespace

MockKind parse_mock_kind(std::string_view name) {
    if (name == "all-accept") return MockKind::kAllAccept;
    if (name == "never-accept") return MockKind::kNeverAccept;
    if (name == "table-driven") return MockKind::kTableDriven;
    throw FixtureError("unknown mock kind '" + std::string(name) + "'");
}

MockModel MockModel::rule(MockKind kind, int k_max, int vocab, int context) {
    if (kind == MockKind::kTableDriven) throw FixtureError("table-driven mocks need a table");
    if (vocab < 2) throw FixtureError("mock vocab must be at least 2");
    if (k_max < 1) throw FixtureError("mock k_max must be at least 1");
    if (context < 2) throw FixtureError("mock context must be at least 2");
    return MockModel(kind, k_max, vocab, context);
}

MockModel MockModel::table(std::vector<std::vector<TokenId>> rows, int vocab, int context) {
    if (vocab < 2) throw FixtureError("mock vocab must be at least 2");
    if (rows.empty()) throw FixtureError("mock table is empty");
    const auto width = rows.front().size();
    if (width == 0) throw FixtureError("mock table row 1 has no entries");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw FixtureError("mock table row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                               " entries, expected " + std::to_string(width));
        }
        for (auto id : rows[r]) {
            if (id < 0 || id >= vocab) {
                throw FixtureError("mock table row " + std::to_string(r + 1) + ": id " + std::to_string(id) +
                                   " outside vocab " + std::to_string(vocab));
            }
        }
    }
    MockModel m(MockKind::kTableDriven, static_cast<int>(width), vocab, context);
    m.rows_ = std::move(rows);
    return m;
}

MockModel MockModel::parse_table(std::string_view text, int vocab, int context) {
    std::istringstream in{std::string(text)};
    std::vector<std::vector<TokenId>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        std::vector<TokenId> row;
        std::string field;
        while (fields >> field) {
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(field, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used != field.size() || v < std::numeric_limits<TokenId>::min() || v > std::numeric_limits<TokenId>::max()) {
                throw FixtureError("mock table line " + std::to_string(lineno) + ": '" + field + "' is not a token id");
            }
            row.push_back(static_cast<TokenId>(v));
        }
        rows.push_back(std::move(row));
    }
    return table(std::move(rows), vocab, context);
}

MockModel MockModel::load_table(const std::string &path, int vocab, int context) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FixtureError("cannot read mock table " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_table(ss.str(), vocab, context);
    } catch (const FixtureError &e) {
        throw FixtureError(path + ": " + e.what());
    }
}

TokenId MockModel::next_by_rule(TokenId prev, TokenId last) const {
    const auto v = static_cast<std::int64_t>(vocab_);
    return static_cast<TokenId>((5 * static_cast<std::int64_t>(last) + 3 * static_cast<std::int64_t>(prev) + 1) % v);
}

TokenId MockModel::predict(std::span<const TokenId> tokens, std::int32_t position, int head) const {
    if (kind_ == MockKind::kTableDriven) {
        const auto &row = rows_[static_cast<std::size_t>(position) % rows_.size()];
        return row[static_cast<std::size_t>(head - 1)];
    }
    TokenId last = tokens[static_cast<std::size_t>(position)];
    TokenId prev = position > 0 ? tokens[static_cast<std::size_t>(position - 1)] : 0;
    for (int j = 0; j < head; ++j) {
        const TokenId next = next_by_rule(prev, last);
        prev = last;
        last = next;
    }
    if (kind_ == MockKind::kNeverAccept && head > 1) return static_cast<TokenId>((last + 1) % vocab_);
    return last;
}

std::vector<float> MockModel::logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                                     int heads) const {
    check_positions(tokens, positions, heads, k_max_, context_, "mock model");
    const auto V = static_cast<std::size_t>(vocab_);
    std::vector<float> out(positions.size() * static_cast<std::size_t>(heads) * V, 0.0f);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (int h = 1; h <= heads; ++h) {
            const auto id = predict(tokens, positions[i], h);
            out[(i * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h - 1)) * V + static_cast<std::size_t>(id)] = 1.0f;
        }
    }
    return out;
}

std::unique_ptr<model::LanguageModel> make_mock(MockKind kind, int k_max, int vocab, const std::string &table_path) {
    if (kind == MockKind::kTableDriven) {
        auto m = MockModel::load_table(table_path, vocab);
        if (m.k_max() != k_max) {
            throw FixtureError(table_path + ": table has " + std::to_string(m.k_max()) + " heads, expected " +
                               std::to_string(k_max));
        }
        return std::make_unique<MockModel>(std::move(m));
    }
    return std::make_unique<MockModel>(MockModel::rule(kind, k_max, vocab));
}

UniformModel::UniformModel(int vocab, int live, int k_max, int context)
    : vocab_(vocab), live_(live), k_max_(k_max), context_(context) {
    if (vocab < 1 || live < 1 || live > vocab) throw FixtureError("uniform model needs 1 <= live <= vocab");
    if (k_max < 1) throw FixtureError("uniform model k_max must be at least 1");
}

std::vector<float> UniformModel::logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                                        int heads) const {
    check_positions(tokens, positions, heads, k_max_, context_, "uniform model");
    const auto V = static_cast<std::size_t>(vocab_);
    std::vector<float> out(positions.size() * static_cast<std::size_t>(heads) * V, -1e30f);
    for (std::size_t row = 0; row < positions.size() * static_cast<std::size_t>(heads); ++row) {
        std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(row * V), live_, 0.0f);
    }
    return out;
}

std::vector<float> PeekingModel::logits(std::span<const std::int32_t> tokens, std::span<const std::int32_t> positions,
                                        int heads) const {
    check_positions(tokens, positions, heads, k_max_, context_, "peeking model");
    const auto V = static_cast<std::size_t>(vocab_);
    std::vector<float> out(positions.size() * static_cast<std::size_t>(heads) * V, 0.0f);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (int h = 1; h <= heads; ++h) {
            const auto target = static_cast<std::size_t>(positions[i]) + static_cast<std::size_t>(h);
            if (target >= tokens.size()) continue;
            auto row = out.begin() + static_cast<std::ptrdiff_t>((i * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h - 1)) * V);
            std::fill_n(row, V, -1e30f);
            row[tokens[target]] = 0.0f;
        }
    }
    return out;
}

}  // namespace mtp::fixtures
