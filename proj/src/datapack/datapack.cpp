#include "mtp/datapack/datapack.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "../binary_io.hpp"

namespace mtp::datapack {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw DataError("cannot read " + path.string());
    return ss.str();
}

void ingest_file(const fs::path &path, std::vector<Document> &out) {
    const auto content = read_file(path);
    const auto name = path.string();
    if (path.extension() != ".jsonl") {
        if (!tokenize::is_valid_utf8(content)) throw DataError(name + ": not valid UTF-8");
        if (!content.empty()) out.push_back({name, content});
        return;
    }
    std::istringstream lines(content);
    std::string line;
    for (std::size_t lineno = 1; std::getline(lines, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = name + ":" + std::to_string(lineno);
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception &e) {
            throw DataError(where + ": invalid JSON (" + e.what() + ")");
        }
        if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
            throw DataError(where + ": missing string field \"text\"");
        }
        auto text = record["text"].get<std::string>();
        if (!tokenize::is_valid_utf8(text)) throw DataError(where + ": not valid UTF-8");
        if (!text.empty()) out.push_back({where, std::move(text)});
    }
}

struct Chunk {
    std::size_t seq;
    std::size_t begin;
    std::size_t length;
};

std::vector<Chunk> split_chunks(const std::vector<std::vector<TokenId>> &sequences, int context) {
    if (context < 2) throw DataError("pack: context must be at least 2, got " + std::to_string(context));
    std::vector<Chunk> chunks;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto n = sequences[s].size();
        for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(context)) {
            chunks.push_back({s, b, std::min<std::size_t>(context, n - b)});
        }
    }
    return chunks;
}

PackedRow empty_row(int context, TokenId pad) {
    PackedRow row;
    row.tokens.assign(static_cast<std::size_t>(context), pad);
    row.pad_count = context;
    return row;
}

void place(PackedRow &row, const Chunk &c, const std::vector<std::vector<TokenId>> &sequences) {
    const auto start = static_cast<std::int32_t>(row.tokens.size()) - row.pad_count;
    const auto &seq = sequences[c.seq];
    std::copy_n(seq.begin() + static_cast<std::ptrdiff_t>(c.begin), c.length,
                row.tokens.begin() + start);
    row.segments.push_back({start, start + static_cast<std::int32_t>(c.length), static_cast<std::int64_t>(c.seq)});
    row.pad_count -= static_cast<std::int32_t>(c.length);
}

}  // namespace

std::vector<Document> ingest(const std::vector<std::string> &paths) {
    std::vector<fs::path> files;
    for (const auto &p : paths) {
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> found;
            for (const auto &entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file()) found.push_back(entry.path());
            }
            if (found.empty()) throw DataError(p + ": directory contains no files");
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p, ec)) {
            files.emplace_back(p);
        } else {
            throw DataError(p + ": no such file or directory");
        }
    }
    if (files.empty()) throw DataError("ingest: no input paths");
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    for (const auto &f : files) ingest_file(f, docs);
    if (docs.empty()) throw DataError("ingest: inputs contain no non-empty documents");
    return docs;
}

std::vector<std::vector<TokenId>> tokenize_documents(const std::vector<Document> &docs,
                                                      const tokenize::Tokenizer &tokenizer) {
    std::vector<std::vector<TokenId>> out;
    out.reserve(docs.size());
    for (const auto &d : docs) out.push_back(tokenizer.encode(d.text, true, true));
    return out;
}

std::vector<PackedRow> pack_best_fit(const std::vector<std::vector<TokenId>> &sequences, int context, TokenId pad) {
    auto chunks = split_chunks(sequences, context);
    std::stable_sort(chunks.begin(), chunks.end(), [](const Chunk &a, const Chunk &b) { return a.length > b.length; });
    std::vector<PackedRow> rows;
    // (free space, row index) of rows that still have room.
    std::set<std::pair<std::int32_t, std::size_t>> open;
    for (const auto &c : chunks) {
        const auto need = static_cast<std::int32_t>(c.length);
        auto it = open.lower_bound({need, 0});
        std::size_t index;
        if (it == open.end()) {
            index = rows.size();
            rows.push_back(empty_row(context, pad));
        } else {
            index = it->second;
            open.erase(it);
        }
        place(rows[index], c, sequences);
        if (rows[index].pad_count > 0) open.insert({rows[index].pad_count, index});
    }
    return rows;
}

std::vector<PackedRow> pack_sequential(const std::vector<std::vector<TokenId>> &sequences, int context, TokenId pad) {
    std::vector<PackedRow> rows;
    for (const auto &c : split_chunks(sequences, context)) {
        if (rows.empty() || rows.back().pad_count < static_cast<std::int32_t>(c.length)) {
            rows.push_back(empty_row(context, pad));
        }
        place(rows.back(), c, sequences);
    }
    return rows;
}

double padding_fraction(const std::vector<PackedRow> &rows) {
    std::int64_t pad = 0, total = 0;
    for (const auto &r : rows) {
        pad += r.pad_count;
        total += static_cast<std::int64_t>(r.tokens.size());
    }
    return total == 0 ? 0.0 : static_cast<double>(pad) / static_cast<double>(total);
}

std::vector<TokenId> batch_inputs(const PackedBatch &batch) {
    std::vector<TokenId> ids;
    ids.reserve(static_cast<std::size_t>(batch.batch_size() * batch.seq_len()));
    for (const auto &r : batch.rows) ids.insert(ids.end(), r.tokens.begin(), r.tokens.end());
    return ids;
}

HeadTargets head_targets(const PackedBatch &batch, int offset) {
    if (offset < 1) throw DataError("head_targets: offset must be positive");
    const auto T = static_cast<std::size_t>(batch.seq_len());
    HeadTargets out;
    out.targets.assign(batch.rows.size() * T, 0);
    out.mask.assign(batch.rows.size() * T, 0);
    for (std::size_t r = 0; r < batch.rows.size(); ++r) {
        const auto &row = batch.rows[r];
        for (const auto &seg : row.segments) {
            for (std::int32_t t = seg.start; t + offset < seg.end; ++t) {
                out.targets[r * T + static_cast<std::size_t>(t)] = row.tokens[static_cast<std::size_t>(t + offset)];
                out.mask[r * T + static_cast<std::size_t>(t)] = 1;
                ++out.active;
            }
        }
    }
    return out;
}

std::vector<PackedBatch> make_batches(const std::vector<PackedRow> &rows, int batch_size, numerics::Rng &rng) {
    if (batch_size < 1) throw DataError("make_batches: batch size must be at least 1");
    if (rows.empty()) throw DataError("make_batches: no rows");
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<PackedBatch> batches;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
        PackedBatch b;
        for (std::size_t j = i; j < std::min(order.size(), i + static_cast<std::size_t>(batch_size)); ++j) {
            b.rows.push_back(rows[order[j]]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

std::int64_t batches_per_epoch(std::size_t rows, int batch_size) {
    return static_cast<std::int64_t>((rows + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size));
}

PackedBatch batch_for_step(const std::vector<PackedRow> &rows, int batch_size, std::uint64_t seed, std::int64_t step) {
    if (rows.empty()) throw DataError("batch_for_step: no rows");
    if (batch_size < 1) throw DataError("batch_for_step: batch size must be at least 1");
    const auto per_epoch = batches_per_epoch(rows.size(), batch_size);
    const auto epoch = step / per_epoch;
    auto rng = numerics::Rng(seed).split("epoch-" + std::to_string(epoch));
    auto batches = make_batches(rows, batch_size, rng);
    return std::move(batches[static_cast<std::size_t>(step % per_epoch)]);
}

void save_packed(const std::string &path, const std::vector<PackedRow> &rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    const std::uint64_t context = rows.empty() ? 0 : rows.front().tokens.size();
    out.write("MTPPACK1", 8);
    io::write_pod<std::uint64_t>(out, rows.size());
    io::write_pod<std::uint64_t>(out, context);
    for (const auto &r : rows) {
        if (r.tokens.size() != context) throw DataError("save_packed: rows have different lengths");
        io::write_array(out, r.tokens.data(), r.tokens.size());
    }
    for (const auto &r : rows) {
        io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(r.pad_count));
        io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(r.segments.size()));
        for (const auto &s : r.segments) {
            io::write_pod(out, s.start);
            io::write_pod(out, s.end);
            io::write_pod(out, s.doc);
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<PackedRow> load_packed(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::string(magic, 8) != "MTPPACK1") throw DataError(path + ": not a packed cache");
    try {
        const auto count = io::read_pod<std::uint64_t>(in, path);
        const auto context = io::read_pod<std::uint64_t>(in, path);
        if (context > (1u << 24)) throw DataError(path + ": implausible context " + std::to_string(context));
        std::vector<PackedRow> rows(count);
        for (auto &r : rows) {
            r.tokens.resize(context);
            io::read_array(in, r.tokens.data(), context, path);
        }
        for (auto &r : rows) {
            r.pad_count = static_cast<std::int32_t>(io::read_pod<std::uint32_t>(in, path));
            const auto nseg = io::read_pod<std::uint32_t>(in, path);
            if (nseg > context) throw DataError(path + ": corrupt segment table");
            for (std::uint32_t i = 0; i < nseg; ++i) {
                Segment s;
                s.start = io::read_pod<std::int32_t>(in, path);
                s.end = io::read_pod<std::int32_t>(in, path);
                s.doc = io::read_pod<std::int64_t>(in, path);
                if (s.start < 0 || s.end <= s.start || s.end > static_cast<std::int32_t>(context)) {
                    throw DataError(path + ": corrupt segment table");
                }
                r.segments.push_back(s);
            }
        }
        return rows;
    } catch (const std::runtime_error &e) {
        throw DataError(e.what());
    }
}

}  // namespace mtp::datapack
