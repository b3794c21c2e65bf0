#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtp/numerics/rng.hpp"
#include "mtp/tokenize/tokenizer.hpp"

namespace mtp::datapack {

using tokenize::TokenId;

class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct Document {
    std::string id;
    std::string text;
};

/// Reads documents from files and directories. A `.jsonl` file yields one
/// document per non-blank line (its "text" field); any other file is one
/// document. Directories contribute their regular files, sorted by path.
/// Documents with empty text are skipped.
std::vector<Document> ingest(const std::vector<std::string> &paths);

/// Encodes each document framed by BOS and EOS.
std::vector<std::vector<TokenId>> tokenize_documents(const std::vector<Document> &docs,
                                                      const tokenize::Tokenizer &tokenizer);

/// Token range [start, end) of a row holding (part of) document `doc`.
struct Segment {
    std::int32_t start = 0;
    std::int32_t end = 0;
    std::int64_t doc = 0;
    bool operator==(const Segment &) const = default;
};

struct PackedRow {
    std::vector<TokenId> tokens;  // always `context` long
    std::vector<Segment> segments;
    std::int32_t pad_count = 0;
};

/// Best-fit decreasing: sequences longer than `context` are cut into chunks
/// of `context`; chunks are placed longest first into the open row with the
/// least sufficient free space (lowest index on ties), else a new row. The
/// tail of every row is filled with `pad`.
std::vector<PackedRow> pack_best_fit(const std::vector<std::vector<TokenId>> &sequences, int context, TokenId pad);

/// Baseline for comparison: chunks in input order, starting a new row
/// whenever the next chunk does not fit the current one.
std::vector<PackedRow> pack_sequential(const std::vector<std::vector<TokenId>> &sequences, int context, TokenId pad);

double padding_fraction(const std::vector<PackedRow> &rows);

struct PackedBatch {
    std::vector<PackedRow> rows;
    int batch_size() const { return static_cast<int>(rows.size()); }
    int seq_len() const { return rows.empty() ? 0 : static_cast<int>(rows.front().tokens.size()); }
};

/// Model inputs and the targets of the head predicting `offset` tokens ahead.
/// mask[r * T + t] is 1 iff position t and t + offset lie in the same segment.
struct HeadTargets {
    std::vector<TokenId> targets;  // B*T, PAD-free placeholder 0 where masked
    std::vector<std::uint8_t> mask;
    std::int64_t active = 0;
};

std::vector<TokenId> batch_inputs(const PackedBatch &batch);
HeadTargets head_targets(const PackedBatch &batch, int offset);

/// Shuffles the rows once (Fisher-Yates on `rng`) and cuts batches of
/// `batch_size`; the last batch may be shorter.
std::vector<PackedBatch> make_batches(const std::vector<PackedRow> &rows, int batch_size, numerics::Rng &rng);

/// Batch `step` of an endless schedule: epoch e = step / batches_per_epoch is
/// shuffled with a stream derived from (seed, e), so any step can be
/// reconstructed without replaying earlier ones.
PackedBatch batch_for_step(const std::vector<PackedRow> &rows, int batch_size, std::uint64_t seed, std::int64_t step);
std::int64_t batches_per_epoch(std::size_t rows, int batch_size);

/// Cache layout (little-endian): "MTPPACK1", u64 row count, u64 context,
/// row-major i32 tokens, then per row u32 pad count, u32 segment count and
/// (i32 start, i32 end, i64 doc) per segment.
void save_packed(const std::string &path, const std::vector<PackedRow> &rows);
std::vector<PackedRow> load_packed(const std::string &path);

}  // namespace mtp::datapack
