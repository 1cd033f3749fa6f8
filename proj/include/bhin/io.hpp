#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bhin/hetgraph.hpp"
#include "bhin/skipgram.hpp"
#include "bhin/trainer.hpp"

namespace bhin {

/// Writes through `fill` into `path`.tmp, then renames over `path`, so a
/// crash never leaves a partial file under the final name.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill,
                  bool binary = false);

/// Shortest decimal that round-trips the value as a 32-bit float.
std::string format_float(double value);

/// "node_count d" header, then "<node-id> v_1 ... v_d" per node.
void write_embeddings_text(const EmbeddingStore& store, const HetGraph& g, std::ostream& out);

/// Raw little-endian float32 rows plus a sidecar with one node id per line.
void write_embeddings_binary(const EmbeddingStore& store, const HetGraph& g,
                             const std::filesystem::path& data, const std::filesystem::path& index);

struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<std::string> names;
  std::vector<double> values;  // names.size() x dim, row-major

  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

EmbeddingTable read_embeddings_text(std::istream& in);
EmbeddingTable read_embeddings_text(const std::filesystem::path& path);

/// "key <whitespace> value" records such as label and node-type files. Blank
/// lines and '#' comments are skipped; MalformedRecord on any other field count.
std::vector<std::pair<std::string, std::string>> read_two_columns(std::istream& in, std::string_view what);
std::vector<std::pair<std::string, std::string>> read_two_columns(const std::filesystem::path& path);

/// Header "epoch,step,source_type,target_type,probability"; types by name.
void write_history_csv(std::span<const HistoryRecord> history, std::span<const std::string> type_names,
                       std::ostream& out);

struct NamedHistoryRecord {
  std::size_t epoch;
  std::size_t step;
  std::string source;
  std::string target;
  double probability;
};

/// Throws MissingHistory when the file does not exist or has no header.
std::vector<NamedHistoryRecord> read_history_csv(const std::filesystem::path& path);

/// Tidy per-(source type, target type) time series, optionally restricted to
/// one source type. Columns: source_type,target_type,epoch,step,probability.
void write_transition_series(std::span<const NamedHistoryRecord> history,
                             const std::string* source_filter, std::ostream& out);

/// |T| x |T| matrix as CSV with a header row and a leading row-label column.
void write_matrix_csv(const Matrix& m, std::span<const std::string> type_names, std::ostream& out);

}  // namespace bhin
