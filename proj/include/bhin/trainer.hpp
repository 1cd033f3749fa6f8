#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bhin/balance.hpp"
#include "bhin/hetgraph.hpp"
#include "bhin/skipgram.hpp"
#include "bhin/walker.hpp"

namespace bhin {

enum class WalkMode { kBhin2vec, kNeighborUniform };

std::string_view to_string(WalkMode mode);
WalkMode parse_walk_mode(std::string_view text);

/// Training hyperparameters. Field names double as config-file keys and CLI
/// flag names.
struct TrainConfig {
  std::size_t l = 100;            // walk length
  std::size_t e = 10;             // epochs
  std::size_t k = 5;              // context window
  std::size_t m = 5;              // negatives per positive
  std::size_t d = 128;            // embedding dimension
  double r = 0.025;               // embedding learning rate
  double r2 = 0.025;              // stochastic-matrix learning rate
  double alpha = 0.1;             // perturbation strength
  std::size_t batch_walks = 1;    // walks per update
  std::uint64_t seed = 1;
  WalkMode walk_mode = WalkMode::kBhin2vec;
  double negative_power = 1.0;    // 1.0 or 0.75
  std::size_t history_every = 1000;  // walks between P snapshots; 0 = epoch boundaries only
  bool lr_decay = false;          // linear decay of r over the run
  double ratio_ema = 0.0;         // EMA weight on the previous ratio tensor; 0 disables

  void validate() const;

  /// Sets one field from its textual key/value; throws InvalidArgument on an
  /// unknown key or unparsable value.
  void set(std::string_view key, std::string_view value);

  /// Flat "key = value" lines for every field, in declaration order.
  std::string to_text() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Reads "key = value" lines; blank lines and '#' comments are ignored.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

struct HistoryRecord {
  std::size_t epoch;
  std::size_t step;  // walks processed so far
  TypeId source;
  TypeId target;
  double probability;
  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct StepInfo {
  std::size_t epoch;
  std::size_t step;
  const BatchResult& batch;
  const TaskTensor& losses;
  const TaskTensor* ratio;          // null in neighbor-uniform mode
  const StochasticMatrix* p;        // null in neighbor-uniform mode
};

struct TrainOptions {
  /// Called after every update (embedding step plus, in BHIN2vec mode, the P step).
  std::function<void(const StepInfo&)> on_step;
};

struct TrainStats {
  std::size_t walks = 0;
  std::size_t p_updates = 0;
  std::vector<std::size_t> positives_per_epoch;
  std::vector<double> mean_loss_per_epoch;  // per scored pair
};

struct TrainResult {
  EmbeddingStore store;
  std::optional<StochasticMatrix> p;  // empty in neighbor-uniform mode
  std::vector<HistoryRecord> history;
  TaskLossTracker tracker;
  TrainStats stats;
};

/// Alternates embedding updates and stochastic-matrix updates: each epoch
/// visits every node once in a seeded shuffled order, samples a walk from it,
/// takes a gradient step on the skip-gram loss, rebuilds the inverse training
/// ratio tensor from per-task losses, and takes a projected step on P.
TrainResult train(const HetGraph& g, const TrainConfig& cfg, const TrainOptions& options = {});

struct Checkpoint {
  TrainConfig config;
  EmbeddingStore store;
  StochasticMatrix p;
  std::vector<double> last_loss;
  std::vector<double> initial_loss;
};

struct CheckpointShape {
  std::size_t nodes;
  std::size_t types;
  std::size_t hops;
  std::size_t dim;
};

/// Single binary file: magic, format version, config echo, tables, trailing
/// FNV-1a hash over everything before it. In neighbor-uniform mode `p` may be
/// the uniform matrix.
void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const EmbeddingStore& store, const StochasticMatrix& p,
                     const TaskLossTracker& tracker);

/// Throws CorruptCheckpoint on a bad magic, truncation or hash mismatch and
/// VersionMismatch on an unknown format version or a shape differing from `expect`.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<CheckpointShape> expect = std::nullopt);

}  // namespace bhin
