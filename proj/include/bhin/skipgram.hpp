#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "bhin/hetgraph.hpp"
#include "bhin/rng.hpp"
#include "bhin/walker.hpp"

namespace bhin {

/// Node embedding table Q (|V| x d) and task intensity table G (k x |T| x |T| x d).
///
/// A task slice g modulates a score as sum_d g_d^2 * f(c)_d * f(s)_d, i.e. the
/// intensity r = g * g is kept implicitly so it can never go negative.
/// The slice for a (hop, source type, context type) triple sits at
/// TaskShape::index(hop, source, context).
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t nodes, std::size_t types, std::size_t hops, std::size_t dim);

  /// Q uniform in [-0.5/d, 0.5/d], G all ones.
  static EmbeddingStore initialized(std::size_t nodes, std::size_t types, std::size_t hops,
                                    std::size_t dim, Rng& rng);

  std::size_t node_count() const { return nodes_; }
  std::size_t dim() const { return dim_; }
  const TaskShape& task_shape() const { return shape_; }

  std::span<double> node(NodeId v) { return {q_.data() + static_cast<std::size_t>(v) * dim_, dim_}; }
  std::span<const double> node(NodeId v) const {
    return {q_.data() + static_cast<std::size_t>(v) * dim_, dim_};
  }
  std::span<double> task(std::size_t task_index) { return {g_.data() + task_index * dim_, dim_}; }
  std::span<const double> task(std::size_t task_index) const {
    return {g_.data() + task_index * dim_, dim_};
  }

  std::vector<double>& node_table() { return q_; }
  const std::vector<double>& node_table() const { return q_; }
  std::vector<double>& task_table() { return g_; }
  const std::vector<double>& task_table() const { return g_; }

 private:
  std::size_t nodes_ = 0;
  std::size_t dim_ = 0;
  TaskShape shape_;
  std::vector<double> q_;
  std::vector<double> g_;
};

/// k x |T| x |T| real tensor indexed like TaskShape. Used for per-task losses
/// and for the inverse training ratio tensor.
struct TaskTensor {
  TaskShape shape;
  std::vector<double> values;

  TaskTensor() = default;
  TaskTensor(TaskShape s, double fill) : shape(s), values(s.size(), fill) {}

  double& operator[](TaskId t) { return values[shape.index(t)]; }
  double operator[](TaskId t) const { return values[shape.index(t)]; }
};

struct ContextPair {
  NodeId source;
  NodeId context;
  std::uint32_t hop;  // context sits hop + 1 positions after source
  friend bool operator==(const ContextPair&, const ContextPair&) = default;
};

/// Forward-only skip-gram context: every (w_i, w_{i+z+1}, z) with z < k that
/// stays inside the walk.
std::vector<ContextPair> extract_pairs(std::span<const NodeId> walk, std::size_t k);
void extract_pairs(std::span<const NodeId> walk, std::size_t k, std::vector<ContextPair>& out);

/// Walker's alias method over a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  std::size_t draw(Rng& rng) const;

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

/// Per-type negative sampler: within each type, nodes are drawn with
/// probability proportional to degree^power (power 1 by default).
class NegativeSampler {
 public:
  NegativeSampler() = default;
  NegativeSampler(const HetGraph& g, double power = 1.0);

  NodeId draw(TypeId type, Rng& rng) const;

 private:
  std::vector<std::vector<NodeId>> nodes_;
  std::vector<AliasTable> tables_;
};

/// Positive pairs plus m type-matched negatives per pair, stored flat:
/// negatives of pair i occupy [i*m, (i+1)*m).
struct PairBatch {
  std::size_t negatives_per_pair = 0;
  std::vector<ContextPair> pairs;
  std::vector<NodeId> negatives;

  void clear() {
    pairs.clear();
    negatives.clear();
  }
  std::span<const NodeId> negatives_of(std::size_t i) const {
    return {negatives.data() + i * negatives_per_pair, negatives_per_pair};
  }
};

/// Appends the walk's context pairs and draws m negatives per pair with the
/// context node's type.
void append_walk(PairBatch& batch, std::span<const NodeId> walk, std::size_t k,
                 const NegativeSampler& sampler, std::span<const TypeId> node_type, Rng& rng);

/// sum_d g_d^2 * f(context)_d * f(source)_d with g the (hop, type(source), type(context)) slice.
double score(const EmbeddingStore& store, std::span<const TypeId> node_type, NodeId context,
             NodeId source, std::uint32_t hop);

/// Per-task loss bookkeeping. Each positive or negative scored pair adds its
/// loss term to the task (hop, type(source), type(context)); a task's loss for
/// the round is the mean over its terms. Tasks unseen in a round report their
/// previous value.
class TaskLossTracker {
 public:
  TaskLossTracker() = default;
  explicit TaskLossTracker(const TaskSet& possible, double initial_loss = std::numbers::ln2);

  const TaskShape& shape() const { return shape_; }

  void record(std::size_t task_index, double loss) {
    sum_[task_index] += loss;
    ++count_[task_index];
  }
  void discard_round();

  /// Closes the current round: means for seen tasks, surrogates otherwise.
  /// Entries of impossible tasks are 0.
  TaskTensor per_task_losses();

  std::span<const double> round_sums() const { return sum_; }
  std::span<const std::size_t> round_counts() const { return count_; }
  std::span<const double> last_loss() const { return last_; }
  std::span<const double> initial_loss() const { return initial_; }

  /// Restores state (used by checkpoints).
  void restore(std::vector<double> last, std::vector<double> initial);

 private:
  TaskShape shape_;
  std::vector<char> possible_;
  std::vector<double> last_;
  std::vector<double> initial_;
  std::vector<double> sum_;
  std::vector<std::size_t> count_;
};

/// Dense gradient accumulator with touched-row tracking so a batch only pays
/// for rows it used.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::size_t nodes, std::size_t tasks, std::size_t dim);

  std::span<double> node(NodeId v);
  std::span<double> task(std::size_t t);
  std::span<const double> node_or_empty(NodeId v) const;
  std::span<const double> task_or_empty(std::size_t t) const;
  std::span<const NodeId> touched_nodes() const { return touched_nodes_; }
  std::span<const std::size_t> touched_tasks() const { return touched_tasks_; }
  bool all_finite() const;
  void clear();

 private:
  std::size_t dim_ = 0;
  std::vector<double> q_;
  std::vector<double> g_;
  std::vector<char> node_seen_;
  std::vector<char> task_seen_;
  std::vector<NodeId> touched_nodes_;
  std::vector<std::size_t> touched_tasks_;
};

struct BatchResult {
  double loss = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// L = -sum_pairs [log sigma(s_pos) + sum_neg log sigma(-s_neg)].
double batch_loss(const PairBatch& batch, const EmbeddingStore& store,
                  std::span<const TypeId> node_type);

/// Evaluates L and adds dL/dQ, dL/dG into `grads` without touching the store.
/// When `tracker` is given, every loss term is also recorded per task.
BatchResult accumulate_batch(const PairBatch& batch, const EmbeddingStore& store,
                             std::span<const TypeId> node_type, Gradients& grads,
                             TaskLossTracker* tracker);

/// store -= lr * grads, then clears grads.
void apply_gradients(EmbeddingStore& store, Gradients& grads, double lr);

/// Sequential SGD over the batch: each positive pair together with its
/// negatives is one step of size lr, taken with the gradients at the values
/// current when the pair is reached. The returned loss (and what the tracker
/// records) is each term evaluated just before its step. A single step on the
/// summed batch gradient diverges at ordinary skip-gram rates once a walk
/// revisits the same rows many times.
/// Throws NonFiniteLoss if any term or updated entry is not finite; the store
/// is then restored to its state before the batch, with `scratch` holding the
/// saved rows meanwhile.
BatchResult batch_loss_and_update(const PairBatch& batch, EmbeddingStore& store,
                                  std::span<const TypeId> node_type, double lr,
                                  TaskLossTracker& tracker, Gradients& scratch);

/// I[z][x][y] = (L/L_init) / mean over possible tasks of (L/L_init) for
/// possible tasks, exactly 1 otherwise. Throws DegenerateRatio if the mean is
/// zero or not finite.
TaskTensor inverse_training_ratio(const TaskTensor& losses, std::span<const double> initial_loss,
                                  const TaskSet& possible);

}  // namespace bhin
