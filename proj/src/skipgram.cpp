#include "bhin/skipgram.hpp"

#include <algorithm>
#include <cmath>

#include "bhin/error.hpp"

namespace bhin {

namespace {

// -log sigma(x), computed without overflow.
double neg_log_sigmoid(double x) {
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double modulated_dot(const double* gsq, const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += gsq[i] * a[i] * b[i];
  return s;
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t nodes, std::size_t types, std::size_t hops, std::size_t dim)
    : nodes_(nodes), dim_(dim), shape_{hops, types}, q_(nodes * dim, 0.0), g_(shape_.size() * dim, 1.0) {}

EmbeddingStore EmbeddingStore::initialized(std::size_t nodes, std::size_t types, std::size_t hops,
                                           std::size_t dim, Rng& rng) {
  EmbeddingStore store(nodes, types, hops, dim);
  const double half = 0.5 / static_cast<double>(dim);
  for (double& x : store.q_) x = (rng.uniform() * 2.0 - 1.0) * half;
  return store;
}

void extract_pairs(std::span<const NodeId> walk, std::size_t k, std::vector<ContextPair>& out) {
  for (std::size_t i = 0; i < walk.size(); ++i) {
    for (std::size_t z = 0; z < k && i + z + 1 < walk.size(); ++z) {
      out.push_back({walk[i], walk[i + z + 1], static_cast<std::uint32_t>(z)});
    }
  }
}

std::vector<ContextPair> extract_pairs(std::span<const NodeId> walk, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "context window k must be >= 1");
  std::vector<ContextPair> out;
  extract_pairs(walk, k, out);
  return out;
}

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "alias table needs at least one weight");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::kInvalidArgument, "alias weight must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) throw Error(ErrorKind::kInvalidArgument, "alias weights sum to zero");

  prob_.assign(n, 1.0);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    alias_[i] = i;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] += scaled[s] - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
}

std::size_t AliasTable::draw(Rng& rng) const {
  const std::size_t i = rng.below(prob_.size());
  return rng.uniform() < prob_[i] ? i : alias_[i];
}

NegativeSampler::NegativeSampler(const HetGraph& g, double power) {
  nodes_.resize(g.type_count());
  tables_.resize(g.type_count());
  for (TypeId t = 0; t < g.type_count(); ++t) {
    const auto members = g.nodes_of_type(t);
    if (members.empty()) continue;
    nodes_[t].assign(members.begin(), members.end());
    std::vector<double> w;
    w.reserve(members.size());
    for (NodeId v : members) w.push_back(std::pow(static_cast<double>(g.degree(v)), power));
    tables_[t] = AliasTable(w);
  }
}

NodeId NegativeSampler::draw(TypeId type, Rng& rng) const {
  if (type >= nodes_.size() || nodes_[type].empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no nodes of type " + std::to_string(type));
  }
  return nodes_[type][tables_[type].draw(rng)];
}

void append_walk(PairBatch& batch, std::span<const NodeId> walk, std::size_t k,
                 const NegativeSampler& sampler, std::span<const TypeId> node_type, Rng& rng) {
  const std::size_t first = batch.pairs.size();
  extract_pairs(walk, k, batch.pairs);
  for (std::size_t i = first; i < batch.pairs.size(); ++i) {
    const TypeId t = node_type[batch.pairs[i].context];
    for (std::size_t j = 0; j < batch.negatives_per_pair; ++j) batch.negatives.push_back(sampler.draw(t, rng));
  }
}

double score(const EmbeddingStore& store, std::span<const TypeId> node_type, NodeId context,
             NodeId source, std::uint32_t hop) {
  const std::size_t task = store.task_shape().index(hop, node_type[source], node_type[context]);
  const auto g = store.task(task);
  const auto fc = store.node(context);
  const auto fs = store.node(source);
  double s = 0.0;
  for (std::size_t i = 0; i < store.dim(); ++i) s += g[i] * g[i] * fc[i] * fs[i];
  return s;
}

TaskLossTracker::TaskLossTracker(const TaskSet& possible, double initial_loss)
    : shape_(possible.shape()),
      possible_(shape_.size(), 0),
      last_(shape_.size(), 0.0),
      initial_(shape_.size(), 0.0),
      sum_(shape_.size(), 0.0),
      count_(shape_.size(), 0) {
  if (!(initial_loss > 0.0)) throw Error(ErrorKind::kInvalidArgument, "initial loss must be > 0");
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (possible.contains_index(i)) {
      possible_[i] = 1;
      last_[i] = initial_loss;
      initial_[i] = initial_loss;
    }
  }
}

void TaskLossTracker::discard_round() {
  std::ranges::fill(sum_, 0.0);
  std::ranges::fill(count_, 0);
}

TaskTensor TaskLossTracker::per_task_losses() {
  TaskTensor out(shape_, 0.0);
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (count_[i] > 0) last_[i] = sum_[i] / static_cast<double>(count_[i]);
    if (possible_[i]) out.values[i] = last_[i];
  }
  discard_round();
  return out;
}

void TaskLossTracker::restore(std::vector<double> last, std::vector<double> initial) {
  if (last.size() != shape_.size() || initial.size() != shape_.size()) {
    throw Error(ErrorKind::kShapeMismatch, "tracker state does not match task shape");
  }
  last_ = std::move(last);
  initial_ = std::move(initial);
  discard_round();
}

Gradients::Gradients(std::size_t nodes, std::size_t tasks, std::size_t dim)
    : dim_(dim), q_(nodes * dim, 0.0), g_(tasks * dim, 0.0), node_seen_(nodes, 0), task_seen_(tasks, 0) {}

std::span<double> Gradients::node(NodeId v) {
  if (!node_seen_[v]) {
    node_seen_[v] = 1;
    touched_nodes_.push_back(v);
  }
  return {q_.data() + static_cast<std::size_t>(v) * dim_, dim_};
}

std::span<double> Gradients::task(std::size_t t) {
  if (!task_seen_[t]) {
    task_seen_[t] = 1;
    touched_tasks_.push_back(t);
  }
  return {g_.data() + t * dim_, dim_};
}

std::span<const double> Gradients::node_or_empty(NodeId v) const {
  if (!node_seen_[v]) return {};
  return {q_.data() + static_cast<std::size_t>(v) * dim_, dim_};
}

std::span<const double> Gradients::task_or_empty(std::size_t t) const {
  if (!task_seen_[t]) return {};
  return {g_.data() + t * dim_, dim_};
}

bool Gradients::all_finite() const {
  for (NodeId v : touched_nodes_)
    for (std::size_t i = 0; i < dim_; ++i)
      if (!std::isfinite(q_[static_cast<std::size_t>(v) * dim_ + i])) return false;
  for (std::size_t t : touched_tasks_)
    for (std::size_t i = 0; i < dim_; ++i)
      if (!std::isfinite(g_[t * dim_ + i])) return false;
  return true;
}

void Gradients::clear() {
  for (NodeId v : touched_nodes_) {
    std::fill_n(q_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(v) * dim_), dim_, 0.0);
    node_seen_[v] = 0;
  }
  for (std::size_t t : touched_tasks_) {
    std::fill_n(g_.begin() + static_cast<std::ptrdiff_t>(t * dim_), dim_, 0.0);
    task_seen_[t] = 0;
  }
  touched_nodes_.clear();
  touched_tasks_.clear();
}

double batch_loss(const PairBatch& batch, const EmbeddingStore& store,
                  std::span<const TypeId> node_type) {
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const ContextPair& p = batch.pairs[i];
    loss += neg_log_sigmoid(score(store, node_type, p.context, p.source, p.hop));
    for (NodeId neg : batch.negatives_of(i)) {
      loss += neg_log_sigmoid(-score(store, node_type, neg, p.source, p.hop));
    }
  }
  return loss;
}

BatchResult accumulate_batch(const PairBatch& batch, const EmbeddingStore& store,
                             std::span<const TypeId> node_type, Gradients& grads,
                             TaskLossTracker* tracker) {
  const std::size_t d = store.dim();
  const TaskShape& shape = store.task_shape();
  std::vector<double> gsq(d);
  BatchResult result;

  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const ContextPair& p = batch.pairs[i];
    const std::size_t task = shape.index(p.hop, node_type[p.source], node_type[p.context]);
    const double* g = store.task(task).data();
    for (std::size_t j = 0; j < d; ++j) gsq[j] = g[j] * g[j];
    const double* fs = store.node(p.source).data();
    double* grad_s = grads.node(p.source).data();
    double* grad_g = grads.task(task).data();

    // label 1 for the observed context, 0 for each negative. With
    // s = sum g^2 fc fs, the loss term's derivative w.r.t. s is sigma(s) - label.
    auto term = [&](NodeId other, double label) {
      const double* fc = store.node(other).data();
      const double s = modulated_dot(gsq.data(), fc, fs, d);
      const double loss = label > 0.0 ? neg_log_sigmoid(s) : neg_log_sigmoid(-s);
      const double coeff = sigmoid(s) - label;
      double* grad_c = grads.node(other).data();
      for (std::size_t j = 0; j < d; ++j) {
        const double cg = coeff * gsq[j];
        grad_s[j] += cg * fc[j];
        grad_c[j] += cg * fs[j];
        grad_g[j] += 2.0 * coeff * g[j] * fc[j] * fs[j];
      }
      result.loss += loss;
      if (tracker) tracker->record(task, loss);
    };

    term(p.context, 1.0);
    ++result.positives;
    for (NodeId neg : batch.negatives_of(i)) {
      term(neg, 0.0);
      ++result.negatives;
    }
  }
  return result;
}

void apply_gradients(EmbeddingStore& store, Gradients& grads, double lr) {
  for (NodeId v : grads.touched_nodes()) {
    auto row = store.node(v);
    const auto grad = grads.node_or_empty(v);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= lr * grad[j];
  }
  for (std::size_t t : grads.touched_tasks()) {
    auto row = store.task(t);
    const auto grad = grads.task_or_empty(t);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= lr * grad[j];
  }
  grads.clear();
}

BatchResult batch_loss_and_update(const PairBatch& batch, EmbeddingStore& store,
                                  std::span<const TypeId> node_type, double lr,
                                  TaskLossTracker& tracker, Gradients& scratch) {
  if (!(lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning rate must be > 0");
  const std::size_t d = store.dim();
  const TaskShape& shape = store.task_shape();
  scratch.clear();
  // scratch keeps the first-seen value of every row this batch writes to.
  auto save_node = [&](NodeId v) {
    if (!scratch.node_or_empty(v).empty()) return;
    std::ranges::copy(store.node(v), scratch.node(v).begin());
  };
  auto save_task = [&](std::size_t t) {
    if (!scratch.task_or_empty(t).empty()) return;
    std::ranges::copy(store.task(t), scratch.task(t).begin());
  };
  auto restore = [&] {
    for (NodeId v : scratch.touched_nodes()) std::ranges::copy(scratch.node_or_empty(v), store.node(v).begin());
    for (std::size_t t : scratch.touched_tasks()) std::ranges::copy(scratch.task_or_empty(t), store.task(t).begin());
    scratch.clear();
  };

  std::vector<double> gsq(d), grad_s(d), grad_g(d), fs_old(d);
  std::vector<NodeId> others;
  std::vector<double> coeffs;
  BatchResult result;
  bool finite = true;
  for (std::size_t i = 0; i < batch.pairs.size() && finite; ++i) {
    const ContextPair& p = batch.pairs[i];
    const std::size_t task = shape.index(p.hop, node_type[p.source], node_type[p.context]);
    auto g = store.task(task);
    for (std::size_t j = 0; j < d; ++j) gsq[j] = g[j] * g[j];
    const double* fs = store.node(p.source).data();

    others.assign(1, p.context);
    const auto negs = batch.negatives_of(i);
    others.insert(others.end(), negs.begin(), negs.end());
    coeffs.resize(others.size());
    double pair_loss = 0.0;
    for (std::size_t k = 0; k < others.size(); ++k) {
      const double s = modulated_dot(gsq.data(), store.node(others[k]).data(), fs, d);
      const double loss = k == 0 ? neg_log_sigmoid(s) : neg_log_sigmoid(-s);
      coeffs[k] = sigmoid(s) - (k == 0 ? 1.0 : 0.0);
      pair_loss += loss;
      tracker.record(task, loss);
    }
    result.loss += pair_loss;
    ++result.positives;
    result.negatives += negs.size();
    if (!std::isfinite(pair_loss)) {
      finite = false;
      break;
    }

    // All gradients of this pair come from the pre-step values, so a negative
    // that coincides with the source or context is still handled exactly.
    std::ranges::fill(grad_s, 0.0);
    std::ranges::fill(grad_g, 0.0);
    for (std::size_t k = 0; k < others.size(); ++k) {
      const double* fc = store.node(others[k]).data();
      for (std::size_t j = 0; j < d; ++j) {
        grad_s[j] += coeffs[k] * gsq[j] * fc[j];
        grad_g[j] += 2.0 * coeffs[k] * g[j] * fc[j] * fs[j];
      }
    }
    std::copy_n(fs, d, fs_old.begin());
    for (std::size_t k = 0; k < others.size(); ++k) {
      save_node(others[k]);
      auto fc = store.node(others[k]);
      for (std::size_t j = 0; j < d; ++j) {
        fc[j] -= lr * coeffs[k] * gsq[j] * fs_old[j];
        finite = finite && std::isfinite(fc[j]);
      }
    }
    save_node(p.source);
    auto src = store.node(p.source);
    save_task(task);
    for (std::size_t j = 0; j < d; ++j) {
      src[j] -= lr * grad_s[j];
      g[j] -= lr * grad_g[j];
      finite = finite && std::isfinite(src[j]) && std::isfinite(g[j]);
    }
  }
  if (!finite) {
    restore();
    tracker.discard_round();
    throw Error(ErrorKind::kNonFiniteLoss,
                "loss or update is not finite; the embedding learning rate is likely too large");
  }
  scratch.clear();
  return result;
}


TaskTensor inverse_training_ratio(const TaskTensor& losses, std::span<const double> initial_loss,
                                  const TaskSet& possible) {
  const TaskShape& shape = possible.shape();
  if (!(losses.shape == shape) || initial_loss.size() != shape.size()) {
    throw Error(ErrorKind::kShapeMismatch, "loss tensor does not match the task set");
  }
  TaskTensor ratio(shape, 1.0);
  double mean = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (!possible.contains_index(i)) continue;
    if (!(initial_loss[i] > 0.0)) {
      throw Error(ErrorKind::kDegenerateRatio, "initial loss must be > 0 for every possible task");
    }
    ratio.values[i] = losses.values[i] / initial_loss[i];
    mean += ratio.values[i];
    ++n;
  }
  if (n == 0) return ratio;
  mean /= static_cast<double>(n);
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw Error(ErrorKind::kDegenerateRatio, "mean training ratio is " + std::to_string(mean));
  }
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (possible.contains_index(i)) ratio.values[i] /= mean;
  }
  return ratio;
}

}  // namespace bhin
