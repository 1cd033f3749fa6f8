#include "bhin/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "bhin/error.hpp"

namespace bhin {

namespace {

using RelationKey = std::pair<TypeId, TypeId>;

RelationKey relation_of(const HetGraph& g, NodeId u, NodeId v) {
  const TypeId a = g.type_of(u);
  const TypeId b = g.type_of(v);
  return {std::min(a, b), std::max(a, b)};
}

// Largest eigenvalue of [Z 1]^T [Z 1] / n, the curvature scale of a linear
// model with bias on standardized features.
double gram_top_eigenvalue(const Eigen::MatrixXd& z) {
  const auto n = static_cast<double>(z.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(z.cols() + 1).normalized();
  double lambda = 1.0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd t = z * v.head(z.cols()) + Eigen::VectorXd::Constant(z.rows(), v(z.cols()));
    Eigen::VectorXd u(z.cols() + 1);
    u.head(z.cols()) = z.transpose() * t / n;
    u(z.cols()) = t.sum() / n;
    lambda = u.norm();
    if (lambda == 0.0) return 1.0;
    v = u / lambda;
  }
  return lambda;
}

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  explicit Standardizer(const Eigen::MatrixXd& x) {
    mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    scale = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().matrix();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
      if (!(scale(j) > 1e-12)) scale(j) = 1.0;
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  }
};

void require_rows(const Eigen::MatrixXd& x, std::size_t labels) {
  if (x.rows() == 0) throw Error(ErrorKind::kInvalidArgument, "classifier needs at least one sample");
  if (static_cast<std::size_t>(x.rows()) != labels) throw Error(ErrorKind::kShapeMismatch, "labels vs rows");
}

// Runs body(0..count-1) on up to `threads` workers. Jobs write only to their
// own slots, so the result does not depend on the thread count.
void run_parallel(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

EdgeSplit split_edges(const HetGraph& g, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "split fraction must be in (0, 1)");
  }
  std::map<RelationKey, std::vector<Edge>> by_relation;
  for (const Edge& e : g.edges()) by_relation[relation_of(g, e.u, e.v)].push_back(e);

  std::vector<std::size_t> degree(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) degree[v] = g.degree(v);

  EdgeSplit split;
  split.fraction = fraction;
  std::vector<Edge> kept;
  for (auto& [key, edges] : by_relation) {
    const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(edges.size())));
    rng.shuffle(edges);
    std::size_t removed = 0;
    for (const Edge& e : edges) {
      if (removed < target && degree[e.u] >= 2 && degree[e.v] >= 2) {
        --degree[e.u];
        --degree[e.v];
        ++removed;
        TestEdge t{e.u, e.v};
        if (g.type_of(t.u) != key.first || (key.first == key.second && rng.below(2) == 1)) std::swap(t.u, t.v);
        split.test_edges.push_back(t);
      } else {
        kept.push_back(e);
      }
    }
    if (removed < target) {
      throw Error(ErrorKind::kInfeasibleSplit,
                  "relation " + g.type_name(key.first) + "-" + g.type_name(key.second) + ": only " +
                      std::to_string(removed) + " of " + std::to_string(target) +
                      " edges removable without isolating a node");
    }
  }
  std::vector<TypeId> types(g.node_types().begin(), g.node_types().end());
  std::vector<std::string> type_names(g.type_names().begin(), g.type_names().end());
  std::vector<std::string> names;
  names.reserve(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) names.push_back(g.node_name(v));
  split.train_graph = HetGraph::build(std::move(types), std::move(type_names), kept, std::move(names));
  return split;
}

std::vector<double> edge_embedding(std::span<const double> fu, std::span<const double> fv) {
  if (fu.size() != fv.size()) throw Error(ErrorKind::kShapeMismatch, "edge_embedding dimension mismatch");
  std::vector<double> out(fu.size());
  for (std::size_t i = 0; i < fu.size(); ++i) out[i] = fu[i] * fv[i];
  return out;
}

void LogisticRegression::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ClassifierOptions& opts) {
  require_rows(x, static_cast<std::size_t>(y.size()));
  const Standardizer st(x);
  const Eigen::MatrixXd z = st.apply(x);
  const auto n = static_cast<double>(z.rows());
  const double step = 1.0 / (0.25 * gram_top_eigenvalue(z) + opts.l2);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(z.cols());
  double b = 0.0;
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    Eigen::ArrayXd margin = (z * w).array() + b;
    const Eigen::VectorXd residual = (1.0 / (1.0 + (-margin).exp()) - y.array()).matrix();
    const Eigen::VectorXd gw = z.transpose() * residual / n + opts.l2 * w;
    const double gb = residual.sum() / n;
    w -= step * gw;
    b -= step * gb;
  }
  w_ = (w.array() / st.scale.transpose().array()).matrix();
  b_ = b - st.mean.dot(w_);
}

double LogisticRegression::decision(std::span<const double> x) const {
  double s = b_;
  for (std::size_t i = 0; i < x.size(); ++i) s += w_(static_cast<Eigen::Index>(i)) * x[i];
  return s;
}

void SoftmaxRegression::fit(const Eigen::MatrixXd& x, std::span<const int> labels, int classes,
                            const ClassifierOptions& opts) {
  require_rows(x, labels.size());
  if (classes < 2) throw Error(ErrorKind::kSingleClass, "softmax regression needs >= 2 classes");
  const Standardizer st(x);
  const Eigen::MatrixXd z = st.apply(x);
  const auto n = static_cast<double>(z.rows());
  const double step = 1.0 / (0.5 * gram_top_eigenvalue(z) + opts.l2);

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(z.rows(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) onehot(static_cast<Eigen::Index>(i), labels[i]) = 1.0;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(z.cols(), classes);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes);
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    Eigen::MatrixXd logits = (z * w).rowwise() + b;
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    logits = (logits.colwise() - row_max).array().exp().matrix();
    const Eigen::VectorXd row_sum = logits.rowwise().sum();
    const Eigen::MatrixXd residual = (logits.array().colwise() / row_sum.array()).matrix() - onehot;
    w -= step * (z.transpose() * residual / n + opts.l2 * w);
    b -= step * (residual.colwise().sum() / n);
  }
  w_ = (w.array().colwise() / st.scale.transpose().array()).matrix();
  b_ = (b - st.mean * w_).transpose();
}

int SoftmaxRegression::predict(std::span<const double> x) const {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < w_.cols(); ++c) {
    double s = b_(c);
    for (std::size_t i = 0; i < x.size(); ++i) s += w_(static_cast<Eigen::Index>(i), c) * x[i];
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(c);
    }
  }
  return best;
}

F1Scores f1_scores(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorKind::kShapeMismatch, "truth vs predictions");
  if (truth.empty()) return {};
  std::map<int, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      ++correct;
      ++counts[truth[i]][0];
    } else {
      ++counts[predicted[i]][1];
      ++counts[truth[i]][2];
    }
  }
  double macro = 0.0;
  for (const auto& [cls, c] : counts) {
    macro += 2.0 * static_cast<double>(c[0]) / static_cast<double>(2 * c[0] + c[1] + c[2]);
  }
  return {static_cast<double>(correct) / static_cast<double>(truth.size()),
          macro / static_cast<double>(counts.size())};
}

HitRateReport rank_test_edges(const EdgeSplit& split, const HetGraph& g_full,
                              const std::function<PairScorer(TypeId, TypeId)>& scorer_for, Rng& rng,
                              const RankingOptions& opts) {
  std::map<RelationKey, std::vector<TestEdge>> by_relation;
  for (const TestEdge& e : split.test_edges) by_relation[relation_of(g_full, e.u, e.v)].push_back(e);

  HitRateReport report;
  std::vector<NodeId> chosen;
  std::vector<NodeId> pool;
  for (const auto& [key, edges] : by_relation) {
    std::vector<RelationKey> directions{key};
    if (key.first != key.second) directions.push_back({key.second, key.first});
    for (const auto& [src_type, tgt_type] : directions) {
      TaskHitRate task{src_type, tgt_type};
      const PairScorer scorer = scorer_for(src_type, tgt_type);
      const auto targets = g_full.nodes_of_type(tgt_type);
      for (TestEdge e : edges) {
        if (g_full.type_of(e.u) != src_type) std::swap(e.u, e.v);
        const NodeId s = e.u;
        const NodeId t = e.v;
        const std::size_t excluded = g_full.neighbors(s, tgt_type).size() + (g_full.type_of(s) == tgt_type ? 1 : 0);
        const std::size_t admissible = targets.size() - excluded;
        if (admissible < opts.candidates) {
          ++task.skipped;
          continue;
        }
        chosen.clear();
        auto ok = [&](NodeId c) { return c != s && !g_full.has_edge(s, c); };
        if (admissible * 2 >= targets.size()) {
          // Mostly admissible: rejection sampling is cheap.
          while (chosen.size() < opts.candidates) {
            const NodeId c = targets[rng.below(targets.size())];
            if (ok(c) && std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
          }
        } else {
          pool.clear();
          for (NodeId c : targets)
            if (ok(c)) pool.push_back(c);
          for (std::size_t i = 0; i < opts.candidates; ++i) {
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
            chosen.push_back(pool[i]);
          }
        }
        const double true_score = scorer(s, t);
        std::size_t rank = 0;
        for (NodeId c : chosen) {
          const double sc = scorer(s, c);
          if (sc > true_score || (sc == true_score && c < t)) ++rank;
        }
        ++task.evaluated;
        if (rank < opts.top) ++task.hits;
      }
      report.tasks.push_back(task);
    }
  }
  std::size_t counted = 0;
  for (const auto& t : report.tasks) {
    if (t.evaluated == 0) continue;
    report.average += t.hit_rate();
    ++counted;
  }
  if (counted) report.average /= static_cast<double>(counted);
  return report;
}

HitRateReport link_prediction_hit10(const EmbeddingStore& store, const EdgeSplit& split,
                                    const HetGraph& g_full, Rng& rng, const RankingOptions& ranking,
                                    const ClassifierOptions& clf) {
  if (store.node_count() != g_full.node_count()) {
    throw Error(ErrorKind::kShapeMismatch, "embeddings do not cover every node");
  }
  const std::size_t d = store.dim();
  std::map<RelationKey, std::vector<Edge>> train_by_relation;
  for (const Edge& e : split.train_graph.edges()) train_by_relation[relation_of(g_full, e.u, e.v)].push_back(e);

  std::vector<const std::pair<const RelationKey, std::vector<Edge>>*> jobs;
  for (const auto& entry : train_by_relation) jobs.push_back(&entry);
  std::vector<LogisticRegression> fitted(jobs.size());
  run_parallel(jobs.size(), clf.threads, [&](std::size_t job) {
    const auto& [key, edges] = *jobs[job];
    Rng neg_rng = rng.split("classifier_negatives", job);
    const auto left = g_full.nodes_of_type(key.first);
    const auto right = g_full.nodes_of_type(key.second);
    std::vector<Edge> negatives;
    const std::size_t max_attempts = 100 * edges.size() + 1000;
    for (std::size_t attempt = 0; negatives.size() < edges.size() && attempt < max_attempts; ++attempt) {
      const NodeId a = left[neg_rng.below(left.size())];
      const NodeId b = right[neg_rng.below(right.size())];
      if (a != b && !g_full.has_edge(a, b)) negatives.push_back({a, b});
    }
    const auto rows = static_cast<Eigen::Index>(edges.size() + negatives.size());
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(rows);
    Eigen::Index row = 0;
    for (const std::vector<Edge>* list : std::array<const std::vector<Edge>*, 2>{&edges, &negatives}) {
      const double label = list == &edges ? 1.0 : 0.0;
      for (const Edge& e : *list) {
        const auto fu = store.node(e.u);
        const auto fv = store.node(e.v);
        for (std::size_t j = 0; j < d; ++j) x(row, static_cast<Eigen::Index>(j)) = fu[j] * fv[j];
        y(row++) = label;
      }
    }
    fitted[job].fit(x, y, clf);
  });
  std::map<RelationKey, LogisticRegression> models;
  for (std::size_t job = 0; job < jobs.size(); ++job) models.emplace(jobs[job]->first, std::move(fitted[job]));

  Rng candidate_rng = rng.split("candidates");
  auto scorer_for = [&](TypeId a, TypeId b) -> PairScorer {
    const auto it = models.find({std::min(a, b), std::max(a, b)});
    if (it == models.end()) {
      throw Error(ErrorKind::kInvalidArgument, "no training edges for relation " + g_full.type_name(a) +
                                                   "-" + g_full.type_name(b));
    }
    const LogisticRegression* model = &it->second;
    return [model, &store, d](NodeId s, NodeId c) {
      const auto fs = store.node(s);
      const auto fc = store.node(c);
      const auto& w = model->weights();
      double score = model->bias();
      for (std::size_t j = 0; j < d; ++j) score += w(static_cast<Eigen::Index>(j)) * fs[j] * fc[j];
      return score;
    };
  };
  return rank_test_edges(split, g_full, scorer_for, candidate_rng, ranking);
}

NodeClassReport node_classification_f1(std::span<const LabeledNode> nodes, double train_fraction,
                                       std::size_t repeats, Rng& rng, const ClassifierOptions& clf) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "train fraction must be in (0, 1)");
  }
  if (repeats == 0) throw Error(ErrorKind::kInvalidArgument, "repeats must be >= 1");
  std::vector<std::string> type_order;
  std::map<std::string, std::vector<const LabeledNode*>> by_type;
  for (const auto& node : nodes) {
    auto [it, inserted] = by_type.try_emplace(node.type);
    if (inserted) type_order.push_back(node.type);
    it->second.push_back(&node);
  }

  NodeClassReport report;
  std::size_t evaluable = 0;
  for (const auto& type : type_order) {
    const auto& members = by_type[type];
    TypeF1 result{type};
    std::set<std::string> label_set;
    for (const auto* n : members) label_set.insert(n->label);
    if (label_set.size() < 2) {
      result.single_class = true;
      report.types.push_back(result);
      continue;
    }
    const std::vector<std::string> labels(label_set.begin(), label_set.end());
    std::vector<int> label_id(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      label_id[i] = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), members[i]->label) - labels.begin());
    }
    const std::size_t d = members.front()->features.size();
    const std::size_t n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size()))), 1,
        members.size() - 1);

    std::vector<double> micros(repeats), macros(repeats);
    run_parallel(repeats, clf.threads, [&](std::size_t rep) {
      Rng rep_rng = rng.split("nodeclass:" + type, rep);
      std::vector<std::size_t> order(members.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rep_rng.shuffle(order);

      Eigen::MatrixXd x(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(d));
      std::vector<int> y(n_train);
      for (std::size_t i = 0; i < n_train; ++i) {
        const auto f = members[order[i]]->features;
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
        y[i] = label_id[order[i]];
      }
      SoftmaxRegression model;
      model.fit(x, y, static_cast<int>(labels.size()), clf);
      std::vector<int> truth, predicted;
      for (std::size_t i = n_train; i < order.size(); ++i) {
        truth.push_back(label_id[order[i]]);
        predicted.push_back(model.predict(members[order[i]]->features));
      }
      const F1Scores f1 = f1_scores(truth, predicted);
      micros[rep] = f1.micro;
      macros[rep] = f1.macro;
    });
    result.micro = mean_of(micros);
    result.micro_std = stddev_of(micros);
    result.macro = mean_of(macros);
    result.macro_std = stddev_of(macros);
    report.micro += result.micro;
    report.macro += result.macro;
    ++evaluable;
    report.types.push_back(result);
  }
  if (evaluable == 0) throw Error(ErrorKind::kSingleClass, "every node type has a single label class");
  report.micro /= static_cast<double>(evaluable);
  report.macro /= static_cast<double>(evaluable);
  return report;
}

void write_hit_rate_csv(const HitRateReport& report, std::span<const std::string> type_names,
                        std::ostream& out) {
  out << "task,metric,value,std\n";
  for (const auto& t : report.tasks) {
    const std::string name = type_names[t.source] + "->" + type_names[t.target];
    out << name << ",hit@10," << t.hit_rate() << ",0\n";
    out << name << ",evaluated," << t.evaluated << ",0\n";
    out << name << ",skipped," << t.skipped << ",0\n";
  }
  out << "average,hit@10," << report.average << ",0\n";
}

void write_node_class_csv(const NodeClassReport& report, std::ostream& out) {
  out << "task,metric,value,std\n";
  for (const auto& t : report.types) {
    if (t.single_class) {
      out << t.type << ",single_class,1,0\n";
      continue;
    }
    out << t.type << ",micro_f1," << t.micro << ',' << t.micro_std << '\n';
    out << t.type << ",macro_f1," << t.macro << ',' << t.macro_std << '\n';
  }
  out << "average,micro_f1," << report.micro << ",0\n";
  out << "average,macro_f1," << report.macro << ",0\n";
}

}  // namespace bhin
