#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhin/hetgraph.hpp"
#include "bhin/rng.hpp"
#include "bhin/skipgram.hpp"

namespace bhin {

struct TestEdge {
  NodeId u;
  NodeId v;
};

/// Held-out edges plus the graph that remains for training. Node ids, names
/// and types of train_graph are identical to the source graph.
struct EdgeSplit {
  HetGraph train_graph;
  std::vector<TestEdge> test_edges;
  double fraction = 0.0;
};

/// Removes round(fraction * n_rel) edges from every relation (unordered type
/// pair) without ever isolating a node; edges whose removal would isolate an
/// endpoint are passed over. Throws InfeasibleSplit when a relation runs out
/// of removable edges.
EdgeSplit split_edges(const HetGraph& g, double fraction, Rng& rng);

/// Elementwise product; ShapeMismatch on unequal sizes.
std::vector<double> edge_embedding(std::span<const double> fu, std::span<const double> fv);

struct ClassifierOptions {
  std::size_t iterations = 500;
  double l2 = 1e-4;
  std::size_t threads = 1;  // independent models fitted concurrently
};

/// Binary logistic regression trained by full-batch gradient descent on the
/// L2-regularized mean log-loss. Features are standardized internally and the
/// step size is 1/L from a power-iteration estimate of the smoothness constant.
class LogisticRegression {
 public:
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ClassifierOptions& opts = {});
  /// Raw-feature linear score w.x + b.
  double decision(std::span<const double> x) const;
  const Eigen::VectorXd& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

/// Multinomial (softmax) logistic regression, same training scheme.
class SoftmaxRegression {
 public:
  void fit(const Eigen::MatrixXd& x, std::span<const int> labels, int classes,
           const ClassifierOptions& opts = {});
  int predict(std::span<const double> x) const;

 private:
  Eigen::MatrixXd w_;  // d x C
  Eigen::VectorXd b_;
};

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

/// Micro F1 (= accuracy for single-label problems) and macro F1 averaged over
/// every class that occurs in the truth or the predictions.
F1Scores f1_scores(std::span<const int> truth, std::span<const int> predicted);

struct TaskHitRate {
  TypeId source;
  TypeId target;
  std::size_t hits = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // too few admissible candidates
  double hit_rate() const { return evaluated ? static_cast<double>(hits) / static_cast<double>(evaluated) : 0.0; }
};

struct HitRateReport {
  std::vector<TaskHitRate> tasks;  // one per ordered (source type, target type)
  double average = 0.0;            // unweighted mean over tasks with evaluated edges
};

struct RankingOptions {
  std::size_t candidates = 99;
  std::size_t top = 10;
};

/// Scores a (source, candidate target) pair; higher ranks first.
using PairScorer = std::function<double(NodeId source, NodeId target)>;

/// Ranking protocol shared by every scorer: each test edge is evaluated in
/// both directions (once for same-type relations); for source s and true
/// target t, `candidates` distinct nodes of t's type that are not s and not
/// adjacent to s in g_full are sampled; a hit is t ranking within `top` of the
/// candidates plus itself. Ties go to the lower node id.
HitRateReport rank_test_edges(const EdgeSplit& split, const HetGraph& g_full,
                              const std::function<PairScorer(TypeId source, TypeId target)>& scorer_for,
                              Rng& rng, const RankingOptions& opts = {});

/// Full recommendation protocol: per relation, a logistic classifier on
/// Hadamard edge features learns train edges against an equal number of
/// uniformly sampled same-typed non-edges, then ranks held-out edges.
HitRateReport link_prediction_hit10(const EmbeddingStore& store, const EdgeSplit& split,
                                    const HetGraph& g_full, Rng& rng,
                                    const RankingOptions& ranking = {},
                                    const ClassifierOptions& clf = {});

struct LabeledNode {
  std::span<const double> features;
  std::string type;
  std::string label;
};

struct TypeF1 {
  std::string type;
  bool single_class = false;
  double micro = 0.0, micro_std = 0.0;
  double macro = 0.0, macro_std = 0.0;
};

struct NodeClassReport {
  std::vector<TypeF1> types;
  double micro = 0.0;  // mean over evaluable types
  double macro = 0.0;
};

/// Per node type: repeated seeded train/test splits of the labeled nodes, one
/// softmax classifier per repetition, micro/macro F1 on the held-out part.
/// Types whose labels hold a single class are flagged and skipped; SingleClass
/// is thrown when no type is evaluable.
NodeClassReport node_classification_f1(std::span<const LabeledNode> nodes, double train_fraction,
                                       std::size_t repeats, Rng& rng, const ClassifierOptions& clf = {});

/// CSV with columns task,metric,value,std.
void write_hit_rate_csv(const HitRateReport& report, std::span<const std::string> type_names,
                        std::ostream& out);
void write_node_class_csv(const NodeClassReport& report, std::ostream& out);

}  // namespace bhin
