#include "bhin/trainer.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bhin/error.hpp"

namespace bhin {

std::string_view to_string(WalkMode mode) {
  return mode == WalkMode::kBhin2vec ? "bhin2vec" : "neighbor_uniform";
}

WalkMode parse_walk_mode(std::string_view text) {
  if (text == "bhin2vec") return WalkMode::kBhin2vec;
  if (text == "neighbor_uniform") return WalkMode::kNeighborUniform;
  throw Error(ErrorKind::kInvalidArgument, "unknown walk mode '" + std::string(text) + "'");
}

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "bad value '" + std::string(text) + "' for '" + std::string(key) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorKind::kInvalidArgument, "bad boolean '" + std::string(text) + "' for '" + std::string(key) + "'");
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidArgument, msg); };
  if (k < 1) fail("k must be >= 1");
  if (l <= k) fail("walk length l must exceed k");
  if (m < 1) fail("m must be >= 1");
  if (d < 1) fail("d must be >= 1");
  if (e < 1) fail("e must be >= 1");
  if (batch_walks < 1) fail("batch_walks must be >= 1");
  if (!(r > 0.0)) fail("r must be > 0");
  if (!(r2 > 0.0)) fail("r2 must be > 0");
  if (!(alpha >= 0.0)) fail("alpha must be >= 0");
  if (negative_power != 1.0 && negative_power != 0.75) fail("negative_power must be 1.0 or 0.75");
  if (!(ratio_ema >= 0.0 && ratio_ema < 1.0)) fail("ratio_ema must be in [0, 1)");
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "l") l = parse_number<std::size_t>(key, value);
  else if (key == "e") e = parse_number<std::size_t>(key, value);
  else if (key == "k") k = parse_number<std::size_t>(key, value);
  else if (key == "m") m = parse_number<std::size_t>(key, value);
  else if (key == "d") d = parse_number<std::size_t>(key, value);
  else if (key == "r") r = parse_number<double>(key, value);
  else if (key == "r2") r2 = parse_number<double>(key, value);
  else if (key == "alpha") alpha = parse_number<double>(key, value);
  else if (key == "batch_walks") batch_walks = parse_number<std::size_t>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "walk_mode") walk_mode = parse_walk_mode(value);
  else if (key == "negative_power") negative_power = parse_number<double>(key, value);
  else if (key == "history_every") history_every = parse_number<std::size_t>(key, value);
  else if (key == "lr_decay") lr_decay = parse_bool(key, value);
  else if (key == "ratio_ema") ratio_ema = parse_number<double>(key, value);
  else throw Error(ErrorKind::kInvalidArgument, "unknown config key '" + std::string(key) + "'");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "l = " << l << '\n'
      << "e = " << e << '\n'
      << "k = " << k << '\n'
      << "m = " << m << '\n'
      << "d = " << d << '\n'
      << "r = " << format_double(r) << '\n'
      << "r2 = " << format_double(r2) << '\n'
      << "alpha = " << format_double(alpha) << '\n'
      << "batch_walks = " << batch_walks << '\n'
      << "seed = " << seed << '\n'
      << "walk_mode = " << to_string(walk_mode) << '\n'
      << "negative_power = " << format_double(negative_power) << '\n'
      << "history_every = " << history_every << '\n'
      << "lr_decay = " << (lr_decay ? "true" : "false") << '\n'
      << "ratio_ema = " << format_double(ratio_ema) << '\n';
  return out.str();
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kMalformedRecord, "config line " + std::to_string(line_no) + " lacks '='");
    }
    base.set(trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  return parse_config(in, base);
}

namespace {

void log_matrix(std::vector<HistoryRecord>& history, const StochasticMatrix& p, std::size_t epoch,
                std::size_t step) {
  for (TypeId x = 0; x < p.type_count(); ++x)
    for (TypeId y = 0; y < p.type_count(); ++y)
      if (p.support().adjacent(x, y)) history.push_back({epoch, step, x, y, p(x, y)});
}

}  // namespace

TrainResult train(const HetGraph& g, const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  const std::size_t n = g.node_count();
  const MetaNetwork meta = build_meta_network(g);
  const TaskSet possible = possible_tasks(meta, cfg.k);
  const bool biased = cfg.walk_mode == WalkMode::kBhin2vec;

  const Rng root(cfg.seed);
  Rng init_rng = root.split("init");
  Rng walk_rng = root.split("walks");
  Rng neg_rng = root.split("negatives");

  TrainResult result{EmbeddingStore::initialized(n, g.type_count(), cfg.k, cfg.d, init_rng),
                     std::nullopt, {}, TaskLossTracker(possible), {}};
  std::optional<StochasticMatrix> uniform;
  if (biased) {
    result.p = init_stochastic_matrix(meta);
    uniform = uniform_stochastic_matrix(meta);
    log_matrix(result.history, *result.p, 0, 0);
  }
  const PerturbationConfig pcfg{cfg.alpha, cfg.r2, cfg.k};

  const NegativeSampler sampler(g, cfg.negative_power);
  Gradients scratch(n, result.store.task_shape().size(), cfg.d);
  PairBatch batch;
  batch.negatives_per_pair = cfg.m;
  Walk walk;
  std::optional<TaskTensor> smoothed;

  const std::size_t total_walks = cfg.e * n;
  std::size_t step = 0;
  std::size_t last_logged = 0;
  for (std::size_t epoch = 0; epoch < cfg.e; ++epoch) {
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    Rng order_rng = root.split("order", epoch);
    order_rng.shuffle(order);

    std::size_t positives = 0;
    double loss_sum = 0.0;
    std::size_t scored = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_walks) {
      const std::size_t end = std::min(n, begin + cfg.batch_walks);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) {
        if (biased) {
          sample_walk(g, *result.p, order[i], cfg.l, walk_rng, walk);
        } else {
          sample_walk_neighbor_uniform(g, order[i], cfg.l, walk_rng, walk);
        }
        append_walk(batch, walk, cfg.k, sampler, g.node_types(), neg_rng);
      }

      double lr = cfg.r;
      if (cfg.lr_decay) {
        const double progress = static_cast<double>(step) / static_cast<double>(total_walks);
        lr = cfg.r * std::max(1e-4, 1.0 - progress);
      }

      const auto context = [&] {
        return " (epoch " + std::to_string(epoch + 1) + ", walk " + std::to_string(step + 1) + ")";
      };
      BatchResult res;
      try {
        res = batch_loss_and_update(batch, result.store, g.node_types(), lr, result.tracker, scratch);
      } catch (const Error& err) {
        throw Error(err, context());
      }
      positives += res.positives;
      loss_sum += res.loss;
      scored += res.positives + res.negatives;
      step += end - begin;

      const TaskTensor losses = result.tracker.per_task_losses();
      std::optional<TaskTensor> ratio;
      if (biased) {
        try {
          ratio = inverse_training_ratio(losses, result.tracker.initial_loss(), possible);
        } catch (const Error& err) {
          throw Error(err, context());
        }
        if (cfg.ratio_ema > 0.0) {
          if (smoothed) {
            for (std::size_t i = 0; i < ratio->values.size(); ++i) {
              smoothed->values[i] = cfg.ratio_ema * smoothed->values[i] + (1.0 - cfg.ratio_ema) * ratio->values[i];
            }
          } else {
            smoothed = ratio;
          }
          ratio = smoothed;
        }
        const Matrix grad = stochastic_loss_gradient(result.p->values(), *uniform, *ratio, pcfg);
        result.p = apply_stochastic_update(*result.p, grad, pcfg);
        ++result.stats.p_updates;
        if (cfg.history_every > 0 && step / cfg.history_every != last_logged / cfg.history_every) {
          log_matrix(result.history, *result.p, epoch + 1, step);
          last_logged = step;
        }
      }
      if (options.on_step) {
        options.on_step(StepInfo{epoch, step, res, losses, ratio ? &*ratio : nullptr,
                                 biased ? &*result.p : nullptr});
      }
    }
    if (biased && last_logged != step) {
      log_matrix(result.history, *result.p, epoch + 1, step);
      last_logged = step;
    }
    result.stats.positives_per_epoch.push_back(positives);
    result.stats.mean_loss_per_epoch.push_back(scored ? loss_sum / static_cast<double>(scored) : 0.0);
  }
  result.stats.walks = step;
  return result;
}

namespace {

constexpr char kMagic[8] = {'B', 'H', 'I', 'N', '2', 'V', 'E', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian hosts");

class Writer {
 public:
  template <typename T>
  void put(const T& value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  template <typename T>
  void put_vector(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    put_bytes(v.data(), v.size() * sizeof(T));
  }
  std::vector<char>& bytes() { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  template <typename T>
  std::vector<T> get_vector(std::size_t expected) {
    const auto count = get<std::uint64_t>();
    if (count != expected) throw Error(ErrorKind::kCorruptCheckpoint, "table size mismatch");
    std::vector<T> v(count);
    std::memcpy(v.data(), take(count * sizeof(T)), count * sizeof(T));
    return v;
  }
  std::string get_string() {
    const auto len = get<std::uint64_t>();
    return std::string(take(len), len);
  }
  bool done() const { return pos_ == size_; }

 private:
  const char* take(std::size_t n) {
    if (n > size_ - pos_) throw Error(ErrorKind::kCorruptCheckpoint, "checkpoint is truncated");
    const char* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint64_t hash_bytes(const char* data, std::size_t size) {
  return fnv1a64(std::string_view(data, size));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const EmbeddingStore& store, const StochasticMatrix& p,
                     const TaskLossTracker& tracker) {
  const TaskShape& shape = store.task_shape();
  if (p.type_count() != shape.types || tracker.shape().size() != shape.size()) {
    throw Error(ErrorKind::kShapeMismatch, "checkpoint parts disagree on shape");
  }
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put(kCheckpointVersion);
  const std::string config_text = cfg.to_text();
  w.put<std::uint64_t>(config_text.size());
  w.put_bytes(config_text.data(), config_text.size());
  w.put<std::uint64_t>(store.node_count());
  w.put<std::uint64_t>(shape.types);
  w.put<std::uint64_t>(shape.hops);
  w.put<std::uint64_t>(store.dim());
  w.put_vector(store.node_table());
  w.put_vector(store.task_table());
  std::vector<double> pv(shape.types * shape.types);
  std::vector<char> support(shape.types * shape.types);
  for (TypeId x = 0; x < shape.types; ++x)
    for (TypeId y = 0; y < shape.types; ++y) {
      pv[x * shape.types + y] = p(x, y);
      support[x * shape.types + y] = p.support().adjacent(x, y);
    }
  w.put_vector(pv);
  w.put_vector(support);
  w.put_vector(std::vector<double>(tracker.last_loss().begin(), tracker.last_loss().end()));
  w.put_vector(std::vector<double>(tracker.initial_loss().begin(), tracker.initial_loss().end()));
  const std::uint64_t hash = hash_bytes(w.bytes().data(), w.bytes().size());
  w.put(hash);

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write checkpoint " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<CheckpointShape> expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kMinSize = sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < kMinSize || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::kCorruptCheckpoint, path.string() + " is not a checkpoint");
  }
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof kMagic, sizeof version);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kVersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                 ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored_hash;
  std::memcpy(&stored_hash, bytes.data() + body, sizeof stored_hash);
  if (hash_bytes(bytes.data(), body) != stored_hash) {
    throw Error(ErrorKind::kCorruptCheckpoint, "integrity hash mismatch in " + path.string());
  }

  Reader r(bytes.data(), body);
  r.get<std::array<char, sizeof kMagic>>();
  r.get<std::uint32_t>();
  std::istringstream config_text(r.get_string());
  Checkpoint cp;
  cp.config = parse_config(config_text);
  const auto nodes = r.get<std::uint64_t>();
  const auto types = r.get<std::uint64_t>();
  const auto hops = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint64_t>();
  if (expect && (expect->nodes != nodes || expect->types != types || expect->hops != hops || expect->dim != dim)) {
    throw Error(ErrorKind::kVersionMismatch,
                "checkpoint shape (nodes " + std::to_string(nodes) + ", types " + std::to_string(types) +
                    ", k " + std::to_string(hops) + ", d " + std::to_string(dim) + ") differs from expected");
  }
  cp.store = EmbeddingStore(nodes, types, hops, dim);
  const std::size_t tasks = cp.store.task_shape().size();
  cp.store.node_table() = r.get_vector<double>(nodes * dim);
  cp.store.task_table() = r.get_vector<double>(tasks * dim);
  const auto pv = r.get_vector<double>(types * types);
  const auto support = r.get_vector<char>(types * types);
  MetaNetwork meta(types);
  Matrix p(static_cast<Eigen::Index>(types), static_cast<Eigen::Index>(types));
  for (std::size_t x = 0; x < types; ++x)
    for (std::size_t y = 0; y < types; ++y) {
      p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = pv[x * types + y];
      if (support[x * types + y]) meta.connect(static_cast<TypeId>(x), static_cast<TypeId>(y));
    }
  try {
    cp.p = StochasticMatrix(std::move(p), std::move(meta));
  } catch (const Error& err) {
    throw Error(ErrorKind::kCorruptCheckpoint, err.what());
  }
  cp.last_loss = r.get_vector<double>(tasks);
  cp.initial_loss = r.get_vector<double>(tasks);
  if (!r.done()) throw Error(ErrorKind::kCorruptCheckpoint, "trailing bytes in checkpoint");
  return cp;
}

}  // namespace bhin
