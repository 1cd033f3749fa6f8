#include "bhin/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "bhin/error.hpp"

namespace bhin {

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill,
                  bool binary) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    fill(out);
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_float(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<float>(value));
  return std::string(buf, ptr);
}

void write_embeddings_text(const EmbeddingStore& store, const HetGraph& g, std::ostream& out) {
  out << store.node_count() << ' ' << store.dim() << '\n';
  std::string line;
  for (NodeId v = 0; v < store.node_count(); ++v) {
    line = g.node_name(v);
    for (double x : store.node(v)) {
      line += ' ';
      line += format_float(x);
    }
    line += '\n';
    out << line;
  }
}

void write_embeddings_binary(const EmbeddingStore& store, const HetGraph& g,
                             const std::filesystem::path& data, const std::filesystem::path& index) {
  atomic_write(data, [&](std::ostream& out) {
    std::vector<float> row(store.dim());
    for (NodeId v = 0; v < store.node_count(); ++v) {
      const auto src = store.node(v);
      std::transform(src.begin(), src.end(), row.begin(), [](double x) { return static_cast<float>(x); });
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  }, true);
  atomic_write(index, [&](std::ostream& out) {
    out << store.node_count() << ' ' << store.dim() << '\n';
    for (NodeId v = 0; v < store.node_count(); ++v) out << g.node_name(v) << '\n';
  });
}

EmbeddingTable read_embeddings_text(std::istream& in) {
  EmbeddingTable table;
  std::size_t count = 0;
  if (!(in >> count >> table.dim)) throw Error(ErrorKind::kMalformedRecord, "embedding header missing");
  table.names.reserve(count);
  table.values.reserve(count * table.dim);
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    if (!(in >> name)) throw Error(ErrorKind::kMalformedRecord, "embedding file ends after " + std::to_string(i) + " rows");
    table.names.push_back(std::move(name));
    for (std::size_t j = 0; j < table.dim; ++j) {
      double x;
      if (!(in >> x)) throw Error(ErrorKind::kMalformedRecord, "embedding row " + std::to_string(i + 1) + " is short");
      table.values.push_back(x);
    }
  }
  return table;
}

EmbeddingTable read_embeddings_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open embeddings " + path.string());
  return read_embeddings_text(in);
}

std::vector<std::pair<std::string, std::string>> read_two_columns(std::istream& in, std::string_view what) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a) || a[0] == '#') continue;
    if (!(fields >> b) || (fields >> extra)) {
      throw Error(ErrorKind::kMalformedRecord, std::string(what) + " line " + std::to_string(line_no) +
                                                   ": expected two fields");
    }
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_two_columns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read_two_columns(in, path.string());
}

void write_history_csv(std::span<const HistoryRecord> history, std::span<const std::string> type_names,
                       std::ostream& out) {
  out << "epoch,step,source_type,target_type,probability\n";
  char buf[32];
  for (const auto& h : history) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, h.probability);
    out << h.epoch << ',' << h.step << ',' << type_names[h.source] << ',' << type_names[h.target] << ','
        << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n';
  }
}

std::vector<NamedHistoryRecord> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingHistory, "no P-history at " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,step,source_type,target_type,probability", 0) != 0) {
    throw Error(ErrorKind::kMissingHistory, path.string() + " is not a P-history CSV");
  }
  std::vector<NamedHistoryRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw Error(ErrorKind::kMalformedRecord, "history line " + std::to_string(line_no));
    try {
      out.push_back({std::stoul(f[0]), std::stoul(f[1]), f[2], f[3], std::stod(f[4])});
    } catch (const std::exception&) {
      throw Error(ErrorKind::kMalformedRecord, "history line " + std::to_string(line_no));
    }
  }
  return out;
}

void write_transition_series(std::span<const NamedHistoryRecord> history,
                             const std::string* source_filter, std::ostream& out) {
  // Series keep first-appearance order of (source, target) so output follows the
  // type order the trainer logged.
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const NamedHistoryRecord*>> series;
  for (const auto& h : history) {
    if (source_filter && h.source != *source_filter) continue;
    auto key = std::pair{h.source, h.target};
    auto [it, inserted] = series.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(&h);
  }
  out << "source_type,target_type,epoch,step,probability\n";
  char buf[32];
  for (const auto& key : keys) {
    for (const auto* h : series[key]) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, h->probability);
      out << key.first << ',' << key.second << ',' << h->epoch << ',' << h->step << ','
          << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n';
    }
  }
}

void write_matrix_csv(const Matrix& m, std::span<const std::string> type_names, std::ostream& out) {
  out << "type";
  for (const auto& name : type_names) out << ',' << name;
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << type_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace bhin
