#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "intent/neuralnet.hpp"

namespace intent::nn {

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

void Vocabulary::add(std::string token) {
  if (index_.contains(token)) throw NeuralError("duplicate vocabulary token '" + token + "'");
  index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const TokenList> docs, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs) {
    for (const auto& t : d) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [t, c] : counts) {
    if (c >= min_count && t != kPadToken && t != kUnkToken) ranked.emplace_back(t, c);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [t, c] : ranked) v.add(t);
  return v;
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

std::int32_t Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int32_t> Vocabulary::encode(const TokenList& tokens, std::size_t max_len) const {
  const std::size_t n = max_len == 0 ? tokens.size() : std::min(max_len, tokens.size());
  std::vector<std::int32_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(index(tokens[i]));
  return out;
}

std::string Vocabulary::fingerprint() const {
  Fnv1a h;
  for (const auto& t : tokens_) {
    h.update(t);
    h.update(std::string_view("\0", 1));
  }
  return h.hex();
}

// ---- word2vec text files --------------------------------------------------------

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NeuralError("cannot open embeddings " + path.string());
  std::vector<std::string> words;
  std::vector<std::vector<float>> rows;
  std::optional<std::vector<float>> unk;
  std::optional<std::pair<std::size_t, std::size_t>> header;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(f);
    if (fields.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (lineno == 1 && fields.size() == 2 &&
        std::all_of(fields[0].begin(), fields[0].end(), ::isdigit) &&
        std::all_of(fields[1].begin(), fields[1].end(), ::isdigit)) {
      header = {std::stoull(fields[0]), std::stoull(fields[1])};
      continue;
    }
    if (fields.size() < 2) throw NeuralError(where + ": expected a token and its vector");
    std::vector<float> v;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      char* end = nullptr;
      const float x = std::strtof(fields[i].c_str(), &end);
      if (end == fields[i].c_str() || *end != '\0' || !std::isfinite(x)) {
        throw NeuralError(where + ": bad number '" + fields[i] + "'");
      }
      v.push_back(x);
    }
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw NeuralError(where + ": dimension " + std::to_string(v.size()) + " differs from " + std::to_string(dim));
    }
    if (fields[0] == Vocabulary::kPadToken) continue;
    if (fields[0] == Vocabulary::kUnkToken) {
      unk = std::move(v);
      continue;
    }
    words.push_back(fields[0]);
    rows.push_back(std::move(v));
  }
  if (dim == 0) throw NeuralError(path.string() + ": no vectors");
  if (header) {
    const std::size_t body = rows.size() + (unk ? 1 : 0);
    if (header->first != body || header->second != dim) {
      throw NeuralError(path.string() + ": header says " + std::to_string(header->first) + " x " +
                        std::to_string(header->second) + " but the file holds " + std::to_string(body) + " x " +
                        std::to_string(dim));
    }
  }
  EmbeddingMatrix emb;
  emb.vocab = Vocabulary::from_tokens(words);
  emb.vectors = Mat<float>::Zero(static_cast<Eigen::Index>(words.size() + 2), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      emb.vectors(static_cast<Eigen::Index>(r + 2), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  if (unk) {
    for (std::size_t c = 0; c < dim; ++c) emb.vectors(1, static_cast<Eigen::Index>(c)) = (*unk)[c];
  } else if (!rows.empty()) {
    emb.vectors.row(1) = emb.vectors.bottomRows(static_cast<Eigen::Index>(rows.size())).colwise().mean();
  }
  return emb;
}

void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw NeuralError("cannot write embeddings " + path.string());
  const auto rows = emb.vectors.rows();
  out << rows - 1 << ' ' << emb.vectors.cols() << '\n';
  char buf[32];
  for (Eigen::Index r = 1; r < rows; ++r) {
    out << emb.vocab.token(static_cast<std::size_t>(r));
    for (Eigen::Index c = 0; c < emb.vectors.cols(); ++c) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(emb.vectors(r, c)));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw NeuralError("failed writing " + path.string());
}

// ---- CBOW -----------------------------------------------------------------------

CbowResult train_cbow(std::span<const TokenList> docs, const CbowConfig& cfg) {
  if (cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0) throw NeuralError("cbow: dim, window and epochs must be positive");
  std::size_t total_tokens = 0;
  for (const auto& d : docs) total_tokens += d.size();
  if (total_tokens < 1000) {
    throw NeuralError("cbow: needs at least 1000 tokens, got " + std::to_string(total_tokens));
  }
  CbowResult result;
  auto& emb = result.embeddings;
  emb.vocab = Vocabulary::build(docs, cfg.min_count);
  const std::size_t V = emb.vocab.size();
  if (V - 2 < cfg.negatives + 1) {
    throw NeuralError("cbow: vocabulary of " + std::to_string(V - 2) + " words is smaller than negatives + 1");
  }

  std::vector<std::vector<std::int32_t>> seqs;
  std::vector<double> freq(V, 0.0);
  std::size_t train_words = 0;
  for (const auto& d : docs) {
    std::vector<std::int32_t> s;
    for (const auto& t : d) {
      const auto id = emb.vocab.index(t);
      if (id == Vocabulary::kUnk) continue;
      s.push_back(id);
      freq[static_cast<std::size_t>(id)] += 1.0;
    }
    train_words += s.size();
    seqs.push_back(std::move(s));
  }

  // Unigram^0.75 table for negative sampling.
  const std::size_t table_size = std::max<std::size_t>(1'000'000, 10 * V);
  std::vector<std::int32_t> table(table_size);
  {
    double norm = 0.0;
    for (std::size_t w = 2; w < V; ++w) norm += std::pow(freq[w], 0.75);
    std::size_t w = 2;
    double cum = std::pow(freq[w], 0.75) / norm;
    for (std::size_t i = 0; i < table_size; ++i) {
      table[i] = static_cast<std::int32_t>(w);
      if (static_cast<double>(i + 1) / static_cast<double>(table_size) > cum && w + 1 < V) {
        ++w;
        cum += std::pow(freq[w], 0.75) / norm;
      }
    }
  }

  std::mt19937_64 rng(cfg.seed);
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  Mat<float> in_vec(static_cast<Eigen::Index>(V), d);
  for (Eigen::Index i = 0; i < in_vec.size(); ++i) {
    in_vec.data()[i] = static_cast<float>((static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) / cfg.dim);
  }
  Mat<float> out_vec = Mat<float>::Zero(static_cast<Eigen::Index>(V), d);
  Eigen::RowVectorXf h(d), grad_h(d);

  const double total_steps = static_cast<double>(train_words) * static_cast<double>(cfg.epochs);
  double step = 0.0;
  const auto win = static_cast<std::ptrdiff_t>(cfg.window);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t targets = 0;
    for (const auto& s : seqs) {
      const auto n = static_cast<std::ptrdiff_t>(s.size());
      for (std::ptrdiff_t t = 0; t < n; ++t, step += 1.0) {
        const float lr = static_cast<float>(cfg.lr * std::max(1e-4, 1.0 - step / total_steps));
        h.setZero();
        std::size_t ctx = 0;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, t - win); j <= std::min(n - 1, t + win); ++j) {
          if (j == t) continue;
          h += in_vec.row(s[static_cast<std::size_t>(j)]);
          ++ctx;
        }
        if (ctx == 0) continue;
        h /= static_cast<float>(ctx);
        grad_h.setZero();
        const auto target = s[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k <= cfg.negatives; ++k) {
          std::int32_t w = target;
          float label = 1.0f;
          if (k > 0) {
            w = table[uniform_index(rng, table_size)];
            if (w == target) continue;
            label = 0.0f;
          }
          const float score = h.dot(out_vec.row(w));
          const float p = 1.0f / (1.0f + std::exp(-score));
          loss += label > 0.5f ? -std::log(std::max(p, 1e-12f)) : -std::log(std::max(1.0f - p, 1e-12f));
          const float g = (label - p) * lr;
          grad_h += g * out_vec.row(w);
          out_vec.row(w) += g * h;
        }
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, t - win); j <= std::min(n - 1, t + win); ++j) {
          if (j != t) in_vec.row(s[static_cast<std::size_t>(j)]) += grad_h;
        }
        ++targets;
      }
    }
    result.epoch_loss.push_back(targets ? loss / static_cast<double>(targets) : 0.0);
  }
  in_vec.row(0).setZero();
  if (V > 2) in_vec.row(1) = in_vec.bottomRows(static_cast<Eigen::Index>(V - 2)).colwise().mean();
  emb.vectors = std::move(in_vec);
  return result;
}

}  // namespace intent::nn
