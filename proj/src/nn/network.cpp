#include <algorithm>
#include <cmath>

#include "intent/neuralnet.hpp"

namespace intent::nn {

namespace {

template <class S>
S log1p_exp(S z) {
  return z > S(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

template <class S>
S sigmoid(S z) {
  if (z >= S(0)) return S(1) / (S(1) + std::exp(-z));
  const S e = std::exp(z);
  return e / (S(1) + e);
}

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<std::int32_t> padded(const std::vector<std::int32_t>& tokens, std::size_t n) {
  std::vector<std::int32_t> out(n, Vocabulary::kPad);
  std::copy_n(tokens.begin(), std::min(n, tokens.size()), out.begin());
  return out;
}

// Length after one conv + pool block, or 0 when the block cannot run.
std::size_t block_out(std::size_t len, std::size_t f, std::size_t pool) {
  if (len < f) return 0;
  const std::size_t conv = len - f + 1;
  return pool > 1 ? conv / pool : conv;
}

}  // namespace

// ---- configuration --------------------------------------------------------------

std::string_view architecture_name(Architecture a) {
  switch (a) {
    case Architecture::cnn: return "cnn";
    case Architecture::cnn_mfs: return "cnn_mfs";
    case Architecture::cnn_context: return "cnn_context";
    case Architecture::cnn_context_rep: return "cnn_context_rep";
    case Architecture::cnn_feature: return "cnn_feature";
    case Architecture::linear: return "linear";
  }
  return "?";
}

std::optional<Architecture> architecture_from_name(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  for (auto a : {Architecture::cnn, Architecture::cnn_mfs, Architecture::cnn_context, Architecture::cnn_context_rep,
                 Architecture::cnn_feature, Architecture::linear}) {
    if (architecture_name(a) == n) return a;
  }
  return std::nullopt;
}

NetConfig NetConfig::paper(Architecture a) {
  NetConfig c;
  c.arch = a;
  return c;
}

NetConfig NetConfig::desk(Architecture a) {
  NetConfig c = paper(a);
  c.filters = 256;
  c.max_len = 400;
  return c;
}

std::size_t NetConfig::input_length() const { return arch == Architecture::cnn_context ? 3 * max_len : max_len; }

void NetConfig::validate() const {
  if (embed_dim == 0 || max_len == 0) throw NeuralError("embedding dimension and max length must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw NeuralError("dropout must be in [0, 1)");
  if (arch == Architecture::linear) return;
  if (filters == 0 || dense == 0) throw NeuralError("filters and dense width must be positive");
  if (arch == Architecture::cnn_mfs) {
    if (mfs_sizes.empty()) throw NeuralError("cnn_mfs needs at least one filter size");
    for (auto f : mfs_sizes) {
      if (f == 0 || f > max_len) throw NeuralError("cnn_mfs filter size must be in [1, max_len]");
    }
    return;
  }
  if (filter_size == 0 || pool_size == 0 || conv_layers == 0) {
    throw NeuralError("filter size, pool size and layer count must be positive");
  }
  auto check = [&](std::size_t len, const char* what) {
    for (std::size_t k = 0; k < conv_layers; ++k) {
      len = block_out(len, filter_size, pool_size);
      if (len == 0) {
        throw NeuralError(std::string(what) + " length is too short for " + std::to_string(conv_layers) +
                          " conv layers of size " + std::to_string(filter_size) + " with pooling " +
                          std::to_string(pool_size));
      }
    }
  };
  check(input_length(), "input");
  if (arch == Architecture::cnn_context_rep && context_dense > 0 && context_filters == 0) {
    throw NeuralError("context towers need filters");
  }
}

nlohmann::json NetConfig::to_json() const {
  return {{"arch", architecture_name(arch)},
          {"embed_dim", embed_dim},
          {"filters", filters},
          {"filter_size", filter_size},
          {"pool_size", pool_size},
          {"conv_layers", conv_layers},
          {"mfs_sizes", mfs_sizes},
          {"dropout", dropout},
          {"dense", dense},
          {"max_len", max_len},
          {"context_filters", context_filters},
          {"context_dense", context_dense}};
}

NetConfig NetConfig::from_json(const nlohmann::json& j) {
  NetConfig c;
  const auto a = architecture_from_name(j.at("arch").get<std::string>());
  if (!a) throw NeuralError("unknown architecture " + j.at("arch").get<std::string>());
  c.arch = *a;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.filters = j.at("filters").get<std::size_t>();
  c.filter_size = j.at("filter_size").get<std::size_t>();
  c.pool_size = j.at("pool_size").get<std::size_t>();
  c.conv_layers = j.at("conv_layers").get<std::size_t>();
  c.mfs_sizes = j.at("mfs_sizes").get<std::vector<std::size_t>>();
  c.dropout = j.at("dropout").get<double>();
  c.dense = j.at("dense").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.context_filters = j.at("context_filters").get<std::size_t>();
  c.context_dense = j.at("context_dense").get<std::size_t>();
  return c;
}

// ---- convolution --------------------------------------------------------------

template <class S>
using Window = Eigen::Map<const Mat<S>, Eigen::Unaligned, Eigen::OuterStride<>>;

template <class S>
static Window<S> windows(const Mat<S>& X, std::size_t f) {
  const auto d = static_cast<Eigen::Index>(X.cols());
  const auto rows = X.rows() - static_cast<Eigen::Index>(f) + 1;
  return Window<S>(X.data(), rows, static_cast<Eigen::Index>(f) * d, Eigen::OuterStride<>(d));
}

template <class S>
Mat<S> conv1d_valid(const Mat<S>& X, const Mat<S>& W, const Mat<S>& b, std::size_t f) {
  if (static_cast<std::size_t>(X.rows()) < f) throw NeuralError("conv: input shorter than the filter");
  if (static_cast<std::size_t>(W.rows()) != f * static_cast<std::size_t>(X.cols()) || b.cols() != W.cols()) {
    throw NeuralError("conv: weight shape does not match input");
  }
  Mat<S> Z = windows(X, f) * W;
  Z.rowwise() += b.row(0);
  return Z;
}

template Mat<float> conv1d_valid(const Mat<float>&, const Mat<float>&, const Mat<float>&, std::size_t);
template Mat<double> conv1d_valid(const Mat<double>&, const Mat<double>&, const Mat<double>&, std::size_t);

// ---- network --------------------------------------------------------------------

template <class S>
struct Network<S>::Trace {
  struct BlockTrace {
    Mat<S> in, Z, mask;
    std::vector<Eigen::Index> arg;  // Lp x F, row of Z holding each pooled max
  };
  struct TowerTrace {
    std::vector<std::int32_t> tokens;
    std::vector<BlockTrace> blocks;
    std::vector<Eigen::Index> garg;
    Mat<S> g, dz;
  };
  std::vector<TowerTrace> towers;
  std::size_t mean_count = 0;  // linear: non-pad tokens averaged
  Mat<S> h_in, z1, mask1, out_in, logits;
};

template <class S>
Network<S>::Network(const NetConfig& cfg, std::size_t vocab_size, std::uint64_t seed)
    : cfg_(cfg), vocab_size_(vocab_size) {
  cfg_.validate();
  if (vocab_size < 2) throw NeuralError("vocabulary must hold at least the padding and unknown rows");
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg_.embed_dim;
  emb_ = add_param("embedding", vocab_size, d);
  init_uniform(emb_, 0.05, rng);
  params_[emb_].value.row(0).setZero();

  std::size_t h_in = 0;
  std::vector<std::size_t> stack(cfg_.conv_layers, cfg_.filter_size);
  switch (cfg_.arch) {
    case Architecture::cnn:
    case Architecture::cnn_context:
    case Architecture::cnn_feature:
      towers_.push_back(make_tower("cur", 0, cfg_.filters, stack, cfg_.pool_size, 0, rng));
      break;
    case Architecture::cnn_context_rep:
      towers_.push_back(make_tower("cur", 0, cfg_.filters, stack, cfg_.pool_size, 0, rng));
      if (cfg_.context_dense > 0) {
        towers_.push_back(make_tower("prev", 1, cfg_.context_filters, stack, cfg_.pool_size, cfg_.context_dense, rng));
        towers_.push_back(make_tower("next", 2, cfg_.context_filters, stack, cfg_.pool_size, cfg_.context_dense, rng));
      }
      break;
    case Architecture::cnn_mfs:
      for (auto f : cfg_.mfs_sizes) {
        towers_.push_back(make_tower("f" + std::to_string(f), 0, cfg_.filters, {f}, 1, 0, rng));
      }
      break;
    case Architecture::linear:
      h_in = d;
      break;
  }
  for (const auto& t : towers_) h_in += t.out_dim;

  std::size_t out_in = h_in;
  if (cfg_.arch != Architecture::linear) {
    w1_ = add_param("hidden.W", h_in, cfg_.dense);
    init_uniform(*w1_, std::sqrt(6.0 / static_cast<double>(h_in + cfg_.dense)), rng);
    b1_ = add_param("hidden.b", 1, cfg_.dense);
    out_in = cfg_.dense;
  }
  if (cfg_.arch == Architecture::cnn_feature) out_in += kNumFeatures;
  wo_ = add_param("output.W", out_in, kNumIntents);
  init_uniform(wo_, std::sqrt(6.0 / static_cast<double>(out_in + kNumIntents)), rng);
  bo_ = add_param("output.b", 1, kNumIntents);
}

template <class S>
std::size_t Network<S>::add_param(std::string name, std::size_t rows, std::size_t cols) {
  Param<S> p;
  p.name = std::move(name);
  p.value = Mat<S>::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  p.grad = Mat<S>::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <class S>
void Network<S>::init_uniform(std::size_t p, double limit, std::mt19937_64& rng) {
  auto& v = params_[p].value;
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = static_cast<S>((2.0 * unit_draw(rng) - 1.0) * limit);
}

template <class S>
typename Network<S>::Tower Network<S>::make_tower(const std::string& prefix, int slot, std::size_t filters,
                                                  std::vector<std::size_t> sizes, std::size_t pool,
                                                  std::size_t ctx_dense, std::mt19937_64& rng) {
  Tower t;
  t.prefix = prefix;
  t.slot = slot;
  t.filters = filters;
  std::size_t din = cfg_.embed_dim;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    Block b;
    b.f = sizes[k];
    b.pool = pool;
    const std::string base = prefix + ".conv" + std::to_string(k);
    b.W = add_param(base + ".W", b.f * din, filters);
    init_uniform(b.W, std::sqrt(6.0 / static_cast<double>(b.f * din + b.f * filters)), rng);
    b.b = add_param(base + ".b", 1, filters);
    t.blocks.push_back(b);
    din = filters;
  }
  t.out_dim = filters;
  if (ctx_dense > 0) {
    t.dW = add_param(prefix + ".dense.W", filters, ctx_dense);
    init_uniform(*t.dW, std::sqrt(6.0 / static_cast<double>(filters + ctx_dense)), rng);
    t.db = add_param(prefix + ".dense.b", 1, ctx_dense);
    t.out_dim = ctx_dense;
  }
  return t;
}

template <class S>
Param<S>& Network<S>::param(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw NeuralError("no parameter named " + std::string(name));
}

template <class S>
std::size_t Network<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

template <class S>
void Network<S>::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

template <class S>
void Network<S>::zero_params() {
  for (auto& p : params_) p.value.setZero();
}

template <class S>
void Network<S>::set_embeddings(const Mat<float>& vectors) {
  auto& E = params_[emb_].value;
  if (vectors.rows() != E.rows() || vectors.cols() != E.cols()) {
    throw NeuralError("embedding matrix is " + std::to_string(vectors.rows()) + "x" +
                      std::to_string(vectors.cols()) + ", network expects " + std::to_string(E.rows()) + "x" +
                      std::to_string(E.cols()));
  }
  E = vectors.template cast<S>();
  E.row(0).setZero();
}

template <class S>
template <class T>
std::size_t Network<S>::copy_params_from(const Network<T>& other) {
  std::size_t copied = 0;
  for (auto& p : params_) {
    for (const auto& q : other.params()) {
      if (q.name == p.name && q.value.rows() == p.value.rows() && q.value.cols() == p.value.cols()) {
        p.value = q.value.template cast<S>();
        ++copied;
        break;
      }
    }
  }
  return copied;
}

template std::size_t Network<float>::copy_params_from(const Network<float>&);
template std::size_t Network<float>::copy_params_from(const Network<double>&);
template std::size_t Network<double>::copy_params_from(const Network<float>&);
template std::size_t Network<double>::copy_params_from(const Network<double>&);

template <class S>
std::vector<std::int32_t> Network<S>::tower_tokens(const Tower& t, const NetInput& x) const {
  const std::size_t n = cfg_.max_len;
  if (t.slot == 1) return padded(x.prev, n);
  if (t.slot == 2) return padded(x.next, n);
  if (cfg_.arch == Architecture::cnn_context) {
    std::vector<std::int32_t> joined;
    for (const auto* part : {&x.prev, &x.cur, &x.next}) {
      joined.insert(joined.end(), part->begin(), part->begin() + static_cast<std::ptrdiff_t>(std::min(n, part->size())));
    }
    return padded(joined, 3 * n);
  }
  return padded(x.cur, n);
}

template <class S>
void Network<S>::run(const NetInput& x, Trace& tr, std::mt19937_64* rng) const {
  const auto& E = params_[emb_].value;
  const auto d = static_cast<Eigen::Index>(cfg_.embed_dim);
  const double keep = 1.0 - cfg_.dropout;
  const bool drop = rng != nullptr && cfg_.dropout > 0.0;

  auto gather = [&](const std::vector<std::int32_t>& tokens) {
    Mat<S> X(static_cast<Eigen::Index>(tokens.size()), d);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t] < 0 || static_cast<std::size_t>(tokens[t]) >= vocab_size_) {
        throw NeuralError("token index " + std::to_string(tokens[t]) + " outside the vocabulary");
      }
      X.row(static_cast<Eigen::Index>(t)) = E.row(tokens[t]);
    }
    return X;
  };
  auto dropout_mask = [&](Eigen::Index rows, Eigen::Index cols) {
    Mat<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = unit_draw(*rng) < keep ? static_cast<S>(1.0 / keep) : S(0);
    }
    return m;
  };

  if (cfg_.arch == Architecture::linear) {
    const auto tokens = padded(x.cur, cfg_.max_len);
    tr.h_in = Mat<S>::Zero(1, d);
    tr.mean_count = 0;
    for (auto tok : tokens) {
      if (tok == Vocabulary::kPad) continue;
      if (tok < 0 || static_cast<std::size_t>(tok) >= vocab_size_) throw NeuralError("token index outside the vocabulary");
      tr.h_in += E.row(tok);
      ++tr.mean_count;
    }
    if (tr.mean_count > 0) tr.h_in /= static_cast<S>(tr.mean_count);
  } else {
    tr.towers.resize(towers_.size());
    std::vector<Mat<S>> outs;
    Eigen::Index width = 0;
    for (std::size_t ti = 0; ti < towers_.size(); ++ti) {
      const auto& tower = towers_[ti];
      auto& tt = tr.towers[ti];
      tt.tokens = tower_tokens(tower, x);
      Mat<S> X = gather(tt.tokens);
      tt.blocks.resize(tower.blocks.size());
      for (std::size_t k = 0; k < tower.blocks.size(); ++k) {
        const auto& blk = tower.blocks[k];
        auto& bt = tt.blocks[k];
        bt.Z = conv1d_valid(X, params_[blk.W].value, params_[blk.b].value, blk.f);
        bt.in = std::move(X);
        const Eigen::Index F = bt.Z.cols();
        const auto pool = static_cast<Eigen::Index>(blk.pool);
        const Eigen::Index lp = pool > 1 ? bt.Z.rows() / pool : bt.Z.rows();
        if (lp == 0) throw NeuralError("sequence too short for the pooling stack");
        Mat<S> P(lp, F);
        bt.arg.assign(static_cast<std::size_t>(lp * F), 0);
        for (Eigen::Index r = 0; r < lp; ++r) {
          for (Eigen::Index c = 0; c < F; ++c) {
            Eigen::Index best = r * pool;
            for (Eigen::Index j = 1; j < pool; ++j) {
              if (bt.Z(r * pool + j, c) > bt.Z(best, c)) best = r * pool + j;
            }
            bt.arg[static_cast<std::size_t>(r * F + c)] = best;
            P(r, c) = std::max(bt.Z(best, c), S(0));
          }
        }
        if (drop) {
          bt.mask = dropout_mask(lp, F);
          P = P.cwiseProduct(bt.mask);
        } else {
          bt.mask.resize(0, 0);
        }
        X = std::move(P);
      }
      tt.g.resize(1, X.cols());
      tt.garg.assign(static_cast<std::size_t>(X.cols()), 0);
      for (Eigen::Index c = 0; c < X.cols(); ++c) {
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < X.rows(); ++r) {
          if (X(r, c) > X(best, c)) best = r;
        }
        tt.garg[static_cast<std::size_t>(c)] = best;
        tt.g(0, c) = X(best, c);
      }
      if (tower.dW) {
        tt.dz = tt.g * params_[*tower.dW].value + params_[*tower.db].value;
        outs.push_back(tt.dz.cwiseMax(S(0)));
      } else {
        outs.push_back(tt.g);
      }
      width += outs.back().cols();
    }
    tr.h_in.resize(1, width);
    Eigen::Index off = 0;
    for (const auto& o : outs) {
      tr.h_in.block(0, off, 1, o.cols()) = o;
      off += o.cols();
    }
  }

  Mat<S> h;
  if (w1_) {
    tr.z1 = tr.h_in * params_[*w1_].value + params_[*b1_].value;
    h = tr.z1.cwiseMax(S(0));
    if (drop) {
      tr.mask1 = dropout_mask(1, h.cols());
      h = h.cwiseProduct(tr.mask1);
    } else {
      tr.mask1.resize(0, 0);
    }
  } else {
    h = tr.h_in;
  }
  if (cfg_.arch == Architecture::cnn_feature) {
    if (x.features.size() != kNumFeatures) {
      throw NeuralError("cnn_feature expects " + std::to_string(kNumFeatures) + " features, got " +
                        std::to_string(x.features.size()));
    }
    tr.out_in.resize(1, h.cols() + static_cast<Eigen::Index>(kNumFeatures));
    tr.out_in.block(0, 0, 1, h.cols()) = h;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      tr.out_in(0, h.cols() + static_cast<Eigen::Index>(i)) = static_cast<S>(x.features[i]);
    }
  } else {
    tr.out_in = std::move(h);
  }
  tr.logits = tr.out_in * params_[wo_].value + params_[bo_].value;
}

template <class S>
void Network<S>::backward(const NetInput& x, Trace& tr, const Mat<S>& dlogits) {
  (void)x;
  params_[wo_].grad.noalias() += tr.out_in.transpose() * dlogits;
  params_[bo_].grad += dlogits;
  Mat<S> dout_in = dlogits * params_[wo_].value.transpose();

  Mat<S> dh_in;
  if (w1_) {
    Mat<S> dh = dout_in.block(0, 0, 1, static_cast<Eigen::Index>(cfg_.dense));
    if (tr.mask1.size() > 0) dh = dh.cwiseProduct(tr.mask1);
    for (Eigen::Index c = 0; c < dh.cols(); ++c) {
      if (!(tr.z1(0, c) > S(0))) dh(0, c) = S(0);
    }
    params_[*w1_].grad.noalias() += tr.h_in.transpose() * dh;
    params_[*b1_].grad += dh;
    dh_in = dh * params_[*w1_].value.transpose();
  } else {
    dh_in = dout_in.block(0, 0, 1, tr.h_in.cols());
  }

  auto& dE = params_[emb_].grad;
  if (cfg_.arch == Architecture::linear) {
    if (!embedding_trainable || tr.mean_count == 0) return;
    const Mat<S> share = dh_in / static_cast<S>(tr.mean_count);
    for (auto tok : padded(x.cur, cfg_.max_len)) {
      if (tok != Vocabulary::kPad) dE.row(tok) += share;
    }
    return;
  }

  Eigen::Index off = 0;
  for (std::size_t ti = 0; ti < towers_.size(); ++ti) {
    const auto& tower = towers_[ti];
    auto& tt = tr.towers[ti];
    Mat<S> dg = dh_in.block(0, off, 1, static_cast<Eigen::Index>(tower.out_dim));
    off += static_cast<Eigen::Index>(tower.out_dim);
    if (tower.dW) {
      for (Eigen::Index c = 0; c < dg.cols(); ++c) {
        if (!(tt.dz(0, c) > S(0))) dg(0, c) = S(0);
      }
      params_[*tower.dW].grad.noalias() += tt.g.transpose() * dg;
      params_[*tower.db].grad += dg;
      dg = dg * params_[*tower.dW].value.transpose();
    }
    const auto& last = tt.blocks.back();
    const Eigen::Index F = last.Z.cols();
    const Eigen::Index lp_last = static_cast<Eigen::Index>(last.arg.size()) / F;
    Mat<S> dX = Mat<S>::Zero(lp_last, F);
    for (Eigen::Index c = 0; c < F; ++c) dX(tt.garg[static_cast<std::size_t>(c)], c) = dg(0, c);

    for (std::size_t k = tower.blocks.size(); k-- > 0;) {
      const auto& blk = tower.blocks[k];
      auto& bt = tt.blocks[k];
      if (bt.mask.size() > 0) dX = dX.cwiseProduct(bt.mask);
      Mat<S> dZ = Mat<S>::Zero(bt.Z.rows(), bt.Z.cols());
      for (Eigen::Index r = 0; r < dX.rows(); ++r) {
        for (Eigen::Index c = 0; c < F; ++c) {
          const Eigen::Index src = bt.arg[static_cast<std::size_t>(r * F + c)];
          if (bt.Z(src, c) > S(0)) dZ(src, c) += dX(r, c);
        }
      }
      const auto win = windows(bt.in, blk.f);
      params_[blk.W].grad.noalias() += win.transpose() * dZ;
      params_[blk.b].grad += dZ.colwise().sum();
      if (k == 0 && !embedding_trainable) break;
      const Mat<S> dwin = dZ * params_[blk.W].value.transpose();
      Mat<S> din = Mat<S>::Zero(bt.in.rows(), bt.in.cols());
      const Eigen::Index span = dwin.cols();
      for (Eigen::Index i = 0; i < dwin.rows(); ++i) {
        Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(din.data() + i * bt.in.cols(), span) += dwin.row(i);
      }
      dX = std::move(din);
    }
    if (!embedding_trainable) continue;
    for (std::size_t t = 0; t < tt.tokens.size(); ++t) {
      if (tt.tokens[t] != Vocabulary::kPad) dE.row(tt.tokens[t]) += dX.row(static_cast<Eigen::Index>(t));
    }
  }
}

template <class S>
std::array<S, kNumIntents> Network<S>::forward(const NetInput& x) const {
  Trace tr;
  run(x, tr, nullptr);
  std::array<S, kNumIntents> out{};
  for (std::size_t l = 0; l < kNumIntents; ++l) out[l] = sigmoid(tr.logits(0, static_cast<Eigen::Index>(l)));
  return out;
}

template <class S>
S Network<S>::loss(const NetInput& x, const BinaryLabels& y) const {
  Trace tr;
  run(x, tr, nullptr);
  S total = 0;
  for (std::size_t l = 0; l < kNumIntents; ++l) {
    const S z = tr.logits(0, static_cast<Eigen::Index>(l));
    total += log1p_exp(z) - z * static_cast<S>(y[l]);
  }
  return total;
}

template <class S>
S Network<S>::accumulate(const NetInput& x, const BinaryLabels& y, std::mt19937_64* dropout_rng, S weight) {
  Trace tr;
  run(x, tr, dropout_rng);
  S total = 0;
  Mat<S> dlogits(1, static_cast<Eigen::Index>(kNumIntents));
  for (std::size_t l = 0; l < kNumIntents; ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    const S z = tr.logits(0, li);
    const S yl = static_cast<S>(y[l]);
    total += log1p_exp(z) - z * yl;
    dlogits(0, li) = weight * (sigmoid(z) - yl);
  }
  backward(x, tr, dlogits);
  params_[emb_].grad.row(0).setZero();
  return total;
}

template class Network<float>;
template class Network<double>;

// ---- Adam -----------------------------------------------------------------------

template <class S>
void Adam<S>::step(std::vector<Param<S>>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Mat<S>::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Mat<S>::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (m_.size() != params.size()) throw NeuralError("adam: parameter list changed between steps");
  ++t_;
  const S b1 = static_cast<S>(cfg_.beta1);
  const S b2 = static_cast<S>(cfg_.beta2);
  const S eps = static_cast<S>(cfg_.eps);
  S c1 = 1;
  S c2 = 1;
  if (cfg_.bias_correction) {
    c1 = static_cast<S>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    c2 = static_cast<S>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  }
  const S lr = static_cast<S>(cfg_.lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = m_[i];
    auto& v = v_[i];
    const auto& g = params[i].grad;
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
    params[i].value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace intent::nn
