#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "intent/neuralnet.hpp"

using namespace intent;
using namespace intent::nn;
using C = IntentCode;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "intent_unit_nn";
  std::filesystem::create_directories(dir);
  return dir / name;
}

NetConfig tiny(Architecture a) {
  NetConfig c;
  c.arch = a;
  c.embed_dim = 4;
  c.filters = 3;
  c.filter_size = 2;
  c.pool_size = 2;
  c.conv_layers = 2;
  c.mfs_sizes = {2, 3};
  c.dropout = 0.0;
  c.dense = 5;
  c.max_len = 12;
  c.context_filters = 2;
  c.context_dense = 3;
  return c;
}

std::vector<std::int32_t> random_tokens(std::mt19937_64& rng, std::size_t n, std::size_t vocab) {
  std::vector<std::int32_t> t(n);
  for (auto& v : t) v = static_cast<std::int32_t>(1 + rng() % (vocab - 1));
  return t;
}

NetInput random_input(std::mt19937_64& rng, std::size_t vocab) {
  NetInput x;
  x.cur = random_tokens(rng, 9, vocab);
  x.prev = random_tokens(rng, 7, vocab);
  x.next = random_tokens(rng, 11, vocab);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < kNumFeatures; ++i) x.features.push_back(g(rng));
  return x;
}

BinaryLabels labels_of(LabelSet s) { return encode_binary(s); }

constexpr Architecture kAll[] = {Architecture::cnn,         Architecture::cnn_mfs,         Architecture::cnn_context,
                                 Architecture::cnn_context_rep, Architecture::cnn_feature, Architecture::linear};

}  // namespace

TEST_SUITE("neuralnet") {

TEST_CASE("vocabulary") {
  const std::vector<TokenList> docs = {{"b", "a", "a"}, {"c", "b", "a"}};
  const auto v = Vocabulary::build(docs);
  REQUIRE(v.size() == 5);
  CHECK(v.token(0) == "<pad>");
  CHECK(v.token(1) == "<unk>");
  CHECK(v.token(2) == "a");
  CHECK(v.token(3) == "b");
  CHECK(v.index("zz") == Vocabulary::kUnk);
  CHECK(v.encode({"a", "zz", "c", "b"}, 3) == std::vector<std::int32_t>{2, 1, 4});
  CHECK(Vocabulary::build(docs, 2).size() == 4);
  const std::vector<std::string> words(v.tokens().begin() + 2, v.tokens().end());
  CHECK(Vocabulary::from_tokens(words).fingerprint() == v.fingerprint());
  CHECK_THROWS_AS(Vocabulary::from_tokens(std::vector<std::string>{"a", "a"}), NeuralError);
}

TEST_CASE("embedding files") {
  const auto path = temp_path("three.vec");
  {
    std::ofstream out(path);
    out << "3 4\nprinter 1 2 3 4\ndriver 0 0 0 2\nreboot -1 1 0 0\n";
  }
  const auto emb = load_embeddings(path);
  CHECK(emb.vectors.rows() == 5);
  CHECK(emb.dim() == 4);
  CHECK(emb.vectors.row(0).isZero());
  CHECK(emb.vectors(Vocabulary::kUnk, 3) == doctest::Approx(2.0));  // mean of the loaded rows
  CHECK(emb.vectors(emb.vocab.index("driver"), 3) == 2.0f);

  const auto again = temp_path("three_back.vec");
  save_embeddings(emb, again);
  const auto back = load_embeddings(again);
  CHECK(back.vocab.tokens() == emb.vocab.tokens());
  CHECK(back.vectors == emb.vectors);

  {
    std::ofstream out(path);
    out << "5 4\nprinter 1 2 3 4\ndriver 0 0 0 2\nreboot -1 1 0 0\n";
  }
  CHECK_THROWS_AS(load_embeddings(path), NeuralError);
  {
    std::ofstream out(path);
    out << "printer 1 2 3 4\ndriver 0 0 2\n";
  }
  CHECK_THROWS_AS(load_embeddings(path), NeuralError);
}

TEST_CASE("cbow loss falls over the first epochs") {
  // two topic clusters so contexts are predictive
  const std::vector<std::string> a = {"printer", "driver", "install", "update", "windows", "error", "restart", "cable"};
  const std::vector<std::string> b = {"mailbox", "outlook", "sync", "account", "password", "server", "inbox", "folder"};
  std::mt19937_64 rng(3);
  std::vector<TokenList> docs;
  std::size_t total = 0;
  while (total < 10000) {
    const auto& topic = rng() % 2 ? a : b;
    TokenList d;
    for (int i = 0; i < 12; ++i) d.push_back(topic[rng() % topic.size()]);
    total += d.size();
    docs.push_back(std::move(d));
  }
  CbowConfig cfg;
  cfg.dim = 16;
  cfg.window = 3;
  cfg.epochs = 4;
  cfg.seed = 1;
  const auto r = train_cbow(docs, cfg);
  REQUIRE(r.epoch_loss.size() == 4);
  for (std::size_t e = 1; e < 3; ++e) CHECK(r.epoch_loss[e] < r.epoch_loss[e - 1]);
  CHECK(r.embeddings.vectors.rows() == 18);
  CHECK(r.embeddings.vectors.cols() == 16);
  CHECK(r.embeddings.vectors.row(0).isZero());
  CHECK(r.embeddings.vectors.allFinite());
  const auto again = train_cbow(docs, cfg);
  CHECK(again.embeddings.vectors == r.embeddings.vectors);

  CHECK_THROWS_AS(train_cbow(std::vector<TokenList>{{"a", "b"}}, cfg), NeuralError);
  cfg.negatives = 20;
  CHECK_THROWS_AS(train_cbow(docs, cfg), NeuralError);
}

TEST_CASE("convolution micro case") {
  // embeddings (1,0), (0,1), (1,1); one size-2 filter of ones.
  Mat<double> X(3, 2);
  X << 1, 0, 0, 1, 1, 1;
  const Mat<double> W = Mat<double>::Ones(4, 1);
  const Mat<double> b = Mat<double>::Zero(1, 1);
  const auto Z = conv1d_valid(X, W, b, 2);
  REQUIRE(Z.rows() == 2);
  CHECK(Z(0, 0) == 2.0);
  CHECK(Z(1, 0) == 3.0);
  CHECK(Z.maxCoeff() == 3.0);
  CHECK_THROWS_AS(conv1d_valid(X, W, b, 4), NeuralError);
  CHECK_THROWS_AS(conv1d_valid(X, Mat<double>(Mat<double>::Ones(3, 1)), b, 2), NeuralError);
}

TEST_CASE("zero weights give one half everywhere") {
  std::mt19937_64 rng(1);
  for (auto a : kAll) {
    Network<double> net(tiny(a), 10, 4);
    net.zero_params();
    for (double c : net.forward(random_input(rng, 10))) CHECK(c == 0.5);
  }
}

TEST_CASE("forward is deterministic and bounded") {
  std::mt19937_64 rng(2);
  for (auto a : kAll) {
    Network<float> net(tiny(a), 10, 5);
    const auto x = random_input(rng, 10);
    const auto c1 = net.forward(x);
    CHECK(c1 == net.forward(x));
    for (float c : c1) CHECK((c > 0.0f && c < 1.0f));
    std::mt19937_64 drop(0);
    const auto y = labels_of({C::PA});
    CHECK(net.accumulate(x, y, &drop) == doctest::Approx(net.loss(x, y)).epsilon(1e-6));
  }
}

TEST_CASE("long inputs are truncated and boundaries are finite") {
  std::mt19937_64 rng(3);
  Network<float> net(tiny(Architecture::cnn_context_rep), 10, 1);
  NetInput x;
  x.cur = random_tokens(rng, 60, 10);
  auto first = x;
  first.cur.resize(12);
  CHECK(net.forward(x) == net.forward(first));
  for (float c : net.forward(x)) CHECK(std::isfinite(c));
  NetInput empty;
  for (float c : net.forward(empty)) CHECK(std::isfinite(c));
}

TEST_CASE("feature dimension is checked") {
  std::mt19937_64 rng(4);
  Network<float> net(tiny(Architecture::cnn_feature), 10, 1);
  auto x = random_input(rng, 10);
  x.features.pop_back();
  CHECK_THROWS_AS(net.forward(x), NeuralError);
}

TEST_CASE("gradient check for every architecture") {
  std::mt19937_64 rng(5);
  for (auto a : kAll) {
    CAPTURE(architecture_name(a));
    auto cfg = tiny(a);
    cfg.embed_dim = 10;
    Network<double> net(cfg, 12, 7);
    // move biases off zero so the rectifiers are not all at their kink
    for (auto& p : net.params()) {
      if (p.name.ends_with(".b")) p.value.setConstant(0.05);
    }
    CHECK(net.parameter_count() < 10000);
    const auto x = random_input(rng, 12);
    const auto r = grad_check(net, x, labels_of({C::OQ, C::FD}), 1e-4, 200, 1);
    CHECK(r.checked >= 200);
    CHECK(r.max_rel_error < (a == Architecture::linear ? 1e-6 : 1e-3));
    if (a != Architecture::linear) CHECK(r.tensors.size() == net.params().size());
  }
}

TEST_CASE("unused embedding rows sit on a plateau") {
  Network<double> net(tiny(Architecture::linear), 12, 3);
  NetInput x;
  x.cur = {2, 3, 2};
  const auto y = labels_of({C::IR});
  net.zero_grad();
  net.accumulate(x, y, nullptr);
  auto& emb = net.param("embedding");
  for (Eigen::Index j = 0; j < emb.value.cols(); ++j) {
    const double analytic = emb.grad(7, j);
    const double orig = emb.value(7, j);
    emb.value(7, j) = orig + 1e-4;
    const double up = net.loss(x, y);
    emb.value(7, j) = orig - 1e-4;
    const double down = net.loss(x, y);
    emb.value(7, j) = orig;
    CHECK(std::abs(analytic) < 1e-8);
    CHECK(std::abs((up - down) / 2e-4) < 1e-8);
  }
}

TEST_CASE("context towers of width zero reduce to the base cnn") {
  std::mt19937_64 rng(6);
  Network<double> base(tiny(Architecture::cnn), 10, 11);
  auto cfg = tiny(Architecture::cnn_context_rep);
  cfg.context_dense = 0;
  Network<double> rep(cfg, 10, 99);
  CHECK(rep.copy_params_from(base) == base.params().size());
  CHECK(rep.params().size() == base.params().size());
  for (int i = 0; i < 5; ++i) {
    const auto x = random_input(rng, 10);
    CHECK(rep.forward(x) == base.forward(x));
  }
}

TEST_CASE("adam first step matches the closed form") {
  const double g = 0.3, lr = 0.01;
  for (bool corrected : {false, true}) {
    std::vector<Param<double>> ps(1);
    ps[0].name = "w";
    ps[0].value = Mat<double>::Constant(1, 1, 1.0);
    ps[0].grad = Mat<double>::Constant(1, 1, g);
    AdamConfig cfg;
    cfg.lr = lr;
    cfg.bias_correction = corrected;
    Adam<double> opt(cfg);
    opt.step(ps);
    const double want = corrected ? lr * g / (std::sqrt(g * g) + cfg.eps)
                                  : lr * (1 - cfg.beta1) * g / (std::sqrt((1 - cfg.beta2) * g * g) + cfg.eps);
    CHECK(1.0 - ps[0].value(0, 0) == doctest::Approx(want).epsilon(1e-12));
    CHECK(opt.steps() == 1);
  }
}

TEST_CASE("one small adam step lowers the batch loss") {
  int lowered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    Network<double> net(tiny(Architecture::cnn), 12, seed);
    std::vector<std::pair<NetInput, BinaryLabels>> batch;
    for (int i = 0; i < 8; ++i) {
      BinaryLabels y{};
      y[rng() % kNumIntents] = 1;
      batch.emplace_back(random_input(rng, 12), y);
    }
    auto batch_loss = [&] {
      double s = 0;
      for (const auto& [x, y] : batch) s += net.loss(x, y);
      return s / 8.0;
    };
    const double before = batch_loss();
    net.zero_grad();
    for (const auto& [x, y] : batch) net.accumulate(x, y, nullptr, 1.0 / 8.0);
    AdamConfig cfg;
    cfg.lr = 1e-4;
    Adam<double> opt(cfg);
    opt.step(net.params());
    lowered += batch_loss() < before;
  }
  CHECK(lowered >= 9);
}

TEST_CASE("training fits a separable toy set") {
  // word 2 marks OQ, word 3 marks PA; the rest is noise
  std::mt19937_64 rng(7);
  std::vector<std::string> words;
  for (int i = 0; i < 20; ++i) words.push_back("w" + std::to_string(i));
  const auto vocab = Vocabulary::from_tokens(words);
  std::vector<Sample> data;
  for (int i = 0; i < 240; ++i) {
    Sample s;
    const bool q = i % 2 == 0;
    s.input.cur = random_tokens(rng, 8, vocab.size());
    for (auto& t : s.input.cur) {
      if (t == 2 || t == 3) t = 4;
    }
    s.input.cur[rng() % 8] = q ? 2 : 3;
    s.labels = labels_of(q ? LabelSet{C::OQ} : LabelSet{C::PA});
    data.push_back(std::move(s));
  }
  const std::span<const Sample> train_set(data.data(), 200), val_set(data.data() + 200, 40);
  auto cfg = tiny(Architecture::cnn);
  cfg.embed_dim = 8;
  cfg.filters = 8;
  cfg.dense = 8;
  TrainConfig tc;
  tc.adam.lr = 0.01;
  tc.batch_size = 16;
  tc.max_epochs = 50;
  tc.patience = 50;
  tc.seed = 2;

  NeuralModel m1(cfg, vocab, 1);
  const auto h1 = train(m1, train_set, val_set, tc);
  double lowest = h1.epochs[0].train_loss;
  for (const auto& e : h1.epochs) lowest = std::min(lowest, e.train_loss);
  CHECK(lowest < 0.1);
  CHECK(std::isfinite(mean_loss(m1.network(), train_set)));
  CHECK(h1.epochs[h1.best_epoch - 1].val_accuracy == 1.0);
  for (const auto& s : val_set) CHECK(m1.predict(s.input) == decode_binary(s.labels));

  NeuralModel m2(cfg, vocab, 1);
  const auto h2 = train(m2, train_set, val_set, tc);
  REQUIRE(h2.epochs.size() == h1.epochs.size());
  for (std::size_t e = 0; e < h1.epochs.size(); ++e) CHECK(h2.epochs[e].train_loss == h1.epochs[e].train_loss);
  CHECK(h1.to_json().at("best_epoch") == h1.best_epoch);

  TrainConfig bad = tc;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(m2, train_set, val_set, bad), NeuralError);
  CHECK_THROWS_AS(train(m2, train_set, {}, tc), NeuralError);
}

TEST_CASE("divergence is reported") {
  std::mt19937_64 rng(8);
  const auto vocab = Vocabulary::from_tokens(std::vector<std::string>{"a", "b", "c"});
  std::vector<Sample> data(4);
  for (auto& s : data) {
    s.input.cur = {2, 3, 4, 2};
    s.labels = labels_of({C::GG});
  }
  NeuralModel m(tiny(Architecture::linear), vocab, 0);
  m.network().param("output.W").value.setConstant(std::numeric_limits<float>::quiet_NaN());
  TrainConfig tc;
  tc.max_epochs = 2;
  CHECK_THROWS_AS(train(m, data, data, tc), NeuralError);
}

TEST_CASE("thresholds") {
  std::array<double, kNumIntents> c{};
  c[0] = 0.9;
  c[1] = 0.6;
  c[2] = 0.1;
  CHECK(predict_labels(c, 0.5) == LabelSet{C::OQ, C::RQ});
  CHECK(predict_labels(c, 0.95) == LabelSet{C::OQ});
  std::array<double, kNumIntents> flat{};
  CHECK(predict_labels(flat, 0.5) == LabelSet{C::OQ});

  // 0.3 is the only grid value that recovers both sets exactly
  std::array<double, kNumIntents> a{}, b{};
  a.fill(0.28);
  a[0] = 0.35;
  a[1] = 0.45;
  b.fill(0.2);
  b[3] = 0.9;
  const std::vector<std::array<double, kNumIntents>> conf = {a, b};
  const std::vector<LabelSet> gold = {{C::OQ, C::RQ}, {C::FD}};
  CHECK(tune_threshold(conf, gold) == doctest::Approx(0.3));
  // everything correct at every theta: the smallest grid value wins
  const std::vector<std::array<double, kNumIntents>> one = {b};
  const std::vector<LabelSet> fd = {{C::FD}};
  CHECK(tune_threshold(one, fd) == doctest::Approx(0.2));
  CHECK_THROWS_AS(tune_threshold({}, {}), NeuralError);
}

TEST_CASE("dialog encoding") {
  const auto vocab = Vocabulary::build(std::vector<TokenList>{{"printer", "broken", "try", "driver"}});
  Dialog d;
  d.dialog_id = "7";
  for (const char* t : {"printer broken", "try driver", "thanks"}) {
    Utterance u;
    u.dialog_id = "7";
    u.pos = static_cast<int>(d.utterances.size() + 1);
    u.text = t;
    d.utterances.push_back(u);
  }
  NeuralModel rep(tiny(Architecture::cnn_context_rep), vocab, 0);
  const auto first = rep.encode(d, 0, nullptr);
  CHECK(first.prev.empty());
  CHECK(first.next == vocab.encode({"try", "driver"}));
  const auto last = rep.encode(d, 2, nullptr);
  CHECK(last.cur == std::vector<std::int32_t>{Vocabulary::kUnk});
  CHECK(last.next.empty());
  CHECK_THROWS_AS(rep.encode(d, 3, nullptr), NeuralError);

  NeuralModel feat(tiny(Architecture::cnn_feature), vocab, 0);
  CHECK_THROWS_AS(feat.encode(d, 0, nullptr), NeuralError);
  FeatureVector v{};
  v[0] = 2.0;
  feat.set_scaler(FeatureScaler::fit(std::vector<FeatureVector>{v, FeatureVector{}}));
  const auto x = feat.encode(d, 0, &v);
  CHECK(x.features.size() == kNumFeatures);
  CHECK(x.features[0] == doctest::Approx(1.0));
}

TEST_CASE("checkpoint round trip") {
  const auto vocab = Vocabulary::build(std::vector<TokenList>{{"printer", "broken", "try", "driver"}});
  std::mt19937_64 rng(9);
  for (auto a : kAll) {
    NeuralModel m(tiny(a), vocab, 3);
    m.set_threshold(0.35);
    m.meta["plan"] = "abc";
    FeatureVector v{};
    v[3] = 1.0;
    m.set_scaler(FeatureScaler::fit(std::vector<FeatureVector>{v, FeatureVector{}}));
    const auto path = temp_path("model.ipnn");
    m.save(path);
    const auto back = NeuralModel::load(path);
    CHECK(back.threshold() == 0.35);
    CHECK(back.meta.at("plan") == "abc");
    CHECK(back.vocab().fingerprint() == vocab.fingerprint());
    CHECK(back.config().to_json() == m.config().to_json());
    const auto x = random_input(rng, vocab.size());
    CHECK(back.confidences(x) == m.confidences(x));
  }
  const auto path = temp_path("model.ipnn");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a model";
  }
  CHECK_THROWS_AS(NeuralModel::load(path), NeuralError);
  NeuralModel m(tiny(Architecture::cnn), vocab, 3);
  m.save(path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 10);
  CHECK_THROWS_AS(NeuralModel::load(path), NeuralError);
  CHECK_THROWS_AS(NeuralModel::load(temp_path("missing.ipnn")), NeuralError);
}

TEST_CASE("config validation and profiles") {
  auto c = NetConfig::paper(Architecture::cnn_context_rep);
  CHECK(c.filters == 1024);
  CHECK(c.dense == 256);
  CHECK(c.max_len == 800);
  CHECK(c.context_filters == 128);
  CHECK(c.context_dense == 128);
  CHECK(c.dropout == doctest::Approx(0.6));
  const auto d = NetConfig::desk(Architecture::cnn);
  CHECK(d.filters == 256);
  CHECK(d.max_len == 400);
  CHECK(NetConfig::from_json(c.to_json()).to_json() == c.to_json());

  // three valid size-3 convolutions with floor pooling by 3 need 53 tokens
  auto s = NetConfig::paper(Architecture::cnn);
  s.max_len = 53;
  CHECK_NOTHROW(s.validate());
  s.max_len = 52;
  CHECK_THROWS_AS(s.validate(), NeuralError);
  s.max_len = 20;
  s.arch = Architecture::cnn_context;
  CHECK_NOTHROW(s.validate());  // expanded input is 60 long
  s.dropout = 1.0;
  CHECK_THROWS_AS(s.validate(), NeuralError);
  CHECK(architecture_from_name("cnn_context_rep") == Architecture::cnn_context_rep);
  CHECK_FALSE(architecture_from_name("bilstm"));
}

}  // TEST_SUITE
