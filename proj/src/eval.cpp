#include "intent/eval.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace intent::eval {

namespace {

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw EvalError("incomplete beta: continued fraction did not converge");
}

nlohmann::json labels_json(LabelSet s) {
  auto arr = nlohmann::json::array();
  for (auto c : s.codes()) arr.push_back(code_name(c));
  return arr;
}

LabelSet labels_from_json(const nlohmann::json& j) {
  LabelSet s;
  for (const auto& v : j) {
    const auto c = code_from_name(v.get<std::string>());
    if (!c) throw EvalError("unknown intent code '" + v.get<std::string>() + "'");
    s.insert(*c);
  }
  return s;
}

}  // namespace

double sample_accuracy(LabelSet pred, LabelSet gold) {
  if (pred.empty() || gold.empty()) throw EvalError("sample accuracy needs non-empty label sets");
  return static_cast<double>((pred & gold).size()) / static_cast<double>((pred | gold).size());
}

Prf micro_prf(std::span<const PredictionRecord> records) {
  if (records.empty()) throw EvalError("micro P/R/F1 needs at least one record");
  double hit = 0.0;
  double pred = 0.0;
  double gold = 0.0;
  for (const auto& r : records) {
    hit += static_cast<double>((r.predicted & r.gold).size());
    pred += static_cast<double>(r.predicted.size());
    gold += static_cast<double>(r.gold.size());
  }
  Prf m;
  m.precision = pred > 0.0 ? hit / pred : 0.0;
  m.recall = gold > 0.0 ? hit / gold : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw EvalError("incomplete beta: a and b must be positive");
  if (x < 0.0 || x > 1.0) throw EvalError("incomplete beta: x must be in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_p_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw EvalError("t distribution needs positive degrees of freedom");
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) throw EvalError("t statistic is NaN");
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTest paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw EvalError("paired t-test: samples differ in length");
  if (a.size() < 2) throw EvalError("paired t-test needs at least two pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  TTest r;
  r.n = a.size();
  // Differences that agree to rounding noise count as constant.
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  r.p = student_t_p_two_tailed(r.t, n - 1.0);
  return r;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "eval-report";
  j["version"] = 1;
  j["generator"] = kVersion;
  j["system"] = system;
  j["split"] = split;
  j["config_fingerprint"] = config_fingerprint;
  j["samples"] = samples;
  j["accuracy"] = accuracy;
  j["precision"] = prf.precision;
  j["recall"] = prf.recall;
  j["f1"] = prf.f1;
  j["meta"] = meta;
  j["ids"] = ids;
  j["per_sample"] = per_sample;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "eval-report" || j.value("version", 0) != 1) {
    throw EvalError("not an eval report (or unsupported version)");
  }
  EvalReport r;
  r.system = j.at("system").get<std::string>();
  r.split = j.at("split").get<std::string>();
  r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  r.samples = j.at("samples").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.prf = {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
  r.meta = j.at("meta");
  r.ids = j.at("ids").get<std::vector<std::string>>();
  r.per_sample = j.at("per_sample").get<std::vector<double>>();
  if (r.ids.size() != r.samples || r.per_sample.size() != r.samples) {
    throw EvalError("eval report: per-sample list length differs from the sample count");
  }
  return r;
}

EvalReport make_report(std::span<const PredictionRecord> records, std::string system, std::string split,
                       std::string config_fingerprint) {
  if (records.empty()) throw EvalError("cannot report on zero predictions");
  EvalReport r;
  r.system = std::move(system);
  r.split = std::move(split);
  r.config_fingerprint = std::move(config_fingerprint);
  double sum = 0.0;
  for (const auto& rec : records) {
    if (rec.predicted.empty()) throw EvalError("empty prediction for " + rec.id);
    r.ids.push_back(rec.id);
    r.per_sample.push_back(sample_accuracy(rec.predicted, rec.gold));
    sum += r.per_sample.back();
  }
  r.samples = records.size();
  r.accuracy = sum / static_cast<double>(records.size());
  r.prf = micro_prf(records);
  return r;
}

std::string format_table(std::span<const EvalReport> reports) {
  std::size_t width = 7;
  for (const auto& r : reports) width = std::max(width, r.system.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %9s  %8s  %8s\n", static_cast<int>(width), "Methods", "Acc",
                "Precision", "Recall", "F1");
  out += buf;
  out += std::string(width + 41, '-') + "\n";
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %9.4f  %8.4f  %8.4f\n", static_cast<int>(width), r.system.c_str(),
                  r.accuracy, r.prf.precision, r.prf.recall, r.prf.f1);
    out += buf;
  }
  return out;
}

TTest compare_reports(const EvalReport& a, const EvalReport& b) {
  if (a.samples != b.samples) throw EvalError("reports cover different numbers of samples");
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < b.ids.size(); ++i) where.emplace(b.ids[i], i);
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    auto it = where.find(a.ids[i]);
    if (it == where.end()) throw EvalError("sample " + a.ids[i] + " is missing from the second report");
    xa.push_back(a.per_sample[i]);
    xb.push_back(b.per_sample[it->second]);
  }
  return paired_ttest(xa, xb);
}

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["predicted"] = labels_json(r.predicted);
    if (r.confidences) j["confidences"] = *r.confidences;
    j["gold"] = labels_json(r.gold);
    out << j.dump() << '\n';
  }
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PredictionRecord r;
      r.id = j.at("id").get<std::string>();
      r.predicted = labels_from_json(j.at("predicted"));
      if (j.contains("confidences")) r.confidences = j["confidences"].get<std::array<double, kNumIntents>>();
      if (j.contains("gold")) r.gold = labels_from_json(j["gold"]);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw EvalError("predictions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace intent::eval
