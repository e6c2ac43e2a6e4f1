#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "intent/labels.hpp"

namespace intent::eval {

class EvalError : public Error {
 public:
  using Error::Error;
};

/// |pred ∩ gold| / |pred ∪ gold|. Throws EvalError if either set is empty.
double sample_accuracy(LabelSet pred, LabelSet gold);

struct PredictionRecord {
  std::string id;
  LabelSet predicted;
  std::optional<std::array<double, kNumIntents>> confidences;
  LabelSet gold;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Micro-averaged over all records; F1 is 0 when P + R = 0.
Prf micro_prf(std::span<const PredictionRecord> records);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
/// Two-tailed p-value of Student's t with df degrees of freedom.
double student_t_p_two_tailed(double t, double df);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Paired t-test on aligned per-sample scores. A zero-variance difference
/// gives p = 1 when its mean is 0 and p = 0 otherwise (t = ±inf).
TTest paired_ttest(std::span<const double> a, std::span<const double> b);

struct EvalReport {
  std::string system;
  std::string split;
  std::string config_fingerprint;
  std::vector<std::string> ids;
  std::vector<double> per_sample;
  double accuracy = 0.0;
  Prf prf;
  std::size_t samples = 0;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Report over records (all predictions and gold sets must be non-empty).
EvalReport make_report(std::span<const PredictionRecord> records, std::string system, std::string split,
                       std::string config_fingerprint);

/// Aligned plain-text table: Methods, Acc, Precision, Recall, F1.
std::string format_table(std::span<const EvalReport> reports);

/// Aligns two reports by utterance id and runs the paired t-test.
TTest compare_reports(const EvalReport& a, const EvalReport& b);

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in);

}  // namespace intent::eval
