#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "somn/cohort.hpp"
#include "somn/metrics.hpp"
#include "somn/nn/network.hpp"

namespace somn::eval {

struct Prediction {
  std::string subject_id;
  std::uint32_t epoch_index = 0;
  Stage stage = Stage::Unknown;
  bool truth = false;
  double score = 0.0;  // positive-class probability
  bool predicted = false;
};

/// Inference-mode predictions for every example, in cohort order.
std::vector<Prediction> predict_cohort(const nn::CnnModel& model, const Cohort& cohort,
                                       nn::Exec exec = nn::Exec::Parallel);

struct Report {
  std::size_t n = 0;
  metrics::ConfusionMatrix cm;
  metrics::Summary summary;
  std::optional<double> auc;  // undefined for single-class labels
};

Report report(const std::vector<Prediction>& preds);

struct SubjectRow {
  std::string subject_id;
  Report report;
  double positive_percent = 0.0;  // w: share of the subject's windows in the positive class
  std::optional<double> ahi;
};

/// One row per subject, in subject-id order.
std::vector<SubjectRow> per_subject_report(const std::vector<Prediction>& preds, const Cohort& cohort);

struct Evaluation {
  Report overall;
  metrics::RocCurve roc;
  std::vector<SubjectRow> subjects;
  std::optional<metrics::RegressionFit> f1_vs_positive_percent;
  std::optional<metrics::RegressionFit> f1_vs_ahi;
  bool in_sample = false;
};

/// DomainError when the cohort holds a single class (no ROC curve).
Evaluation evaluate(const std::vector<Prediction>& preds, const Cohort& cohort, bool in_sample);

/// TP/FP/TN/FN, SE/SP/ACC/PR in percent, F1/AUC/Kappa as fractions;
/// undefined values are null.
nlohmann::json evaluation_json(const Evaluation& e, const Cohort& cohort, const std::string& config_hash);
std::string subjects_csv(const std::vector<SubjectRow>& rows);
std::string roc_csv(const metrics::RocCurve& roc);

}  // namespace somn::eval
