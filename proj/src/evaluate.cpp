#include "somn/evaluate.hpp"

#include <algorithm>
#include <exception>
#include <sstream>

#include "somn/errors.hpp"
#include "somn/ihr.hpp"

namespace somn::eval {

using nlohmann::json;

std::vector<Prediction> predict_cohort(const nn::CnnModel& model, const Cohort& cohort, nn::Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(cohort.examples.size());
  std::vector<Prediction> out(cohort.examples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8) if (exec == nn::Exec::Parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& e = cohort.examples[static_cast<std::size_t>(i)];
    try {
      const auto c = nn::forward(model, normalize_window(e.input), nn::Mode::Infer);
      out[static_cast<std::size_t>(i)] = {e.subject_id, e.epoch_index, e.stage, e.positive, c.probs[0],
                                          nn::predict_positive(c.probs)};
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Report report(const std::vector<Prediction>& preds) {
  Report r;
  r.n = preds.size();
  std::vector<bool> predicted, truth;
  std::vector<double> scores;
  for (const auto& p : preds) {
    predicted.push_back(p.predicted);
    truth.push_back(p.truth);
    scores.push_back(p.score);
  }
  r.cm = metrics::confusion(predicted, truth);
  r.summary = metrics::summary(r.cm);
  if (r.cm.tp + r.cm.fn > 0 && r.cm.tn + r.cm.fp > 0) r.auc = metrics::roc_auc(scores, truth).auc;
  return r;
}

std::vector<SubjectRow> per_subject_report(const std::vector<Prediction>& preds, const Cohort& cohort) {
  std::map<std::string, std::vector<Prediction>> by_subject;
  for (const auto& p : preds) by_subject[p.subject_id].push_back(p);
  std::vector<SubjectRow> rows;
  for (const auto& [id, ps] : by_subject) {
    SubjectRow row;
    row.subject_id = id;
    row.report = report(ps);
    std::size_t pos = 0;
    for (const auto& p : ps) pos += p.truth ? 1 : 0;
    row.positive_percent = 100.0 * static_cast<double>(pos) / static_cast<double>(ps.size());
    if (const auto it = cohort.meta.find(id); it != cohort.meta.end()) row.ahi = it->second.ahi;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

// F1 against a covariate over subjects where both are defined; needs three
// subjects and a non-constant covariate.
std::optional<metrics::RegressionFit> f1_regression(const std::vector<SubjectRow>& rows, bool use_ahi) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    if (!r.report.summary.f1) continue;
    if (use_ahi && !r.ahi) continue;
    x.push_back(use_ahi ? *r.ahi : r.positive_percent);
    y.push_back(*r.report.summary.f1);
  }
  if (x.size() < 3 || std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); }))
    return std::nullopt;
  return metrics::slope_regression(x, y);
}

json opt(const std::optional<double>& v, double scale = 1.0) { return v ? json(*v * scale) : json(nullptr); }

json fit_json(const std::optional<metrics::RegressionFit>& f) {
  if (!f) return nullptr;
  return {{"slope", f->slope}, {"intercept", f->intercept}, {"p_value", f->slope_p_value}, {"n", f->n}};
}

json report_json(const Report& r) {
  return {{"n", r.n},
          {"TP", r.cm.tp},
          {"FP", r.cm.fp},
          {"TN", r.cm.tn},
          {"FN", r.cm.fn},
          {"SE", opt(r.summary.sensitivity, 100.0)},
          {"SP", opt(r.summary.specificity, 100.0)},
          {"ACC", opt(r.summary.accuracy, 100.0)},
          {"PR", opt(r.summary.precision, 100.0)},
          {"F1", opt(r.summary.f1)},
          {"AUC", opt(r.auc)},
          {"Kappa", opt(r.summary.kappa)}};
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

}  // namespace

Evaluation evaluate(const std::vector<Prediction>& preds, const Cohort& cohort, bool in_sample) {
  Evaluation e;
  e.overall = report(preds);
  std::vector<double> scores;
  std::vector<bool> truth;
  for (const auto& p : preds) {
    scores.push_back(p.score);
    truth.push_back(p.truth);
  }
  e.roc = metrics::roc_auc(scores, truth);
  e.subjects = per_subject_report(preds, cohort);
  e.f1_vs_positive_percent = f1_regression(e.subjects, false);
  e.f1_vs_ahi = f1_regression(e.subjects, true);
  e.in_sample = in_sample;
  return e;
}

json evaluation_json(const Evaluation& e, const Cohort& cohort, const std::string& config_hash) {
  json j = report_json(e.overall);
  j["format"] = "somn-metrics";
  j["version"] = 1;
  j["task"] = std::string(task_name(cohort.task));
  j["context_seconds"] = cohort.context_seconds;
  j["subjects"] = e.subjects.size();
  j["in_sample"] = e.in_sample;
  j["regression"] = {{"f1_vs_positive_percent", fit_json(e.f1_vs_positive_percent)},
                     {"f1_vs_ahi", fit_json(e.f1_vs_ahi)}};
  j["config_hash"] = config_hash;
  return j;
}

std::string subjects_csv(const std::vector<SubjectRow>& rows) {
  std::ostringstream os;
  os << "subject,n,TP,FP,TN,FN,SE,SP,ACC,PR,F1,AUC,Kappa,positive_percent,ahi\n";
  const auto pct = [](const std::optional<double>& v) { return v ? std::optional<double>(*v * 100.0) : v; };
  for (const auto& r : rows) {
    const auto& s = r.report.summary;
    os << r.subject_id << ',' << r.report.n << ',' << r.report.cm.tp << ',' << r.report.cm.fp << ','
       << r.report.cm.tn << ',' << r.report.cm.fn << ',' << cell(pct(s.sensitivity)) << ','
       << cell(pct(s.specificity)) << ',' << cell(pct(s.accuracy)) << ',' << cell(pct(s.precision)) << ','
       << cell(s.f1) << ',' << cell(r.report.auc) << ',' << cell(s.kappa) << ',' << cell(r.positive_percent)
       << ',' << cell(r.ahi) << '\n';
  }
  return os.str();
}

std::string roc_csv(const metrics::RocCurve& roc) {
  std::ostringstream os;
  os.precision(17);
  os << "fpr,tpr\n";
  for (const auto& p : roc.points) os << p.fpr << ',' << p.tpr << '\n';
  return os.str();
}

}  // namespace somn::eval
