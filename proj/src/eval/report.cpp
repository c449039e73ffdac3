#include "semenet/eval/report.hpp"

#include <fstream>

#include "semenet/error.hpp"

namespace semenet {

using nlohmann::json;

MetricsReport evaluate(const Tensor<double>& probabilities, std::span<const int> truths,
                       std::vector<std::string> class_names) {
  if (probabilities.rank() != 2 || probabilities.dim(0) != truths.size()) {
    throw InvalidInputError("probabilities must be [N,K] with one row per truth label");
  }
  const std::size_t n = probabilities.dim(0), k = probabilities.dim(1);
  if (class_names.empty())
    for (std::size_t c = 0; c < k; ++c) class_names.push_back("class" + std::to_string(c));
  std::vector<int> preds(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (probabilities[i * k + c] > probabilities[i * k + best]) best = c;
    preds[i] = static_cast<int>(best);
  }
  MetricsReport r;
  r.confusion = confusion(preds, truths, k, class_names);
  r.accuracy = accuracy(r.confusion);
  r.f1 = f1_scores(r.confusion);
  try {
    r.auc = macro_ovr_auc(probabilities, truths);
  } catch (const UndefinedMetricError& e) {
    r.auc_note = e.what();
  }
  return r;
}

json to_json(const MetricsReport& r) {
  json per_class = json::array();
  for (std::size_t c = 0; c < r.confusion.classes; ++c) {
    json entry{{"name", r.confusion.names[c]}, {"f1", r.f1.per_class[c]}, {"f1_counted", r.f1.counted[c]}};
    entry["auc"] = r.auc ? json(r.auc->per_class[c]) : json(nullptr);
    per_class.push_back(std::move(entry));
  }
  json matrix = json::array();
  for (std::size_t t = 0; t < r.confusion.classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.confusion.classes; ++p) row.push_back(r.confusion.at(t, p));
    matrix.push_back(std::move(row));
  }
  json doc{{"samples", r.confusion.total()},
           {"accuracy", r.accuracy},
           {"macro_f1", r.f1.macro},
           {"macro_auc", r.auc ? json(r.auc->macro) : json(nullptr)},
           {"classes", std::move(per_class)},
           {"confusion", std::move(matrix)}};
  if (!r.auc_note.empty()) doc["auc_note"] = r.auc_note;
  return doc;
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  auto name = [&](std::size_t c) { return cm.names.empty() ? "class" + std::to_string(c) : cm.names[c]; };
  out << "truth\\pred";
  for (std::size_t c = 0; c < cm.classes; ++c) out << ',' << name(c);
  out << '\n';
  for (std::size_t t = 0; t < cm.classes; ++t) {
    out << name(t);
    for (std::size_t p = 0; p < cm.classes; ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
}

void write_roc_csv(const std::filesystem::path& path, const OvrAuc& auc, const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "class,threshold,fpr,tpr\n";
  for (std::size_t c = 0; c < auc.curves.size(); ++c) {
    for (const auto& p : auc.curves[c].points) {
      out << (c < names.size() ? names[c] : std::to_string(c)) << ',' << p.threshold << ',' << p.fpr << ','
          << p.tpr << '\n';
    }
  }
}

}  // namespace semenet
