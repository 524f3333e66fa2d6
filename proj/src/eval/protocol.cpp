#include "sggan/eval/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sggan/errors.hpp"
#include "sggan/eval/similarity.hpp"

namespace sggan {

Translator generator_translator(Generator generator) {
  return [generator](const torch::Tensor& x) mutable {
    torch::NoGradGuard no_grad;
    return generator->forward(x);
  };
}

Translator identity_translator(AttributeSchema schema) {
  return [schema](const torch::Tensor& x) {
    GeneratorOutputs out(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) out[j].assign(schema.cardinality(j), x);
    return out;
  };
}

double EvalRow::worst_untargeted() const {
  double worst = 100.0;
  for (std::size_t k = 0; k < accuracy.size(); ++k)
    if (k != translated) worst = std::min(worst, accuracy[k]);
  return worst;
}

EvalRow translation_accuracy(const Translator& translator, AttributeClassifier& classifier,
                             const SparselyGroupedDataset& test, std::size_t attribute) {
  const auto& schema = test.schema();
  if (attribute >= schema.size()) throw ConfigError("translation_accuracy: attribute index out of range");
  if (test.empty()) throw DataError("translation_accuracy: empty test set");

  const int m = schema.cardinality(attribute);
  std::vector<double> hits(schema.size(), 0), counted(schema.size(), 0);
  double similarity = 0;
  std::size_t translations = 0;

  constexpr std::size_t kChunk = 50;
  for (std::size_t lo = 0; lo < test.size(); lo += kChunk) {
    std::vector<std::size_t> ids;
    for (std::size_t id = lo; id < std::min(test.size(), lo + kChunk); ++id) ids.push_back(id);
    const auto inputs = test.stack(ids);
    const auto outputs = translator(inputs);
    for (int v = 0; v < m; ++v) {
      const auto& translated = outputs.at(attribute).at(v);
      const auto pred = classifier.predict(translated);
      auto acc = pred.accessor<std::int64_t, 2>();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto row = static_cast<std::int64_t>(i);
        for (std::size_t k = 0; k < schema.size(); ++k) {
          const auto col = static_cast<std::int64_t>(k);
          if (k == attribute) {
            counted[k] += 1;
            if (acc[row][col] == v) hits[k] += 1;
          } else if (const auto& l = test[ids[i]].labels[k]) {
            counted[k] += 1;
            if (acc[row][col] == *l) hits[k] += 1;
          }
        }
        similarity += background_similarity(inputs[row], translated[row]);
        ++translations;
      }
    }
  }

  EvalRow out;
  out.translated = attribute;
  out.translations = translations;
  out.background_similarity = similarity / static_cast<double>(translations);
  out.accuracy.resize(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) out.accuracy[k] = counted[k] > 0 ? 100.0 * hits[k] / counted[k] : 0.0;
  return out;
}

const EvalRow& EvalReport::row(std::size_t attribute) const {
  for (const auto& r : rows)
    if (r.translated == attribute) return r;
  throw ConfigError("report has no row for attribute " + std::to_string(attribute));
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "# model_id: " << model_id << '\n';
  out << "# condition: " << condition << '\n';
  out << "# schema: " << schema.to_string() << '\n';
  if (mi_size) out << "# mi_size: " << *mi_size << '\n';
  for (const auto& n : notes) out << "# note: " << n << '\n';
  out << "translated";
  for (const auto& a : schema) out << ',' << a.name;
  out << ",background,background_ssim\n";
  out << std::fixed;
  for (const auto& r : rows) {
    out << schema[r.translated].name;
    for (double acc : r.accuracy) out << ',' << std::setprecision(2) << acc;
    out << ',' << static_cast<long>(std::lround(r.background_similarity * 100.0)) << ',' << std::setprecision(4)
        << r.background_similarity << '\n';
  }
  return out.str();
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report '" + path.string() + "'");
  out << to_csv();
}

EvalReport evaluate_translations(const Translator& translator, AttributeClassifier& classifier,
                                 const SparselyGroupedDataset& test, std::string model_id, std::string condition) {
  EvalReport report;
  report.model_id = std::move(model_id);
  report.condition = std::move(condition);
  report.schema = test.schema();
  for (std::size_t j = 0; j < test.schema().size(); ++j)
    report.rows.push_back(translation_accuracy(translator, classifier, test, j));
  return report;
}

std::string celeba_reference_note() {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << "full-scale evaluator accuracy on real faces: gender "
      << kCelebaReferenceGender << ", smile " << kCelebaReferenceSmile << ", hair color " << kCelebaReferenceHair;
  return out.str();
}

}  // namespace sggan
