#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylo/linalg.hpp"

namespace stylo {

// Top-K character trigrams of the training split, frequency order with
// lexicographic tie-break.
class TrigramSpace {
 public:
  TrigramSpace() = default;
  explicit TrigramSpace(std::vector<std::string> trigrams);

  int size() const { return static_cast<int>(trigrams_.size()); }
  int index_of(const std::string& tri) const;
  const std::vector<std::string>& trigrams() const { return trigrams_; }

 private:
  std::vector<std::string> trigrams_;
  std::unordered_map<std::string, int> index_;
};

TrigramSpace fit_trigram_space(const std::vector<std::string>& texts, int k);

// Relative frequencies of in-space trigrams; out-of-space mass is dropped.
// Texts shorter than one window give the zero vector.
Vector extract_trigrams(const std::string& text, const TrigramSpace& space);

// --- multinomial naive Bayes ------------------------------------------------

struct NBModel {
  Vector class_log_priors;  // num_classes
  Matrix feature_log_lik;   // num_classes x K
  double alpha = 1.0;
};

struct LabeledVector {
  Vector x;
  int label = 0;
};

NBModel nb_fit(const std::vector<LabeledVector>& train, double alpha,
               bool fit_prior = true);

struct Prediction {
  int label = 0;
  Vector posteriors;  // NB: normalized class posteriors; SVM: per-class margins
};

Prediction nb_predict(const NBModel& model, const Vector& x);

// --- linear SVM -------------------------------------------------------------

struct LinearSVMModel {
  Matrix weights;  // num_classes x K (one-vs-rest rows)
  Vector bias;
  double C = 1.0;
  std::vector<double> epoch_objectives;  // summed over the OVR problems
};

LinearSVMModel svm_fit(const std::vector<LabeledVector>& train, double C,
                       int epochs, uint64_t seed);

Prediction svm_predict(const LinearSVMModel& model, const Vector& x);

// Binary subproblem, y in {-1, +1}. Subgradient descent on
// J = ||w||^2/2 + C * sum hinge; an epoch that increases J is reverted and
// the step size halved, so recorded objectives are non-increasing.
struct BinarySVM {
  Vector w;
  double b = 0.0;
  std::vector<double> epoch_objectives;
};

BinarySVM svm_fit_binary(const std::vector<Vector>& xs,
                         const std::vector<int>& ys, double C, int epochs,
                         uint64_t seed);

// --- random-search cross-validation -----------------------------------------

struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
};

using ParamPoint = std::unordered_map<std::string, double>;

// score(params) = mean fold macro accuracy, supplied by the caller per family.
using CvScoreFn = std::function<double(const ParamPoint&)>;

struct CvResult {
  ParamPoint best_params;
  double best_score = 0.0;
  std::vector<std::pair<ParamPoint, double>> trace;
};

CvResult random_search_cv(const std::vector<ParamRange>& ranges, int n_iter,
                          uint64_t seed, const CvScoreFn& score);

// Class-stratified fold assignment; throws InsufficientData when a class has
// fewer examples than folds.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds,
                                  uint64_t seed);

// Mean fold macro accuracy of a fit/predict pair over stratified folds.
double cross_val_macro_accuracy(
    const std::vector<LabeledVector>& data, int folds, uint64_t seed,
    const std::function<std::function<int(const Vector&)>(
        const std::vector<LabeledVector>&)>& fit);

double macro_accuracy(const std::vector<int>& predictions,
                      const std::vector<int>& truths);

}  // namespace stylo
