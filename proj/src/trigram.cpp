#include "stylo/trigram.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stylo/errors.hpp"
#include "stylo/rng.hpp"

namespace stylo {

TrigramSpace::TrigramSpace(std::vector<std::string> trigrams)
    : trigrams_(std::move(trigrams)) {
  for (size_t i = 0; i < trigrams_.size(); ++i) {
    index_[trigrams_[i]] = static_cast<int>(i);
  }
}

int TrigramSpace::index_of(const std::string& tri) const {
  auto it = index_.find(tri);
  return it == index_.end() ? -1 : it->second;
}

namespace {

std::string normalize_whitespace(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;  // trims leading whitespace
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

TrigramSpace fit_trigram_space(const std::vector<std::string>& texts, int k) {
  std::map<std::string, long> counts;
  for (const auto& t : texts) {
    std::string s = normalize_whitespace(t);
    for (size_t i = 0; i + 3 <= s.size(); ++i) ++counts[s.substr(i, 3)];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > k) ranked.resize(k);
  std::vector<std::string> tris;
  tris.reserve(ranked.size());
  for (auto& [tri, n] : ranked) tris.push_back(tri);
  return TrigramSpace(std::move(tris));
}

Vector extract_trigrams(const std::string& text, const TrigramSpace& space) {
  Vector v = Vector::Zero(space.size());
  std::string s = normalize_whitespace(text);
  if (s.size() < 3) return v;
  const double total = static_cast<double>(s.size() - 2);
  for (size_t i = 0; i + 3 <= s.size(); ++i) {
    int idx = space.index_of(s.substr(i, 3));
    if (idx >= 0) v[idx] += 1.0;
  }
  return v / total;
}

// --- naive Bayes ------------------------------------------------------------

namespace {

int num_classes_of(const std::vector<LabeledVector>& data) {
  int n = 0;
  for (const auto& d : data) n = std::max(n, d.label + 1);
  return n;
}

}  // namespace

NBModel nb_fit(const std::vector<LabeledVector>& train, double alpha,
               bool fit_prior) {
  if (train.empty()) throw InsufficientData("nb_fit: empty training set");
  if (alpha <= 0) throw ConfigError("nb_fit: alpha must be > 0");
  const int classes = num_classes_of(train);
  const int k = static_cast<int>(train[0].x.size());

  Matrix counts = Matrix::Zero(classes, k);
  Vector class_n = Vector::Zero(classes);
  for (const auto& d : train) {
    counts.row(d.label) += d.x.transpose();
    class_n[d.label] += 1.0;
  }
  NBModel m;
  m.alpha = alpha;
  m.class_log_priors = Vector::Zero(classes);
  for (int c = 0; c < classes; ++c) {
    if (class_n[c] == 0.0) {
      throw InsufficientData("nb_fit: class " + std::to_string(c) +
                             " has no examples");
    }
    m.class_log_priors[c] =
        fit_prior ? std::log(class_n[c] / static_cast<double>(train.size()))
                  : -std::log(static_cast<double>(classes));
  }
  m.feature_log_lik = Matrix::Zero(classes, k);
  for (int c = 0; c < classes; ++c) {
    double total = counts.row(c).sum() + alpha * k;
    for (int f = 0; f < k; ++f) {
      m.feature_log_lik(c, f) = std::log((counts(c, f) + alpha) / total);
    }
  }
  return m;
}

Prediction nb_predict(const NBModel& model, const Vector& x) {
  Vector scores = model.class_log_priors + model.feature_log_lik * x;
  double mx = scores.maxCoeff();
  Vector post = (scores.array() - mx).exp();
  post /= post.sum();
  Prediction p;
  scores.maxCoeff(&p.label);
  p.posteriors = post;
  return p;
}

// --- linear SVM -------------------------------------------------------------

namespace {

double svm_objective(const Vector& w, double b, const std::vector<Vector>& xs,
                     const std::vector<int>& ys, double C) {
  double obj = 0.5 * w.squaredNorm();
  for (size_t i = 0; i < xs.size(); ++i) {
    obj += C * std::max(0.0, 1.0 - ys[i] * (w.dot(xs[i]) + b));
  }
  return obj;
}

}  // namespace

BinarySVM svm_fit_binary(const std::vector<Vector>& xs,
                         const std::vector<int>& ys, double C, int epochs,
                         uint64_t seed) {
  if (C <= 0) throw ConfigError("svm_fit: C must be > 0");
  const size_t n = xs.size();
  for (const auto& x : xs) {
    if (!x.allFinite()) throw ConfigError("svm_fit: non-finite feature");
  }
  BinarySVM m;
  m.w = Vector::Zero(n ? xs[0].size() : 0);
  double lr = 1.0;
  double obj = svm_objective(m.w, m.b, xs, ys, C);
  CounterRng rng(seed, "svm/shuffle");
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  for (int e = 0; e < epochs; ++e) {
    Vector w0 = m.w;
    double b0 = m.b;
    rng.shuffle(order);
    const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
    for (size_t i : order) {
      double margin = ys[i] * (m.w.dot(xs[i]) + m.b);
      m.w -= lr * inv_n * m.w;
      if (margin < 1.0) {
        m.w += lr * C * ys[i] * xs[i];
        m.b += lr * C * ys[i];
      }
    }
    double next = svm_objective(m.w, m.b, xs, ys, C);
    if (next > obj) {
      m.w = w0;  // step too large: undo the epoch and damp
      m.b = b0;
      lr *= 0.5;
    } else {
      obj = next;
    }
    m.epoch_objectives.push_back(obj);
  }
  return m;
}

LinearSVMModel svm_fit(const std::vector<LabeledVector>& train, double C,
                       int epochs, uint64_t seed) {
  if (train.empty()) throw InsufficientData("svm_fit: empty training set");
  const int classes = num_classes_of(train);
  const int k = static_cast<int>(train[0].x.size());
  std::vector<Vector> xs;
  xs.reserve(train.size());
  for (const auto& d : train) xs.push_back(d.x);

  LinearSVMModel m;
  m.C = C;
  m.weights = Matrix::Zero(classes, k);
  m.bias = Vector::Zero(classes);
  for (int c = 0; c < classes; ++c) {
    std::vector<int> ys(train.size());
    for (size_t i = 0; i < train.size(); ++i) {
      ys[i] = train[i].label == c ? 1 : -1;
    }
    BinarySVM bin = svm_fit_binary(xs, ys, C, epochs,
                                   seed + static_cast<uint64_t>(c));
    m.weights.row(c) = bin.w.transpose();
    m.bias[c] = bin.b;
    if (m.epoch_objectives.empty()) {
      m.epoch_objectives = bin.epoch_objectives;
    } else {
      for (size_t e = 0; e < bin.epoch_objectives.size(); ++e) {
        m.epoch_objectives[e] += bin.epoch_objectives[e];
      }
    }
  }
  return m;
}

Prediction svm_predict(const LinearSVMModel& model, const Vector& x) {
  Prediction p;
  p.posteriors = model.weights * x + model.bias;
  p.posteriors.maxCoeff(&p.label);
  return p;
}

// --- cross validation -------------------------------------------------------

double macro_accuracy(const std::vector<int>& predictions,
                      const std::vector<int>& truths) {
  if (truths.empty() || predictions.size() != truths.size()) {
    throw ConfigError("macro_accuracy: empty or mismatched inputs");
  }
  std::map<int, std::pair<long, long>> per_class;  // correct, total
  for (size_t i = 0; i < truths.size(); ++i) {
    auto& [correct, tot] = per_class[truths[i]];
    ++tot;
    if (predictions[i] == truths[i]) ++correct;
  }
  double acc = 0.0;
  for (const auto& [cls, ct] : per_class) {
    acc += static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return acc / static_cast<double>(per_class.size());
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds,
                                  uint64_t seed) {
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<int> fold_of(labels.size(), 0);
  for (auto& [cls, idxs] : by_class) {
    if (static_cast<int>(idxs.size()) < folds) {
      throw InsufficientData("class " + std::to_string(cls) + " has " +
                             std::to_string(idxs.size()) + " < " +
                             std::to_string(folds) + " examples");
    }
    CounterRng rng(seed, "folds/" + std::to_string(cls));
    rng.shuffle(idxs);
    for (size_t i = 0; i < idxs.size(); ++i) {
      fold_of[idxs[i]] = static_cast<int>(i % folds);
    }
  }
  return fold_of;
}

double cross_val_macro_accuracy(
    const std::vector<LabeledVector>& data, int folds, uint64_t seed,
    const std::function<std::function<int(const Vector&)>(
        const std::vector<LabeledVector>&)>& fit) {
  std::vector<int> labels(data.size());
  for (size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
  auto fold_of = stratified_folds(labels, folds, seed);
  double sum = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<LabeledVector> train;
    std::vector<size_t> heldout;
    for (size_t i = 0; i < data.size(); ++i) {
      if (fold_of[i] == f) {
        heldout.push_back(i);
      } else {
        train.push_back(data[i]);
      }
    }
    auto predictor = fit(train);
    std::vector<int> preds, truths;
    for (size_t i : heldout) {
      preds.push_back(predictor(data[i].x));
      truths.push_back(data[i].label);
    }
    sum += macro_accuracy(preds, truths);
  }
  return sum / folds;
}

CvResult random_search_cv(const std::vector<ParamRange>& ranges, int n_iter,
                          uint64_t seed, const CvScoreFn& score) {
  if (n_iter < 1) throw ConfigError("random_search_cv: n_iter must be >= 1");
  CounterRng rng(seed, "random-search");
  CvResult result;
  bool have_best = false;
  for (int it = 0; it < n_iter; ++it) {
    ParamPoint p;
    for (const auto& r : ranges) {
      double v = r.log_scale
                     ? std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)))
                     : rng.uniform(r.lo, r.hi);
      p[r.name] = v;
    }
    double s = score(p);
    result.trace.emplace_back(p, s);
    if (!have_best || s > result.best_score) {  // ties keep the first sampled
      result.best_params = p;
      result.best_score = s;
      have_best = true;
    }
  }
  return result;
}

}  // namespace stylo
