#include "stylo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stylo/errors.hpp"
#include "stylo/rng.hpp"
#include "stylo/text.hpp"

namespace stylo {

using nlohmann::json;

SchemeKind scheme_from_string(const std::string& s) {
  if (s == "traditional") return SchemeKind::traditional;
  if (s == "zero_knowledge_swap") return SchemeKind::zero_knowledge_swap;
  if (s == "high_imbalance_swap") return SchemeKind::high_imbalance_swap;
  if (s == "cross_fandom") return SchemeKind::cross_fandom;
  if (s == "probe") return SchemeKind::probe;
  throw ConfigError("unknown scheme: " + s);
}

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::traditional: return "traditional";
    case SchemeKind::zero_knowledge_swap: return "zero_knowledge_swap";
    case SchemeKind::high_imbalance_swap: return "high_imbalance_swap";
    case SchemeKind::cross_fandom: return "cross_fandom";
    case SchemeKind::probe: return "probe";
  }
  return "?";
}

namespace {

BudgetTable zero_table(int authors, int domains) {
  return BudgetTable(authors, std::vector<int>(domains, 0));
}

}  // namespace

SchemeSpec make_scheme(SchemeKind kind, const SchemeScale& scale) {
  SchemeSpec s;
  s.kind = kind;
  s.num_authors = 2;
  s.num_domains = kind == SchemeKind::cross_fandom ? 3 : 2;
  s.train = zero_table(s.num_authors, s.num_domains);
  s.validation = zero_table(s.num_authors, s.num_domains);
  s.normal_test = zero_table(s.num_authors, s.num_domains);
  s.swapped_test = zero_table(s.num_authors, s.num_domains);
  switch (kind) {
    case SchemeKind::traditional:
    case SchemeKind::probe:
      for (int a = 0; a < 2; ++a) {
        for (int d = 0; d < 2; ++d) {
          s.train[a][d] = scale.train_major;
          s.validation[a][d] = scale.val_major;
          s.normal_test[a][d] = scale.test;
        }
      }
      break;
    case SchemeKind::zero_knowledge_swap:
      for (int a = 0; a < 2; ++a) {
        s.train[a][a] = scale.train_major;
        s.validation[a][a] = scale.val_major;
        s.normal_test[a][a] = scale.test;
        s.swapped_test[a][1 - a] = scale.test;
      }
      break;
    case SchemeKind::high_imbalance_swap:
      for (int a = 0; a < 2; ++a) {
        s.train[a][a] = scale.train_major;
        s.train[a][1 - a] = scale.train_minor;
        s.validation[a][a] = scale.val_major;
        s.validation[a][1 - a] = scale.val_minor;
        s.normal_test[a][a] = scale.test;
        s.swapped_test[a][1 - a] = scale.test;
      }
      break;
    case SchemeKind::cross_fandom:
      for (int a = 0; a < 2; ++a) {
        for (int d = 0; d < 2; ++d) {
          s.train[a][d] = scale.train_major;
          s.validation[a][d] = scale.val_major;
        }
        s.normal_test[a][2] = scale.test;
      }
      break;
  }
  return s;
}

// --- instance sampling ------------------------------------------------------

namespace {

using CellKey = std::pair<std::string, std::string>;

struct CellStories {
  std::vector<std::string> story_ids;                 // sorted
  std::vector<std::vector<const LabeledChunk*>> chunks;  // per story, ordered
  std::vector<size_t> sizes;
};

std::map<CellKey, CellStories> index_cells(
    const std::vector<LabeledChunk>& corpus) {
  std::map<CellKey, std::map<std::string, std::vector<const LabeledChunk*>>>
      tmp;
  for (const auto& c : corpus) {
    tmp[{c.author_id, c.domain_id}][c.story_id].push_back(&c);
  }
  std::map<CellKey, CellStories> cells;
  for (auto& [key, stories] : tmp) {
    CellStories cs;
    for (auto& [sid, chunks] : stories) {
      std::sort(chunks.begin(), chunks.end(),
                [](const LabeledChunk* a, const LabeledChunk* b) {
                  return a->chunk_index < b->chunk_index;
                });
      cs.story_ids.push_back(sid);
      cs.sizes.push_back(chunks.size());
      cs.chunks.push_back(std::move(chunks));
    }
    cells.emplace(key, std::move(cs));
  }
  return cells;
}

std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

bool cell_feasible(const CellStories* cs, const std::vector<long>& budgets) {
  long need = std::accumulate(budgets.begin(), budgets.end(), 0L);
  if (need == 0) return true;
  if (!cs) return false;
  std::vector<int> assignment;
  return assign_stories_to_groups(cs->sizes, budgets, assignment);
}

}  // namespace

ProblemInstance sample_instance(const std::vector<LabeledChunk>& corpus,
                                const SchemeSpec& scheme, uint64_t seed) {
  auto cells = index_cells(corpus);
  std::set<std::string> author_set, domain_set;
  for (const auto& [key, cs] : cells) {
    author_set.insert(key.first);
    domain_set.insert(key.second);
  }
  std::vector<std::string> all_authors(author_set.begin(), author_set.end());
  std::vector<std::string> all_domains(domain_set.begin(), domain_set.end());
  if (static_cast<int>(all_authors.size()) < scheme.num_authors ||
      static_cast<int>(all_domains.size()) < scheme.num_domains) {
    throw InsufficientData("corpus has too few authors or domains");
  }

  auto author_tuples =
      combinations(static_cast<int>(all_authors.size()), scheme.num_authors);
  auto domain_tuples =
      combinations(static_cast<int>(all_domains.size()), scheme.num_domains);

  std::vector<std::pair<std::vector<int>, std::vector<int>>> qualifying;
  for (const auto& at : author_tuples) {
    for (const auto& dt : domain_tuples) {
      bool ok = true;
      for (int a = 0; a < scheme.num_authors && ok; ++a) {
        for (int d = 0; d < scheme.num_domains && ok; ++d) {
          CellKey key = {all_authors[at[a]], all_domains[dt[d]]};
          auto it = cells.find(key);
          std::vector<long> budgets = {
              scheme.train[a][d], scheme.validation[a][d],
              scheme.normal_test[a][d], scheme.swapped_test[a][d]};
          ok = cell_feasible(it == cells.end() ? nullptr : &it->second,
                             budgets);
        }
      }
      if (ok) qualifying.emplace_back(at, dt);
    }
  }
  if (qualifying.empty()) {
    throw InsufficientData("no (author, domain) tuple satisfies the scheme");
  }
  CounterRng pick_rng(seed, "sample");
  const auto& [at, dt] = qualifying[pick_rng.next_below(qualifying.size())];

  ProblemInstance inst;
  inst.scheme = scheme;
  inst.seed = seed;
  for (int a : at) inst.authors.push_back(all_authors[a]);
  for (int d : dt) inst.domains.push_back(all_domains[d]);

  std::vector<LabeledChunk>* outs[4] = {&inst.train, &inst.validation,
                                        &inst.normal_test, &inst.swapped_test};
  for (int a = 0; a < scheme.num_authors; ++a) {
    for (int d = 0; d < scheme.num_domains; ++d) {
      std::vector<long> budgets = {
          scheme.train[a][d], scheme.validation[a][d], scheme.normal_test[a][d],
          scheme.swapped_test[a][d]};
      if (std::accumulate(budgets.begin(), budgets.end(), 0L) == 0) continue;
      CellKey key = {inst.authors[a], inst.domains[d]};
      CellStories& cs = cells.at(key);
      std::vector<size_t> order(cs.story_ids.size());
      std::iota(order.begin(), order.end(), size_t{0});
      CounterRng cell_rng(seed, "cell/" + key.first + "/" + key.second);
      cell_rng.shuffle(order);
      std::vector<size_t> sizes;
      sizes.reserve(order.size());
      for (size_t i : order) sizes.push_back(cs.sizes[i]);
      std::vector<int> assignment;
      if (!assign_stories_to_groups(sizes, budgets, assignment)) {
        throw InsufficientData("cell (" + key.first + ", " + key.second +
                               ") became infeasible");
      }
      for (int g = 0; g < 4; ++g) {
        long taken = 0;
        for (size_t i = 0; i < order.size() && taken < budgets[g]; ++i) {
          if (assignment[i] != g) continue;
          for (const auto* chunk : cs.chunks[order[i]]) {
            if (taken >= budgets[g]) break;
            outs[g]->push_back(*chunk);
            ++taken;
          }
        }
      }
    }
  }
  return inst;
}

// --- instance serialization -------------------------------------------------

namespace {

json chunks_to_json(const std::vector<LabeledChunk>& chunks) {
  json arr = json::array();
  for (const auto& c : chunks) {
    arr.push_back({{"story_id", c.story_id},
                   {"author_id", c.author_id},
                   {"domain_id", c.domain_id},
                   {"chunk_index", c.chunk_index},
                   {"tokens", c.tokens}});
  }
  return arr;
}

std::vector<LabeledChunk> chunks_from_json(const json& arr) {
  std::vector<LabeledChunk> out;
  for (const auto& j : arr) {
    LabeledChunk c;
    c.story_id = j.at("story_id").get<std::string>();
    c.author_id = j.at("author_id").get<std::string>();
    c.domain_id = j.at("domain_id").get<std::string>();
    c.chunk_index = j.at("chunk_index").get<int>();
    c.tokens = j.at("tokens").get<std::vector<std::string>>();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

void ProblemInstance::save(std::ostream& out) const {
  json j = {{"scheme", to_string(scheme.kind)},
            {"num_authors", scheme.num_authors},
            {"num_domains", scheme.num_domains},
            {"train_budget", scheme.train},
            {"validation_budget", scheme.validation},
            {"normal_test_budget", scheme.normal_test},
            {"swapped_test_budget", scheme.swapped_test},
            {"authors", authors},
            {"domains", domains},
            {"seed", seed},
            {"train", chunks_to_json(train)},
            {"validation", chunks_to_json(validation)},
            {"normal_test", chunks_to_json(normal_test)},
            {"swapped_test", chunks_to_json(swapped_test)}};
  out << j.dump();
}

ProblemInstance ProblemInstance::load(std::istream& in) {
  json j = json::parse(in);
  ProblemInstance inst;
  inst.scheme.kind = scheme_from_string(j.at("scheme").get<std::string>());
  inst.scheme.num_authors = j.at("num_authors").get<int>();
  inst.scheme.num_domains = j.at("num_domains").get<int>();
  inst.scheme.train = j.at("train_budget").get<BudgetTable>();
  inst.scheme.validation = j.at("validation_budget").get<BudgetTable>();
  inst.scheme.normal_test = j.at("normal_test_budget").get<BudgetTable>();
  inst.scheme.swapped_test = j.at("swapped_test_budget").get<BudgetTable>();
  inst.authors = j.at("authors").get<std::vector<std::string>>();
  inst.domains = j.at("domains").get<std::vector<std::string>>();
  inst.seed = j.at("seed").get<uint64_t>();
  inst.train = chunks_from_json(j.at("train"));
  inst.validation = chunks_from_json(j.at("validation"));
  inst.normal_test = chunks_from_json(j.at("normal_test"));
  inst.swapped_test = chunks_from_json(j.at("swapped_test"));
  return inst;
}

// --- models -----------------------------------------------------------------

ModelSpec model_spec_from_string(const std::string& name) {
  ModelSpec spec;
  spec.id = name;
  std::string base = name;
  auto suffix = [&](const std::string& s) {
    if (base.size() > s.size() &&
        base.compare(base.size() - s.size(), s.size(), s) == 0) {
      base = base.substr(0, base.size() - s.size());
      return true;
    }
    return false;
  };
  if (suffix("_ma")) spec.distortion = DistortMode::MA;
  else if (suffix("_sa")) spec.distortion = DistortMode::SA;
  else if (suffix("_ex")) spec.distortion = DistortMode::EX;
  else if (suffix("_l2")) spec.distortion = DistortMode::L2;

  if (base == "nb") {
    spec.family = ModelSpec::Family::nb;
  } else if (base == "svm") {
    spec.family = ModelSpec::Family::svm;
  } else if (base == "encoder1" || base == "encoder2" ||
             base == "encoder1_plain" || base == "encoder2_plain") {
    if (spec.distortion) {
      throw ConfigError("distortion applies to trigram baselines only: " + name);
    }
    spec.family = ModelSpec::Family::encoder;
    spec.encoder.variant = base[7] == '1' ? EncoderVariant::encoder1
                                          : EncoderVariant::encoder2;
    spec.encoder.adversarial = base.find("_plain") == std::string::npos;
  } else {
    throw ConfigError("unknown model: " + name);
  }
  return spec;
}

namespace {

struct LabelMap {
  std::vector<std::string> ids;
  int index(const std::string& id) const {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw ConfigError("unknown label: " + id);
    return static_cast<int>(it - ids.begin());
  }
};

std::vector<double> per_class_accuracy(const std::vector<int>& preds,
                                       const std::vector<int>& truths,
                                       int num_classes) {
  std::vector<double> correct(num_classes, 0.0), total(num_classes, 0.0);
  for (size_t i = 0; i < truths.size(); ++i) {
    total[truths[i]] += 1.0;
    if (preds[i] == truths[i]) correct[truths[i]] += 1.0;
  }
  std::vector<double> acc(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    acc[c] = total[c] > 0 ? correct[c] / total[c] : 0.0;
  }
  return acc;
}

// Baseline path: detokenized (optionally distorted) chunk text to trigram
// vectors; the feature space and the distortion dictionary are fitted on the
// training split only.
struct BaselineData {
  TrigramSpace space;
  FrequentWordDictionary dict;
  std::vector<LabeledVector> train;
  std::vector<std::vector<Vector>> tests;  // one per requested test set
};

BaselineData prepare_baseline(
    const ProblemInstance& inst, const ModelSpec& model, const LabelMap& labels,
    const std::vector<const std::vector<LabeledChunk>*>& test_sets) {
  BaselineData data;
  if (model.distortion) {
    std::vector<std::string> train_tokens;
    for (const auto& c : inst.train) {
      train_tokens.insert(train_tokens.end(), c.tokens.begin(),
                          c.tokens.end());
    }
    data.dict = build_dictionary(train_tokens, model.dict_k);
  }
  auto text_of = [&](const LabeledChunk& c) {
    if (model.distortion) {
      return detokenize(distort(c.tokens, data.dict, *model.distortion));
    }
    return detokenize(c.tokens);
  };
  std::vector<std::string> train_texts;
  train_texts.reserve(inst.train.size());
  for (const auto& c : inst.train) train_texts.push_back(text_of(c));
  data.space = fit_trigram_space(train_texts, model.trigram_k);
  for (size_t i = 0; i < inst.train.size(); ++i) {
    data.train.push_back({extract_trigrams(train_texts[i], data.space),
                          labels.index(inst.train[i].author_id)});
  }
  for (const auto* set : test_sets) {
    std::vector<Vector> vecs;
    vecs.reserve(set->size());
    for (const auto& c : *set) {
      vecs.push_back(extract_trigrams(text_of(c), data.space));
    }
    data.tests.push_back(std::move(vecs));
  }
  return data;
}

std::function<int(const Vector&)> fit_baseline(const ModelSpec& model,
                                               const std::vector<LabeledVector>& train,
                                               uint64_t seed) {
  if (model.family == ModelSpec::Family::nb) {
    double alpha = model.nb_alpha;
    if (model.tune) {
      auto score = [&](const ParamPoint& p) {
        return cross_val_macro_accuracy(
            train, 3, seed, [&](const std::vector<LabeledVector>& tr) {
              NBModel m = nb_fit(tr, p.at("alpha"));
              return [m](const Vector& x) { return nb_predict(m, x).label; };
            });
      };
      CvResult cv = random_search_cv({{"alpha", 1e-3, 10.0, true}},
                                     model.tune_iters, seed, score);
      alpha = cv.best_params.at("alpha");
    }
    NBModel m = nb_fit(train, alpha);
    return [m](const Vector& x) { return nb_predict(m, x).label; };
  }
  double C = model.svm_C;
  if (model.tune) {
    auto score = [&](const ParamPoint& p) {
      return cross_val_macro_accuracy(
          train, 3, seed, [&](const std::vector<LabeledVector>& tr) {
            LinearSVMModel m = svm_fit(tr, p.at("C"), model.svm_epochs, seed);
            return [m](const Vector& x) { return svm_predict(m, x).label; };
          });
    };
    CvResult cv = random_search_cv({{"C", 1e-2, 100.0, true}},
                                   model.tune_iters, seed, score);
    C = cv.best_params.at("C");
  }
  LinearSVMModel m = svm_fit(train, C, model.svm_epochs, seed);
  return [m](const Vector& x) { return svm_predict(m, x).label; };
}

std::vector<EncodedChunk> encode_all(const std::vector<LabeledChunk>& chunks,
                                     const Vocabulary& vocab) {
  std::vector<EncodedChunk> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) out.push_back(encode_chunk(c, vocab));
  return out;
}

std::vector<int> argmax_cols(const Matrix& probs) {
  std::vector<int> out(probs.cols());
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    Eigen::Index arg;
    probs.col(j).maxCoeff(&arg);
    out[j] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace

Report run_scheme(const ProblemInstance& inst, const ModelSpec& model,
                  const RunContext& ctx) {
  auto t0 = std::chrono::steady_clock::now();
  Report report;
  report.model_id = model.id;
  report.scheme = to_string(inst.scheme.kind);
  report.seed = inst.seed;

  LabelMap labels{inst.authors};
  const int A = static_cast<int>(inst.authors.size());
  auto truths_of = [&](const std::vector<LabeledChunk>& set) {
    std::vector<int> t;
    t.reserve(set.size());
    for (const auto& c : set) t.push_back(labels.index(c.author_id));
    return t;
  };
  const bool has_swapped = !inst.swapped_test.empty();

  std::vector<int> normal_preds, swapped_preds;
  if (model.family == ModelSpec::Family::encoder) {
    if (!ctx.vocab) throw ConfigError("encoder models need a vocabulary");
    EncoderConfig cfg = model.encoder;
    cfg.vocab_size = ctx.vocab->total_size();
    if (!inst.train.empty()) {
      cfg.chunk_len = static_cast<int>(inst.train[0].tokens.size());
    }
    cfg.seed = cfg.seed ^ inst.seed;
    StyleEncoderModel enc = train_encoder(
        cfg, encode_all(inst.train, *ctx.vocab),
        encode_all(inst.validation, *ctx.vocab));
    // map the model's label order back to instance slots
    auto predict_set = [&](const std::vector<LabeledChunk>& set) {
      Matrix probs = predict_author(enc, encode_all(set, *ctx.vocab));
      std::vector<int> preds;
      for (int p : argmax_cols(probs)) {
        preds.push_back(labels.index(enc.author_ids[p]));
      }
      return preds;
    };
    normal_preds = predict_set(inst.normal_test);
    if (has_swapped) swapped_preds = predict_set(inst.swapped_test);
    if (enc.best_epoch >= 0) {
      report.domain_macro = enc.history[enc.best_epoch].domain_macro;
      report.lower_bound_b = enc.history[enc.best_epoch].b;
    }
  } else {
    std::vector<const std::vector<LabeledChunk>*> test_sets = {
        &inst.normal_test};
    if (has_swapped) test_sets.push_back(&inst.swapped_test);
    BaselineData data = prepare_baseline(inst, model, labels, test_sets);
    auto predictor = fit_baseline(model, data.train, inst.seed);
    for (const auto& x : data.tests[0]) normal_preds.push_back(predictor(x));
    if (has_swapped) {
      for (const auto& x : data.tests[1]) swapped_preds.push_back(predictor(x));
    }
  }

  auto normal_truths = truths_of(inst.normal_test);
  report.normal_macro = macro_accuracy(normal_preds, normal_truths);
  report.per_class_normal =
      per_class_accuracy(normal_preds, normal_truths, A);
  if (has_swapped) {
    report.swapped_macro =
        macro_accuracy(swapped_preds, truths_of(inst.swapped_test));
    report.delta = *report.swapped_macro - report.normal_macro;
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

std::vector<std::pair<int, double>> chunk_sweep(
    const ProblemInstance& inst, const ModelSpec& model,
    const std::vector<int>& chunk_counts, const RunContext& ctx) {
  std::vector<std::pair<int, double>> curve;
  for (int count : chunk_counts) {
    ProblemInstance sub = inst;
    sub.train.clear();
    std::map<CellKey, int> taken;
    for (const auto& c : inst.train) {
      if (taken[{c.author_id, c.domain_id}] < count) {
        sub.train.push_back(c);
        ++taken[{c.author_id, c.domain_id}];
      }
    }
    sub.swapped_test.clear();
    Report r = run_scheme(sub, model, ctx);
    curve.emplace_back(count, r.normal_macro);
  }
  return curve;
}

double retrain_probe(const StyleEncoderModel& frozen,
                     const std::vector<LabeledChunk>& probe_train,
                     const std::vector<LabeledChunk>& probe_test,
                     const Vocabulary& vocab, uint64_t seed) {
  std::set<std::string> domain_set;
  for (const auto& c : probe_train) domain_set.insert(c.domain_id);
  if (domain_set.size() < 2) {
    throw ConfigError("probe needs >= 2 fandoms");
  }
  LabelMap domains{{domain_set.begin(), domain_set.end()}};

  Matrix train_styles = encode(frozen, encode_all(probe_train, vocab));
  Matrix test_styles = encode(frozen, encode_all(probe_test, vocab));
  const int style_dim = static_cast<int>(train_styles.rows());
  const int D = static_cast<int>(domains.ids.size());
  const int width = frozen.config.head_width;

  ParameterStore head;
  head.add("fc.W", width, style_dim) =
      init_params(width, style_dim, InitKind::he, seed, "probe/fc");
  head.add("fc.b", width, 1);
  head.add("out.W", D, width) =
      init_params(D, width, InitKind::xavier, seed, "probe/out");
  head.add("out.b", D, 1);

  std::vector<int> train_labels;
  std::vector<double> w(probe_train.size(),
                        1.0 / static_cast<double>(probe_train.size()));
  for (const auto& c : probe_train) train_labels.push_back(domains.index(c.domain_id));

  double best_loss = std::numeric_limits<double>::infinity();
  int best_age = 0;
  for (int epoch = 0; epoch < 500 && best_age < 25; ++epoch) {
    head.zero_grads();
    FcCache fc_cache, out_cache;
    Matrix h = fc_forward(train_styles, head.at("fc.W").value,
                          head.at("fc.b").value.col(0), Activation::relu,
                          &fc_cache);
    Matrix logits = fc_forward(h, head.at("out.W").value,
                               head.at("out.b").value.col(0),
                               Activation::identity, &out_cache);
    XentResult x = softmax_cross_entropy(logits, train_labels, w);
    Vector gb = Vector::Zero(D);
    Matrix g = fc_backward(x.grad_logits, out_cache, head.at("out.W").value,
                           Activation::identity, head.at("out.W").grad, gb);
    head.at("out.b").grad.col(0) += gb;
    Vector gfb = Vector::Zero(width);
    fc_backward(g, fc_cache, head.at("fc.W").value, Activation::relu,
                head.at("fc.W").grad, gfb);
    head.at("fc.b").grad.col(0) += gfb;
    adam_update(head, 1e-2);
    if (x.loss < best_loss - 1e-6) {
      best_loss = x.loss;
      best_age = 0;
    } else {
      ++best_age;
    }
  }

  FcCache fc_cache, out_cache;
  Matrix h = fc_forward(test_styles, head.at("fc.W").value,
                        head.at("fc.b").value.col(0), Activation::relu,
                        &fc_cache);
  Matrix logits = fc_forward(h, head.at("out.W").value,
                             head.at("out.b").value.col(0),
                             Activation::identity, &out_cache);
  std::vector<int> preds = argmax_cols(logits);
  std::vector<int> truths;
  for (const auto& c : probe_test) truths.push_back(domains.index(c.domain_id));
  return macro_accuracy(preds, truths);
}

// --- aggregation ------------------------------------------------------------

SummaryStat summarize(std::vector<double> values) {
  SummaryStat s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.n = static_cast<int>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
  s.min = values.front();
  s.max = values.back();
  auto quantile = [&](double q) {
    double pos = q * (s.n - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  s.q25 = quantile(0.25);
  s.median = quantile(0.5);
  s.q75 = quantile(0.75);
  return s;
}

std::map<std::string, std::map<std::string, SummaryStat>> aggregate(
    const std::vector<Report>& reports) {
  if (reports.empty()) throw ConfigError("aggregate: no reports");
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  for (const auto& r : reports) {
    values[r.model_id]["normal"].push_back(r.normal_macro);
    if (r.swapped_macro) {
      values[r.model_id]["swapped"].push_back(*r.swapped_macro);
      values[r.model_id]["delta"].push_back(r.delta);
    }
  }
  std::map<std::string, std::map<std::string, SummaryStat>> out;
  for (auto& [model, metrics] : values) {
    for (auto& [metric, vals] : metrics) {
      out[model][metric] = summarize(vals);
    }
  }
  return out;
}

void write_reports_json(std::ostream& out, const std::vector<Report>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    // runtime stays out of the report so identical runs are byte-identical
    json j = {{"model", r.model_id},
              {"scheme", r.scheme},
              {"seed", r.seed},
              {"normal_macro", r.normal_macro},
              {"delta", r.delta},
              {"per_class_normal", r.per_class_normal}};
    if (r.swapped_macro) j["swapped_macro"] = *r.swapped_macro;
    if (r.domain_macro) j["domain_macro"] = *r.domain_macro;
    if (r.lower_bound_b) j["lower_bound_b"] = *r.lower_bound_b;
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

void write_reports_csv(std::ostream& out, const std::vector<Report>& reports) {
  out << "scheme,model,seed,normal,swapped,delta\n";
  for (const auto& r : reports) {
    out << r.scheme << ',' << r.model_id << ',' << r.seed << ','
        << r.normal_macro << ',';
    if (r.swapped_macro) out << *r.swapped_macro;
    out << ',' << r.delta << '\n';
  }
}

void write_summary_csv(
    std::ostream& out,
    const std::map<std::string, std::map<std::string, SummaryStat>>& summary) {
  out << "model,metric,n,mean,min,q25,median,q75,max\n";
  for (const auto& [model, metrics] : summary) {
    for (const auto& [metric, s] : metrics) {
      out << model << ',' << metric << ',' << s.n << ',' << s.mean << ','
          << s.min << ',' << s.q25 << ',' << s.median << ',' << s.q75 << ','
          << s.max << '\n';
    }
  }
}

}  // namespace stylo
