#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stylo/distort.hpp"
#include "stylo/ingest.hpp"
#include "stylo/trainer.hpp"
#include "stylo/trigram.hpp"
#include "stylo/vocab.hpp"

namespace stylo {

enum class SchemeKind {
  traditional,
  zero_knowledge_swap,
  high_imbalance_swap,
  cross_fandom,
  probe
};

SchemeKind scheme_from_string(const std::string& s);
std::string to_string(SchemeKind k);

// Per-cell chunk counts for a set of candidate authors and domains; row =
// author slot, column = domain slot.
using BudgetTable = std::vector<std::vector<int>>;

struct SchemeSpec {
  SchemeKind kind = SchemeKind::zero_knowledge_swap;
  int num_authors = 2;
  int num_domains = 2;
  BudgetTable train;
  BudgetTable validation;
  BudgetTable normal_test;
  BudgetTable swapped_test;  // all-zero when the scheme has no swapped test
};

struct SchemeScale {
  int train_major = 200;  // diagonal training cells
  int train_minor = 10;   // off-diagonal cells in the high-imbalance design
  int val_major = 100;
  int val_minor = 5;
  int test = 100;  // the tables' "max", realized as chunks per occupied cell
};

SchemeSpec make_scheme(SchemeKind kind, const SchemeScale& scale = {});

struct ProblemInstance {
  SchemeSpec scheme;
  std::vector<std::string> authors;  // chosen ids, slot order
  std::vector<std::string> domains;
  std::vector<LabeledChunk> train;
  std::vector<LabeledChunk> validation;
  std::vector<LabeledChunk> normal_test;
  std::vector<LabeledChunk> swapped_test;
  uint64_t seed = 0;

  void save(std::ostream& out) const;
  static ProblemInstance load(std::istream& in);
};

// Uniform seeded choice among the (author tuple, domain tuple) combinations
// whose cells can satisfy every budget story-disjointly.
ProblemInstance sample_instance(const std::vector<LabeledChunk>& corpus,
                                const SchemeSpec& scheme, uint64_t seed);

// --- models -----------------------------------------------------------------

struct ModelSpec {
  enum class Family { nb, svm, encoder };
  Family family = Family::nb;
  std::string id;  // e.g. "nb", "svm_sa", "encoder1", "encoder2_plain"
  std::optional<DistortMode> distortion;
  double nb_alpha = 1.0;
  // hinge slack must outweigh the regularizer at the scale of normalized
  // trigram frequencies, hence the large default C
  double svm_C = 100.0;
  int svm_epochs = 120;
  bool tune = false;  // random-search 3-fold CV over alpha / C
  int tune_iters = 10;
  int trigram_k = 5000;
  int dict_k = 60;
  EncoderConfig encoder;
};

// Names: nb, svm, optionally suffixed _ma/_sa/_ex/_l2; encoder1, encoder2,
// and encoder1_plain / encoder2_plain for the non-adversarial variants.
ModelSpec model_spec_from_string(const std::string& name);

struct Report {
  std::string model_id;
  std::string scheme;
  uint64_t seed = 0;
  double normal_macro = 0.0;
  std::optional<double> swapped_macro;
  double delta = 0.0;  // swapped - normal when both present
  std::vector<double> per_class_normal;  // per author slot, normal test
  double runtime_seconds = 0.0;
  // encoder-only extras, taken at the best checkpoint
  std::optional<double> domain_macro;
  std::optional<double> lower_bound_b;
};

struct RunContext {
  const Vocabulary* vocab = nullptr;  // required for encoder models
};

Report run_scheme(const ProblemInstance& instance, const ModelSpec& model,
                  const RunContext& ctx = {});

// Accuracy curve over nested training subsets (counts are chunks per
// (author, domain) training cell).
std::vector<std::pair<int, double>> chunk_sweep(
    const ProblemInstance& instance, const ModelSpec& model,
    const std::vector<int>& chunk_counts, const RunContext& ctx = {});

// Freezes the encoder, trains a fresh domain head on the probe train set and
// returns the held-out fandom macro accuracy. Requires >= 2 probe domains.
double retrain_probe(const StyleEncoderModel& frozen,
                     const std::vector<LabeledChunk>& probe_train,
                     const std::vector<LabeledChunk>& probe_test,
                     const Vocabulary& vocab, uint64_t seed);

// --- aggregation and reporting ----------------------------------------------

struct SummaryStat {
  int n = 0;
  double mean = 0.0, min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

SummaryStat summarize(std::vector<double> values);

// model id -> metric name -> summary (metrics: normal, swapped, delta)
std::map<std::string, std::map<std::string, SummaryStat>> aggregate(
    const std::vector<Report>& reports);

void write_reports_json(std::ostream& out, const std::vector<Report>& reports);
void write_reports_csv(std::ostream& out, const std::vector<Report>& reports);
void write_summary_csv(
    std::ostream& out,
    const std::map<std::string, std::map<std::string, SummaryStat>>& summary);

}  // namespace stylo
