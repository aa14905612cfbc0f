#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stylo/linalg.hpp"
#include "stylo/nn.hpp"
#include "stylo/vocab.hpp"

namespace stylo {

enum class EncoderVariant { encoder1, encoder2 };

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::encoder1;
  int vocab_size = 2013;
  int chunk_len = 500;
  int hidden_units = 256;
  std::vector<int> fc_widths = {64, 64};
  int head_width = 64;
  double dropout_rate = 0.5;
  double lr = 1e-5;  // 1e-3 for the 10-author setup
  int batch_size = 400;
  uint64_t seed = 1;
  int encoder2_n = 4;
  std::vector<double> encoder2_lambdas;  // empty -> linear ramp i / sum(j)
  double beta_gamma = 2.0;
  double beta_cap = 0.5;
  bool adversarial = true;
  int max_epochs = 50;
  int patience = 10;

  // Resolves defaults and checks invariants (lambdas non-negative, strictly
  // increasing, summing to 1). Throws ConfigError.
  void validate();
};

// Per-(author, domain) training counts and the column-normalized conditional
// P(D|A): columns are authors and sum to 1.
struct ActivityMatrix {
  Matrix counts;  // domains x authors
  Matrix N;       // domains x authors, columns normalized
};

struct EpochStats {
  double author_macro = 0.0;
  double domain_macro = 0.0;
  double b = 0.0;
  double beta_d = 0.0;
  double loss = 0.0;
};

struct StyleEncoderModel {
  EncoderConfig config;
  ParameterStore params;  // includes batchnorm running stats (non-trainable)
  std::vector<std::string> author_ids;  // label order
  std::vector<std::string> domain_ids;
  ActivityMatrix activity;
  std::vector<EpochStats> history;
  int best_epoch = -1;

  int author_index(const std::string& id) const;
  int domain_index(const std::string& id) const;

  void save(std::ostream& out) const;
  static StyleEncoderModel load(std::istream& in);
  void save_file(const std::string& path) const;
  static StyleEncoderModel load_file(const std::string& path);
};

// --- loss machinery ---------------------------------------------------------

// Weight m/n_A per text, rescaled so the mean weight over all texts is 1.
std::vector<double> compute_class_weights(const std::vector<int>& labels);

ActivityMatrix build_activity_matrix(const std::vector<int>& author_labels,
                                     const std::vector<int>& domain_labels,
                                     int num_authors, int num_domains);

// author_probs: num_authors x batch, columns sum to 1. Returns the macro
// accuracy of argmax(N * p) against the true domains (ties -> lowest index).
double domain_lower_bound(const Matrix& author_probs, const Matrix& N,
                          const std::vector<int>& true_domains);

// beta_d = clamp(gamma * (domain_acc - b), 0, cap)
double beta_schedule(double domain_macro_acc, double b, double gamma,
                     double cap);

double combined_loss(double author_loss, double domain_loss, double beta_d);

double encoder2_author_loss(const std::vector<double>& prefix_losses,
                            const std::vector<double>& lambdas);

// --- training and inference -------------------------------------------------

StyleEncoderModel train_encoder(EncoderConfig config,
                                const std::vector<EncodedChunk>& train,
                                const std::vector<EncodedChunk>& validation);

// Style vectors for a batch of chunks; deterministic (dropout off, batchnorm
// running stats). Columns are chunks.
Matrix encode(const StyleEncoderModel& model,
              const std::vector<EncodedChunk>& chunks);

// Posterior columns per chunk.
Matrix predict_author(const StyleEncoderModel& model,
                      const std::vector<EncodedChunk>& chunks);
Matrix predict_domain(const StyleEncoderModel& model,
                      const std::vector<EncodedChunk>& chunks);

// Internal gradient plumbing exposed for the routing tests: runs one batch
// forward+backward and leaves gradients in model.params. Returns
// (author_loss, domain_loss). force_beta overrides the schedule.
std::pair<double, double> train_batch_gradients(
    StyleEncoderModel& model, const std::vector<EncodedChunk>& batch,
    double beta_d, bool reverse_domain, uint64_t dropout_epoch,
    uint64_t dropout_batch);

}  // namespace stylo
