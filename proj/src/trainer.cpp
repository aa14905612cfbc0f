#include "stylo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stylo/errors.hpp"
#include "stylo/trigram.hpp"  // macro_accuracy

namespace stylo {

using nlohmann::json;

void EncoderConfig::validate() {
  if (vocab_size < 13) throw ConfigError("vocab_size too small");
  if (chunk_len < 1) throw ConfigError("chunk_len must be >= 1");
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (fc_widths.empty()) throw ConfigError("fc_widths must be non-empty");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("dropout_rate in [0, 1)");
  }
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (variant == EncoderVariant::encoder2) {
    if (encoder2_n < 1) throw ConfigError("encoder2_n must be >= 1");
    if (chunk_len % encoder2_n != 0) {
      throw ConfigError("chunk_len must be divisible by encoder2_n");
    }
    if (encoder2_lambdas.empty()) {
      double denom = encoder2_n * (encoder2_n + 1) / 2.0;
      for (int i = 1; i <= encoder2_n; ++i) {
        encoder2_lambdas.push_back(i / denom);
      }
    }
    if (static_cast<int>(encoder2_lambdas.size()) != encoder2_n) {
      throw ConfigError("encoder2_lambdas must have length n");
    }
    double sum = 0.0;
    for (size_t i = 0; i < encoder2_lambdas.size(); ++i) {
      if (encoder2_lambdas[i] < 0.0) throw ConfigError("lambdas must be >= 0");
      if (i > 0 && encoder2_lambdas[i] <= encoder2_lambdas[i - 1]) {
        throw ConfigError("lambdas must be strictly increasing");
      }
      sum += encoder2_lambdas[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("lambdas must sum to 1");
  }
  if (beta_cap < 0.0 || beta_cap > 1.0) throw ConfigError("beta_cap in [0,1]");
}

// --- loss machinery ---------------------------------------------------------

std::vector<double> compute_class_weights(const std::vector<int>& labels) {
  if (labels.empty()) throw ConfigError("compute_class_weights: empty labels");
  int m = 0;
  for (int l : labels) m = std::max(m, l + 1);
  std::vector<double> count(m, 0.0);
  for (int l : labels) count[l] += 1.0;
  for (int c = 0; c < m; ++c) {
    if (count[c] == 0.0) {
      throw ConfigError("compute_class_weights: class " + std::to_string(c) +
                        " absent");
    }
  }
  const double total = static_cast<double>(labels.size());
  // raw m/n_A, rescaled by T/m^2 so the mean weight over texts is 1
  std::vector<double> weights(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    weights[i] = total / (static_cast<double>(m) * count[labels[i]]);
  }
  return weights;
}

ActivityMatrix build_activity_matrix(const std::vector<int>& author_labels,
                                     const std::vector<int>& domain_labels,
                                     int num_authors, int num_domains) {
  if (author_labels.size() != domain_labels.size()) {
    throw ConfigError("build_activity_matrix: label size mismatch");
  }
  ActivityMatrix am;
  am.counts = Matrix::Zero(num_domains, num_authors);
  for (size_t i = 0; i < author_labels.size(); ++i) {
    am.counts(domain_labels[i], author_labels[i]) += 1.0;
  }
  am.N = am.counts;
  for (int a = 0; a < num_authors; ++a) {
    double colsum = am.N.col(a).sum();
    if (colsum == 0.0) {
      throw ConfigError("activity matrix: author " + std::to_string(a) +
                        " has no texts");
    }
    am.N.col(a) /= colsum;
  }
  return am;
}

double domain_lower_bound(const Matrix& author_probs, const Matrix& N,
                          const std::vector<int>& true_domains) {
  Matrix q = N * author_probs;
  std::vector<int> preds(q.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    Eigen::Index arg;
    q.col(j).maxCoeff(&arg);
    preds[j] = static_cast<int>(arg);
  }
  return macro_accuracy(preds, true_domains);
}

double beta_schedule(double domain_macro_acc, double b, double gamma,
                     double cap) {
  return std::clamp(gamma * (domain_macro_acc - b), 0.0, cap);
}

double combined_loss(double author_loss, double domain_loss, double beta_d) {
  return beta_d * domain_loss + (1.0 - beta_d) * author_loss;
}

double encoder2_author_loss(const std::vector<double>& prefix_losses,
                            const std::vector<double>& lambdas) {
  if (prefix_losses.size() != lambdas.size()) {
    throw ConfigError("encoder2_author_loss: length mismatch");
  }
  double loss = 0.0;
  for (size_t i = 0; i < lambdas.size(); ++i) {
    loss += lambdas[i] * prefix_losses[i];
  }
  return loss;
}

// --- model ------------------------------------------------------------------

int StyleEncoderModel::author_index(const std::string& id) const {
  auto it = std::find(author_ids.begin(), author_ids.end(), id);
  if (it == author_ids.end()) throw ConfigError("unknown author: " + id);
  return static_cast<int>(it - author_ids.begin());
}

int StyleEncoderModel::domain_index(const std::string& id) const {
  auto it = std::find(domain_ids.begin(), domain_ids.end(), id);
  if (it == domain_ids.end()) throw ConfigError("unknown domain: " + id);
  return static_cast<int>(it - domain_ids.begin());
}

namespace {

json config_to_json(const EncoderConfig& c) {
  return {{"variant", c.variant == EncoderVariant::encoder1 ? 1 : 2},
          {"vocab_size", c.vocab_size},
          {"chunk_len", c.chunk_len},
          {"hidden_units", c.hidden_units},
          {"fc_widths", c.fc_widths},
          {"head_width", c.head_width},
          {"dropout_rate", c.dropout_rate},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"encoder2_n", c.encoder2_n},
          {"encoder2_lambdas", c.encoder2_lambdas},
          {"beta_gamma", c.beta_gamma},
          {"beta_cap", c.beta_cap},
          {"adversarial", c.adversarial},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.variant = j.at("variant").get<int>() == 1 ? EncoderVariant::encoder1
                                              : EncoderVariant::encoder2;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.chunk_len = j.at("chunk_len").get<int>();
  c.hidden_units = j.at("hidden_units").get<int>();
  c.fc_widths = j.at("fc_widths").get<std::vector<int>>();
  c.head_width = j.at("head_width").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.lr = j.at("lr").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.encoder2_n = j.at("encoder2_n").get<int>();
  c.encoder2_lambdas = j.at("encoder2_lambdas").get<std::vector<double>>();
  c.beta_gamma = j.at("beta_gamma").get<double>();
  c.beta_cap = j.at("beta_cap").get<double>();
  c.adversarial = j.at("adversarial").get<bool>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  return c;
}

json matrix_to_json(const Matrix& m) {
  json values = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", values}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& values = j.at("values");
  size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index jj = 0; jj < m.cols(); ++jj) {
      m(i, jj) = values.at(k++).get<double>();
    }
  }
  return m;
}

}  // namespace

void StyleEncoderModel::save(std::ostream& out) const {
  std::ostringstream params_buf;
  params.save(params_buf);
  json hist = json::array();
  for (const auto& e : history) {
    hist.push_back({{"author_macro", e.author_macro},
                    {"domain_macro", e.domain_macro},
                    {"b", e.b},
                    {"beta_d", e.beta_d},
                    {"loss", e.loss}});
  }
  json j = {{"format_version", 1},
            {"config", config_to_json(config)},
            {"params", json::parse(params_buf.str())},
            {"author_ids", author_ids},
            {"domain_ids", domain_ids},
            {"activity_counts", matrix_to_json(activity.counts)},
            {"activity_N", matrix_to_json(activity.N)},
            {"history", hist},
            {"best_epoch", best_epoch}};
  out << j.dump();
}

StyleEncoderModel StyleEncoderModel::load(std::istream& in) {
  json j = json::parse(in);
  StyleEncoderModel m;
  m.config = config_from_json(j.at("config"));
  std::istringstream params_buf(j.at("params").dump());
  m.params = ParameterStore::load(params_buf);
  m.author_ids = j.at("author_ids").get<std::vector<std::string>>();
  m.domain_ids = j.at("domain_ids").get<std::vector<std::string>>();
  m.activity.counts = matrix_from_json(j.at("activity_counts"));
  m.activity.N = matrix_from_json(j.at("activity_N"));
  for (const auto& e : j.at("history")) {
    EpochStats s;
    s.author_macro = e.at("author_macro").get<double>();
    s.domain_macro = e.at("domain_macro").get<double>();
    s.b = e.at("b").get<double>();
    s.beta_d = e.at("beta_d").get<double>();
    s.loss = e.at("loss").get<double>();
    m.history.push_back(s);
  }
  m.best_epoch = j.at("best_epoch").get<int>();
  return m;
}

void StyleEncoderModel::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file: " + path);
  save(out);
}

StyleEncoderModel StyleEncoderModel::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path);
  return load(in);
}

// --- forward / backward -----------------------------------------------------

namespace {

struct SharedLayerCache {
  FcCache fc;
  BnCache bn;
  Matrix bn_out;  // pre-relu
};

struct BatchCache {
  LstmCache lstm;
  std::vector<int> taps;  // lstm steps whose hidden state feeds the stack
  std::vector<SharedLayerCache> enc;
  Matrix style;  // width x (taps * B)
  FcCache author_fc, author_out, domain_fc, domain_out;
  Matrix author_mask, domain_mask;
  int batch = 0;
};

std::vector<int> tap_steps(const EncoderConfig& cfg) {
  if (cfg.variant == EncoderVariant::encoder1) return {cfg.chunk_len - 1};
  std::vector<int> taps;
  int stride = cfg.chunk_len / cfg.encoder2_n;
  for (int i = 1; i <= cfg.encoder2_n; ++i) taps.push_back(i * stride - 1);
  return taps;
}

BatchNormState bn_state_from_store(const ParameterStore& store,
                                   const std::string& prefix) {
  BatchNormState bn;
  bn.gamma = store.at(prefix + ".gamma").value.col(0);
  bn.beta = store.at(prefix + ".beta").value.col(0);
  bn.running_mean = store.at(prefix + ".rmean").value.col(0);
  bn.running_var = store.at(prefix + ".rvar").value.col(0);
  return bn;
}

void bn_state_to_store(ParameterStore& store, const std::string& prefix,
                       const BatchNormState& bn) {
  store.at(prefix + ".rmean").value.col(0) = bn.running_mean;
  store.at(prefix + ".rvar").value.col(0) = bn.running_var;
}

// Forward through LSTM, shared stack and both heads. In train mode, batchnorm
// uses batch statistics and dropout draws masks from named counter streams.
void forward_batch(StyleEncoderModel& model,
                   const std::vector<std::vector<int>>& seq, bool train,
                   uint64_t drop_epoch, uint64_t drop_batch, BatchCache& cache,
                   Matrix& author_logits, Matrix& domain_logits) {
  const EncoderConfig& cfg = model.config;
  ParameterStore& P = model.params;
  cache.taps = tap_steps(cfg);
  cache.batch = static_cast<int>(seq.empty() ? 0 : seq[0].size());
  const int B = cache.batch;

  lstm_forward(seq, P.at("lstm.Wx").value, P.at("lstm.Wh").value,
               P.at("lstm.b").value.col(0), &cache.lstm);

  // gather tapped hidden states into one wide batch
  const int n_taps = static_cast<int>(cache.taps.size());
  Matrix x(cfg.hidden_units, n_taps * B);
  for (int t = 0; t < n_taps; ++t) {
    x.middleCols(t * B, B) = cache.lstm.h[cache.taps[t]];
  }

  cache.enc.resize(cfg.fc_widths.size());
  for (size_t l = 0; l < cfg.fc_widths.size(); ++l) {
    std::string fc = "enc.fc" + std::to_string(l);
    std::string bnp = "enc.bn" + std::to_string(l);
    Matrix pre = fc_forward(x, P.at(fc + ".W").value,
                            P.at(fc + ".b").value.col(0), Activation::identity,
                            &cache.enc[l].fc);
    BatchNormState bn = bn_state_from_store(P, bnp);
    cache.enc[l].bn_out =
        batchnorm_forward(pre, bn, train, &cache.enc[l].bn);
    if (train) bn_state_to_store(P, bnp, bn);
    x = cache.enc[l].bn_out.cwiseMax(0.0);
  }
  cache.style = x;

  // author head sees every tap; domain head only the full-length columns
  std::string tag = "/" + std::to_string(drop_epoch) + "/" +
                    std::to_string(drop_batch);
  CounterRng author_rng(cfg.seed, "drop/author" + tag);
  Matrix ah = fc_forward(cache.style, P.at("author.fc.W").value,
                         P.at("author.fc.b").value.col(0), Activation::relu,
                         &cache.author_fc);
  ah = dropout_forward(ah, cfg.dropout_rate, train, author_rng,
                       &cache.author_mask);
  author_logits = fc_forward(ah, P.at("author.out.W").value,
                             P.at("author.out.b").value.col(0),
                             Activation::identity, &cache.author_out);

  Matrix style_full = cache.style.rightCols(B);
  CounterRng domain_rng(cfg.seed, "drop/domain" + tag);
  Matrix dh = fc_forward(grad_reverse_forward(style_full),
                         P.at("domain.fc.W").value,
                         P.at("domain.fc.b").value.col(0), Activation::relu,
                         &cache.domain_fc);
  dh = dropout_forward(dh, cfg.dropout_rate, train, domain_rng,
                       &cache.domain_mask);
  domain_logits = fc_forward(dh, P.at("domain.out.W").value,
                             P.at("domain.out.b").value.col(0),
                             Activation::identity, &cache.domain_out);
}

// Backward from style-vector gradients through the shared stack and LSTM.
void backward_encoder(StyleEncoderModel& model, BatchCache& cache,
                      const Matrix& grad_style) {
  const EncoderConfig& cfg = model.config;
  ParameterStore& P = model.params;
  const int B = cache.batch;
  Matrix g = grad_style;
  for (int l = static_cast<int>(cfg.fc_widths.size()) - 1; l >= 0; --l) {
    std::string fc = "enc.fc" + std::to_string(l);
    std::string bnp = "enc.bn" + std::to_string(l);
    // relu
    g = (cache.enc[l].bn_out.array() > 0.0)
            .select(g, Matrix::Zero(g.rows(), g.cols()));
    // batchnorm
    BatchNormState bn = bn_state_from_store(P, bnp);
    Vector grad_gamma = Vector::Zero(bn.gamma.size());
    Vector grad_beta = Vector::Zero(bn.beta.size());
    g = batchnorm_backward(g, cache.enc[l].bn, bn, grad_gamma, grad_beta);
    P.at(bnp + ".gamma").grad.col(0) += grad_gamma;
    P.at(bnp + ".beta").grad.col(0) += grad_beta;
    // fc
    Vector grad_b = Vector::Zero(P.at(fc + ".b").value.rows());
    g = fc_backward(g, cache.enc[l].fc, P.at(fc + ".W").value,
                    Activation::identity, P.at(fc + ".W").grad, grad_b);
    P.at(fc + ".b").grad.col(0) += grad_b;
  }
  // split tap columns and run BPTT
  std::vector<std::pair<int, Matrix>> grad_h_at;
  for (size_t t = 0; t < cache.taps.size(); ++t) {
    grad_h_at.emplace_back(cache.taps[t],
                           g.middleCols(static_cast<int>(t) * B, B));
  }
  Vector grad_lstm_b = Vector::Zero(P.at("lstm.b").value.rows());
  lstm_backward(grad_h_at, cache.lstm, P.at("lstm.Wx").value,
                P.at("lstm.Wh").value, P.at("lstm.Wx").grad,
                P.at("lstm.Wh").grad, grad_lstm_b);
  P.at("lstm.b").grad.col(0) += grad_lstm_b;
}

Matrix head_backward(StyleEncoderModel& model, const std::string& head,
                     BatchCache& cache, const Matrix& grad_logits) {
  ParameterStore& P = model.params;
  FcCache& out_cache = head == "author" ? cache.author_out : cache.domain_out;
  FcCache& fc_cache = head == "author" ? cache.author_fc : cache.domain_fc;
  Matrix& mask = head == "author" ? cache.author_mask : cache.domain_mask;

  Vector grad_ob = Vector::Zero(P.at(head + ".out.b").value.rows());
  Matrix g = fc_backward(grad_logits, out_cache, P.at(head + ".out.W").value,
                         Activation::identity, P.at(head + ".out.W").grad,
                         grad_ob);
  P.at(head + ".out.b").grad.col(0) += grad_ob;
  g = g.cwiseProduct(mask);
  Vector grad_fb = Vector::Zero(P.at(head + ".fc.b").value.rows());
  g = fc_backward(g, fc_cache, P.at(head + ".fc.W").value, Activation::relu,
                  P.at(head + ".fc.W").grad, grad_fb);
  P.at(head + ".fc.b").grad.col(0) += grad_fb;
  return g;  // gradient wrt the head's style input
}

std::vector<std::vector<int>> to_seq(const std::vector<EncodedChunk>& chunks,
                                     int chunk_len, int vocab_size) {
  std::vector<std::vector<int>> seq(chunk_len,
                                    std::vector<int>(chunks.size(), 0));
  for (size_t b = 0; b < chunks.size(); ++b) {
    if (static_cast<int>(chunks[b].indices.size()) != chunk_len) {
      throw ConfigError("chunk length does not match config.chunk_len");
    }
    for (int t = 0; t < chunk_len; ++t) {
      int idx = chunks[b].indices[t];
      if (idx < 0 || idx >= vocab_size) {
        throw ConfigError("chunk index out of vocabulary range");
      }
      seq[t][b] = idx;
    }
  }
  return seq;
}

void init_model_params(StyleEncoderModel& model) {
  const EncoderConfig& cfg = model.config;
  ParameterStore& P = model.params;
  const int H = cfg.hidden_units;
  const int A = static_cast<int>(model.author_ids.size());
  const int D = static_cast<int>(model.domain_ids.size());
  uint64_t seed = cfg.seed;

  P.add("lstm.Wx", 4 * H, cfg.vocab_size) =
      init_params(4 * H, cfg.vocab_size, InitKind::xavier, seed, "init/lstm.Wx");
  P.add("lstm.Wh", 4 * H, H) =
      init_params(4 * H, H, InitKind::xavier, seed, "init/lstm.Wh");
  // unit forget-gate bias so the cell can integrate over a whole chunk
  P.add("lstm.b", 4 * H, 1).middleRows(H, H).setOnes();

  int in = H;
  for (size_t l = 0; l < cfg.fc_widths.size(); ++l) {
    int out = cfg.fc_widths[l];
    std::string fc = "enc.fc" + std::to_string(l);
    std::string bnp = "enc.bn" + std::to_string(l);
    P.add(fc + ".W", out, in) =
        init_params(out, in, InitKind::he, seed, "init/" + fc);
    P.add(fc + ".b", out, 1);
    P.add(bnp + ".gamma", out, 1).setOnes();
    P.add(bnp + ".beta", out, 1);
    P.add(bnp + ".rmean", out, 1, /*trainable=*/false);
    P.add(bnp + ".rvar", out, 1, /*trainable=*/false).setOnes();
    in = out;
  }
  const int style_dim = in;
  P.add("author.fc.W", cfg.head_width, style_dim) = init_params(
      cfg.head_width, style_dim, InitKind::he, seed, "init/author.fc");
  P.add("author.fc.b", cfg.head_width, 1);
  P.add("author.out.W", A, cfg.head_width) =
      init_params(A, cfg.head_width, InitKind::xavier, seed, "init/author.out");
  P.add("author.out.b", A, 1);
  P.add("domain.fc.W", cfg.head_width, style_dim) = init_params(
      cfg.head_width, style_dim, InitKind::he, seed, "init/domain.fc");
  P.add("domain.fc.b", cfg.head_width, 1);
  P.add("domain.out.W", D, cfg.head_width) =
      init_params(D, cfg.head_width, InitKind::xavier, seed, "init/domain.out");
  P.add("domain.out.b", D, 1);
}

struct EvalResult {
  Matrix author_probs;  // A x N
  Matrix domain_probs;  // D x N
};

EvalResult evaluate_probs(StyleEncoderModel& model,
                          const std::vector<EncodedChunk>& chunks) {
  const int A = static_cast<int>(model.author_ids.size());
  const int D = static_cast<int>(model.domain_ids.size());
  EvalResult r;
  r.author_probs = Matrix::Zero(A, chunks.size());
  r.domain_probs = Matrix::Zero(D, chunks.size());
  const size_t eval_batch = 256;
  for (size_t start = 0; start < chunks.size(); start += eval_batch) {
    size_t count = std::min(eval_batch, chunks.size() - start);
    std::vector<EncodedChunk> part(chunks.begin() + start,
                                   chunks.begin() + start + count);
    auto seq = to_seq(part, model.config.chunk_len, model.config.vocab_size);
    BatchCache cache;
    Matrix author_logits, domain_logits;
    forward_batch(model, seq, /*train=*/false, 0, 0, cache, author_logits,
                  domain_logits);
    // in encoder2 mode the author logits cover all prefixes; use the last
    r.author_probs.middleCols(start, count) =
        softmax_columns(author_logits.rightCols(count));
    r.domain_probs.middleCols(start, count) = softmax_columns(domain_logits);
  }
  return r;
}

std::vector<int> argmax_columns(const Matrix& probs) {
  std::vector<int> out(probs.cols());
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    Eigen::Index arg;
    probs.col(j).maxCoeff(&arg);
    out[j] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace

std::pair<double, double> train_batch_gradients(
    StyleEncoderModel& model, const std::vector<EncodedChunk>& batch,
    double beta_d, bool reverse_domain, uint64_t dropout_epoch,
    uint64_t dropout_batch) {
  const EncoderConfig& cfg = model.config;
  const int B = static_cast<int>(batch.size());
  auto seq = to_seq(batch, cfg.chunk_len, cfg.vocab_size);

  std::vector<int> author_labels(B), domain_labels(B);
  for (int i = 0; i < B; ++i) {
    author_labels[i] = model.author_index(batch[i].author_id);
    domain_labels[i] = model.domain_index(batch[i].domain_id);
  }
  // per-text weights T/(m*n_A) from the training-set counts, not the batch
  std::vector<double> author_w(B), domain_w(B);
  {
    const int A = static_cast<int>(model.author_ids.size());
    const int D = static_cast<int>(model.domain_ids.size());
    Vector author_n = model.activity.counts.colwise().sum();
    Vector domain_n = model.activity.counts.rowwise().sum();
    double total = model.activity.counts.sum();
    for (int i = 0; i < B; ++i) {
      author_w[i] = total / (A * author_n[author_labels[i]]);
      domain_w[i] = total / (D * domain_n[domain_labels[i]]);
    }
  }

  model.params.zero_grads();
  BatchCache cache;
  Matrix author_logits, domain_logits;
  forward_batch(model, seq, /*train=*/true, dropout_epoch, dropout_batch, cache,
                author_logits, domain_logits);

  // author loss over every prefix tap, lambda-weighted, mean over the batch
  const int n_taps = static_cast<int>(cache.taps.size());
  std::vector<double> lambdas =
      cfg.variant == EncoderVariant::encoder1 ? std::vector<double>{1.0}
                                              : cfg.encoder2_lambdas;
  std::vector<int> tap_labels(n_taps * B);
  std::vector<double> tap_weights(n_taps * B);
  for (int t = 0; t < n_taps; ++t) {
    for (int i = 0; i < B; ++i) {
      tap_labels[t * B + i] = author_labels[i];
      tap_weights[t * B + i] = lambdas[t] * author_w[i] / B;
    }
  }
  XentResult author_x =
      softmax_cross_entropy(author_logits, tap_labels, tap_weights);

  std::vector<double> dom_weights(B);
  for (int i = 0; i < B; ++i) dom_weights[i] = domain_w[i] / B;
  XentResult domain_x =
      softmax_cross_entropy(domain_logits, domain_labels, dom_weights);

  if (!std::isfinite(author_x.loss) || !std::isfinite(domain_x.loss)) {
    throw TrainingDiverged("non-finite loss");
  }

  // heads receive their full losses; the encoder receives the affine
  // combination, with the domain term routed through gradient reversal
  Matrix grad_style_author =
      head_backward(model, "author", cache, author_x.grad_logits);
  Matrix grad_style_domain =
      head_backward(model, "domain", cache, domain_x.grad_logits);

  Matrix grad_style = (1.0 - beta_d) * grad_style_author;
  Matrix routed = reverse_domain ? grad_reverse_backward(grad_style_domain)
                                 : grad_style_domain;
  grad_style.rightCols(B) += beta_d * routed;
  backward_encoder(model, cache, grad_style);

  return {author_x.loss, domain_x.loss};
}

StyleEncoderModel train_encoder(EncoderConfig config,
                                const std::vector<EncodedChunk>& train,
                                const std::vector<EncodedChunk>& validation) {
  config.validate();
  if (train.empty()) throw InsufficientData("train_encoder: empty train set");

  StyleEncoderModel model;
  model.config = config;
  {
    std::set<std::string> authors, domains;
    for (const auto& c : train) {
      authors.insert(c.author_id);
      domains.insert(c.domain_id);
    }
    model.author_ids.assign(authors.begin(), authors.end());
    model.domain_ids.assign(domains.begin(), domains.end());
  }
  std::vector<int> author_labels, domain_labels;
  for (const auto& c : train) {
    author_labels.push_back(model.author_index(c.author_id));
    domain_labels.push_back(model.domain_index(c.domain_id));
  }
  model.activity = build_activity_matrix(
      author_labels, domain_labels, static_cast<int>(model.author_ids.size()),
      static_cast<int>(model.domain_ids.size()));
  init_model_params(model);

  if (config.max_epochs == 0) return model;
  if (validation.empty()) {
    throw InsufficientData("train_encoder: empty validation set");
  }
  if (static_cast<int>(train.size()) < config.batch_size) {
    throw InsufficientData("train_encoder: fewer chunks than one batch");
  }
  std::vector<int> val_domains, val_authors;
  for (const auto& c : validation) {
    val_authors.push_back(model.author_index(c.author_id));
    val_domains.push_back(model.domain_index(c.domain_id));
  }

  CounterRng shuffle_rng(config.seed, "train/shuffle");
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  double beta_d = 0.0;
  double best_val = -1.0;
  int best_epoch = -1;
  ParameterStore best_params;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t start = 0; start + config.batch_size <= train.size();
         start += config.batch_size) {
      std::vector<EncodedChunk> batch;
      batch.reserve(config.batch_size);
      for (int i = 0; i < config.batch_size; ++i) {
        batch.push_back(train[order[start + i]]);
      }
      auto [la, ld] = train_batch_gradients(
          model, batch, beta_d, config.adversarial,
          static_cast<uint64_t>(epoch), static_cast<uint64_t>(batches));
      adam_update(model.params, config.lr);
      epoch_loss += combined_loss(la, ld, beta_d);
      ++batches;
    }
    if (batches == 0) {
      throw InsufficientData("train_encoder: no full batch available");
    }

    EvalResult val = evaluate_probs(model, validation);
    EpochStats stats;
    stats.author_macro =
        macro_accuracy(argmax_columns(val.author_probs), val_authors);
    stats.domain_macro =
        macro_accuracy(argmax_columns(val.domain_probs), val_domains);
    stats.b = domain_lower_bound(val.author_probs, model.activity.N,
                                 val_domains);
    stats.beta_d = beta_d;
    stats.loss = epoch_loss / batches;
    model.history.push_back(stats);

    // the schedule runs in both modes; the adversarial flag only decides
    // whether the encoder's domain gradient is reversed or flows forward
    beta_d = beta_schedule(stats.domain_macro, stats.b, config.beta_gamma,
                           config.beta_cap);
    if (stats.author_macro > best_val) {
      best_val = stats.author_macro;
      best_epoch = epoch;
      best_params = model.params;
    }
    if (epoch - best_epoch >= config.patience) break;
  }
  model.params = best_params;
  model.best_epoch = best_epoch;
  return model;
}

Matrix encode(const StyleEncoderModel& model,
              const std::vector<EncodedChunk>& chunks) {
  StyleEncoderModel& m = const_cast<StyleEncoderModel&>(model);
  Matrix out;
  const size_t eval_batch = 256;
  for (size_t start = 0; start < chunks.size(); start += eval_batch) {
    size_t count = std::min(eval_batch, chunks.size() - start);
    std::vector<EncodedChunk> part(chunks.begin() + start,
                                   chunks.begin() + start + count);
    auto seq = to_seq(part, m.config.chunk_len, m.config.vocab_size);
    BatchCache cache;
    Matrix al, dl;
    forward_batch(m, seq, /*train=*/false, 0, 0, cache, al, dl);
    Matrix style_full = cache.style.rightCols(static_cast<Eigen::Index>(count));
    if (out.size() == 0) out = Matrix::Zero(style_full.rows(), chunks.size());
    out.middleCols(start, count) = style_full;
  }
  return out;
}

Matrix predict_author(const StyleEncoderModel& model,
                      const std::vector<EncodedChunk>& chunks) {
  StyleEncoderModel& m = const_cast<StyleEncoderModel&>(model);
  return evaluate_probs(m, chunks).author_probs;
}

Matrix predict_domain(const StyleEncoderModel& model,
                      const std::vector<EncodedChunk>& chunks) {
  StyleEncoderModel& m = const_cast<StyleEncoderModel&>(model);
  return evaluate_probs(m, chunks).domain_probs;
}

}  // namespace stylo
