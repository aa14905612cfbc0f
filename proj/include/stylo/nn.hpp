#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stylo/linalg.hpp"
#include "stylo/rng.hpp"

namespace stylo {

// Layout convention: features along rows, batch samples along columns.

// --- parameters and Adam ----------------------------------------------------

struct Param {
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment
  bool trainable = true;
};

class ParameterStore {
 public:
  Matrix& add(const std::string& name, int rows, int cols,
              bool trainable = true);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const;

  void zero_grads();
  long step() const { return step_; }
  void set_step(long s) { step_ = s; }

  std::map<std::string, Param>& params() { return params_; }
  const std::map<std::string, Param>& params() const { return params_; }

  void save(std::ostream& out) const;
  static ParameterStore load(std::istream& in);

 private:
  std::map<std::string, Param> params_;
  long step_ = 0;
};

// Bias-corrected Adam step over all trainable parameters. Throws
// TrainingDiverged on non-finite gradients.
void adam_update(ParameterStore& store, double lr, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);

// --- initialization ---------------------------------------------------------

enum class InitKind { xavier, he };

// xavier: uniform in +-sqrt(6/(fan_in+fan_out)); he: normal sigma^2 = 2/fan_in.
// fan_in = cols, fan_out = rows.
Matrix init_params(int rows, int cols, InitKind kind, uint64_t seed,
                   const std::string& stream);

// --- fully connected layer --------------------------------------------------

enum class Activation { relu, sigmoid, identity };

struct FcCache {
  Matrix x;
  Matrix pre;  // W x + b before activation
  Matrix y;
};

Matrix fc_forward(const Matrix& x, const Matrix& W, const Vector& b,
                  Activation act, FcCache* cache = nullptr);

// Returns grad_x; accumulates into grad_W / grad_b.
Matrix fc_backward(const Matrix& grad_y, const FcCache& cache, const Matrix& W,
                   Activation act, Matrix& grad_W, Vector& grad_b);

// --- LSTM over one-hot index sequences --------------------------------------

// Gate order within the stacked 4H rows: input, forget, candidate, output.
struct LstmCache {
  std::vector<std::vector<int>> seq;  // [T][B] vocabulary indices
  std::vector<Matrix> i, f, g, o;     // gate activations per step, H x B
  std::vector<Matrix> c, h;           // states per step, H x B
  int hidden = 0;
  int batch = 0;
};

// Runs T steps from zero initial state; returns h_T. All per-step states are
// kept in the cache for BPTT and for prefix taps.
Matrix lstm_forward(const std::vector<std::vector<int>>& seq, const Matrix& Wx,
                    const Matrix& Wh, const Vector& b, LstmCache* cache);

// Dense-input variant for gradient checks (columns of xs are input vectors).
Matrix lstm_forward_dense(const std::vector<Matrix>& xs, const Matrix& Wx,
                          const Matrix& Wh, const Vector& b, LstmCache* cache,
                          std::vector<Matrix>* dense_inputs = nullptr);

// grad_h_at: list of (step t, dL/dh_t); full backpropagation through time.
void lstm_backward(const std::vector<std::pair<int, Matrix>>& grad_h_at,
                   const LstmCache& cache, const Matrix& Wx, const Matrix& Wh,
                   Matrix& grad_Wx, Matrix& grad_Wh, Vector& grad_b,
                   const std::vector<Matrix>* dense_inputs = nullptr);

// --- batch normalization ----------------------------------------------------

struct BatchNormState {
  Vector gamma, beta;
  Vector running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  explicit BatchNormState(int dim = 0)
      : gamma(Vector::Ones(dim)),
        beta(Vector::Zero(dim)),
        running_mean(Vector::Zero(dim)),
        running_var(Vector::Ones(dim)) {}
};

struct BnCache {
  Matrix xhat;
  Vector inv_std;
};

// train mode requires batch size >= 2 and updates running stats (biased
// batch variance); infer mode uses running stats.
Matrix batchnorm_forward(const Matrix& x, BatchNormState& bn, bool train,
                         BnCache* cache = nullptr);

Matrix batchnorm_backward(const Matrix& grad_y, const BnCache& cache,
                          const BatchNormState& bn, Vector& grad_gamma,
                          Vector& grad_beta);

// --- dropout ----------------------------------------------------------------

// Inverted dropout; the mask depends only on (seed, stream, draw order).
Matrix dropout_forward(const Matrix& x, double rate, bool train,
                       CounterRng& rng, Matrix* mask = nullptr);

// --- softmax cross entropy --------------------------------------------------

struct XentResult {
  double loss = 0.0;       // sum of per-sample weighted losses
  Matrix grad_logits;      // same shape as logits
  Matrix probs;            // softmax per column
};

// logits: K x B; loss_i = -w_i log softmax(logits_i)[label_i] (log-sum-exp
// stabilized); grad column i = w_i (softmax - onehot).
XentResult softmax_cross_entropy(const Matrix& logits,
                                 const std::vector<int>& labels,
                                 const std::vector<double>& weights);

Matrix softmax_columns(const Matrix& logits);

// --- gradient reversal ------------------------------------------------------

inline Matrix grad_reverse_forward(const Matrix& x) { return x; }
inline Matrix grad_reverse_backward(const Matrix& grad) { return -grad; }

// --- finite-difference oracle -----------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_index = -1;
  bool pass = true;
};

// Central differences of a scalar function against an analytic gradient.
GradCheckReport grad_check(const std::function<double(const Vector&)>& f,
                           const Vector& x, const Vector& analytic,
                           double h = 1e-5, double tol = 1e-4);

}  // namespace stylo
