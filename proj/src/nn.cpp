#include "stylo/nn.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "stylo/errors.hpp"

namespace stylo {

using nlohmann::json;

// --- ParameterStore ---------------------------------------------------------

Matrix& ParameterStore::add(const std::string& name, int rows, int cols,
                            bool trainable) {
  auto [it, inserted] = params_.emplace(name, Param{});
  if (!inserted) throw ConfigError("duplicate parameter: " + name);
  Param& p = it->second;
  p.value = Matrix::Zero(rows, cols);
  p.grad = Matrix::Zero(rows, cols);
  p.m = Matrix::Zero(rows, cols);
  p.v = Matrix::Zero(rows, cols);
  p.trainable = trainable;
  return p.value;
}

Param& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Param& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

bool ParameterStore::has(const std::string& name) const {
  return params_.count(name) > 0;
}

void ParameterStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

void adam_update(ParameterStore& store, double lr, double beta1, double beta2,
                 double eps) {
  long t = store.step() + 1;
  store.set_step(t);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (auto& [name, p] : store.params()) {
    if (!p.trainable) continue;
    if (!p.grad.allFinite()) {
      throw TrainingDiverged("non-finite gradient for " + name);
    }
    p.m = beta1 * p.m + (1.0 - beta1) * p.grad;
    p.v = beta2 * p.v + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
    Matrix m_hat = p.m / bc1;
    Matrix v_hat = p.v / bc2;
    p.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps);
  }
}

namespace {

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

void ParameterStore::save(std::ostream& out) const {
  json j;
  j["format_version"] = 1;
  j["step"] = step_;
  json params = json::object();
  for (const auto& [name, p] : params_) {
    params[name] = {{"value", matrix_to_json(p.value)},
                    {"m", matrix_to_json(p.m)},
                    {"v", matrix_to_json(p.v)},
                    {"trainable", p.trainable}};
  }
  j["params"] = std::move(params);
  out << j.dump();
}

ParameterStore ParameterStore::load(std::istream& in) {
  json j = json::parse(in);
  if (j.at("format_version").get<int>() != 1) {
    throw ConfigError("unsupported checkpoint format version");
  }
  ParameterStore store;
  store.step_ = j.at("step").get<long>();
  for (const auto& [name, pj] : j.at("params").items()) {
    Param p;
    p.value = matrix_from_json(pj.at("value"));
    p.m = matrix_from_json(pj.at("m"));
    p.v = matrix_from_json(pj.at("v"));
    p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.trainable = pj.at("trainable").get<bool>();
    store.params_.emplace(name, std::move(p));
  }
  return store;
}

// --- initialization ---------------------------------------------------------

Matrix init_params(int rows, int cols, InitKind kind, uint64_t seed,
                   const std::string& stream) {
  if (cols <= 0 || rows <= 0) throw ConfigError("init_params: zero fan");
  CounterRng rng(seed, stream);
  Matrix m(rows, cols);
  if (kind == InitKind::xavier) {
    double limit = std::sqrt(6.0 / (static_cast<double>(cols) + rows));
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
    }
  } else {
    double sigma = std::sqrt(2.0 / static_cast<double>(cols));
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = sigma * rng.next_normal();
    }
  }
  return m;
}

// --- fully connected --------------------------------------------------------

namespace {

Matrix apply_activation(const Matrix& pre, Activation act) {
  switch (act) {
    case Activation::relu:
      return pre.cwiseMax(0.0);
    case Activation::sigmoid:
      return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    case Activation::identity:
      return pre;
  }
  return pre;
}

Matrix activation_grad(const Matrix& grad_y, const FcCache& cache,
                       Activation act) {
  switch (act) {
    case Activation::relu:
      return (cache.pre.array() > 0.0).select(grad_y, Matrix::Zero(grad_y.rows(), grad_y.cols()));
    case Activation::sigmoid:
      return (grad_y.array() * cache.y.array() * (1.0 - cache.y.array()))
          .matrix();
    case Activation::identity:
      return grad_y;
  }
  return grad_y;
}

}  // namespace

Matrix fc_forward(const Matrix& x, const Matrix& W, const Vector& b,
                  Activation act, FcCache* cache) {
  if (W.cols() != x.rows() || W.rows() != b.size()) {
    throw ConfigError("fc_forward: shape mismatch");
  }
  Matrix pre = (W * x).colwise() + b;
  Matrix y = apply_activation(pre, act);
  if (cache) {
    cache->x = x;
    cache->pre = pre;
    cache->y = y;
  }
  return y;
}

Matrix fc_backward(const Matrix& grad_y, const FcCache& cache, const Matrix& W,
                   Activation act, Matrix& grad_W, Vector& grad_b) {
  Matrix grad_pre = activation_grad(grad_y, cache, act);
  grad_W += grad_pre * cache.x.transpose();
  grad_b += grad_pre.rowwise().sum();
  return W.transpose() * grad_pre;
}

// --- LSTM -------------------------------------------------------------------

namespace {

struct GateSlices {
  Matrix i, f, g, o;
};

GateSlices lstm_step_gates(const Matrix& a, int hidden) {
  GateSlices s;
  s.i = (1.0 / (1.0 + (-a.topRows(hidden).array()).exp())).matrix();
  s.f = (1.0 / (1.0 + (-a.middleRows(hidden, hidden).array()).exp())).matrix();
  s.g = a.middleRows(2 * hidden, hidden).array().tanh().matrix();
  s.o = (1.0 / (1.0 + (-a.bottomRows(hidden).array()).exp())).matrix();
  return s;
}

}  // namespace

static Matrix lstm_run(const std::vector<std::vector<int>>* seq,
                       const std::vector<Matrix>* xs, const Matrix& Wx,
                       const Matrix& Wh, const Vector& b, LstmCache* cache) {
  const int hidden = static_cast<int>(Wh.cols());
  if (Wx.rows() != 4 * hidden || Wh.rows() != 4 * hidden ||
      b.size() != 4 * hidden) {
    throw ConfigError("lstm_forward: shape mismatch");
  }
  const size_t T = seq ? seq->size() : xs->size();
  const int batch = seq ? (T ? static_cast<int>((*seq)[0].size()) : 0)
                        : (T ? static_cast<int>((*xs)[0].cols()) : 0);
  Matrix h = Matrix::Zero(hidden, batch);
  Matrix c = Matrix::Zero(hidden, batch);
  if (cache) {
    cache->hidden = hidden;
    cache->batch = batch;
    cache->i.clear(); cache->f.clear(); cache->g.clear(); cache->o.clear();
    cache->c.clear(); cache->h.clear();
    if (seq) cache->seq = *seq;
  }
  for (size_t t = 0; t < T; ++t) {
    Matrix a = (Wh * h).colwise() + b;
    if (seq) {
      const auto& idx = (*seq)[t];
      for (int bcol = 0; bcol < batch; ++bcol) a.col(bcol) += Wx.col(idx[bcol]);
    } else {
      a += Wx * (*xs)[t];
    }
    GateSlices s = lstm_step_gates(a, hidden);
    c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
    h = s.o.cwiseProduct(c.array().tanh().matrix());
    if (cache) {
      cache->i.push_back(std::move(s.i));
      cache->f.push_back(std::move(s.f));
      cache->g.push_back(std::move(s.g));
      cache->o.push_back(std::move(s.o));
      cache->c.push_back(c);
      cache->h.push_back(h);
    }
  }
  return h;
}

Matrix lstm_forward(const std::vector<std::vector<int>>& seq, const Matrix& Wx,
                    const Matrix& Wh, const Vector& b, LstmCache* cache) {
  return lstm_run(&seq, nullptr, Wx, Wh, b, cache);
}

Matrix lstm_forward_dense(const std::vector<Matrix>& xs, const Matrix& Wx,
                          const Matrix& Wh, const Vector& b, LstmCache* cache,
                          std::vector<Matrix>* dense_inputs) {
  if (dense_inputs) *dense_inputs = xs;
  return lstm_run(nullptr, &xs, Wx, Wh, b, cache);
}

void lstm_backward(const std::vector<std::pair<int, Matrix>>& grad_h_at,
                   const LstmCache& cache, const Matrix& Wx, const Matrix& Wh,
                   Matrix& grad_Wx, Matrix& grad_Wh, Vector& grad_b,
                   const std::vector<Matrix>* dense_inputs) {
  const int hidden = cache.hidden;
  const int batch = cache.batch;
  const int T = static_cast<int>(cache.h.size());
  std::vector<Matrix> tap(T);
  for (const auto& [t, g] : grad_h_at) {
    if (t < 0 || t >= T) throw ConfigError("lstm_backward: tap out of range");
    if (tap[t].size() == 0) {
      tap[t] = g;
    } else {
      tap[t] += g;
    }
  }
  Matrix dh = Matrix::Zero(hidden, batch);
  Matrix dc = Matrix::Zero(hidden, batch);
  for (int t = T - 1; t >= 0; --t) {
    if (tap[t].size() != 0) dh += tap[t];
    const Matrix& i = cache.i[t];
    const Matrix& f = cache.f[t];
    const Matrix& g = cache.g[t];
    const Matrix& o = cache.o[t];
    Matrix tc = cache.c[t].array().tanh().matrix();
    Matrix c_prev = t > 0 ? cache.c[t - 1] : Matrix::Zero(hidden, batch);
    Matrix h_prev = t > 0 ? cache.h[t - 1] : Matrix::Zero(hidden, batch);

    Matrix da_o =
        (dh.array() * tc.array() * o.array() * (1.0 - o.array())).matrix();
    dc.array() += dh.array() * o.array() * (1.0 - tc.array().square());
    Matrix da_i =
        (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
    Matrix da_f =
        (dc.array() * c_prev.array() * f.array() * (1.0 - f.array())).matrix();
    Matrix da_g = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();

    Matrix da(4 * hidden, batch);
    da.topRows(hidden) = da_i;
    da.middleRows(hidden, hidden) = da_f;
    da.middleRows(2 * hidden, hidden) = da_g;
    da.bottomRows(hidden) = da_o;

    grad_Wh += da * h_prev.transpose();
    grad_b += da.rowwise().sum();
    if (dense_inputs) {
      grad_Wx += da * (*dense_inputs)[t].transpose();
    } else {
      for (int bcol = 0; bcol < batch; ++bcol) {
        grad_Wx.col(cache.seq[t][bcol]) += da.col(bcol);
      }
    }
    dh = Wh.transpose() * da;
    dc = dc.cwiseProduct(f);
  }
}

// --- batch normalization ----------------------------------------------------

Matrix batchnorm_forward(const Matrix& x, BatchNormState& bn, bool train,
                         BnCache* cache) {
  const Eigen::Index B = x.cols();
  if (train) {
    if (B < 2) throw ConfigError("batchnorm: train mode needs batch size >= 2");
    Vector mean = x.rowwise().mean();
    Matrix centered = x.colwise() - mean;
    Vector var = centered.array().square().rowwise().mean();
    Vector inv_std = (var.array() + bn.eps).rsqrt();
    Matrix xhat = centered.array().colwise() * inv_std.array();
    bn.running_mean = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * mean;
    bn.running_var = bn.momentum * bn.running_var + (1.0 - bn.momentum) * var;
    if (cache) {
      cache->xhat = xhat;
      cache->inv_std = inv_std;
    }
    return ((xhat.array().colwise() * bn.gamma.array()).colwise() +
            bn.beta.array())
        .matrix();
  }
  Vector inv_std = (bn.running_var.array() + bn.eps).rsqrt();
  Matrix xhat =
      (x.colwise() - bn.running_mean).array().colwise() * inv_std.array();
  return ((xhat.array().colwise() * bn.gamma.array()).colwise() +
          bn.beta.array())
      .matrix();
}

Matrix batchnorm_backward(const Matrix& grad_y, const BnCache& cache,
                          const BatchNormState& bn, Vector& grad_gamma,
                          Vector& grad_beta) {
  const double B = static_cast<double>(grad_y.cols());
  grad_gamma += (grad_y.array() * cache.xhat.array()).rowwise().sum().matrix();
  grad_beta += grad_y.rowwise().sum();
  Matrix dxhat = grad_y.array().colwise() * bn.gamma.array();
  Vector sum_dxhat = dxhat.rowwise().sum();
  Vector sum_dxhat_xhat =
      (dxhat.array() * cache.xhat.array()).rowwise().sum().matrix();
  Matrix dx =
      (B * dxhat.array() - sum_dxhat.replicate(1, grad_y.cols()).array() -
       cache.xhat.array() *
           sum_dxhat_xhat.replicate(1, grad_y.cols()).array());
  dx.array().colwise() *= cache.inv_std.array() / B;
  return dx;
}

// --- dropout ----------------------------------------------------------------

Matrix dropout_forward(const Matrix& x, double rate, bool train,
                       CounterRng& rng, Matrix* mask) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate in [0, 1)");
  if (!train || rate == 0.0) {
    if (mask) *mask = Matrix::Ones(x.rows(), x.cols());
    return x;
  }
  const double scale = 1.0 / (1.0 - rate);
  Matrix m(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      m(i, j) = rng.next_double() < rate ? 0.0 : scale;
    }
  }
  if (mask) *mask = m;
  return x.cwiseProduct(m);
}

// --- softmax cross entropy --------------------------------------------------

Matrix softmax_columns(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    double mx = logits.col(j).maxCoeff();
    Vector e = (logits.col(j).array() - mx).exp();
    p.col(j) = e / e.sum();
  }
  return p;
}

XentResult softmax_cross_entropy(const Matrix& logits,
                                 const std::vector<int>& labels,
                                 const std::vector<double>& weights) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols() ||
      labels.size() != weights.size()) {
    throw ConfigError("softmax_cross_entropy: size mismatch");
  }
  XentResult r;
  r.probs = softmax_columns(logits);
  r.grad_logits = r.probs;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    double mx = logits.col(j).maxCoeff();
    double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    r.loss += weights[j] * (lse - logits(labels[j], j));
    r.grad_logits(labels[j], j) -= 1.0;
    r.grad_logits.col(j) *= weights[j];
  }
  return r;
}

// --- gradient check ---------------------------------------------------------

GradCheckReport grad_check(const std::function<double(const Vector&)>& f,
                           const Vector& x, const Vector& analytic, double h,
                           double tol) {
  GradCheckReport report;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    double fp = f(probe);
    probe[i] = x[i] - h;
    double fm = f(probe);
    probe[i] = x[i];
    double numeric = (fp - fm) / (2.0 * h);
    // central differences bottom out at cancellation noise ~|f| eps / h
    // (~1e-10 here); below that neither side carries information
    double denom = std::abs(numeric) + std::abs(analytic[i]);
    if (denom < 1e-8) continue;
    double rel = std::abs(numeric - analytic[i]) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = static_cast<int>(i);
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace stylo
