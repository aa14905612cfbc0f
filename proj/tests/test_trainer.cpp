#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stylo/errors.hpp"
#include "stylo/trainer.hpp"

using namespace stylo;

namespace {

EncodedChunk make_chunk(std::vector<int> indices, const std::string& author,
                        const std::string& domain, const std::string& story) {
  EncodedChunk c;
  c.indices = std::move(indices);
  c.author_id = author;
  c.domain_id = domain;
  c.story_id = story;
  return c;
}

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.vocab_size = 14;
  cfg.chunk_len = 4;
  cfg.hidden_units = 4;
  cfg.fc_widths = {5, 4};
  cfg.head_width = 4;
  cfg.batch_size = 4;
  cfg.lr = 1e-2;
  cfg.seed = 3;
  cfg.max_epochs = 0;
  return cfg;
}

// two authors, two domains, separable by token identity
std::vector<EncodedChunk> tiny_corpus(int per_author, const char* tag) {
  std::vector<EncodedChunk> out;
  for (int i = 0; i < per_author; ++i) {
    std::string dom = i % 2 == 0 ? "x" : "y";
    out.push_back(make_chunk({12, 12, 12, 12}, "a", dom,
                             std::string(tag) + "sa" + std::to_string(i)));
    out.push_back(make_chunk({13, 13, 13, 13}, "b", dom,
                             std::string(tag) + "sb" + std::to_string(i)));
  }
  return out;
}

StyleEncoderModel init_tiny(const EncoderConfig& cfg) {
  return train_encoder(cfg, tiny_corpus(4, "t"), tiny_corpus(2, "v"));
}

double store_diff(const ParameterStore& a, const ParameterStore& b,
                  const std::string& prefix, bool grads) {
  double d = 0.0;
  for (const auto& [name, p] : a.params()) {
    if (name.rfind(prefix, 0) != 0) continue;
    const Matrix& ma = grads ? p.grad : p.value;
    const Matrix& mb = grads ? b.at(name).grad : b.at(name).value;
    d += (ma - mb).cwiseAbs().maxCoeff();
  }
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("config validation fills and checks encoder2 lambdas") {
  EncoderConfig cfg = tiny_config();
  cfg.variant = EncoderVariant::encoder2;
  cfg.encoder2_n = 4;
  cfg.chunk_len = 8;
  cfg.validate();
  REQUIRE(cfg.encoder2_lambdas.size() == 4);
  CHECK(cfg.encoder2_lambdas[0] == doctest::Approx(0.1));
  CHECK(cfg.encoder2_lambdas[3] == doctest::Approx(0.4));

  EncoderConfig bad = cfg;
  bad.encoder2_lambdas = {0.4, 0.3, 0.2, 0.1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.encoder2_lambdas = {0.1, 0.2, 0.3, 0.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  EncoderConfig odd = cfg;
  odd.chunk_len = 6;
  CHECK_THROWS_AS(odd.validate(), ConfigError);
}

TEST_CASE("class weights for the 600/10 imbalance") {
  std::vector<int> labels(600, 0);
  labels.insert(labels.end(), 10, 1);
  auto w = compute_class_weights(labels);
  CHECK(w[0] == doctest::Approx(610.0 / 1200.0).epsilon(1e-12));
  CHECK(w[609] == doctest::Approx(30.5).epsilon(1e-12));
  double mean = 0.0;
  for (double v : w) mean += v;
  CHECK(mean / w.size() == doctest::Approx(1.0).epsilon(1e-12));
  // summed contribution per class is equal
  CHECK(600.0 * w[0] == doctest::Approx(10.0 * w[609]).epsilon(1e-12));
}

TEST_CASE("class weights trivial cases") {
  auto balanced = compute_class_weights({0, 0, 1, 1});
  for (double v : balanced) CHECK(v == doctest::Approx(1.0));
  auto single = compute_class_weights({0, 0, 0});
  for (double v : single) CHECK(v == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_class_weights({}), ConfigError);
  CHECK_THROWS_AS(compute_class_weights({0, 2}), ConfigError);
}

TEST_CASE("activity matrix normalization") {
  // author 0: 600 texts in domain 0, 10 in domain 1
  std::vector<int> authors(610, 0), domains(600, 0);
  domains.insert(domains.end(), 10, 1);
  authors.insert(authors.end(), 5, 1);
  domains.insert(domains.end(), 5, 1);
  ActivityMatrix am = build_activity_matrix(authors, domains, 2, 2);
  CHECK(am.counts(0, 0) == 600.0);
  CHECK(am.N(0, 0) == doctest::Approx(600.0 / 610.0).epsilon(1e-12));
  CHECK(am.N(1, 0) == doctest::Approx(10.0 / 610.0).epsilon(1e-12));
  CHECK(am.N.col(1).sum() == doctest::Approx(1.0));

  ActivityMatrix ident = build_activity_matrix({0, 1}, {0, 1}, 2, 2);
  CHECK((ident.N - Matrix::Identity(2, 2)).norm() == 0.0);

  CHECK_THROWS_AS(build_activity_matrix({0, 0}, {0, 0}, 2, 1), ConfigError);
}

TEST_CASE("domain lower bound follows q = N p") {
  Matrix N(2, 2);
  N << 0.75, 0.2, 0.25, 0.8;
  Matrix p(2, 1);
  p << 0.6, 0.4;
  Matrix q = N * p;
  CHECK(q(0, 0) == doctest::Approx(0.53).epsilon(1e-12));
  CHECK(q(1, 0) == doctest::Approx(0.47).epsilon(1e-12));
  // the implied prediction is domain 0
  CHECK(domain_lower_bound(p, N, {0}) == doctest::Approx(1.0));
  CHECK(domain_lower_bound(p, N, {1}) == doctest::Approx(0.0));

  // identity N: prediction tracks the author posterior
  Matrix pi(2, 3);
  pi << 0.7, 0.2, 0.9, 0.3, 0.8, 0.1;
  CHECK(domain_lower_bound(pi, Matrix::Identity(2, 2), {0, 1, 0}) ==
        doctest::Approx(1.0));

  // uniform N: tie broken toward the lowest index
  Matrix uniform = Matrix::Constant(2, 2, 0.5);
  CHECK(domain_lower_bound(pi, uniform, {0, 0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("beta schedule clamp") {
  CHECK(beta_schedule(0.4, 0.5, 2.0, 0.5) == 0.0);
  CHECK(beta_schedule(0.9, 0.5, 2.0, 0.5) == 0.5);
  CHECK(beta_schedule(0.6, 0.5, 2.0, 0.5) == doctest::Approx(0.2));
}

TEST_CASE("loss combinations") {
  CHECK(combined_loss(2.0, 4.0, 0.0) == 2.0);
  CHECK(combined_loss(2.0, 4.0, 1.0) == 4.0);
  CHECK(combined_loss(2.0, 4.0, 0.25) == doctest::Approx(2.5));

  CHECK(encoder2_author_loss({1, 1, 1, 1}, {0.1, 0.2, 0.3, 0.4}) ==
        doctest::Approx(1.0));
  CHECK(encoder2_author_loss({4, 0, 0, 0}, {0.1, 0.2, 0.3, 0.4}) ==
        doctest::Approx(0.4));
  CHECK(encoder2_author_loss({3.0}, {1.0}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(encoder2_author_loss({1.0}, {0.5, 0.5}), ConfigError);
}

TEST_CASE("zero max_epochs returns an initialized model with empty history") {
  StyleEncoderModel model = init_tiny(tiny_config());
  CHECK(model.history.empty());
  CHECK(model.best_epoch == -1);
  CHECK(model.author_ids == std::vector<std::string>{"a", "b"});
  CHECK(model.domain_ids == std::vector<std::string>{"x", "y"});
  CHECK(model.params.has("lstm.Wx"));
  CHECK(model.params.has("domain.out.W"));
}

TEST_CASE("gradient routing: encoder mixes, heads stay isolated") {
  EncoderConfig cfg = tiny_config();
  std::vector<EncodedChunk> batch = tiny_corpus(2, "g");
  const double beta = 0.3;

  StyleEncoderModel pure_author = init_tiny(cfg);
  train_batch_gradients(pure_author, batch, 0.0, true, 0, 0);

  StyleEncoderModel pure_domain = init_tiny(cfg);
  train_batch_gradients(pure_domain, batch, 1.0, false, 0, 0);

  StyleEncoderModel reversed = init_tiny(cfg);
  train_batch_gradients(reversed, batch, beta, true, 0, 0);

  StyleEncoderModel forward_only = init_tiny(cfg);
  train_batch_gradients(forward_only, batch, beta, false, 0, 0);

  // heads always receive their full losses, independent of beta and reversal
  CHECK(store_diff(reversed.params, pure_author.params, "author.", true) <
        1e-12);
  CHECK(store_diff(reversed.params, pure_domain.params, "domain.", true) <
        1e-12);
  CHECK(store_diff(forward_only.params, reversed.params, "domain.", true) <
        1e-12);

  // encoder gradient = (1 - beta) * author part - beta * domain part
  for (const std::string prefix : {"lstm.", "enc."}) {
    for (const auto& [name, p] : reversed.params.params()) {
      if (name.rfind(prefix, 0) != 0 || !p.trainable) continue;
      Matrix expected = (1.0 - beta) * pure_author.params.at(name).grad -
                        beta * pure_domain.params.at(name).grad;
      CHECK((p.grad - expected).cwiseAbs().maxCoeff() < 1e-10);
      // the domain contribution flips sign exactly without the reversal
      Matrix expected_fwd = (1.0 - beta) * pure_author.params.at(name).grad +
                            beta * pure_domain.params.at(name).grad;
      CHECK((forward_only.params.at(name).grad - expected_fwd)
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    }
  }

  // beta = 0 degenerates to a plain author classifier regardless of reversal
  StyleEncoderModel degenerate = init_tiny(cfg);
  train_batch_gradients(degenerate, batch, 0.0, false, 0, 0);
  CHECK(store_diff(degenerate.params, pure_author.params, "lstm.", true) <
        1e-12);
  CHECK(store_diff(degenerate.params, pure_author.params, "enc.", true) <
        1e-12);
}

TEST_CASE("encoder2 prefix taps feed the author loss") {
  EncoderConfig cfg = tiny_config();
  cfg.variant = EncoderVariant::encoder2;
  cfg.encoder2_n = 2;
  StyleEncoderModel model = init_tiny(cfg);
  auto [la, ld] = train_batch_gradients(model, tiny_corpus(2, "g"), 0.0, true,
                                        0, 0);
  CHECK(std::isfinite(la));
  CHECK(std::isfinite(ld));
  CHECK(model.params.at("lstm.Wx").grad.norm() > 0.0);
}

TEST_CASE("training a plain author classifier on separable data") {
  EncoderConfig cfg = tiny_config();
  cfg.adversarial = false;
  cfg.beta_cap = 0.0;  // pin beta to zero so only the author loss trains
  cfg.max_epochs = 20;
  cfg.patience = 20;
  StyleEncoderModel model =
      train_encoder(cfg, tiny_corpus(8, "t"), tiny_corpus(4, "v"));
  REQUIRE(!model.history.empty());
  REQUIRE(model.best_epoch >= 0);
  CHECK(model.history[model.best_epoch].author_macro >= 0.95);
  for (const auto& e : model.history) CHECK(e.beta_d == 0.0);
}

TEST_CASE("deterministic training and save/load round trip") {
  EncoderConfig cfg = tiny_config();
  cfg.max_epochs = 3;
  auto train = tiny_corpus(6, "t");
  auto val = tiny_corpus(3, "v");
  StyleEncoderModel a = train_encoder(cfg, train, val);
  StyleEncoderModel b = train_encoder(cfg, train, val);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].loss == b.history[e].loss);
    CHECK(a.history[e].author_macro == b.history[e].author_macro);
  }
  CHECK(store_diff(a.params, b.params, "", false) == 0.0);

  std::stringstream buf;
  a.save(buf);
  StyleEncoderModel loaded = StyleEncoderModel::load(buf);
  CHECK(loaded.author_ids == a.author_ids);
  CHECK(loaded.best_epoch == a.best_epoch);
  CHECK(store_diff(a.params, loaded.params, "", false) == 0.0);
  Matrix pa = predict_author(a, val);
  Matrix pl = predict_author(loaded, val);
  CHECK((pa - pl).norm() == 0.0);
}

TEST_CASE("inference is batch-composition invariant and normalized") {
  EncoderConfig cfg = tiny_config();
  StyleEncoderModel model = init_tiny(cfg);
  auto chunks = tiny_corpus(3, "e");
  Matrix all = encode(model, chunks);
  Matrix solo = encode(model, {chunks[2]});
  CHECK((all.col(2) - solo.col(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(all.rows() == 4);  // last shared fc width

  Matrix probs = predict_author(model, chunks);
  for (int j = 0; j < probs.cols(); ++j) {
    CHECK(probs.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  Matrix dprobs = predict_domain(model, chunks);
  CHECK(dprobs.rows() == 2);
}

TEST_SUITE_END();
