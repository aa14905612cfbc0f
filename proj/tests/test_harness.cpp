#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stylo/errors.hpp"
#include "stylo/harness.hpp"

using namespace stylo;

namespace {

// Synthetic corpus whose chunk tokens repeat one marker word. With
// domain markers the author signal is pure confound, which is exactly
// what the swapping schemes are built to expose.
std::vector<LabeledChunk> make_corpus(
    const std::vector<std::string>& authors,
    const std::vector<std::string>& domains, int stories_per_cell,
    int chunks_per_story, bool domain_marker) {
  std::vector<LabeledChunk> out;
  for (const auto& a : authors) {
    for (const auto& d : domains) {
      for (int s = 0; s < stories_per_cell; ++s) {
        for (int i = 0; i < chunks_per_story; ++i) {
          LabeledChunk c;
          c.author_id = a;
          c.domain_id = d;
          c.story_id = a + "-" + d + "-" + std::to_string(s);
          c.chunk_index = i;
          c.tokens.assign(6, domain_marker ? "mark" + d : "mark" + a);
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

SchemeScale tiny_scale() {
  SchemeScale s;
  s.train_major = 4;
  s.train_minor = 2;
  s.val_major = 2;
  s.val_minor = 1;
  s.test = 2;
  return s;
}

int cell_count(const std::vector<LabeledChunk>& chunks, const std::string& a,
               const std::string& d) {
  int n = 0;
  for (const auto& c : chunks) {
    if (c.author_id == a && c.domain_id == d) ++n;
  }
  return n;
}

std::string dump(const ProblemInstance& inst) {
  std::ostringstream out;
  inst.save(out);
  return out.str();
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("scheme names round trip") {
  for (SchemeKind k :
       {SchemeKind::traditional, SchemeKind::zero_knowledge_swap,
        SchemeKind::high_imbalance_swap, SchemeKind::cross_fandom,
        SchemeKind::probe}) {
    CHECK(scheme_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(scheme_from_string("bogus"), ConfigError);
}

TEST_CASE("make_scheme table layouts") {
  SchemeScale scale;  // 200 / 10 / 100 / 5 / 100

  SchemeSpec zk = make_scheme(SchemeKind::zero_knowledge_swap, scale);
  CHECK(zk.num_authors == 2);
  CHECK(zk.num_domains == 2);
  CHECK(zk.train == BudgetTable{{200, 0}, {0, 200}});
  CHECK(zk.validation == BudgetTable{{100, 0}, {0, 100}});
  CHECK(zk.normal_test == BudgetTable{{100, 0}, {0, 100}});
  CHECK(zk.swapped_test == BudgetTable{{0, 100}, {100, 0}});

  SchemeSpec hi = make_scheme(SchemeKind::high_imbalance_swap, scale);
  CHECK(hi.train == BudgetTable{{200, 10}, {10, 200}});
  CHECK(hi.validation == BudgetTable{{100, 5}, {5, 100}});
  CHECK(hi.normal_test == BudgetTable{{100, 0}, {0, 100}});
  CHECK(hi.swapped_test == BudgetTable{{0, 100}, {100, 0}});

  SchemeSpec tr = make_scheme(SchemeKind::traditional, scale);
  CHECK(tr.train == BudgetTable{{200, 200}, {200, 200}});
  CHECK(tr.normal_test == BudgetTable{{100, 100}, {100, 100}});
  CHECK(tr.swapped_test == BudgetTable{{0, 0}, {0, 0}});

  SchemeSpec cf = make_scheme(SchemeKind::cross_fandom, scale);
  CHECK(cf.num_domains == 3);
  CHECK(cf.train == BudgetTable{{200, 200, 0}, {200, 200, 0}});
  CHECK(cf.normal_test == BudgetTable{{0, 0, 100}, {0, 0, 100}});
  CHECK(cf.swapped_test == BudgetTable{{0, 0, 0}, {0, 0, 0}});
}

TEST_CASE("sample_instance meets budgets story-disjointly") {
  auto corpus = make_corpus({"a", "b"}, {"x", "y"}, 5, 2, true);
  SchemeSpec scheme = make_scheme(SchemeKind::high_imbalance_swap, tiny_scale());
  ProblemInstance inst = sample_instance(corpus, scheme, 7);

  CHECK(inst.authors == std::vector<std::string>{"a", "b"});
  CHECK(inst.domains == std::vector<std::string>{"x", "y"});
  CHECK(inst.train.size() == 12);
  CHECK(inst.validation.size() == 6);
  CHECK(inst.normal_test.size() == 4);
  CHECK(inst.swapped_test.size() == 4);
  CHECK(cell_count(inst.train, "a", "x") == 4);
  CHECK(cell_count(inst.train, "a", "y") == 2);
  CHECK(cell_count(inst.validation, "b", "y") == 2);
  CHECK(cell_count(inst.normal_test, "b", "x") == 0);
  CHECK(cell_count(inst.swapped_test, "b", "x") == 2);

  // no story may serve two splits
  std::map<std::string, std::set<int>> story_splits;
  const std::vector<LabeledChunk>* splits[4] = {
      &inst.train, &inst.validation, &inst.normal_test, &inst.swapped_test};
  for (int g = 0; g < 4; ++g) {
    for (const auto& c : *splits[g]) story_splits[c.story_id].insert(g);
  }
  for (const auto& [sid, groups] : story_splits) {
    CHECK(groups.size() == 1);
  }
}

TEST_CASE("sample_instance is deterministic in the seed") {
  auto corpus = make_corpus({"a", "b", "c"}, {"x", "y"}, 5, 2, true);
  SchemeSpec scheme = make_scheme(SchemeKind::zero_knowledge_swap, tiny_scale());
  ProblemInstance u = sample_instance(corpus, scheme, 11);
  ProblemInstance v = sample_instance(corpus, scheme, 11);
  CHECK(dump(u) == dump(v));
  CHECK(u.authors.size() == 2);
}

TEST_CASE("sample_instance rejects deficient corpora") {
  SchemeSpec scheme = make_scheme(SchemeKind::zero_knowledge_swap, tiny_scale());
  auto solo = make_corpus({"a"}, {"x", "y"}, 5, 2, true);
  CHECK_THROWS_AS(sample_instance(solo, scheme, 1), InsufficientData);
  // enough authors but far too few chunks per cell
  auto thin = make_corpus({"a", "b"}, {"x", "y"}, 1, 1, true);
  CHECK_THROWS_AS(sample_instance(thin, scheme, 1), InsufficientData);
}

TEST_CASE("problem instance serialization round trips") {
  auto corpus = make_corpus({"a", "b"}, {"x", "y"}, 5, 2, true);
  SchemeSpec scheme = make_scheme(SchemeKind::zero_knowledge_swap, tiny_scale());
  ProblemInstance inst = sample_instance(corpus, scheme, 3);
  std::stringstream buf;
  inst.save(buf);
  ProblemInstance back = ProblemInstance::load(buf);
  CHECK(back.scheme.kind == inst.scheme.kind);
  CHECK(back.scheme.train == inst.scheme.train);
  CHECK(back.authors == inst.authors);
  CHECK(back.seed == inst.seed);
  CHECK(back.train.size() == inst.train.size());
  CHECK(back.train[0].tokens == inst.train[0].tokens);
  CHECK(dump(back) == dump(inst));
}

TEST_CASE("model_spec_from_string parses families and distortions") {
  CHECK(model_spec_from_string("nb").family == ModelSpec::Family::nb);
  CHECK_FALSE(model_spec_from_string("nb").distortion.has_value());

  ModelSpec sa = model_spec_from_string("svm_sa");
  CHECK(sa.family == ModelSpec::Family::svm);
  CHECK(sa.distortion == DistortMode::SA);
  CHECK(model_spec_from_string("nb_l2").distortion == DistortMode::L2);

  ModelSpec e1 = model_spec_from_string("encoder1");
  CHECK(e1.family == ModelSpec::Family::encoder);
  CHECK(e1.encoder.variant == EncoderVariant::encoder1);
  CHECK(e1.encoder.adversarial);
  ModelSpec e2p = model_spec_from_string("encoder2_plain");
  CHECK(e2p.encoder.variant == EncoderVariant::encoder2);
  CHECK_FALSE(e2p.encoder.adversarial);

  CHECK_THROWS_AS(model_spec_from_string("encoder1_ma"), ConfigError);
  CHECK_THROWS_AS(model_spec_from_string("mystery"), ConfigError);
}

TEST_CASE("run_scheme exposes the domain confound through the swap") {
  // author identity is carried only by the domain marker, so the swapped
  // test must collapse to zero while the normal test stays perfect
  auto corpus = make_corpus({"a", "b"}, {"x", "y"}, 5, 2, true);
  SchemeSpec scheme = make_scheme(SchemeKind::zero_knowledge_swap, tiny_scale());
  ProblemInstance inst = sample_instance(corpus, scheme, 5);

  for (const char* name : {"nb", "svm", "nb_ma"}) {
    Report r = run_scheme(inst, model_spec_from_string(name));
    CAPTURE(name);
    CHECK(r.normal_macro == doctest::Approx(1.0));
    REQUIRE(r.swapped_macro.has_value());
    CHECK(*r.swapped_macro == doctest::Approx(0.0));
    CHECK(r.delta == doctest::Approx(-1.0));
    CHECK(r.per_class_normal == std::vector<double>{1.0, 1.0});
    CHECK(r.scheme == "zero_knowledge_swap");
  }

  // genuine author markers survive the swap
  auto honest = make_corpus({"a", "b"}, {"x", "y"}, 5, 2, false);
  ProblemInstance inst2 = sample_instance(honest, scheme, 5);
  Report r = run_scheme(inst2, model_spec_from_string("nb"));
  CHECK(r.normal_macro == doctest::Approx(1.0));
  CHECK(*r.swapped_macro == doctest::Approx(1.0));
  CHECK(r.delta == doctest::Approx(0.0));
}

TEST_CASE("run_scheme requires a vocabulary for encoders") {
  auto corpus = make_corpus({"a", "b"}, {"x", "y"}, 5, 2, false);
  SchemeSpec scheme = make_scheme(SchemeKind::zero_knowledge_swap, tiny_scale());
  ProblemInstance inst = sample_instance(corpus, scheme, 2);
  CHECK_THROWS_AS(run_scheme(inst, model_spec_from_string("encoder1")),
                  ConfigError);
}

TEST_CASE("chunk_sweep evaluates nested training subsets") {
  auto corpus = make_corpus({"a", "b"}, {"x", "y"}, 5, 2, false);
  SchemeSpec scheme = make_scheme(SchemeKind::zero_knowledge_swap, tiny_scale());
  ProblemInstance inst = sample_instance(corpus, scheme, 9);
  auto curve = chunk_sweep(inst, model_spec_from_string("nb"), {1, 4});
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].first == 1);
  CHECK(curve[1].first == 4);
  CHECK(curve[0].second == doctest::Approx(1.0));
  CHECK(curve[1].second == doctest::Approx(1.0));
}

TEST_CASE("retrain_probe rejects single-fandom probes") {
  auto corpus = make_corpus({"a", "b"}, {"x", "y"}, 5, 2, false);
  std::vector<std::string> stream;
  for (const auto& c : corpus) {
    stream.insert(stream.end(), c.tokens.begin(), c.tokens.end());
  }
  Vocabulary vocab = build_vocabulary(stream, 2);

  EncoderConfig cfg;
  cfg.vocab_size = vocab.total_size();
  cfg.chunk_len = 6;
  cfg.hidden_units = 3;
  cfg.fc_widths = {4, 3};
  cfg.head_width = 3;
  cfg.batch_size = 4;
  cfg.max_epochs = 0;
  std::vector<EncodedChunk> train, val;
  for (size_t i = 0; i < corpus.size(); ++i) {
    (i % 5 == 0 ? val : train).push_back(encode_chunk(corpus[i], vocab));
  }
  StyleEncoderModel frozen = train_encoder(cfg, train, val);

  std::vector<LabeledChunk> one_domain, two_domains;
  for (const auto& c : corpus) {
    if (c.domain_id == "x") one_domain.push_back(c);
    two_domains.push_back(c);
  }
  CHECK_THROWS_AS(
      retrain_probe(frozen, one_domain, one_domain, vocab, 1), ConfigError);
  double acc = retrain_probe(frozen, two_domains, two_domains, vocab, 1);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("summarize computes interpolated quartiles") {
  SummaryStat s = summarize({4.0, 1.0, 3.0, 2.0});
  CHECK(s.n == 4);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.min == doctest::Approx(1.0));
  CHECK(s.q25 == doctest::Approx(1.75));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.q75 == doctest::Approx(3.25));
  CHECK(s.max == doctest::Approx(4.0));

  SummaryStat single = summarize({0.7});
  CHECK(single.n == 1);
  CHECK(single.median == doctest::Approx(0.7));
  CHECK(summarize({}).n == 0);
}

TEST_CASE("aggregate groups by model and ignores report order") {
  Report a;
  a.model_id = "nb";
  a.normal_macro = 0.8;
  a.swapped_macro = 0.5;
  a.delta = -0.3;
  Report b = a;
  b.normal_macro = 0.6;
  b.swapped_macro = 0.4;
  b.delta = -0.2;
  Report c;
  c.model_id = "svm";
  c.normal_macro = 0.9;  // no swapped run

  auto fwd = aggregate({a, b, c});
  auto rev = aggregate({c, b, a});
  CHECK(fwd.at("nb").at("normal").mean == doctest::Approx(0.7));
  CHECK(fwd.at("nb").at("delta").mean == doctest::Approx(-0.25));
  CHECK(fwd.at("nb").at("delta").n == 2);
  CHECK(fwd.at("svm").count("swapped") == 0);
  CHECK(fwd.at("svm").at("normal").n == 1);
  CHECK(rev.at("nb").at("normal").mean ==
        doctest::Approx(fwd.at("nb").at("normal").mean));
  CHECK_THROWS_AS(aggregate({}), ConfigError);
}

TEST_CASE("report writers emit stable machine-readable output") {
  Report a;
  a.model_id = "nb";
  a.scheme = "zero_knowledge_swap";
  a.seed = 3;
  a.normal_macro = 0.75;
  a.swapped_macro = 0.25;
  a.delta = -0.5;
  a.per_class_normal = {0.5, 1.0};
  a.runtime_seconds = 12.34;

  std::ostringstream js;
  write_reports_json(js, {a});
  auto parsed = nlohmann::json::parse(js.str());
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].at("model") == "nb");
  CHECK(parsed[0].at("normal_macro").get<double>() == doctest::Approx(0.75));
  CHECK(parsed[0].at("swapped_macro").get<double>() == doctest::Approx(0.25));
  CHECK(js.str().find("runtime") == std::string::npos);

  std::ostringstream js2;
  write_reports_json(js2, {a});
  CHECK(js.str() == js2.str());

  std::ostringstream csv;
  write_reports_csv(csv, {a});
  CHECK(csv.str().find("scheme,model,seed,normal,swapped,delta\n") == 0);
  CHECK(csv.str().find("zero_knowledge_swap,nb,3,0.75,0.25,-0.5\n") !=
        std::string::npos);

  std::ostringstream sum;
  write_summary_csv(sum, aggregate({a}));
  CHECK(sum.str().find("model,metric,n,mean,min,q25,median,q75,max\n") == 0);
  CHECK(sum.str().find("nb,delta,1,-0.5") != std::string::npos);
}

TEST_SUITE_END();
