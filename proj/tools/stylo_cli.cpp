#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stylo/errors.hpp"
#include "stylo/harness.hpp"
#include "stylo/ingest.hpp"
#include "stylo/synth.hpp"
#include "stylo/trainer.hpp"
#include "stylo/vocab.hpp"

namespace {

using namespace stylo;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

std::vector<LabeledChunk> load_chunks(const std::string& path) {
  auto in = open_in(path);
  return read_chunks_jsonl(in);
}

struct EncoderFlags {
  int hidden = 256;
  int head_width = 64;
  std::vector<int> fc_widths = {64, 64};
  double lr = 1e-5;
  double dropout = 0.5;
  int batch_size = 400;
  int max_epochs = 50;
  int patience = 10;
  uint64_t seed = 1;
  double beta_gamma = 2.0;
  double beta_cap = 0.5;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--hidden", hidden, "LSTM hidden units");
    cmd->add_option("--head-width", head_width, "head FC width");
    cmd->add_option("--fc-widths", fc_widths, "shared FC widths");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--dropout", dropout, "head dropout rate");
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--max-epochs", max_epochs);
    cmd->add_option("--patience", patience, "early-stopping patience");
    cmd->add_option("--net-seed", seed, "weight init / shuffle seed");
    cmd->add_option("--beta-gamma", beta_gamma, "adversarial schedule gain");
    cmd->add_option("--beta-cap", beta_cap,
                    "adversarial weight ceiling (0 pins beta_d to 0)");
  }

  void apply(EncoderConfig& cfg) const {
    cfg.hidden_units = hidden;
    cfg.head_width = head_width;
    cfg.fc_widths = fc_widths;
    cfg.lr = lr;
    cfg.dropout_rate = dropout;
    cfg.batch_size = batch_size;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.seed = seed;
    cfg.beta_gamma = beta_gamma;
    cfg.beta_cap = beta_cap;
  }
};

struct ModelFlags {
  std::string name = "nb";
  bool tune = false;
  int tune_iters = 10;
  int trigram_k = 5000;
  int dict_k = 60;
  int svm_epochs = 120;
  double nb_alpha = 1.0;
  double svm_C = 100.0;
  EncoderFlags enc;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--model", name,
                    "nb | svm (optionally _ma/_sa/_ex/_l2) | encoder1 | "
                    "encoder2 | encoder1_plain | encoder2_plain")
        ->required();
    cmd->add_flag("--tune", tune, "random-search CV over alpha / C");
    cmd->add_option("--tune-iters", tune_iters);
    cmd->add_option("--trigram-k", trigram_k, "trigram feature count");
    cmd->add_option("--dict-k", dict_k, "distortion dictionary size");
    cmd->add_option("--svm-epochs", svm_epochs);
    cmd->add_option("--alpha", nb_alpha, "NB smoothing");
    cmd->add_option("--svm-c", svm_C, "SVM C");
    enc.add_to(cmd);
  }

  ModelSpec build() const {
    ModelSpec spec = model_spec_from_string(name);
    spec.tune = tune;
    spec.tune_iters = tune_iters;
    spec.trigram_k = trigram_k;
    spec.dict_k = dict_k;
    spec.svm_epochs = svm_epochs;
    spec.nb_alpha = nb_alpha;
    spec.svm_C = svm_C;
    enc.apply(spec.encoder);
    return spec;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"writing-style representation toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a TOML/INI file");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out;
  int synth_authors = 2, synth_domains = 2;
  double style_strength = 0.5, domain_strength = 0.3;
  int stories_per_cell = 10, words_per_story = 8000;
  uint64_t synth_seed = 1;
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--authors", synth_authors);
  synth_cmd->add_option("--domains", synth_domains);
  synth_cmd->add_option("--style-strength", style_strength);
  synth_cmd->add_option("--domain-strength", domain_strength);
  synth_cmd->add_option("--stories-per-cell", stories_per_cell);
  synth_cmd->add_option("--words-per-story", words_per_story);
  synth_cmd->add_option("--seed", synth_seed);

  // clean
  auto* clean_cmd = app.add_subcommand("clean", "clean and chunk raw stories");
  std::string clean_in, clean_out, clean_stories_out;
  int chunk_size = 500;
  bool no_trim = false;
  clean_cmd->add_option("--in", clean_in, "raw stories JSONL")->required();
  clean_cmd->add_option("--out", clean_out, "chunks JSONL")->required();
  clean_cmd->add_option("--clean-out", clean_stories_out,
                        "also write cleaned stories JSONL");
  clean_cmd->add_option("--chunk-size", chunk_size);
  clean_cmd->add_flag("--no-trim", no_trim, "skip boundary trimming");

  // vocab
  auto* vocab_cmd = app.add_subcommand("vocab", "build a vocabulary");
  std::string vocab_in, vocab_out;
  int vocab_words = 2001;
  vocab_cmd->add_option("--in", vocab_in, "chunks JSONL")->required();
  vocab_cmd->add_option("--out", vocab_out, "wordlist file")->required();
  vocab_cmd->add_option("--words", vocab_words);

  // sample
  auto* sample_cmd =
      app.add_subcommand("sample", "sample a problem instance from a corpus");
  std::string sample_in, sample_out, scheme_name = "zero_knowledge_swap";
  uint64_t sample_seed = 1;
  SchemeScale scale;
  sample_cmd->add_option("--in", sample_in, "chunks JSONL")->required();
  sample_cmd->add_option("--out", sample_out)->required();
  sample_cmd->add_option("--scheme", scheme_name,
                         "traditional | zero_knowledge_swap | "
                         "high_imbalance_swap | cross_fandom | probe");
  sample_cmd->add_option("--seed", sample_seed);
  sample_cmd->add_option("--train-major", scale.train_major);
  sample_cmd->add_option("--train-minor", scale.train_minor);
  sample_cmd->add_option("--val-major", scale.val_major);
  sample_cmd->add_option("--val-minor", scale.val_minor);
  sample_cmd->add_option("--test", scale.test);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a style encoder");
  std::string train_instance, train_vocab, train_out;
  EncoderFlags train_flags;
  std::string train_model = "encoder1";
  train_cmd->add_option("--instance", train_instance)->required();
  train_cmd->add_option("--vocab", train_vocab)->required();
  train_cmd->add_option("--out", train_out, "model file")->required();
  train_cmd->add_option("--model", train_model,
                        "encoder1 | encoder2 | *_plain");
  train_flags.add_to(train_cmd);

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "train and evaluate a model on an instance");
  std::string eval_instance, eval_vocab, eval_report;
  ModelFlags eval_flags;
  eval_cmd->add_option("--instance", eval_instance)->required();
  eval_cmd->add_option("--vocab", eval_vocab, "needed for encoder models");
  eval_cmd->add_option("--report", eval_report, "write the report as JSON");
  eval_flags.add_to(eval_cmd);

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "accuracy over nested training sizes");
  std::string sweep_instance, sweep_vocab, sweep_out;
  std::vector<int> sweep_counts = {1, 2, 5, 10, 20, 50, 100, 200};
  ModelFlags sweep_flags;
  sweep_cmd->add_option("--instance", sweep_instance)->required();
  sweep_cmd->add_option("--vocab", sweep_vocab);
  sweep_cmd->add_option("--out", sweep_out, "CSV curve")->required();
  sweep_cmd->add_option("--counts", sweep_counts, "chunks per training cell");
  sweep_flags.add_to(sweep_cmd);

  // probe
  auto* probe_cmd = app.add_subcommand(
      "probe", "retrain a fandom head on a frozen encoder");
  std::string probe_model, probe_train_path, probe_test_path, probe_vocab;
  uint64_t probe_seed = 1;
  probe_cmd->add_option("--model", probe_model, "trained encoder file")
      ->required();
  probe_cmd->add_option("--train", probe_train_path, "probe chunks JSONL")
      ->required();
  probe_cmd->add_option("--test", probe_test_path, "held-out chunks JSONL")
      ->required();
  probe_cmd->add_option("--vocab", probe_vocab)->required();
  probe_cmd->add_option("--seed", probe_seed);

  // report
  auto* report_cmd =
      app.add_subcommand("report", "aggregate run reports into a summary");
  std::string report_in, report_out;
  report_cmd->add_option("--in", report_in, "reports JSON")->required();
  report_cmd->add_option("--out", report_out, "summary CSV")->required();

  CLI11_PARSE(app, argc, argv);

  if (synth_cmd->parsed()) {
    GeneratorSpec spec = default_generator_spec(
        synth_authors, synth_domains, style_strength, domain_strength,
        stories_per_cell, words_per_story, synth_seed);
    auto corpus = generate(spec);
    auto out = open_out(synth_out);
    write_raw_stories_jsonl(out, corpus);
    std::cerr << "wrote " << corpus.size() << " stories\n";
  } else if (clean_cmd->parsed()) {
    auto raw = load_raw_stories(clean_in);
    std::vector<CleanStory> cleaned;
    std::vector<LabeledChunk> chunks;
    size_t skipped = 0;
    for (const auto& story : raw) {
      try {
        CleanStory cs = clean_story(story, {.trim = !no_trim});
        auto sc = chunk_story(cs, chunk_size);
        chunks.insert(chunks.end(), sc.begin(), sc.end());
        cleaned.push_back(std::move(cs));
      } catch (const StoryUnusable&) {
        ++skipped;
      }
    }
    if (chunks.empty()) throw InsufficientData("no usable chunks");
    auto out = open_out(clean_out);
    write_chunks_jsonl(out, chunks);
    if (!clean_stories_out.empty()) {
      auto cout2 = open_out(clean_stories_out);
      write_clean_stories_jsonl(cout2, cleaned);
    }
    std::cerr << "wrote " << chunks.size() << " chunks, skipped " << skipped
              << " unusable stories\n";
  } else if (vocab_cmd->parsed()) {
    auto chunks = load_chunks(vocab_in);
    std::vector<std::string> stream;
    for (const auto& c : chunks) {
      stream.insert(stream.end(), c.tokens.begin(), c.tokens.end());
    }
    Vocabulary vocab = build_vocabulary(stream, vocab_words);
    auto out = open_out(vocab_out);
    vocab.save_wordlist(out);
    std::cerr << "vocabulary size " << vocab.total_size() << "\n";
  } else if (sample_cmd->parsed()) {
    auto chunks = load_chunks(sample_in);
    SchemeSpec scheme = make_scheme(scheme_from_string(scheme_name), scale);
    ProblemInstance inst = sample_instance(chunks, scheme, sample_seed);
    auto out = open_out(sample_out);
    inst.save(out);
    std::cerr << "authors:";
    for (const auto& a : inst.authors) std::cerr << ' ' << a;
    std::cerr << " domains:";
    for (const auto& d : inst.domains) std::cerr << ' ' << d;
    std::cerr << "\n";
  } else if (train_cmd->parsed()) {
    auto in = open_in(train_instance);
    ProblemInstance inst = ProblemInstance::load(in);
    Vocabulary vocab = Vocabulary::load_wordlist_file(train_vocab);
    ModelSpec spec = model_spec_from_string(train_model);
    if (spec.family != ModelSpec::Family::encoder) {
      throw ConfigError("train handles encoder models; use eval for baselines");
    }
    EncoderConfig cfg = spec.encoder;
    train_flags.apply(cfg);
    cfg.vocab_size = vocab.total_size();
    if (!inst.train.empty()) {
      cfg.chunk_len = static_cast<int>(inst.train[0].tokens.size());
    }
    std::vector<EncodedChunk> tr, va;
    for (const auto& c : inst.train) tr.push_back(encode_chunk(c, vocab));
    for (const auto& c : inst.validation) va.push_back(encode_chunk(c, vocab));
    StyleEncoderModel model = train_encoder(cfg, tr, va);
    model.save_file(train_out);
    if (model.best_epoch >= 0) {
      const EpochStats& s = model.history[model.best_epoch];
      std::cerr << "best epoch " << model.best_epoch << " author "
                << s.author_macro << " domain " << s.domain_macro << "\n";
    }
  } else if (eval_cmd->parsed()) {
    auto in = open_in(eval_instance);
    ProblemInstance inst = ProblemInstance::load(in);
    ModelSpec spec = eval_flags.build();
    RunContext ctx;
    Vocabulary vocab;
    if (!eval_vocab.empty()) {
      vocab = Vocabulary::load_wordlist_file(eval_vocab);
      ctx.vocab = &vocab;
    }
    Report report = run_scheme(inst, spec, ctx);
    std::cerr << "runtime " << report.runtime_seconds << "s\n";
    std::ostringstream buf;
    write_reports_json(buf, {report});
    std::cout << buf.str();
    if (!eval_report.empty()) {
      auto out = open_out(eval_report);
      out << buf.str();
    }
  } else if (sweep_cmd->parsed()) {
    auto in = open_in(sweep_instance);
    ProblemInstance inst = ProblemInstance::load(in);
    ModelSpec spec = sweep_flags.build();
    RunContext ctx;
    Vocabulary vocab;
    if (!sweep_vocab.empty()) {
      vocab = Vocabulary::load_wordlist_file(sweep_vocab);
      ctx.vocab = &vocab;
    }
    auto curve = chunk_sweep(inst, spec, sweep_counts, ctx);
    auto out = open_out(sweep_out);
    out << "chunks_per_cell,normal_macro\n";
    for (const auto& [count, acc] : curve) {
      out << count << ',' << acc << '\n';
      std::cerr << count << " -> " << acc << "\n";
    }
  } else if (probe_cmd->parsed()) {
    StyleEncoderModel model = StyleEncoderModel::load_file(probe_model);
    Vocabulary vocab = Vocabulary::load_wordlist_file(probe_vocab);
    auto train_chunks = load_chunks(probe_train_path);
    auto test_chunks = load_chunks(probe_test_path);
    double acc =
        retrain_probe(model, train_chunks, test_chunks, vocab, probe_seed);
    std::cout << acc << "\n";
  } else if (report_cmd->parsed()) {
    auto in = open_in(report_in);
    nlohmann::json arr = nlohmann::json::parse(in);
    std::vector<Report> reports;
    for (const auto& j : arr) {
      Report r;
      r.model_id = j.at("model").get<std::string>();
      r.scheme = j.at("scheme").get<std::string>();
      r.seed = j.at("seed").get<uint64_t>();
      r.normal_macro = j.at("normal_macro").get<double>();
      if (j.contains("swapped_macro")) {
        r.swapped_macro = j.at("swapped_macro").get<double>();
        r.delta = j.at("delta").get<double>();
      }
      reports.push_back(std::move(r));
    }
    auto summary = aggregate(reports);
    auto out = open_out(report_out);
    write_summary_csv(out, summary);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const stylo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const stylo::StoryUnusable& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const stylo::InsufficientData& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const stylo::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
