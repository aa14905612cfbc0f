#include "stylo/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "stylo/errors.hpp"
#include "stylo/rng.hpp"
#include "stylo/text.hpp"

namespace stylo {

using nlohmann::json;

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "plain") return BlockKind::plain;
  if (s == "headline") return BlockKind::headline;
  if (s == "centered") return BlockKind::centered;
  if (s == "bold") return BlockKind::bold;
  if (s == "underlined") return BlockKind::underlined;
  throw ConfigError("unknown block kind: " + s);
}

std::string to_string(BlockKind k) {
  switch (k) {
    case BlockKind::plain: return "plain";
    case BlockKind::headline: return "headline";
    case BlockKind::centered: return "centered";
    case BlockKind::bold: return "bold";
    case BlockKind::underlined: return "underlined";
  }
  return "plain";
}

RawStory strip_markup_blocks(const RawStory& story) {
  RawStory out;
  out.story_id = story.story_id;
  out.author_id = story.author_id;
  out.domain_id = story.domain_id;
  for (const auto& b : story.blocks) {
    if (b.kind == BlockKind::plain) out.blocks.push_back(b);
  }
  if (out.blocks.empty()) {
    throw StoryUnusable("story " + story.story_id + ": no plain blocks left");
  }
  return out;
}

std::vector<std::string> drop_disclaimer_paragraphs(
    const std::vector<std::string>& paragraphs) {
  std::vector<std::string> out;
  for (const auto& p : paragraphs) {
    size_t i = 0;
    while (i < p.size() && std::isspace(static_cast<unsigned char>(p[i]))) ++i;
    size_t start = i;
    while (i < p.size() && std::isalpha(static_cast<unsigned char>(p[i]))) ++i;
    std::string word = to_lower(p.substr(start, i - start));
    while (i < p.size() && std::isspace(static_cast<unsigned char>(p[i]))) ++i;
    bool drop = (word == "disclaimer" || word == "dedication") &&
                i < p.size() && p[i] == ':';
    if (!drop) out.push_back(p);
  }
  return out;
}

std::vector<std::string> trim_boundaries(
    const std::vector<std::string>& paragraphs) {
  // flat token stream with the owning paragraph of each token
  std::vector<std::string> tokens;
  std::vector<size_t> owner;
  std::vector<size_t> par_len(paragraphs.size(), 0);
  for (size_t p = 0; p < paragraphs.size(); ++p) {
    for (auto& t : whitespace_tokens(paragraphs[p])) {
      tokens.push_back(std::move(t));
      owner.push_back(p);
      ++par_len[p];
    }
  }
  const size_t total = tokens.size();
  if (total == 0) throw StoryUnusable("empty story");
  const size_t five_pct = total * 5 / 100;

  // front cut: max(first paragraph, 5%), then extend to a sentence end; a
  // single-paragraph story falls back to the 5% rule alone
  const bool single_par = paragraphs.size() == 1;
  size_t front = single_par ? five_pct : std::max(par_len[0], five_pct);
  front = std::min(front, total);
  while (front > 0 && front < total && !ends_sentence(tokens[front - 1])) {
    ++front;
  }

  // back cut: max(last paragraph, 5%), extended so the text ends a sentence
  size_t back = single_par ? five_pct : std::max(par_len.back(), five_pct);
  size_t end = total > back ? total - back : 0;
  while (end > front && !ends_sentence(tokens[end - 1])) --end;

  if (end <= front) throw StoryUnusable("boundary trims consume the story");

  std::vector<std::string> out(paragraphs.size());
  for (size_t i = front; i < end; ++i) {
    std::string& par = out[owner[i]];
    if (!par.empty()) par.push_back(' ');
    par += tokens[i];
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const std::string& s) { return s.empty(); }),
            out.end());
  return out;
}

bool is_demarcation_run(const std::string& s) {
  for (size_t plen = 1; plen <= 3 && plen <= s.size(); ++plen) {
    if (s.size() < 3 * plen) continue;
    bool tiled = true;
    for (size_t i = 0; i < s.size() && tiled; ++i) {
      if (s[i] != s[i % plen]) tiled = false;
    }
    if (!tiled) continue;
    bool nonalnum = true;
    for (size_t i = 0; i < plen; ++i) {
      if (std::isalnum(static_cast<unsigned char>(s[i]))) nonalnum = false;
    }
    if (!nonalnum) continue;
    if (plen == 1 && s[0] == '.') continue;  // dot runs are ellipses
    return true;
  }
  return false;
}

std::string scrub_artifacts(const std::string& paragraph) {
  std::string text = ascii_reduce(paragraph);

  // unify quotation: ``/''/`/" -> '
  std::string unified;
  unified.reserve(text.size());
  for (size_t i = 0; i < text.size();) {
    if (text.compare(i, 2, "``") == 0 || text.compare(i, 2, "''") == 0) {
      unified.push_back('\'');
      i += 2;
    } else if (text[i] == '`' || text[i] == '"') {
      unified.push_back('\'');
      ++i;
    } else {
      unified.push_back(text[i]);
      ++i;
    }
  }

  auto toks = whitespace_tokens(unified);
  if (!toks.empty()) {
    std::string joined;
    for (const auto& t : toks) joined += t;
    if (is_demarcation_run(joined)) return "";
  }
  std::string out;
  for (const auto& t : toks) {
    if (t == "*" || is_demarcation_run(t)) continue;
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::string> scrub_artifacts(
    const std::vector<std::string>& paragraphs) {
  std::vector<std::string> out;
  for (const auto& p : paragraphs) {
    std::string s = scrub_artifacts(p);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

CleanStory clean_story(const RawStory& story, const CleanOptions& opts) {
  RawStory stripped = strip_markup_blocks(story);
  std::vector<std::string> paragraphs;
  paragraphs.reserve(stripped.blocks.size());
  for (const auto& b : stripped.blocks) paragraphs.push_back(b.text);
  paragraphs = drop_disclaimer_paragraphs(paragraphs);
  if (paragraphs.empty()) {
    throw StoryUnusable("story " + story.story_id + ": only disclaimers");
  }
  if (opts.trim) paragraphs = trim_boundaries(paragraphs);
  paragraphs = scrub_artifacts(paragraphs);
  if (paragraphs.empty()) {
    throw StoryUnusable("story " + story.story_id + ": nothing after cleaning");
  }
  CleanStory out;
  out.story_id = story.story_id;
  out.author_id = story.author_id;
  out.domain_id = story.domain_id;
  for (size_t i = 0; i < paragraphs.size(); ++i) {
    if (i) out.text.push_back('\n');
    out.text += paragraphs[i];
  }
  return out;
}

std::vector<LabeledChunk> chunk_story(const CleanStory& story, int chunk_size) {
  if (chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
  auto tokens = tokenize(story.text);
  std::vector<LabeledChunk> out;
  const size_t n = tokens.size() / static_cast<size_t>(chunk_size);
  for (size_t c = 0; c < n; ++c) {
    LabeledChunk chunk;
    chunk.tokens.assign(tokens.begin() + c * chunk_size,
                        tokens.begin() + (c + 1) * chunk_size);
    chunk.author_id = story.author_id;
    chunk.domain_id = story.domain_id;
    chunk.story_id = story.story_id;
    chunk.chunk_index = static_cast<int>(c);
    out.push_back(std::move(chunk));
  }
  return out;
}

namespace {

struct StoryGroup {
  std::string story_id;
  std::vector<const LabeledChunk*> chunks;
};

// DFS over story->group assignments; groups are tried most-deficient first.
bool assign_stories_dfs(const std::vector<size_t>& sizes, size_t idx,
                        std::vector<long>& deficit, long remaining,
                        std::vector<int>& assignment) {
  long need = 0;
  for (long d : deficit) need += std::max(d, 0L);
  if (need == 0) {
    for (size_t i = idx; i < assignment.size(); ++i) assignment[i] = 0;
    return true;
  }
  if (remaining < need || idx == sizes.size()) return false;
  std::vector<int> order(deficit.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return deficit[a] > deficit[b]; });
  long sz = static_cast<long>(sizes[idx]);
  for (int group : order) {
    assignment[idx] = group;
    deficit[group] -= sz;
    if (assign_stories_dfs(sizes, idx + 1, deficit, remaining - sz,
                           assignment)) {
      return true;
    }
    deficit[group] += sz;
  }
  return false;
}

}  // namespace

bool assign_stories_to_groups(const std::vector<size_t>& sizes,
                              std::vector<long> deficits,
                              std::vector<int>& assignment) {
  long total = 0;
  for (size_t s : sizes) total += static_cast<long>(s);
  assignment.assign(sizes.size(), 0);
  return assign_stories_dfs(sizes, 0, deficits, total, assignment);
}

DatasetSplit split_dataset(const std::vector<LabeledChunk>& chunks,
                           const SplitBudget& budget, uint64_t seed) {
  std::map<std::pair<std::string, std::string>, std::vector<const LabeledChunk*>>
      cells;
  for (const auto& c : chunks) {
    cells[{c.author_id, c.domain_id}].push_back(&c);
  }
  DatasetSplit result;
  const long budgets[3] = {budget.train, budget.validation, budget.test};
  for (auto& [key, cell_chunks] : cells) {
    // group by story, chunks ordered by index
    std::map<std::string, StoryGroup> by_story;
    for (const auto* c : cell_chunks) {
      auto& g = by_story[c->story_id];
      g.story_id = c->story_id;
      g.chunks.push_back(c);
    }
    std::vector<StoryGroup> stories;
    for (auto& [id, g] : by_story) {
      std::sort(g.chunks.begin(), g.chunks.end(),
                [](const LabeledChunk* a, const LabeledChunk* b) {
                  return a->chunk_index < b->chunk_index;
                });
      stories.push_back(std::move(g));
    }
    CounterRng rng(seed, "split/" + key.first + "/" + key.second);
    rng.shuffle(stories);

    std::vector<size_t> sizes;
    long total = 0;
    for (const auto& s : stories) {
      sizes.push_back(s.chunks.size());
      total += static_cast<long>(s.chunks.size());
    }
    std::vector<long> deficit = {budgets[0], budgets[1], budgets[2]};
    std::vector<int> assignment;
    if (!assign_stories_to_groups(sizes, deficit, assignment)) {
      throw InsufficientData("cell (" + key.first + ", " + key.second +
                             "): cannot satisfy split budget from " +
                             std::to_string(stories.size()) + " stories / " +
                             std::to_string(total) + " chunks");
    }
    std::vector<LabeledChunk>* outs[3] = {&result.train, &result.validation,
                                          &result.test};
    for (int split = 0; split < 3; ++split) {
      long taken = 0;
      for (size_t i = 0; i < stories.size() && taken < budgets[split]; ++i) {
        if (assignment[i] != split) continue;
        for (const auto* c : stories[i].chunks) {
          if (taken >= budgets[split]) break;
          outs[split]->push_back(*c);
          ++taken;
        }
      }
    }
  }
  return result;
}

// --- JSONL ------------------------------------------------------------------

std::vector<RawStory> read_raw_stories_jsonl(std::istream& in) {
  std::vector<RawStory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    RawStory s;
    s.story_id = j.at("story_id").get<std::string>();
    s.author_id = j.at("author_id").get<std::string>();
    s.domain_id = j.at("domain_id").get<std::string>();
    for (const auto& b : j.at("blocks")) {
      StoryBlock blk;
      blk.kind = block_kind_from_string(b.at("kind").get<std::string>());
      blk.text = b.at("text").get<std::string>();
      s.blocks.push_back(std::move(blk));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RawStory> load_raw_stories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path);
  return read_raw_stories_jsonl(in);
}

void write_raw_stories_jsonl(std::ostream& out,
                             const std::vector<RawStory>& stories) {
  for (const auto& s : stories) {
    json blocks = json::array();
    for (const auto& b : s.blocks) {
      blocks.push_back({{"kind", to_string(b.kind)}, {"text", b.text}});
    }
    json j = {{"story_id", s.story_id},
              {"author_id", s.author_id},
              {"domain_id", s.domain_id},
              {"blocks", blocks}};
    out << j.dump() << '\n';
  }
}

void write_clean_stories_jsonl(std::ostream& out,
                               const std::vector<CleanStory>& stories) {
  for (const auto& s : stories) {
    json j = {{"story_id", s.story_id},
              {"author_id", s.author_id},
              {"domain_id", s.domain_id},
              {"text", s.text}};
    out << j.dump() << '\n';
  }
}

std::vector<CleanStory> read_clean_stories_jsonl(std::istream& in) {
  std::vector<CleanStory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    CleanStory s;
    s.story_id = j.at("story_id").get<std::string>();
    s.author_id = j.at("author_id").get<std::string>();
    s.domain_id = j.at("domain_id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    out.push_back(std::move(s));
  }
  return out;
}

void write_chunks_jsonl(std::ostream& out,
                        const std::vector<LabeledChunk>& chunks) {
  for (const auto& c : chunks) {
    json j = {{"story_id", c.story_id},
              {"author_id", c.author_id},
              {"domain_id", c.domain_id},
              {"chunk_index", c.chunk_index},
              {"tokens", c.tokens}};
    out << j.dump() << '\n';
  }
}

std::vector<LabeledChunk> read_chunks_jsonl(std::istream& in) {
  std::vector<LabeledChunk> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
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

}  // namespace stylo
