#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stylo {

enum class BlockKind { plain, headline, centered, bold, underlined };

BlockKind block_kind_from_string(const std::string& s);
std::string to_string(BlockKind k);

struct StoryBlock {
  BlockKind kind = BlockKind::plain;
  std::string text;
};

struct RawStory {
  std::string story_id;
  std::string author_id;
  std::string domain_id;
  std::vector<StoryBlock> blocks;
};

struct CleanStory {
  std::string story_id;
  std::string author_id;
  std::string domain_id;
  std::string text;
};

struct LabeledChunk {
  std::vector<std::string> tokens;  // exactly chunk_size tokens
  std::string author_id;
  std::string domain_id;
  std::string story_id;
  int chunk_index = 0;
};

// --- cleaning pipeline ------------------------------------------------------

// Keeps only plain blocks. Throws StoryUnusable if nothing remains.
RawStory strip_markup_blocks(const RawStory& story);

// Removes paragraphs starting (case-insensitively) with "disclaimer:" or
// "dedication:".
std::vector<std::string> drop_disclaimer_paragraphs(
    const std::vector<std::string>& paragraphs);

// Removes max(first paragraph, first 5% of tokens) and the same from the
// back, each cut extended to the next sentence boundary. Throws
// StoryUnusable when the cuts consume the whole story.
std::vector<std::string> trim_boundaries(
    const std::vector<std::string>& paragraphs);

// Deletes demarcation runs and standalone '*', unifies quotes to a single
// quote sign, reduces punctuation to ASCII.
std::string scrub_artifacts(const std::string& paragraph);
std::vector<std::string> scrub_artifacts(
    const std::vector<std::string>& paragraphs);

// True for strings like "~+~+~+~+~": a non-alphanumeric pattern of length
// 1..3 tiled at least three times. Pure dot runs are exempt (ellipses).
bool is_demarcation_run(const std::string& s);

struct CleanOptions {
  bool trim = true;  // boundary trimming is skippable for fixed-point tests
};

CleanStory clean_story(const RawStory& story, const CleanOptions& opts = {});

// --- chunking and splitting -------------------------------------------------

std::vector<LabeledChunk> chunk_story(const CleanStory& story,
                                      int chunk_size = 500);

struct SplitBudget {
  int train = 0;
  int validation = 0;
  int test = 0;
};

struct DatasetSplit {
  std::vector<LabeledChunk> train;
  std::vector<LabeledChunk> validation;
  std::vector<LabeledChunk> test;
};

// Assigns whole stories to splits so that every (author, domain) cell meets
// its budget exactly; surplus chunks of an assigned story are dropped.
// Deterministic in seed. Throws InsufficientData naming the deficient cell.
DatasetSplit split_dataset(const std::vector<LabeledChunk>& chunks,
                           const SplitBudget& budget, uint64_t seed);

// Searches for an assignment of story sizes to groups such that every
// group's assigned chunk total covers its deficit. Groups are tried
// most-deficient first; returns false when no assignment exists.
bool assign_stories_to_groups(const std::vector<size_t>& sizes,
                              std::vector<long> deficits,
                              std::vector<int>& assignment);

// --- JSONL interfaces -------------------------------------------------------

std::vector<RawStory> read_raw_stories_jsonl(std::istream& in);
std::vector<RawStory> load_raw_stories(const std::string& path);
void write_raw_stories_jsonl(std::ostream& out,
                             const std::vector<RawStory>& stories);

void write_clean_stories_jsonl(std::ostream& out,
                               const std::vector<CleanStory>& stories);
std::vector<CleanStory> read_clean_stories_jsonl(std::istream& in);

void write_chunks_jsonl(std::ostream& out,
                        const std::vector<LabeledChunk>& chunks);
std::vector<LabeledChunk> read_chunks_jsonl(std::istream& in);

}  // namespace stylo
