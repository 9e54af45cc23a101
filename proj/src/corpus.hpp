#ifndef OPSEQ_CORPUS_HPP
#define OPSEQ_CORPUS_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace opseq {

using Token = std::string;
using Link = std::pair<int, int>;  // (source index, target index), 0-based

// One line of parallel text with its word alignment. Links are kept
// sorted and duplicate-free; indices are validated against the token lists.
struct AlignedSentencePair {
  std::vector<Token> source;
  std::vector<Token> target;
  std::vector<Link> links;  // sorted, unique
};

std::vector<Token> split_tokens(const std::string& line);
std::string join_tokens(const std::vector<Token>& toks, char sep = ' ');

// Pharaoh "i-j" pairs, whitespace separated. Duplicates collapse.
// Throws ParseError on malformed pairs (column = byte offset in the line).
std::vector<Link> parse_alignment_line(const std::string& text);

// Three line-aligned files, one sentence per line. Throws DataError on
// line-count mismatch and on link indices outside the sentence (the
// message names the offending 1-based sentence number).
std::vector<AlignedSentencePair> load_corpus(const std::string& src_path,
                                             const std::string& tgt_path,
                                             const std::string& align_path);

// Inverse of load_corpus; used by the round-trip checks.
void save_corpus(const std::vector<AlignedSentencePair>& corpus,
                 const std::string& src_path, const std::string& tgt_path,
                 const std::string& align_path);

// Frequency-cut token inventory. Reserved symbols always get the lowest
// ids (in the order given) and never count against the cap.
class Vocabulary {
 public:
  static constexpr const char* kStart = "<s>";
  static constexpr const char* kEnd = "</s>";
  static constexpr const char* kUnk = "<unk>";

  Vocabulary() = default;

  // Adds a token if absent; returns its id.
  int add(const Token& tok);
  // Lookup; unknown tokens map to the id of kUnk.
  int id(const Token& tok) const;
  bool contains(const Token& tok) const { return map_.count(tok) != 0; }
  const Token& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }

  int start_id() const { return id(kStart); }
  int end_id() const { return id(kEnd); }
  int unk_id() const { return unk_id_; }

  int reserved_count() const { return reserved_count_; }
  bool is_reserved(int id) const { return id < reserved_count_; }

  const std::vector<Token>& tokens() const { return tokens_; }

  void save(const std::string& path) const;  // "token<TAB>id", reserved first
  static Vocabulary load(const std::string& path);
  // Rebuild from an id-ordered token list (model deserialization).
  static Vocabulary from_tokens(const std::vector<Token>& toks, int reserved_count);

 private:
  friend Vocabulary build_vocabulary(const std::vector<Token>&, int,
                                     const std::vector<Token>&);
  std::vector<Token> tokens_;
  std::unordered_map<Token, int> map_;
  int reserved_count_ = 0;
  int unk_id_ = -1;
};

// Top-cap tokens by frequency, ties broken lexicographically. The three
// sentinel symbols plus `reserved` are always present. cap counts only
// non-reserved tokens; cap == 0 keeps reserved symbols only.
Vocabulary build_vocabulary(const std::vector<Token>& token_stream, int cap,
                            const std::vector<Token>& reserved = {});

// FNV-1a over a file's bytes; used for run-manifest input digests.
std::uint64_t file_digest(const std::string& path);

}  // namespace opseq

#endif
