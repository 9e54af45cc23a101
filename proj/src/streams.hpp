#ifndef OPSEQ_STREAMS_HPP
#define OPSEQ_STREAMS_HPP

#include <string>
#include <vector>

#include "opgen.hpp"

namespace opseq {

enum class Variant { Osm, Coarse, Lexical };

Variant parse_variant(const std::string& name);  // "osm" | "coarse" | "lexical"
std::string variant_name(Variant v);

// Synchronized source/target token streams. sync[j] is the source-stream
// length recorded when target token j was emitted, so the model's source
// window ends at the token co-emitted with the predicted target token.
struct StreamPair {
  std::vector<Token> source;
  std::vector<Token> target;
  std::vector<int> sync;
};

// Stream token names for the reordering symbols.
std::string reorder_symbol(const Operation& op);
bool is_reorder_symbol(const Token& tok);

// Splits an operation sequence into the two streams. Unaligned target
// words go to the target stream only, unaligned source words to the
// source stream only; reordering symbols go to both; Generate Self puts
// the source word on both sides. Throws DataError on a variant mismatch
// (coarse tags outside the coarse variant, reordering ops in lexical).
StreamPair split_streams(const OperationSequence& ops, Variant variant);

// Fixed-width context windows: (n-1) target-stream tokens then m
// source-stream tokens, start-padded; one extra end-of-sentence instance.
struct InstanceTokens {
  std::vector<Token> context;  // size (n-1)+m, target context first
  Token label;
};

std::vector<InstanceTokens> make_instances(const StreamPair& sp, int n, int m);

// Stream corpus file IO: two line-aligned token files plus a sync file of
// space-separated integers.
void save_streams(const std::vector<StreamPair>& corpus, const std::string& src_path,
                  const std::string& tgt_path, const std::string& sync_path);
std::vector<StreamPair> load_streams(const std::string& src_path, const std::string& tgt_path,
                                     const std::string& sync_path);

}  // namespace opseq

#endif
