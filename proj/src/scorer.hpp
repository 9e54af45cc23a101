#ifndef OPSEQ_SCORER_HPP
#define OPSEQ_SCORER_HPP

#include "neural.hpp"
#include "ngram.hpp"
#include "opgen.hpp"
#include "streams.hpp"

namespace opseq {

// One translation hypothesis step: a block of target words together with
// the source words it consumes. Source positions are global sentence
// positions; links index into this phrase's own token lists.
struct Phrase {
  std::vector<int> src_pos;     // global, strictly ascending
  std::vector<Token> src_toks;  // parallel to src_pos
  std::vector<Token> tgt;       // appended to the target in order
  std::vector<Link> links;      // (index into src_toks, index into tgt)
};

// Resumable scoring state. Value semantics: copy it to fork hypotheses.
struct ScorerState {
  GenState gen;
  std::vector<Token> src_stream;
  std::vector<Token> tgt_stream;
  bool last_was_jump_back = false;  // carries the coarse gap-drop rule
  double total = 0.0;               // accumulated natural-log score
};

// Scores sentences under a sequence model, either whole or phrase by
// phrase. Incremental and whole-sentence paths run the same generator and
// stream conversion, so splitting a sentence never changes its score.
class IncrementalScorer {
 public:
  IncrementalScorer(const NgramModel& model, Variant variant, bool swap_detection = false);
  IncrementalScorer(const NeuralModel& model, Variant variant, bool swap_detection = false);

  Variant variant() const { return variant_; }

  ScorerState init() const { return ScorerState{}; }
  // Feeds one phrase; returns the natural-log score delta.
  double extend(ScorerState& st, const Phrase& phrase) const;
  // Flushes trailing operations (on a copy; st is untouched) and adds the
  // end-of-sentence term; returns that final delta. The sentence score is
  // st.total + finalize(st), and repeated calls return the same value.
  double finalize(const ScorerState& st) const;

  // Reference path: full generation, conversion, one model call.
  double score_sentence(const AlignedSentencePair& pair) const;
  // Scores an already-extracted operation sequence (converted to the
  // scorer's variant first when it is raw).
  double score_operations(const OperationSequence& ops) const;
  double score_stream(const StreamPair& sp) const;

 private:
  double score_ops(ScorerState& st, const OperationSequence& ops) const;
  double score_label(const ScorerState& st, const Token& label) const;

  const NgramModel* ngram_ = nullptr;
  const NeuralModel* nn_ = nullptr;
  Variant variant_;
  bool swap_ = false;
};

// Cuts a sentence pair into phrases along its unit sequence (aligned
// units and unaligned target words in target order). cuts are strictly
// increasing interior positions in that sequence; unaligned source words
// go to the phrase after which the whole-sentence generator emits them.
std::vector<Phrase> make_phrases(const AlignedSentencePair& pair,
                                 const std::vector<int>& cuts);
// Number of units the cuts of make_phrases index into.
int count_units(const AlignedSentencePair& pair);

}  // namespace opseq

#endif
