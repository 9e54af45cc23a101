#ifndef OPSEQ_OPGEN_HPP
#define OPSEQ_OPGEN_HPP

#include <string>
#include <vector>

#include "corpus.hpp"

namespace opseq {

// Minimal translation unit: a connected component of the alignment graph.
// Position lists are sorted; one side may be empty only for unaligned words.
struct Mtu {
  std::vector<int> src_pos;
  std::vector<int> tgt_pos;
  std::vector<Token> src_toks;  // in source order
  std::vector<Token> tgt_toks;  // in target order

  int src_start() const { return src_pos.front(); }
  int src_end() const { return src_pos.back(); }
};

struct MtuExtraction {
  std::vector<Mtu> mtus;  // ordered by smallest target position
  std::vector<int> unaligned_source;
  std::vector<int> unaligned_target;
};

MtuExtraction extract_mtus(const AlignedSentencePair& pair);

enum class OpKind {
  Generate,            // GEN(src|tgt)
  GenerateSourceOnly,  // GEN_S(src)
  GenerateTargetOnly,  // GEN_T(tgt)
  GenerateSelf,        // GEN_SELF(w)
  InsertGap,           // GAP
  JumpBack,            // JB_n
  JumpForward,         // JF
  CoarseFD,            // FD (coarse variant only)
  CoarseBD,            // BD
  CoarseSW,            // SW
};

struct Operation {
  OpKind kind;
  std::vector<Token> src;  // payload, source side
  std::vector<Token> tgt;  // payload, target side
  int jump = 0;            // JumpBack gap index, >= 1
  // Set by the generator on JumpBack when the landing cept is immediately
  // left-adjacent to the previous cept and its generation closes the gap.
  bool swap_adjacent = false;

  bool is_reordering() const {
    return kind == OpKind::InsertGap || kind == OpKind::JumpBack ||
           kind == OpKind::JumpForward || kind == OpKind::CoarseFD ||
           kind == OpKind::CoarseBD || kind == OpKind::CoarseSW;
  }
  bool is_lexical() const { return !is_reordering(); }
};

using OperationSequence = std::vector<Operation>;

// Resumable generator state; value semantics so scorer hypotheses can fork.
// Source positions are global sentence positions and may arrive
// incrementally (phrase by phrase).
struct GenState {
  std::vector<Token> source;   // token per known position ("" = not yet seen)
  std::vector<char> known;
  std::vector<char> aligned;   // position belongs to some cept
  std::vector<char> covered;
  int pointer = 0;
  int frontier = 0;            // one past the rightmost covered position
  // Registered open gaps, mirror of the interpreter's placeholders.
  // anchor = original first position; members = still-uncovered positions.
  struct Gap {
    int anchor;
    std::vector<int> members;
  };
  std::vector<Gap> gaps;       // sorted by anchor
  int prev_cept_start = -1;

  void ensure_position(int pos);
  int open_gap_count() const;  // gaps that still hold words
};

// Feeds one target-ordered unit into the state, appending operations.
void feed_unaligned_target(GenState& st, const Token& tok, OperationSequence& out);
void feed_mtu(GenState& st, const Mtu& mtu, OperationSequence& out);
// Consumes known uncovered unaligned words at the pointer (the same
// consumption feed_mtu performs after generating); used when such a word
// only becomes known at a phrase boundary.
void consume_pending(GenState& st, OperationSequence& out);
// Emits GenerateSourceOnly for any remaining uncovered (necessarily
// unaligned) source words, jumping back into leftover gaps as needed.
void flush_trailing(GenState& st, OperationSequence& out);

// Deterministic conversion of a sentence pair into its operation sequence.
OperationSequence generate_operations(const AlignedSentencePair& pair);

// Verification oracle: replays a sequence into (source order, target).
// Throws DataError on corrupt sequences (bad jump index).
std::pair<std::vector<Token>, std::vector<Token>> interpret_operations(
    const OperationSequence& ops);

// FD/BD/SW mapping of a generator-produced sequence (Insert Gap after a
// Jump Back is dropped; swap relabeling only with swap_detection on).
OperationSequence to_coarse(const OperationSequence& ops, bool swap_detection = false);

// Drops every reordering operation; the lexical order is untouched.
OperationSequence to_lexical(const OperationSequence& ops);

enum class Orientation { M, S, FD, BD };
inline bool is_discontinuous(Orientation o) {
  return o == Orientation::FD || o == Orientation::BD;
}

// Word-based orientation of cur w.r.t. prev, both aligned MTUs.
Orientation classify_orientation(const Mtu& prev, const Mtu& cur);
std::string orientation_name(Orientation o);

// Text form: GEN(src|tgt) GEN_S(src) GEN_T(tgt) GEN_SELF(w) GAP JB_n JF FD BD SW.
// Multi-word payloads join with '_'.
std::string op_to_string(const Operation& op);
std::string ops_to_line(const OperationSequence& ops);
Operation parse_op(const std::string& text);
OperationSequence parse_ops_line(const std::string& line);

}  // namespace opseq

#endif
