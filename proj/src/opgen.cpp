#include "opgen.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace opseq {

MtuExtraction extract_mtus(const AlignedSentencePair& pair) {
  const int ns = static_cast<int>(pair.source.size());
  const int nt = static_cast<int>(pair.target.size());
  // Union-find over source nodes [0,ns) and target nodes [ns, ns+nt).
  std::vector<int> parent(ns + nt);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [i, j] : pair.links) parent[find(i)] = find(ns + j);

  std::vector<char> src_aligned(ns, 0), tgt_aligned(nt, 0);
  for (const auto& [i, j] : pair.links) {
    src_aligned[i] = 1;
    tgt_aligned[j] = 1;
  }

  std::vector<Mtu> by_root(ns + nt);
  std::vector<int> roots;
  for (int i = 0; i < ns; ++i)
    if (src_aligned[i]) {
      int r = find(i);
      if (by_root[r].src_pos.empty() && by_root[r].tgt_pos.empty()) roots.push_back(r);
      by_root[r].src_pos.push_back(i);
    }
  for (int j = 0; j < nt; ++j)
    if (tgt_aligned[j]) {
      int r = find(ns + j);
      if (by_root[r].src_pos.empty() && by_root[r].tgt_pos.empty()) roots.push_back(r);
      by_root[r].tgt_pos.push_back(j);
    }

  MtuExtraction ex;
  for (int r : roots) {
    Mtu& m = by_root[r];
    std::sort(m.src_pos.begin(), m.src_pos.end());
    std::sort(m.tgt_pos.begin(), m.tgt_pos.end());
    for (int i : m.src_pos) m.src_toks.push_back(pair.source[i]);
    for (int j : m.tgt_pos) m.tgt_toks.push_back(pair.target[j]);
    ex.mtus.push_back(std::move(m));
  }
  std::sort(ex.mtus.begin(), ex.mtus.end(),
            [](const Mtu& a, const Mtu& b) { return a.tgt_pos.front() < b.tgt_pos.front(); });
  for (int i = 0; i < ns; ++i)
    if (!src_aligned[i]) ex.unaligned_source.push_back(i);
  for (int j = 0; j < nt; ++j)
    if (!tgt_aligned[j]) ex.unaligned_target.push_back(j);
  return ex;
}

void GenState::ensure_position(int pos) {
  if (pos < static_cast<int>(source.size())) return;
  source.resize(pos + 1);
  known.resize(pos + 1, 0);
  aligned.resize(pos + 1, 0);
  covered.resize(pos + 1, 0);
}

int GenState::open_gap_count() const {
  int n = 0;
  for (const auto& g : gaps)
    if (!g.members.empty()) ++n;
  return n;
}

namespace {

bool in_registered_gap(const GenState& st, int pos, std::size_t* which = nullptr) {
  for (std::size_t g = 0; g < st.gaps.size(); ++g)
    if (std::binary_search(st.gaps[g].members.begin(), st.gaps[g].members.end(), pos)) {
      if (which) *which = g;
      return true;
    }
  return false;
}

// Uncovered positions below the frontier not registered in any gap. By
// construction such positions form the remainder of the most recently
// entered gap and start at (or after) the pointer.
std::vector<int> unregistered_remainder(const GenState& st) {
  std::vector<int> r;
  for (int q = 0; q < st.frontier; ++q)
    if (!st.covered[q] && !in_registered_gap(st, q)) r.push_back(q);
  return r;
}

void register_gap(GenState& st, std::vector<int> members) {
  GenState::Gap g{members.front(), std::move(members)};
  auto it = std::upper_bound(st.gaps.begin(), st.gaps.end(), g,
                             [](const GenState::Gap& a, const GenState::Gap& b) {
                               return a.anchor < b.anchor;
                             });
  st.gaps.insert(it, std::move(g));
}

// Right-to-left index of gap g (1 = nearest to the frontier). Counts every
// registered gap so indices stay in step with the interpreter placeholders.
int gap_index_from_right(const GenState& st, std::size_t g) {
  return static_cast<int>(st.gaps.size() - g);
}

void cover_position(GenState& st, int q) {
  st.covered[q] = 1;
  if (q + 1 > st.frontier) st.frontier = q + 1;
  for (auto& gap : st.gaps) {
    auto it = std::lower_bound(gap.members.begin(), gap.members.end(), q);
    if (it != gap.members.end() && *it == q) gap.members.erase(it);
  }
}

void consume_unaligned(GenState& st, OperationSequence& out) {
  while (st.pointer < static_cast<int>(st.source.size()) && st.known[st.pointer] &&
         !st.covered[st.pointer] && !st.aligned[st.pointer]) {
    Operation op;
    op.kind = OpKind::GenerateSourceOnly;
    op.src.push_back(st.source[st.pointer]);
    out.push_back(std::move(op));
    cover_position(st, st.pointer);
    ++st.pointer;
  }
}

void emit_gap(GenState& st, std::vector<int> members, OperationSequence& out) {
  out.push_back(Operation{OpKind::InsertGap, {}, {}, 0, false});
  register_gap(st, std::move(members));
}

}  // namespace

void feed_unaligned_target(GenState& st, const Token& tok, OperationSequence& out) {
  Operation op;
  op.kind = OpKind::GenerateTargetOnly;
  op.tgt.push_back(tok);
  out.push_back(std::move(op));
}

void consume_pending(GenState& st, OperationSequence& out) { consume_unaligned(st, out); }

void feed_mtu(GenState& st, const Mtu& mtu, OperationSequence& out) {
  if (mtu.src_pos.empty()) throw DataError("feed_mtu requires an aligned unit");
  st.ensure_position(mtu.src_pos.back());
  for (std::size_t k = 0; k < mtu.src_pos.size(); ++k) {
    int q = mtu.src_pos[k];
    if (st.covered[q])
      throw DataError("cept position " + std::to_string(q) +
                      " incompatible with prior coverage");
    if (st.known[q] && st.source[q] != mtu.src_toks[k])
      throw DataError("conflicting token at source position " + std::to_string(q));
    st.source[q] = mtu.src_toks[k];
    st.known[q] = 1;
    st.aligned[q] = 1;
  }

  const int s = mtu.src_start();
  int jb_op_index = -1;          // position of an emitted JumpBack in `out`
  bool jb_skipped_words = false;
  std::vector<int> landed_members;

  auto remainder = unregistered_remainder(st);
  bool s_in_remainder = std::binary_search(remainder.begin(), remainder.end(), s);

  if (s_in_remainder) {
    std::vector<int> skipped;
    for (int q : remainder)
      if (q < s) skipped.push_back(q);
    if (!skipped.empty()) emit_gap(st, std::move(skipped), out);
  } else if (s < st.frontier) {
    std::size_t g;
    if (!in_registered_gap(st, s, &g))
      throw DataError("internal: cept start " + std::to_string(s) + " not in any open gap");
    if (!remainder.empty()) emit_gap(st, std::move(remainder), out);
    // remainder registration may have shifted gap positions; refind.
    in_registered_gap(st, s, &g);
    Operation jb;
    jb.kind = OpKind::JumpBack;
    jb.jump = gap_index_from_right(st, g);
    out.push_back(jb);
    jb_op_index = static_cast<int>(out.size()) - 1;
    landed_members = st.gaps[g].members;
    st.pointer = landed_members.front();
    st.gaps.erase(st.gaps.begin() + static_cast<long>(g));
    std::vector<int> skipped;
    for (int q : landed_members)
      if (q < s) skipped.push_back(q);
    if (!skipped.empty()) {
      jb_skipped_words = true;
      emit_gap(st, std::move(skipped), out);
    }
  } else {
    if (!remainder.empty()) emit_gap(st, std::move(remainder), out);
    if (st.pointer < st.frontier) {
      out.push_back(Operation{OpKind::JumpForward, {}, {}, 0, false});
      st.pointer = st.frontier;
    }
    if (st.frontier < s) {
      std::vector<int> skipped(static_cast<std::size_t>(s - st.frontier));
      std::iota(skipped.begin(), skipped.end(), st.frontier);
      emit_gap(st, std::move(skipped), out);
    }
  }

  // Swap bookkeeping: jump landed directly on the cept, the cept empties
  // the gap, and the cept sits immediately left of the previous one.
  if (jb_op_index >= 0 && !jb_skipped_words && st.prev_cept_start >= 0 &&
      mtu.src_end() + 1 == st.prev_cept_start &&
      landed_members == mtu.src_pos) {
    out[static_cast<std::size_t>(jb_op_index)].swap_adjacent = true;
  }

  Operation gen;
  bool self = mtu.src_toks.size() == 1 && mtu.tgt_toks.size() == 1 &&
              mtu.src_toks[0] == mtu.tgt_toks[0];
  if (self) {
    gen.kind = OpKind::GenerateSelf;
    gen.src = mtu.src_toks;
  } else {
    gen.kind = OpKind::Generate;
    gen.src = mtu.src_toks;
    gen.tgt = mtu.tgt_toks;
  }
  out.push_back(std::move(gen));

  for (int q : mtu.src_pos) cover_position(st, q);

  // Interior holes of a discontinuous cept become open gaps right away so
  // that jump indices stay consistent.
  std::vector<int> hole;
  for (int q = s + 1; q < mtu.src_end(); ++q) {
    if (!st.covered[q] && !in_registered_gap(st, q)) {
      hole.push_back(q);
    } else if (!hole.empty() && st.covered[q]) {
      emit_gap(st, std::move(hole), out);
      hole.clear();
    }
  }
  if (!hole.empty()) emit_gap(st, std::move(hole), out);

  st.pointer = mtu.src_end() + 1;
  st.prev_cept_start = s;
  consume_unaligned(st, out);
}

void flush_trailing(GenState& st, OperationSequence& out) {
  consume_unaligned(st, out);
  // Close leftover gaps right-to-left; at this point every word still open
  // is unaligned.
  for (;;) {
    int best = -1;
    for (int g = static_cast<int>(st.gaps.size()) - 1; g >= 0; --g)
      if (!st.gaps[static_cast<std::size_t>(g)].members.empty()) {
        best = g;
        break;
      }
    if (best < 0) break;
    Operation jb;
    jb.kind = OpKind::JumpBack;
    jb.jump = gap_index_from_right(st, static_cast<std::size_t>(best));
    out.push_back(jb);
    auto members = st.gaps[static_cast<std::size_t>(best)].members;
    st.gaps.erase(st.gaps.begin() + best);
    for (int q : members) {
      if (!st.known[q]) continue;
      Operation op;
      op.kind = OpKind::GenerateSourceOnly;
      op.src.push_back(st.source[q]);
      out.push_back(std::move(op));
      cover_position(st, q);
      st.pointer = q + 1;
    }
    consume_unaligned(st, out);
  }
  // Stranded remainder words (only reachable via discontinuous-cept holes).
  for (int q = 0; q < static_cast<int>(st.source.size()); ++q) {
    if (st.known[q] && !st.covered[q] && !st.aligned[q]) {
      Operation op;
      op.kind = OpKind::GenerateSourceOnly;
      op.src.push_back(st.source[q]);
      out.push_back(std::move(op));
      cover_position(st, q);
      st.pointer = q + 1;
    }
  }
}

OperationSequence generate_operations(const AlignedSentencePair& pair) {
  auto ex = extract_mtus(pair);
  GenState st;
  if (!pair.source.empty()) {
    st.ensure_position(static_cast<int>(pair.source.size()) - 1);
    for (std::size_t i = 0; i < pair.source.size(); ++i) {
      st.source[i] = pair.source[i];
      st.known[i] = 1;
    }
    for (const auto& [i, j] : pair.links) st.aligned[static_cast<std::size_t>(i)] = 1;
  }
  std::vector<char> tgt_unaligned(pair.target.size(), 1);
  for (const auto& [i, j] : pair.links) tgt_unaligned[static_cast<std::size_t>(j)] = 0;

  OperationSequence out;
  std::size_t mi = 0;
  for (int j = 0; j < static_cast<int>(pair.target.size()); ++j) {
    if (mi < ex.mtus.size() && ex.mtus[mi].tgt_pos.front() == j) {
      feed_mtu(st, ex.mtus[mi], out);
      ++mi;
    } else if (tgt_unaligned[static_cast<std::size_t>(j)]) {
      feed_unaligned_target(st, pair.target[j], out);
    }
  }
  flush_trailing(st, out);
  return out;
}

std::pair<std::vector<Token>, std::vector<Token>> interpret_operations(
    const OperationSequence& ops) {
  struct Elem {
    bool gap;
    Token tok;
  };
  std::vector<Elem> seq;
  std::size_t cursor = 0;
  std::vector<Token> target;

  auto insert_tokens = [&](const std::vector<Token>& toks) {
    for (const auto& t : toks) {
      seq.insert(seq.begin() + static_cast<long>(cursor), Elem{false, t});
      ++cursor;
    }
  };

  for (const auto& op : ops) {
    switch (op.kind) {
      case OpKind::Generate:
        insert_tokens(op.src);
        for (const auto& t : op.tgt) target.push_back(t);
        break;
      case OpKind::GenerateSelf:
        insert_tokens(op.src);
        for (const auto& t : op.src) target.push_back(t);
        break;
      case OpKind::GenerateSourceOnly:
        insert_tokens(op.src);
        break;
      case OpKind::GenerateTargetOnly:
        for (const auto& t : op.tgt) target.push_back(t);
        break;
      case OpKind::InsertGap:
        seq.insert(seq.begin() + static_cast<long>(cursor), Elem{true, {}});
        ++cursor;
        break;
      case OpKind::JumpBack: {
        if (op.jump < 1) throw DataError("jump back index must be >= 1");
        int seen = 0;
        long at = -1;
        for (long i = static_cast<long>(seq.size()) - 1; i >= 0; --i) {
          if (seq[static_cast<std::size_t>(i)].gap && ++seen == op.jump) {
            at = i;
            break;
          }
        }
        if (at < 0)
          throw DataError("jump back " + std::to_string(op.jump) + " with only " +
                          std::to_string(seen) + " open gaps");
        seq.erase(seq.begin() + at);
        cursor = static_cast<std::size_t>(at);
        break;
      }
      case OpKind::JumpForward:
        cursor = seq.size();
        break;
      default:
        throw DataError("coarse tags are not interpretable");
    }
  }
  std::vector<Token> source;
  for (const auto& e : seq)
    if (!e.gap) source.push_back(e.tok);
  return {source, target};
}

OperationSequence to_coarse(const OperationSequence& ops, bool swap_detection) {
  OperationSequence out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Operation& op = ops[i];
    switch (op.kind) {
      case OpKind::InsertGap:
        if (i > 0 && ops[i - 1].kind == OpKind::JumpBack) break;  // dropped
        out.push_back(Operation{OpKind::CoarseFD, {}, {}, 0, false});
        break;
      case OpKind::JumpBack:
        out.push_back(Operation{swap_detection && op.swap_adjacent ? OpKind::CoarseSW
                                                                   : OpKind::CoarseBD,
                                {}, {}, 0, false});
        break;
      case OpKind::JumpForward:
        out.push_back(Operation{OpKind::CoarseFD, {}, {}, 0, false});
        break;
      case OpKind::CoarseFD:
      case OpKind::CoarseBD:
      case OpKind::CoarseSW:
        throw DataError("to_coarse input already carries coarse tags");
      default:
        out.push_back(op);
    }
  }
  return out;
}

OperationSequence to_lexical(const OperationSequence& ops) {
  OperationSequence out;
  for (const auto& op : ops)
    if (op.is_lexical()) out.push_back(op);
  return out;
}

Orientation classify_orientation(const Mtu& prev, const Mtu& cur) {
  if (prev.src_pos.empty() || cur.src_pos.empty())
    throw DataError("orientation requires aligned units on both sides");
  if (cur.src_start() == prev.src_end() + 1) return Orientation::M;
  if (cur.src_end() + 1 == prev.src_start()) return Orientation::S;
  return cur.src_start() > prev.src_end() + 1 ? Orientation::FD : Orientation::BD;
}

std::string orientation_name(Orientation o) {
  switch (o) {
    case Orientation::M: return "M";
    case Orientation::S: return "S";
    case Orientation::FD: return "FD";
    default: return "BD";
  }
}

std::string op_to_string(const Operation& op) {
  switch (op.kind) {
    case OpKind::Generate:
      return "GEN(" + join_tokens(op.src, '_') + "|" + join_tokens(op.tgt, '_') + ")";
    case OpKind::GenerateSourceOnly:
      return "GEN_S(" + join_tokens(op.src, '_') + ")";
    case OpKind::GenerateTargetOnly:
      return "GEN_T(" + join_tokens(op.tgt, '_') + ")";
    case OpKind::GenerateSelf:
      return "GEN_SELF(" + join_tokens(op.src, '_') + ")";
    case OpKind::InsertGap:
      return "GAP";
    case OpKind::JumpBack:
      return "JB_" + std::to_string(op.jump);
    case OpKind::JumpForward:
      return "JF";
    case OpKind::CoarseFD:
      return "FD";
    case OpKind::CoarseBD:
      return "BD";
    default:
      return "SW";
  }
}

std::string ops_to_line(const OperationSequence& ops) {
  std::string line;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) line += ' ';
    line += op_to_string(ops[i]);
  }
  return line;
}

namespace {

std::vector<Token> split_payload(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i <= s.size()) {
    std::size_t j = s.find('_', i);
    if (j == std::string::npos) {
      out.push_back(s.substr(i));
      break;
    }
    out.push_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

Operation parse_op(const std::string& text) {
  Operation op;
  auto payload = [&](std::size_t prefix) {
    if (text.back() != ')') throw ParseError("operation '" + text + "' missing ')'");
    return text.substr(prefix, text.size() - prefix - 1);
  };
  if (text == "GAP") {
    op.kind = OpKind::InsertGap;
  } else if (text == "JF") {
    op.kind = OpKind::JumpForward;
  } else if (text == "FD") {
    op.kind = OpKind::CoarseFD;
  } else if (text == "BD") {
    op.kind = OpKind::CoarseBD;
  } else if (text == "SW") {
    op.kind = OpKind::CoarseSW;
  } else if (text.rfind("JB_", 0) == 0) {
    op.kind = OpKind::JumpBack;
    try {
      op.jump = std::stoi(text.substr(3));
    } catch (...) {
      throw ParseError("bad jump index in '" + text + "'");
    }
    if (op.jump < 1) throw ParseError("jump index must be >= 1 in '" + text + "'");
  } else if (text.rfind("GEN_SELF(", 0) == 0) {
    op.kind = OpKind::GenerateSelf;
    op.src = split_payload(payload(9));
  } else if (text.rfind("GEN_S(", 0) == 0) {
    op.kind = OpKind::GenerateSourceOnly;
    op.src = split_payload(payload(6));
  } else if (text.rfind("GEN_T(", 0) == 0) {
    op.kind = OpKind::GenerateTargetOnly;
    op.tgt = split_payload(payload(6));
  } else if (text.rfind("GEN(", 0) == 0) {
    op.kind = OpKind::Generate;
    std::string body = payload(4);
    std::size_t bar = body.find('|');
    if (bar == std::string::npos) throw ParseError("GEN payload '" + body + "' has no '|'");
    op.src = split_payload(body.substr(0, bar));
    op.tgt = split_payload(body.substr(bar + 1));
  } else {
    throw ParseError("unknown operation '" + text + "'");
  }
  return op;
}

OperationSequence parse_ops_line(const std::string& line) {
  OperationSequence ops;
  for (const auto& tok : split_tokens(line)) ops.push_back(parse_op(tok));
  return ops;
}

}  // namespace opseq
