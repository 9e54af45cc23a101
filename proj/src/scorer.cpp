#include "scorer.hpp"

#include <algorithm>

namespace opseq {

namespace {

struct Unit {
  bool is_mtu;
  int idx;  // mtu index, or target position for an unaligned word
};

std::vector<Unit> unit_sequence(const AlignedSentencePair& pair, const MtuExtraction& ex) {
  std::vector<char> tgt_unaligned(pair.target.size(), 1);
  for (const auto& [i, j] : pair.links) tgt_unaligned[static_cast<std::size_t>(j)] = 0;
  std::vector<Unit> units;
  std::size_t mi = 0;
  for (int j = 0; j < static_cast<int>(pair.target.size()); ++j) {
    if (mi < ex.mtus.size() && ex.mtus[mi].tgt_pos.front() == j)
      units.push_back({true, static_cast<int>(mi++)});
    else if (tgt_unaligned[static_cast<std::size_t>(j)])
      units.push_back({false, j});
  }
  return units;
}

}  // namespace

IncrementalScorer::IncrementalScorer(const NgramModel& model, Variant variant,
                                     bool swap_detection)
    : ngram_(&model), variant_(variant), swap_(swap_detection) {}

IncrementalScorer::IncrementalScorer(const NeuralModel& model, Variant variant,
                                     bool swap_detection)
    : nn_(&model), variant_(variant), swap_(swap_detection) {}

double IncrementalScorer::score_label(const ScorerState& st, const Token& label) const {
  if (ngram_) {
    std::vector<Token> hist(static_cast<std::size_t>(ngram_->order() - 1),
                            Vocabulary::kStart);
    hist.insert(hist.end(), st.tgt_stream.begin(), st.tgt_stream.end());
    return ngram_->log_prob(hist, label);
  }
  const ModelConfig& cfg = nn_->config();
  const Token start = Vocabulary::kStart;
  std::vector<int> ctx;
  ctx.reserve(static_cast<std::size_t>(cfg.context_width()));
  const int J = static_cast<int>(st.tgt_stream.size());
  for (int t = J - (cfg.n - 1); t <= J - 1; ++t)
    ctx.push_back(nn_->target_input_id(t >= 0 ? st.tgt_stream[static_cast<std::size_t>(t)]
                                              : start));
  const int a = static_cast<int>(st.src_stream.size());
  for (int q = a - cfg.m; q <= a - 1; ++q)
    ctx.push_back(nn_->source_input_id(q >= 0 ? st.src_stream[static_cast<std::size_t>(q)]
                                              : start));
  return nn_->log_softmax(ctx, nn_->target_vocab().id(label));
}

double IncrementalScorer::score_ops(ScorerState& st, const OperationSequence& ops) const {
  double delta = 0.0;
  auto emit_both = [&](const Token& sym) {
    st.src_stream.push_back(sym);
    delta += score_label(st, sym);
    st.tgt_stream.push_back(sym);
  };
  auto emit_target = [&](const Token& t) {
    delta += score_label(st, t);
    st.tgt_stream.push_back(t);
  };
  for (const auto& op : ops) {
    bool was_jb = st.last_was_jump_back;
    st.last_was_jump_back = op.kind == OpKind::JumpBack;
    if (op.is_reordering()) {
      if (variant_ == Variant::Lexical) continue;
      if (variant_ == Variant::Coarse) {
        switch (op.kind) {
          case OpKind::InsertGap:
            if (!was_jb) emit_both("FD");
            break;
          case OpKind::JumpBack:
            emit_both(swap_ && op.swap_adjacent ? "SW" : "BD");
            break;
          case OpKind::JumpForward:
            emit_both("FD");
            break;
          default:
            throw DataError("coarse tag fed to the incremental scorer");
        }
      } else {
        emit_both(reorder_symbol(op));
      }
      continue;
    }
    switch (op.kind) {
      case OpKind::Generate:
        st.src_stream.push_back(join_tokens(op.src, '_'));
        emit_target(join_tokens(op.tgt, '_'));
        break;
      case OpKind::GenerateSelf:
        st.src_stream.push_back(join_tokens(op.src, '_'));
        emit_target(join_tokens(op.src, '_'));
        break;
      case OpKind::GenerateSourceOnly:
        st.src_stream.push_back(join_tokens(op.src, '_'));
        break;
      case OpKind::GenerateTargetOnly:
        emit_target(join_tokens(op.tgt, '_'));
        break;
      default:
        break;
    }
  }
  st.total += delta;
  return delta;
}

double IncrementalScorer::extend(ScorerState& st, const Phrase& phrase) const {
  if (phrase.src_pos.empty() && phrase.tgt.empty()) return 0.0;
  if (phrase.src_pos.size() != phrase.src_toks.size())
    throw UsageError("phrase source positions and tokens differ in length");
  for (std::size_t k = 1; k < phrase.src_pos.size(); ++k)
    if (phrase.src_pos[k] <= phrase.src_pos[k - 1])
      throw UsageError("phrase source positions must be strictly ascending");
  for (const auto& [i, j] : phrase.links)
    if (i < 0 || i >= static_cast<int>(phrase.src_toks.size()) || j < 0 ||
        j >= static_cast<int>(phrase.tgt.size()))
      throw UsageError("phrase link out of range");

  // Make the phrase's source words known before generating so pending
  // unaligned words at the pointer fall out exactly where the
  // whole-sentence generator emits them.
  for (std::size_t k = 0; k < phrase.src_pos.size(); ++k) {
    int q = phrase.src_pos[k];
    st.gen.ensure_position(q);
    if (st.gen.known[static_cast<std::size_t>(q)] &&
        st.gen.source[static_cast<std::size_t>(q)] != phrase.src_toks[k])
      throw DataError("conflicting token at source position " + std::to_string(q));
    st.gen.source[static_cast<std::size_t>(q)] = phrase.src_toks[k];
    st.gen.known[static_cast<std::size_t>(q)] = 1;
  }
  for (const auto& [i, j] : phrase.links)
    st.gen.aligned[static_cast<std::size_t>(phrase.src_pos[static_cast<std::size_t>(i)])] = 1;

  OperationSequence ops;
  if (st.gen.prev_cept_start >= 0) consume_pending(st.gen, ops);

  AlignedSentencePair local;
  local.source = phrase.src_toks;
  local.target = phrase.tgt;
  local.links = phrase.links;
  std::sort(local.links.begin(), local.links.end());
  local.links.erase(std::unique(local.links.begin(), local.links.end()), local.links.end());
  auto ex = extract_mtus(local);
  for (auto& m : ex.mtus) {
    for (auto& q : m.src_pos) q = phrase.src_pos[static_cast<std::size_t>(q)];
  }

  std::vector<char> tgt_unaligned(phrase.tgt.size(), 1);
  for (const auto& [i, j] : local.links) tgt_unaligned[static_cast<std::size_t>(j)] = 0;
  std::size_t mi = 0;
  for (int j = 0; j < static_cast<int>(phrase.tgt.size()); ++j) {
    if (mi < ex.mtus.size() && ex.mtus[mi].tgt_pos.front() == j)
      feed_mtu(st.gen, ex.mtus[mi++], ops);
    else if (tgt_unaligned[static_cast<std::size_t>(j)])
      feed_unaligned_target(st.gen, phrase.tgt[static_cast<std::size_t>(j)], ops);
  }
  return score_ops(st, ops);
}

double IncrementalScorer::finalize(const ScorerState& st) const {
  ScorerState tail = st;
  OperationSequence ops;
  flush_trailing(tail.gen, ops);
  double delta = score_ops(tail, ops);
  return delta + score_label(tail, Vocabulary::kEnd);
}

double IncrementalScorer::score_sentence(const AlignedSentencePair& pair) const {
  return score_operations(generate_operations(pair));
}

double IncrementalScorer::score_operations(const OperationSequence& ops) const {
  bool has_coarse = std::any_of(ops.begin(), ops.end(), [](const Operation& op) {
    return op.kind == OpKind::CoarseFD || op.kind == OpKind::CoarseBD ||
           op.kind == OpKind::CoarseSW;
  });
  OperationSequence converted;
  const OperationSequence* use = &ops;
  if (variant_ == Variant::Coarse && !has_coarse) {
    converted = to_coarse(ops, swap_);
    use = &converted;
  } else if (variant_ == Variant::Lexical) {
    converted = to_lexical(ops);
    use = &converted;
  }
  return score_stream(split_streams(*use, variant_));
}

double IncrementalScorer::score_stream(const StreamPair& sp) const {
  return ngram_ ? ngram_->score_sequence(sp.target) : nn_->score_stream(sp);
}

int count_units(const AlignedSentencePair& pair) {
  auto ex = extract_mtus(pair);
  return static_cast<int>(unit_sequence(pair, ex).size());
}

std::vector<Phrase> make_phrases(const AlignedSentencePair& pair,
                                 const std::vector<int>& cuts) {
  auto ex = extract_mtus(pair);
  auto units = unit_sequence(pair, ex);
  const int U = static_cast<int>(units.size());
  for (std::size_t c = 0; c < cuts.size(); ++c)
    if (cuts[c] <= 0 || cuts[c] >= U || (c > 0 && cuts[c] <= cuts[c - 1]))
      throw UsageError("phrase cuts must be strictly increasing positions inside the "
                       "unit sequence");
  const int P = static_cast<int>(cuts.size()) + 1;

  std::vector<int> unit_phrase(static_cast<std::size_t>(U));
  {
    int p = 0;
    for (int u = 0; u < U; ++u) {
      while (p < static_cast<int>(cuts.size()) && u >= cuts[static_cast<std::size_t>(p)]) ++p;
      unit_phrase[static_cast<std::size_t>(u)] = p;
    }
  }

  // Replay the whole-sentence generator to see after which unit each
  // unaligned source word is emitted; it must be known by then.
  std::vector<int> src_phrase(pair.source.size(), P - 1);
  {
    GenState st;
    if (!pair.source.empty()) {
      st.ensure_position(static_cast<int>(pair.source.size()) - 1);
      for (std::size_t i = 0; i < pair.source.size(); ++i) {
        st.source[i] = pair.source[i];
        st.known[i] = 1;
      }
      for (const auto& [i, j] : pair.links) st.aligned[static_cast<std::size_t>(i)] = 1;
    }
    std::vector<char> assigned(pair.source.size(), 0);
    OperationSequence scratch;
    for (int u = 0; u < U; ++u) {
      if (!units[static_cast<std::size_t>(u)].is_mtu) continue;
      feed_mtu(st, ex.mtus[static_cast<std::size_t>(units[static_cast<std::size_t>(u)].idx)],
               scratch);
      for (std::size_t q = 0; q < pair.source.size(); ++q)
        if (st.covered[q] && !st.aligned[q] && !assigned[q]) {
          assigned[q] = 1;
          src_phrase[q] = unit_phrase[static_cast<std::size_t>(u)];
        }
    }
  }

  std::vector<Phrase> out(static_cast<std::size_t>(P));
  // (global source position, token, local target link or -1) per phrase.
  struct Entry {
    int pos;
    Token tok;
    int tgt = -1;
  };
  std::vector<std::vector<Entry>> entries(static_cast<std::size_t>(P));
  std::vector<std::vector<Link>> extra_links(static_cast<std::size_t>(P));  // (pos, tgt)

  for (int u = 0; u < U; ++u) {
    const Unit& un = units[static_cast<std::size_t>(u)];
    int p = unit_phrase[static_cast<std::size_t>(u)];
    Phrase& ph = out[static_cast<std::size_t>(p)];
    if (!un.is_mtu) {
      ph.tgt.push_back(pair.target[static_cast<std::size_t>(un.idx)]);
      continue;
    }
    const Mtu& m = ex.mtus[static_cast<std::size_t>(un.idx)];
    int first_tgt = static_cast<int>(ph.tgt.size());
    for (const auto& t : m.tgt_toks) ph.tgt.push_back(t);
    for (std::size_t k = 0; k < m.src_pos.size(); ++k)
      entries[static_cast<std::size_t>(p)].push_back(
          Entry{m.src_pos[k], m.src_toks[k], first_tgt});
    // Keep the unit connected: tie its remaining target words to its
    // first source position.
    for (std::size_t k = 1; k < m.tgt_pos.size(); ++k)
      extra_links[static_cast<std::size_t>(p)].emplace_back(m.src_pos.front(),
                                                            first_tgt + static_cast<int>(k));
  }
  for (std::size_t q = 0; q < pair.source.size(); ++q) {
    bool is_aligned = false;
    for (const auto& [i, j] : pair.links)
      if (i == static_cast<int>(q)) {
        is_aligned = true;
        break;
      }
    if (!is_aligned)
      entries[static_cast<std::size_t>(src_phrase[q])].push_back(
          Entry{static_cast<int>(q), pair.source[q], -1});
  }

  for (int p = 0; p < P; ++p) {
    auto& es = entries[static_cast<std::size_t>(p)];
    std::sort(es.begin(), es.end(), [](const Entry& a, const Entry& b) { return a.pos < b.pos; });
    Phrase& ph = out[static_cast<std::size_t>(p)];
    for (std::size_t k = 0; k < es.size(); ++k) {
      ph.src_pos.push_back(es[k].pos);
      ph.src_toks.push_back(es[k].tok);
      if (es[k].tgt >= 0) ph.links.emplace_back(static_cast<int>(k), es[k].tgt);
    }
    for (const auto& [pos, tgt] : extra_links[static_cast<std::size_t>(p)]) {
      auto it = std::lower_bound(es.begin(), es.end(), pos,
                                 [](const Entry& e, int v) { return e.pos < v; });
      ph.links.emplace_back(static_cast<int>(it - es.begin()), tgt);
    }
    std::sort(ph.links.begin(), ph.links.end());
  }
  return out;
}

}  // namespace opseq
