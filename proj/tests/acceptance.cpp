// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion carries its own runtime budget.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "neural.hpp"
#include "ngram.hpp"
#include "opgen.hpp"
#include "scorer.hpp"
#include "streams.hpp"
#include "test_util.hpp"

using namespace opseq;

namespace {

int failures = 0;

void criterion(const std::string& name, double budget_seconds,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  auto t0 = std::chrono::steady_clock::now();
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
    ok = false;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_seconds) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
  }
  std::printf("%s %s (%.2fs%s%s)\n", ok ? "PASS" : "FAIL", name.c_str(), secs,
              detail.empty() ? "" : ": ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::vector<Token> collapsed_source_order(const AlignedSentencePair& pair) {
  auto ex = extract_mtus(pair);
  std::vector<std::pair<int, std::vector<Token>>> slots;
  for (const auto& m : ex.mtus)
    if (!m.src_pos.empty()) slots.emplace_back(m.src_start(), m.src_toks);
  for (int u : ex.unaligned_source) slots.emplace_back(u, std::vector<Token>{pair.source[u]});
  std::sort(slots.begin(), slots.end());
  std::vector<Token> out;
  for (const auto& [_, toks] : slots)
    for (const auto& t : toks) out.push_back(t);
  return out;
}

bool golden_example(std::string& detail) {
  auto pair = testutil::golden_pair();
  auto ops = generate_operations(pair);
  if (ops_to_line(ops) != testutil::golden_ops_line()) {
    detail = "operation sequence mismatch: " + ops_to_line(ops);
    return false;
  }
  std::vector<std::string> tags;
  for (const auto& op : to_coarse(ops))
    if (op.is_reordering()) tags.push_back(op_to_string(op));
  if (tags != std::vector<std::string>{"FD", "BD", "BD", "BD"}) {
    detail = "coarse tags mismatch";
    return false;
  }
  auto sp = split_streams(ops, Variant::Osm);
  if (join_tokens(sp.target) != testutil::golden_target_stream() ||
      join_tokens(sp.source) != testutil::golden_source_stream() ||
      sp.sync != testutil::golden_sync()) {
    detail = "stream mismatch";
    return false;
  }
  auto [src, tgt] = interpret_operations(ops);
  if (src != pair.source || tgt != pair.target) {
    detail = "replay mismatch";
    return false;
  }
  return true;
}

bool round_trip(std::string& detail) {
  std::mt19937_64 rng(987654321);
  for (int it = 0; it < 1000; ++it) {
    auto pair = testutil::random_pair(rng);
    auto ops = generate_operations(pair);
    auto [src, tgt] = interpret_operations(ops);
    if (tgt != pair.target || src != collapsed_source_order(pair)) {
      detail = "mismatch at case " + std::to_string(it) + " (source: " +
               join_tokens(pair.source) + " / target: " + join_tokens(pair.target) + ")";
      return false;
    }
  }
  return true;
}

bool normalization(std::string& detail) {
  std::mt19937_64 rng(24680);

  // Count-based model: conditional sums over the predicted vocabulary.
  std::vector<std::vector<Token>> corpus;
  for (int s = 0; s < 60; ++s) {
    std::vector<Token> sent;
    int len = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < len; ++i) sent.push_back("w" + std::to_string(rng() % 15));
    corpus.push_back(std::move(sent));
  }
  auto lm = NgramModel::train(corpus, 3);
  for (int trial = 0; trial < 120; ++trial) {
    std::vector<Token> h;
    int hl = static_cast<int>(rng() % 3);
    for (int i = 0; i < hl; ++i)
      h.push_back(rng() % 4 == 0 ? "unseen" + std::to_string(rng() % 4)
                                 : "w" + std::to_string(rng() % 15));
    double sum = 0;
    for (const auto& w : lm.vocab())
      if (w != Vocabulary::kStart) sum += std::exp(lm.log_prob(h, w));
    if (std::abs(sum - 1.0) > 1e-6) {
      detail = "count-model sum " + std::to_string(sum) + " for history '" +
               join_tokens(h) + "'";
      return false;
    }
  }

  // Neural softmax sums.
  ModelConfig cfg;
  cfg.n = 3;
  cfg.m = 2;
  cfg.embedding_dim = 6;
  cfg.hidden_dim = 8;
  cfg.output_embedding_dim = 8;
  cfg.noise_samples = 2;
  cfg.seed = 5;
  std::vector<Token> toks{Vocabulary::kStart, Vocabulary::kEnd, Vocabulary::kUnk,
                          "a", "b", "c", "d", "e"};
  auto vocab = Vocabulary::from_tokens(toks, 3);
  NeuralModel nn(cfg, vocab, vocab);
  for (int trial = 0; trial < 120; ++trial) {
    std::vector<int> ctx;
    for (int i = 0; i < cfg.context_width(); ++i)
      ctx.push_back(static_cast<int>(rng() % nn.input_vocab_size()));
    double sum = 0;
    for (int k = 0; k < nn.output_vocab_size(); ++k) sum += nn.softmax_prob(ctx, k);
    if (std::abs(sum - 1.0) > 1e-6) {
      detail = "softmax sum " + std::to_string(sum);
      return false;
    }
  }

  // Orientation rows.
  std::vector<AlignedSentencePair> aligned;
  aligned.push_back(testutil::golden_pair());
  for (int i = 0; i < 80; ++i) aligned.push_back(testutil::random_pair(rng));
  for (double sigma : {0.1, 0.5, 2.0}) {
    auto table = OrientationTable::train(aligned, sigma);
    for (const auto& [f, e] : table.pairs()) {
      auto r = table.row(f, e);
      double sum = r[0] + r[1] + r[2] + r[3];
      if (std::abs(sum - 1.0) > 1e-9) {
        detail = "orientation row sum " + std::to_string(sum) + " for " + f + "/" + e;
        return false;
      }
    }
  }
  return true;
}

bool gradient_check(std::string& detail) {
  // Toy model: 10 input ids (8 target-stream + 2 source-stream), 8 output
  // labels, 4-wide embeddings, 5 hidden units, 3 noise draws per instance.
  ModelConfig cfg;
  cfg.n = 3;
  cfg.m = 2;
  cfg.embedding_dim = 4;
  cfg.hidden_dim = 5;
  cfg.output_embedding_dim = 5;
  cfg.noise_samples = 3;
  cfg.seed = 13;
  auto tgt_v = Vocabulary::from_tokens({Vocabulary::kStart, Vocabulary::kEnd,
                                        Vocabulary::kUnk, "t0", "t1", "t2", "t3", "t4"},
                                       3);
  auto src_v = Vocabulary::from_tokens({Vocabulary::kUnk, "s0"}, 1);
  NeuralModel m(cfg, src_v, tgt_v);
  if (m.input_vocab_size() != 10 || m.output_vocab_size() != 8) {
    detail = "unexpected toy vocabulary sizes";
    return false;
  }
  m.hidden_b.array() += 0.25;  // keep all pre-activations away from the kink

  std::mt19937_64 rng(99);
  std::vector<TrainingInstance> batch;
  std::vector<std::vector<int>> noise;
  for (int i = 0; i < 5; ++i) {
    TrainingInstance inst;
    for (int c = 0; c < cfg.context_width(); ++c)
      inst.context.push_back(static_cast<int>(rng() % 10));
    inst.label = static_cast<int>(rng() % 8);
    batch.push_back(std::move(inst));
    std::vector<int> row;
    for (int k = 0; k < cfg.noise_samples; ++k) row.push_back(static_cast<int>(rng() % 8));
    noise.push_back(std::move(row));
  }
  std::vector<double> dist{0.2, 0.1, 0.05, 0.15, 0.1, 0.1, 0.05, 0.25};

  NeuralModel::Gradients g;
  m.nce_loss_and_grad(batch, noise, dist, g);
  auto loss_at = [&]() {
    NeuralModel::Gradients scratch;
    return m.nce_loss_and_grad(batch, noise, dist, scratch);
  };
  const double eps = 1e-6;
  double worst = 0.0;
  auto check = [&](auto& param, const auto& grad, const char* name) {
    for (Eigen::Index r = 0; r < param.rows(); ++r)
      for (Eigen::Index c = 0; c < param.cols(); ++c) {
        double keep = param(r, c);
        param(r, c) = keep + eps;
        double up = loss_at();
        param(r, c) = keep - eps;
        double down = loss_at();
        param(r, c) = keep;
        double fd = (up - down) / (2 * eps);
        double denom = std::max({std::abs(fd), std::abs(grad(r, c)), 1e-8});
        double rel = std::abs(fd - grad(r, c)) / denom;
        worst = std::max(worst, rel);
        if (rel > 1e-4) {
          detail = std::string(name) + "(" + std::to_string(r) + "," + std::to_string(c) +
                   ") relative error " + std::to_string(rel);
          return false;
        }
      }
    return true;
  };
  if (!check(m.embeddings, g.embeddings, "embeddings")) return false;
  if (!check(m.hidden_w, g.hidden_w, "hidden_w")) return false;
  if (!check(m.hidden_b, g.hidden_b, "hidden_b")) return false;
  if (!check(m.output_w, g.output_w, "output_w")) return false;
  if (!check(m.output_b, g.output_b, "output_b")) return false;
  detail = "worst relative error " + std::to_string(worst);
  return true;
}

bool learning_smoke(std::string& detail) {
  // 500 synthetic sentence pairs over 25 source and 25 target word types:
  // 80% monotone, 20% with one adjacent swap. Coarse streams, so the swap
  // sentences carry FD/BD tokens.
  std::mt19937_64 rng(4242);
  std::vector<StreamPair> streams;
  for (int s = 0; s < 500; ++s) {
    int len = 3 + static_cast<int>(rng() % 6);
    AlignedSentencePair p;
    std::vector<int> order(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
      int w = static_cast<int>(rng() % 25);
      p.source.push_back("f" + std::to_string(w));
      order[static_cast<std::size_t>(i)] = i;
    }
    if (rng() % 5 == 0) {
      int at = static_cast<int>(rng() % (len - 1));
      std::swap(order[static_cast<std::size_t>(at)], order[static_cast<std::size_t>(at + 1)]);
    }
    for (int i = 0; i < len; ++i) {
      int src = order[static_cast<std::size_t>(i)];
      p.target.push_back("e" + p.source[static_cast<std::size_t>(src)].substr(1));
      p.links.emplace_back(src, i);
    }
    std::sort(p.links.begin(), p.links.end());
    streams.push_back(split_streams(to_coarse(generate_operations(p)), Variant::Coarse));
  }

  std::vector<Token> reserved{"Insert_Gap", "Jump_Fwd", "FD", "BD", "SW"};
  std::vector<Token> src_all, tgt_all;
  for (const auto& sp : streams) {
    src_all.insert(src_all.end(), sp.source.begin(), sp.source.end());
    tgt_all.insert(tgt_all.end(), sp.target.begin(), sp.target.end());
  }
  auto src_v = build_vocabulary(src_all, 50, reserved);
  auto tgt_v = build_vocabulary(tgt_all, 50, reserved);

  ModelConfig cfg;
  cfg.n = 5;
  cfg.m = 5;
  cfg.embedding_dim = 16;
  cfg.hidden_dim = 32;
  cfg.output_embedding_dim = 32;
  cfg.noise_samples = 10;
  cfg.batch_size = 32;
  cfg.epochs = 5;
  cfg.learning_rate = 1.0;
  cfg.seed = 7;

  std::vector<TrainingInstance> train, valid;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    auto inst = map_stream_instances(streams[s], cfg.n, cfg.m, src_v, tgt_v);
    auto& dest = (s % 10 == 9) ? valid : train;
    dest.insert(dest.end(), inst.begin(), inst.end());
  }

  std::vector<EpochLog> log;
  auto model = train_neural(cfg, src_v, tgt_v, train, valid, &log);
  double initial = log.front().valid_ppl;
  double final_ppl =
      std::exp(-model.score_instances(valid) / static_cast<double>(valid.size()));
  detail = "validation perplexity " + std::to_string(initial) + " -> " +
           std::to_string(final_ppl);
  if (!(final_ppl <= 0.8 * initial)) {
    detail += "; improvement below 20%";
    return false;
  }

  // Reordering-token check: in contexts where a discontinuity token is the
  // correct label, the trained model must beat the unigram baseline.
  std::vector<long long> label_counts(static_cast<std::size_t>(tgt_v.size()), 0);
  for (const auto& inst : train) ++label_counts[static_cast<std::size_t>(inst.label)];
  const int fd = tgt_v.id("FD"), bd = tgt_v.id("BD");
  double model_avg = 0, unigram_avg = 0;
  int events = 0;
  for (const auto& inst : valid) {
    if (inst.label != fd && inst.label != bd) continue;
    model_avg += model.softmax_prob(inst.context, inst.label);
    unigram_avg += static_cast<double>(label_counts[static_cast<std::size_t>(inst.label)]) /
                   static_cast<double>(train.size());
    ++events;
  }
  if (events == 0) {
    detail += "; no discontinuity-labeled validation events";
    return false;
  }
  model_avg /= events;
  unigram_avg /= events;
  detail += "; FD/BD avg prob " + std::to_string(model_avg) + " vs unigram " +
            std::to_string(unigram_avg) + " over " + std::to_string(events) + " events";
  return model_avg > unigram_avg;
}

bool scorer_consistency(std::string& detail) {
  std::mt19937_64 rng(31337);
  std::vector<AlignedSentencePair> corpus;
  corpus.push_back(testutil::golden_pair());
  for (int i = 0; i < 200; ++i) corpus.push_back(testutil::random_pair(rng));
  std::vector<std::vector<Token>> sequences;
  for (const auto& pair : corpus)
    sequences.push_back(split_streams(generate_operations(pair), Variant::Osm).target);
  auto lm = NgramModel::train(sequences, 4);
  IncrementalScorer sc(lm, Variant::Osm);

  int checked = 0;
  for (int it = 0; checked < 100; ++it) {
    auto pair = it == 0 ? testutil::golden_pair() : testutil::random_pair(rng);
    double whole = sc.score_sentence(pair);
    int units = count_units(pair);
    for (int cut = 1; cut < units; ++cut) {
      auto phrases = make_phrases(pair, {cut});
      auto st = sc.init();
      for (const auto& ph : phrases) sc.extend(st, ph);
      double split = st.total + sc.finalize(st);
      if (std::abs(split - whole) > 1e-9) {
        detail = "case " + std::to_string(it) + " cut " + std::to_string(cut) +
                 ": whole " + std::to_string(whole) + " vs split " + std::to_string(split);
        return false;
      }
    }
    ++checked;
  }
  return true;
}

bool config_defaults(std::string& detail) {
  ModelConfig cfg;
  bool ok = cfg.n == 7 && cfg.m == 7 && cfg.input_vocab_cap == 20000 &&
            cfg.output_vocab_cap == 40000 && cfg.embedding_dim == 150 &&
            cfg.hidden_dim == 750 && cfg.output_embedding_dim == 750 &&
            cfg.noise_samples == 100 && cfg.batch_size == 1000 && cfg.epochs == 25 &&
            cfg.learning_rate == 1.0 && cfg.seed == 1;
  if (!ok) detail = "default configuration drifted";
  return ok;
}

}  // namespace

int main() {
  criterion("golden-example", 1.0, golden_example);
  criterion("round-trip-1000", 10.0, round_trip);
  criterion("normalization", 30.0, normalization);
  criterion("gradient-check", 5.0, gradient_check);
  criterion("learning-smoke", 120.0, learning_smoke);
  criterion("scorer-consistency", 60.0, scorer_consistency);
  criterion("config-defaults", 1.0, config_defaults);
  return failures == 0 ? 0 : 1;
}
