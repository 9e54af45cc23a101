#ifndef OPSEQ_NGRAM_HPP
#define OPSEQ_NGRAM_HPP

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "opgen.hpp"

namespace opseq {

// Count-based Markov model over token sequences with interpolated modified
// Kneser-Ney smoothing. Estimation:
//   - highest order uses raw counts, lower orders continuation counts
//     (n-grams starting with <s> keep raw counts);
//   - per-order discounts D1,D2,D3+ from counts-of-counts, clamped to
//     [0, i] and falling back to 0.5*i when undefined;
//   - p(w|h) = max(a(hw)-D,0)/a(h) + gamma(h) * p(w|h'), unseen histories
//     back off fully; the unigram level interpolates with 1/|V| so unknown
//     gets mass. <s> is context-only and never predicted.
// After estimation the model holds exactly its ARPA representation.
class NgramModel {
 public:
  // corpus: one token sequence per sentence (no sentinels; padding is
  // added here). max_likelihood disables smoothing (plain relative
  // frequencies; used for checks only).
  static NgramModel train(const std::vector<std::vector<Token>>& corpus, int order,
                          bool max_likelihood = false);

  int order() const { return order_; }
  const std::vector<Token>& vocab() const { return vocab_; }

  // Natural-log conditional; history = up to order-1 preceding tokens
  // (most recent last). Unknown tokens map to <unk>.
  double log_prob(const std::vector<Token>& history, const Token& word) const;

  // Natural-log probability of the sequence with start padding and one
  // end-symbol term.
  double score_sequence(const std::vector<Token>& tokens) const;

  // exp(-total log prob / predicted tokens) over a token-sequence corpus.
  double perplexity(const std::vector<std::vector<Token>>& corpus) const;

  void save_arpa(const std::string& path) const;
  static NgramModel load_arpa(const std::string& path);

 private:
  Token normalize(const Token& t) const;
  int order_ = 0;
  std::vector<Token> vocab_;  // predicted set plus <s>
  std::unordered_map<std::string, bool> in_vocab_;
  // joined-token key ("w1 w2 ... wk") -> log10 prob / log10 backoff
  std::vector<std::unordered_map<std::string, double>> probs_;     // [k-1]
  std::vector<std::unordered_map<std::string, double>> backoffs_;  // [k-1]
};

// Count-based lexicalized reordering table over MTU pairs. Orientations
// are word-based: M, S and (refined) FD/BD of the current cept w.r.t. the
// previous one; the unrefined variant folds FD/BD into D.
class OrientationTable {
 public:
  static constexpr int kClasses = 4;  // M, S, FD, BD

  static OrientationTable train(const std::vector<AlignedSentencePair>& corpus,
                                double sigma = 0.5);

  // Additive smoothing: (count + sigma) / (total + k*sigma). With refined
  // off, FD and BD counts merge and k = 3.
  double prob(const Token& src_cept, const Token& tgt_cept, Orientation o,
              bool refined = true) const;
  // All four refined probabilities for a stored pair; zero counts smoothed.
  std::vector<double> row(const Token& src_cept, const Token& tgt_cept) const;

  bool has(const Token& src_cept, const Token& tgt_cept) const;
  std::size_t size() const { return counts_.size(); }
  double sigma() const { return sigma_; }
  std::vector<std::pair<Token, Token>> pairs() const;

  // "F ||| E ||| pM pS pFD pBD" lines.
  void save(const std::string& path) const;

 private:
  static std::string key(const Token& f, const Token& e) { return f + "\t" + e; }
  double sigma_ = 0.5;
  std::unordered_map<std::string, std::array<long long, kClasses>> counts_;
};

}  // namespace opseq

#endif
