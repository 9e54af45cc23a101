#include "ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace opseq {

namespace {

constexpr double kLn10 = 2.302585092994046;

std::string join_gram(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
  std::string s;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) s += ' ';
    s += toks[i];
  }
  return s;
}

struct Discounts {
  double d1, d2, d3;
  double of(long long count) const { return count == 1 ? d1 : count == 2 ? d2 : d3; }
};

Discounts estimate_discounts(const std::unordered_map<std::string, long long>& counts) {
  long long n1 = 0, n2 = 0, n3 = 0, n4 = 0;
  for (const auto& [g, c] : counts) {
    if (c == 1) ++n1;
    else if (c == 2) ++n2;
    else if (c == 3) ++n3;
    else if (c == 4) ++n4;
  }
  auto clamp = [](double d, double hi) {
    return std::isfinite(d) ? std::max(0.0, std::min(d, hi)) : hi / 2.0;
  };
  Discounts d{0.5, 1.0, 1.5};  // fallbacks for degenerate count-of-counts
  if (n1 > 0 && n1 + 2 * n2 > 0) {
    double y = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
    if (n2 > 0) d.d1 = clamp(1.0 - 2.0 * y * n2 / n1, 1.0);
    if (n2 > 0 && n3 > 0) d.d2 = clamp(2.0 - 3.0 * y * n3 / n2, 2.0);
    if (n3 > 0 && n4 > 0) d.d3 = clamp(3.0 - 4.0 * y * n4 / n3, 3.0);
  }
  return d;
}

}  // namespace

Token NgramModel::normalize(const Token& t) const {
  return in_vocab_.count(t) ? t : Token(Vocabulary::kUnk);
}

NgramModel NgramModel::train(const std::vector<std::vector<Token>>& corpus, int order,
                             bool max_likelihood) {
  if (order < 1) throw UsageError("ngram order must be >= 1");
  if (corpus.empty()) throw DataError("ngram training corpus is empty");

  NgramModel m;
  m.order_ = order;
  const Token start = Vocabulary::kStart, end = Vocabulary::kEnd, unk = Vocabulary::kUnk;

  // Vocabulary: everything seen plus the sentinels.
  std::map<Token, bool> seen;  // ordered for reproducible files
  for (const auto& sent : corpus)
    for (const auto& t : sent) seen[t] = true;
  m.vocab_ = {start, end, unk};
  for (const auto& [t, _] : seen)
    if (t != start && t != end && t != unk) m.vocab_.push_back(t);
  for (const auto& t : m.vocab_) m.in_vocab_[t] = true;

  // Raw suffix counts per order: every prediction window and its suffixes.
  std::vector<std::unordered_map<std::string, long long>> raw(
      static_cast<std::size_t>(order));
  for (const auto& sent : corpus) {
    std::vector<Token> padded(static_cast<std::size_t>(order - 1), start);
    for (const auto& t : sent) padded.push_back(t);
    padded.push_back(end);
    for (std::size_t t = static_cast<std::size_t>(order - 1); t < padded.size(); ++t) {
      for (int k = 1; k <= order; ++k)
        ++raw[static_cast<std::size_t>(k - 1)]
             [join_gram(padded, t + 1 - static_cast<std::size_t>(k), t + 1)];
    }
  }

  m.probs_.assign(static_cast<std::size_t>(order), {});
  m.backoffs_.assign(static_cast<std::size_t>(order), {});

  const std::size_t vpred = m.vocab_.size() - 1;  // <s> is never predicted

  if (max_likelihood) {
    for (int k = 1; k <= order; ++k) {
      std::unordered_map<std::string, long long> ctx_total;
      for (const auto& [g, c] : raw[static_cast<std::size_t>(k - 1)]) {
        std::size_t sp = g.rfind(' ');
        ctx_total[k == 1 ? std::string() : g.substr(0, sp)] += c;
      }
      for (const auto& [g, c] : raw[static_cast<std::size_t>(k - 1)]) {
        std::size_t sp = g.rfind(' ');
        long long tot = ctx_total[k == 1 ? std::string() : g.substr(0, sp)];
        m.probs_[static_cast<std::size_t>(k - 1)][g] =
            std::log10(static_cast<double>(c) / static_cast<double>(tot));
      }
    }
    m.probs_[0][start] = -99.0;
    if (!m.probs_[0].count(unk)) m.probs_[0][unk] = -99.0;
    return m;
  }

  // Adjusted counts: highest order raw; below that continuation counts,
  // except <s>-initial grams which keep raw counts.
  std::vector<std::unordered_map<std::string, long long>> adj(
      static_cast<std::size_t>(order));
  adj[static_cast<std::size_t>(order - 1)] = raw[static_cast<std::size_t>(order - 1)];
  for (int k = order - 1; k >= 1; --k) {
    auto& a = adj[static_cast<std::size_t>(k - 1)];
    for (const auto& [g, c] : raw[static_cast<std::size_t>(k)]) {  // (k+1)-grams
      std::size_t sp = g.find(' ');
      ++a[g.substr(sp + 1)];
    }
    const std::string start_prefix = start + " ";
    for (const auto& [g, c] : raw[static_cast<std::size_t>(k - 1)])
      if (g == start || g.rfind(start_prefix, 0) == 0) a[g] = c;
  }

  // Per order: discounts, context masses, and interpolated probabilities.
  std::vector<Discounts> disc;
  for (int k = 1; k <= order; ++k)
    disc.push_back(estimate_discounts(adj[static_cast<std::size_t>(k - 1)]));

  struct CtxStat {
    long long total = 0;
    long long n1 = 0, n2 = 0, n3p = 0;
  };
  for (int k = 1; k <= order; ++k) {
    std::unordered_map<std::string, CtxStat> ctx;
    for (const auto& [g, a] : adj[static_cast<std::size_t>(k - 1)]) {
      std::string h = k == 1 ? std::string() : g.substr(0, g.rfind(' '));
      auto& st = ctx[h];
      st.total += a;
      if (a == 1) ++st.n1;
      else if (a == 2) ++st.n2;
      else ++st.n3p;
    }
    const Discounts& d = disc[static_cast<std::size_t>(k - 1)];
    auto gamma = [&](const CtxStat& st) {
      return (d.d1 * static_cast<double>(st.n1) + d.d2 * static_cast<double>(st.n2) +
              d.d3 * static_cast<double>(st.n3p)) /
             static_cast<double>(st.total);
    };
    if (k == 1) {
      const CtxStat& st = ctx[std::string()];
      if (st.total <= 0) throw DataError("no unigram mass in training corpus");
      double g1 = gamma(st);
      double uniform = 1.0 / static_cast<double>(vpred);
      for (std::size_t v = 0; v < m.vocab_.size(); ++v) {
        const Token& w = m.vocab_[v];
        if (w == start) continue;
        auto it = adj[0].find(w);
        double a = it == adj[0].end() ? 0.0 : static_cast<double>(it->second);
        double num = a > 0 ? std::max(a - d.of(static_cast<long long>(a)), 0.0) : 0.0;
        double p = num / static_cast<double>(st.total) + g1 * uniform;
        m.probs_[0][w] = std::log10(p);
      }
      m.probs_[0][start] = -99.0;
    } else {
      for (const auto& [g, a] : adj[static_cast<std::size_t>(k - 1)]) {
        std::string h = g.substr(0, g.rfind(' '));
        const CtxStat& st = ctx.at(h);
        double num = std::max(static_cast<double>(a) - d.of(a), 0.0);
        std::string suffix = g.substr(g.find(' ') + 1);
        auto lower = m.probs_[static_cast<std::size_t>(k - 2)].find(suffix);
        double plow = lower != m.probs_[static_cast<std::size_t>(k - 2)].end()
                          ? std::pow(10.0, lower->second)
                          : 1.0 / static_cast<double>(vpred);
        double p = num / static_cast<double>(st.total) + gamma(st) * plow;
        m.probs_[static_cast<std::size_t>(k - 1)][g] = std::log10(p);
      }
    }
    // Backoff weight of each length-k context feeding order k+1.
    if (k < order) {
      std::unordered_map<std::string, CtxStat> hi_ctx;
      for (const auto& [g, a] : adj[static_cast<std::size_t>(k)]) {
        std::string h = g.substr(0, g.rfind(' '));
        auto& st = hi_ctx[h];
        st.total += a;
        if (a == 1) ++st.n1;
        else if (a == 2) ++st.n2;
        else ++st.n3p;
      }
      const Discounts& dh = disc[static_cast<std::size_t>(k)];
      for (const auto& [h, st] : hi_ctx) {
        double g = (dh.d1 * static_cast<double>(st.n1) + dh.d2 * static_cast<double>(st.n2) +
                    dh.d3 * static_cast<double>(st.n3p)) /
                   static_cast<double>(st.total);
        m.backoffs_[static_cast<std::size_t>(k - 1)][h] = std::log10(std::max(g, 1e-12));
      }
    }
  }
  return m;
}

double NgramModel::log_prob(const std::vector<Token>& history, const Token& word) const {
  Token w = normalize(word);
  std::vector<Token> h;
  std::size_t use = std::min<std::size_t>(history.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t i = history.size() - use; i < history.size(); ++i)
    h.push_back(normalize(history[i]));

  double backoff_acc = 0.0;  // log10
  for (;;) {
    std::string g = h.empty() ? w : join_gram(h, 0, h.size()) + " " + w;
    const auto& table = probs_[h.size()];
    auto it = table.find(g);
    if (it != table.end()) return (backoff_acc + it->second) * kLn10;
    if (h.empty()) {
      // word outside the model vocabulary after normalization
      auto u = probs_[0].find(Vocabulary::kUnk);
      return (backoff_acc + (u != probs_[0].end() ? u->second : -99.0)) * kLn10;
    }
    auto bo = backoffs_[h.size() - 1].find(join_gram(h, 0, h.size()));
    if (bo != backoffs_[h.size() - 1].end()) backoff_acc += bo->second;
    h.erase(h.begin());
  }
}

double NgramModel::score_sequence(const std::vector<Token>& tokens) const {
  std::vector<Token> hist(static_cast<std::size_t>(order_ - 1), Vocabulary::kStart);
  double total = 0.0;
  for (const auto& t : tokens) {
    total += log_prob(hist, t);
    hist.push_back(normalize(t));
    if (static_cast<int>(hist.size()) > order_ - 1) hist.erase(hist.begin());
  }
  total += log_prob(hist, Vocabulary::kEnd);
  return total;
}

double NgramModel::perplexity(const std::vector<std::vector<Token>>& corpus) const {
  if (corpus.empty()) throw DataError("perplexity over an empty corpus");
  double total = 0.0;
  long long events = 0;
  for (const auto& sent : corpus) {
    total += score_sequence(sent);
    events += static_cast<long long>(sent.size()) + 1;
  }
  return std::exp(-total / static_cast<double>(events));
}

void NgramModel::save_arpa(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path);
  out << "\\data\\\n";
  for (int k = 1; k <= order_; ++k)
    out << "ngram " << k << "=" << probs_[static_cast<std::size_t>(k - 1)].size() << "\n";
  out << "\n";
  out.setf(std::ios::fixed);
  out.precision(7);
  for (int k = 1; k <= order_; ++k) {
    out << "\\" << k << "-grams:\n";
    std::map<std::string, double> sorted(probs_[static_cast<std::size_t>(k - 1)].begin(),
                                         probs_[static_cast<std::size_t>(k - 1)].end());
    for (const auto& [g, lp] : sorted) {
      out << lp << '\t' << g;
      if (k < order_) {
        auto bo = backoffs_[static_cast<std::size_t>(k - 1)].find(g);
        if (bo != backoffs_[static_cast<std::size_t>(k - 1)].end()) out << '\t' << bo->second;
      }
      out << '\n';
    }
    out << "\n";
  }
  out << "\\end\\\n";
}

NgramModel NgramModel::load_arpa(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  NgramModel m;
  std::string line;
  int section = 0;  // 0 = preamble, k >= 1 inside \k-grams:
  bool in_data = false;
  std::vector<std::size_t> declared;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      in_data = true;
      continue;
    }
    if (line == "\\end\\") break;
    if (line.size() > 2 && line[0] == '\\' && line.find("-grams:") != std::string::npos) {
      section = std::stoi(line.substr(1));
      if (static_cast<int>(m.probs_.size()) < section) {
        m.probs_.resize(static_cast<std::size_t>(section));
        m.backoffs_.resize(static_cast<std::size_t>(section));
      }
      continue;
    }
    if (in_data && section == 0) {
      if (line.rfind("ngram ", 0) == 0) {
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("bad ARPA count line: " + line);
        declared.push_back(std::stoul(line.substr(eq + 1)));
      }
      continue;
    }
    if (section >= 1) {
      std::size_t t1 = line.find('\t');
      if (t1 == std::string::npos) throw ParseError("bad ARPA entry: " + line);
      double lp = std::stod(line.substr(0, t1));
      std::size_t t2 = line.rfind('\t');
      std::string gram;
      if (t2 != t1) {
        gram = line.substr(t1 + 1, t2 - t1 - 1);
        m.backoffs_[static_cast<std::size_t>(section - 1)][gram] =
            std::stod(line.substr(t2 + 1));
      } else {
        gram = line.substr(t1 + 1);
      }
      m.probs_[static_cast<std::size_t>(section - 1)][gram] = lp;
      if (section == 1) {
        m.vocab_.push_back(gram);
        m.in_vocab_[gram] = true;
      }
    }
  }
  if (m.probs_.empty()) throw DataError(path + " is not an ARPA model");
  m.order_ = static_cast<int>(m.probs_.size());
  for (std::size_t k = 0; k < declared.size() && k < m.probs_.size(); ++k)
    if (declared[k] != m.probs_[k].size())
      throw DataError("ARPA count mismatch at order " + std::to_string(k + 1));
  if (!m.in_vocab_.count(Vocabulary::kUnk)) {
    m.probs_[0][Vocabulary::kUnk] = -99.0;
    m.vocab_.push_back(Vocabulary::kUnk);
    m.in_vocab_[Vocabulary::kUnk] = true;
  }
  return m;
}

OrientationTable OrientationTable::train(const std::vector<AlignedSentencePair>& corpus,
                                         double sigma) {
  if (sigma < 0) throw UsageError("orientation smoothing must be >= 0");
  OrientationTable t;
  t.sigma_ = sigma;
  for (const auto& pair : corpus) {
    auto ex = extract_mtus(pair);
    for (std::size_t i = 1; i < ex.mtus.size(); ++i) {
      Orientation o = classify_orientation(ex.mtus[i - 1], ex.mtus[i]);
      auto& row = t.counts_[key(join_tokens(ex.mtus[i].src_toks, '_'),
                                join_tokens(ex.mtus[i].tgt_toks, '_'))];
      ++row[static_cast<std::size_t>(o)];
    }
  }
  return t;
}

double OrientationTable::prob(const Token& f, const Token& e, Orientation o,
                              bool refined) const {
  auto it = counts_.find(key(f, e));
  if (it == counts_.end()) throw DataError("orientation pair not in table: " + f + " / " + e);
  const auto& c = it->second;
  long long total = c[0] + c[1] + c[2] + c[3];
  if (refined) {
    return (static_cast<double>(c[static_cast<std::size_t>(o)]) + sigma_) /
           (static_cast<double>(total) + kClasses * sigma_);
  }
  double num = is_discontinuous(o) ? static_cast<double>(c[2] + c[3])
                                   : static_cast<double>(c[static_cast<std::size_t>(o)]);
  return (num + sigma_) / (static_cast<double>(total) + 3 * sigma_);
}

std::vector<double> OrientationTable::row(const Token& f, const Token& e) const {
  std::vector<double> r(kClasses);
  for (int o = 0; o < kClasses; ++o)
    r[static_cast<std::size_t>(o)] = prob(f, e, static_cast<Orientation>(o), true);
  return r;
}

bool OrientationTable::has(const Token& f, const Token& e) const {
  return counts_.count(key(f, e)) != 0;
}

std::vector<std::pair<Token, Token>> OrientationTable::pairs() const {
  std::vector<std::pair<Token, Token>> out;
  out.reserve(counts_.size());
  for (const auto& [k, _] : counts_) {
    std::size_t tab = k.find('\t');
    out.emplace_back(k.substr(0, tab), k.substr(tab + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void OrientationTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path);
  out.setf(std::ios::fixed);
  out.precision(7);
  for (const auto& [f, e] : pairs()) {
    auto r = row(f, e);
    out << f << " ||| " << e << " ||| " << r[0] << ' ' << r[1] << ' ' << r[2] << ' ' << r[3]
        << '\n';
  }
}

}  // namespace opseq
