#include "corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace opseq {

std::vector<Token> split_tokens(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_tokens(const std::vector<Token>& toks, char sep) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += sep;
    out += toks[i];
  }
  return out;
}

std::vector<Link> parse_alignment_line(const std::string& text) {
  std::vector<Link> links;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t start = i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string pair = text.substr(i, j - i);
    std::size_t dash = pair.find('-');
    if (dash == std::string::npos)
      throw ParseError("alignment pair '" + pair + "' has no '-'", 0, start + 1);
    const std::string a = pair.substr(0, dash), b = pair.substr(dash + 1);
    auto is_number = [](const std::string& s) {
      return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
               return std::isdigit(c) != 0;
             });
    };
    if (!is_number(a) || !is_number(b))
      throw ParseError("alignment pair '" + pair + "' is not i-j with non-negative integers",
                       0, start + 1);
    links.emplace_back(std::stoi(a), std::stoi(b));
    i = j;
  }
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());
  return links;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<AlignedSentencePair> load_corpus(const std::string& src_path,
                                             const std::string& tgt_path,
                                             const std::string& align_path) {
  auto src = read_lines(src_path);
  auto tgt = read_lines(tgt_path);
  auto aln = read_lines(align_path);
  if (src.size() != tgt.size() || src.size() != aln.size())
    throw DataError("line count mismatch: " + src_path + "=" + std::to_string(src.size()) +
                    " " + tgt_path + "=" + std::to_string(tgt.size()) + " " + align_path +
                    "=" + std::to_string(aln.size()));
  std::vector<AlignedSentencePair> corpus;
  corpus.reserve(src.size());
  for (std::size_t s = 0; s < src.size(); ++s) {
    AlignedSentencePair pair;
    pair.source = split_tokens(src[s]);
    pair.target = split_tokens(tgt[s]);
    try {
      pair.links = parse_alignment_line(aln[s]);
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " (sentence " + std::to_string(s + 1) + ")",
                       s + 1, e.column);
    }
    for (const auto& [i, j] : pair.links) {
      if (i >= static_cast<int>(pair.source.size()) || j >= static_cast<int>(pair.target.size()))
        throw DataError("alignment link " + std::to_string(i) + "-" + std::to_string(j) +
                        " out of range in sentence " + std::to_string(s + 1) + " (|source|=" +
                        std::to_string(pair.source.size()) + ", |target|=" +
                        std::to_string(pair.target.size()) + ")");
    }
    corpus.push_back(std::move(pair));
  }
  return corpus;
}

void save_corpus(const std::vector<AlignedSentencePair>& corpus,
                 const std::string& src_path, const std::string& tgt_path,
                 const std::string& align_path) {
  std::ofstream src(src_path, std::ios::binary), tgt(tgt_path, std::ios::binary),
      aln(align_path, std::ios::binary);
  if (!src || !tgt || !aln) throw DataError("cannot open output files for corpus");
  for (const auto& p : corpus) {
    src << join_tokens(p.source) << '\n';
    tgt << join_tokens(p.target) << '\n';
    std::string a;
    for (std::size_t k = 0; k < p.links.size(); ++k) {
      if (k) a += ' ';
      a += std::to_string(p.links[k].first) + "-" + std::to_string(p.links[k].second);
    }
    aln << a << '\n';
  }
}

int Vocabulary::add(const Token& tok) {
  auto it = map_.find(tok);
  if (it != map_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(tok);
  map_.emplace(tok, id);
  if (tok == kUnk) unk_id_ = id;
  return id;
}

int Vocabulary::id(const Token& tok) const {
  auto it = map_.find(tok);
  if (it != map_.end()) return it->second;
  return unk_id_;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path);
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  Vocabulary v;
  auto lines = read_lines(path);
  int reserved = 0;
  bool counting_reserved = true;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    std::size_t tab = lines[n].find('\t');
    if (tab == std::string::npos) throw ParseError("vocabulary line has no tab", n + 1);
    Token tok = lines[n].substr(0, tab);
    int id = std::stoi(lines[n].substr(tab + 1));
    if (id != static_cast<int>(v.tokens_.size()))
      throw DataError("vocabulary ids not dense in " + path);
    v.add(tok);
    // Reserved block = leading sentinel/operation symbols written first.
    if (counting_reserved &&
        (tok == kStart || tok == kEnd || tok == kUnk || tok.rfind("Insert_Gap", 0) == 0 ||
         tok.rfind("Jump_", 0) == 0 || tok == "FD" || tok == "BD" || tok == "SW")) {
      ++reserved;
    } else {
      counting_reserved = false;
    }
  }
  v.reserved_count_ = reserved;
  if (v.unk_id_ < 0) throw DataError("vocabulary in " + path + " lacks " + std::string(kUnk));
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<Token>& toks, int reserved_count) {
  Vocabulary v;
  for (const auto& t : toks) v.add(t);
  v.reserved_count_ = reserved_count;
  if (v.unk_id_ < 0) throw DataError("token list lacks " + std::string(kUnk));
  return v;
}

Vocabulary build_vocabulary(const std::vector<Token>& token_stream, int cap,
                            const std::vector<Token>& reserved) {
  if (cap < 0) throw UsageError("vocabulary cap must be >= 0");
  Vocabulary v;
  v.add(Vocabulary::kStart);
  v.add(Vocabulary::kEnd);
  v.add(Vocabulary::kUnk);
  for (const auto& r : reserved) v.add(r);
  v.reserved_count_ = v.size();

  std::map<Token, long long> freq;  // ordered map gives the lexicographic tie-break
  for (const auto& t : token_stream)
    if (!v.contains(t)) ++freq[t];
  std::vector<std::pair<long long, Token>> ranked;
  ranked.reserve(freq.size());
  for (const auto& [tok, c] : freq) ranked.emplace_back(-c, tok);
  std::sort(ranked.begin(), ranked.end());
  for (int k = 0; k < cap && k < static_cast<int>(ranked.size()); ++k) v.add(ranked[k].second);
  return v;
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace opseq
