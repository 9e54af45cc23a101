#include "streams.hpp"

#include <fstream>

namespace opseq {

Variant parse_variant(const std::string& name) {
  if (name == "osm") return Variant::Osm;
  if (name == "coarse") return Variant::Coarse;
  if (name == "lexical") return Variant::Lexical;
  throw UsageError("unknown variant '" + name + "' (expected osm|coarse|lexical)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Osm: return "osm";
    case Variant::Coarse: return "coarse";
    default: return "lexical";
  }
}

std::string reorder_symbol(const Operation& op) {
  switch (op.kind) {
    case OpKind::InsertGap: return "Insert_Gap";
    case OpKind::JumpBack: return "Jump_Back_" + std::to_string(op.jump);
    case OpKind::JumpForward: return "Jump_Fwd";
    case OpKind::CoarseFD: return "FD";
    case OpKind::CoarseBD: return "BD";
    case OpKind::CoarseSW: return "SW";
    default: throw DataError("not a reordering operation");
  }
}

bool is_reorder_symbol(const Token& tok) {
  return tok == "Insert_Gap" || tok == "Jump_Fwd" || tok.rfind("Jump_Back_", 0) == 0 ||
         tok == "FD" || tok == "BD" || tok == "SW";
}

StreamPair split_streams(const OperationSequence& ops, Variant variant) {
  StreamPair sp;
  auto push_source = [&](const std::vector<Token>& toks) {
    sp.source.push_back(join_tokens(toks, '_'));
  };
  auto push_target = [&](const std::vector<Token>& toks) {
    sp.target.push_back(join_tokens(toks, '_'));
    sp.sync.push_back(static_cast<int>(sp.source.size()));
  };
  for (const auto& op : ops) {
    bool coarse_tag = op.kind == OpKind::CoarseFD || op.kind == OpKind::CoarseBD ||
                      op.kind == OpKind::CoarseSW;
    if (coarse_tag && variant != Variant::Coarse)
      throw DataError("coarse tag in a non-coarse operation sequence");
    if (op.is_reordering()) {
      if (variant == Variant::Lexical)
        throw DataError("reordering operation in a lexical-variant sequence");
      if (!coarse_tag && variant == Variant::Coarse)
        throw DataError("raw reordering operation in a coarse-variant sequence");
      Token sym = reorder_symbol(op);
      sp.source.push_back(sym);
      sp.target.push_back(sym);
      sp.sync.push_back(static_cast<int>(sp.source.size()));
      continue;
    }
    switch (op.kind) {
      case OpKind::Generate:
        push_source(op.src);
        push_target(op.tgt);
        break;
      case OpKind::GenerateSelf:
        push_source(op.src);
        push_target(op.src);
        break;
      case OpKind::GenerateSourceOnly:
        push_source(op.src);
        break;
      case OpKind::GenerateTargetOnly:
        push_target(op.tgt);
        break;
      default:
        break;
    }
  }
  return sp;
}

std::vector<InstanceTokens> make_instances(const StreamPair& sp, int n, int m) {
  if (n < 1) throw UsageError("target order n must be >= 1");
  if (m < 0) throw UsageError("source window m must be >= 0");
  const Token start = Vocabulary::kStart;
  std::vector<InstanceTokens> out;
  const int J = static_cast<int>(sp.target.size());
  out.reserve(static_cast<std::size_t>(J) + 1);
  for (int j = 0; j <= J; ++j) {
    InstanceTokens inst;
    inst.context.reserve(static_cast<std::size_t>(n - 1 + m));
    for (int t = j - n + 1; t <= j - 1; ++t)
      inst.context.push_back(t >= 0 ? sp.target[static_cast<std::size_t>(t)] : start);
    int a = (j < J) ? sp.sync[static_cast<std::size_t>(j)] : static_cast<int>(sp.source.size());
    for (int q = a - m; q <= a - 1; ++q)
      inst.context.push_back(q >= 0 ? sp.source[static_cast<std::size_t>(q)] : start);
    inst.label = (j < J) ? sp.target[static_cast<std::size_t>(j)] : Token(Vocabulary::kEnd);
    out.push_back(std::move(inst));
  }
  return out;
}

void save_streams(const std::vector<StreamPair>& corpus, const std::string& src_path,
                  const std::string& tgt_path, const std::string& sync_path) {
  std::ofstream src(src_path, std::ios::binary), tgt(tgt_path, std::ios::binary),
      sync(sync_path, std::ios::binary);
  if (!src || !tgt || !sync) throw DataError("cannot open stream output files");
  for (const auto& sp : corpus) {
    src << join_tokens(sp.source) << '\n';
    tgt << join_tokens(sp.target) << '\n';
    std::string line;
    for (std::size_t i = 0; i < sp.sync.size(); ++i) {
      if (i) line += ' ';
      line += std::to_string(sp.sync[i]);
    }
    sync << line << '\n';
  }
}

std::vector<StreamPair> load_streams(const std::string& src_path, const std::string& tgt_path,
                                     const std::string& sync_path) {
  auto read = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    return lines;
  };
  auto src = read(src_path), tgt = read(tgt_path), sync = read(sync_path);
  if (src.size() != tgt.size() || src.size() != sync.size())
    throw DataError("stream files differ in line count");
  std::vector<StreamPair> corpus;
  corpus.reserve(src.size());
  for (std::size_t s = 0; s < src.size(); ++s) {
    StreamPair sp;
    sp.source = split_tokens(src[s]);
    sp.target = split_tokens(tgt[s]);
    for (const auto& t : split_tokens(sync[s])) sp.sync.push_back(std::stoi(t));
    if (sp.sync.size() != sp.target.size())
      throw DataError("sync length mismatch at sentence " + std::to_string(s + 1));
    for (std::size_t j = 0; j < sp.sync.size(); ++j) {
      if (sp.sync[j] < 0 || sp.sync[j] > static_cast<int>(sp.source.size()) ||
          (j > 0 && sp.sync[j] < sp.sync[j - 1]))
        throw DataError("invalid sync values at sentence " + std::to_string(s + 1));
    }
    corpus.push_back(std::move(sp));
  }
  return corpus;
}

}  // namespace opseq
