#include "pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "opgen.hpp"

namespace opseq {

namespace {

using nlohmann::json;

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

std::string digest_hex(const std::string& path) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << file_digest(path);
  return os.str();
}

// Index-addressed parallel map over sentences; output order is by index
// regardless of worker interleaving.
template <typename Fn>
void for_each_indexed(std::size_t count, Fn&& fn) {
  const int threads = thread_count();
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

OperationSequence convert_variant(OperationSequence ops, Variant variant,
                                  bool swap_detection) {
  if (variant == Variant::Coarse) return to_coarse(ops, swap_detection);
  if (variant == Variant::Lexical) return to_lexical(ops);
  return ops;
}

std::vector<Token> reserved_symbols(const std::vector<StreamPair>& corpus, bool source_side) {
  std::set<Token> syms;
  for (const auto& sp : corpus)
    for (const auto& t : source_side ? sp.source : sp.target)
      if (is_reorder_symbol(t)) syms.insert(t);
  return {syms.begin(), syms.end()};
}

}  // namespace

int thread_count() {
  const char* env = std::getenv("OPSEQ_THREADS");
  if (!env || !*env) return 1;
  int n = 0;
  try {
    n = std::stoi(env);
  } catch (...) {
    throw UsageError("OPSEQ_THREADS must be a positive integer");
  }
  if (n < 1) throw UsageError("OPSEQ_THREADS must be a positive integer");
  return n;
}

void write_manifest(const std::string& artifact_path, const std::string& command,
                    const std::string& config_json,
                    const std::vector<std::string>& input_paths, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["config"] = json::parse(config_json);
  json inputs = json::object();
  for (const auto& p : input_paths) inputs[p] = digest_hex(p);
  m["inputs"] = inputs;
  m["seed"] = seed;
  m["version"] = kVersion;
  const std::string path = artifact_path + ".manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path);
  out << m.dump(2) << "\n";
}

void cmd_extract_ops(const std::string& src_path, const std::string& tgt_path,
                     const std::string& align_path, Variant variant, bool swap_detection,
                     const std::string& out_path) {
  auto corpus = load_corpus(src_path, tgt_path, align_path);
  std::vector<std::string> lines(corpus.size());
  for_each_indexed(corpus.size(), [&](std::size_t i) {
    try {
      lines[i] =
          ops_to_line(convert_variant(generate_operations(corpus[i]), variant, swap_detection));
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " (sentence " + std::to_string(i + 1) + ")");
    }
  });
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot open " + out_path);
  for (const auto& l : lines) out << l << '\n';
  out.close();
  json cfg{{"variant", variant_name(variant)}, {"swap_detection", swap_detection}};
  write_manifest(out_path, "extract-ops", cfg.dump(), {src_path, tgt_path, align_path}, 0);
}

void cmd_streams(const std::string& ops_path, Variant variant, const std::string& out_src,
                 const std::string& out_tgt, const std::string& out_sync) {
  auto lines = read_lines(ops_path);
  std::vector<StreamPair> corpus(lines.size());
  for_each_indexed(lines.size(), [&](std::size_t i) {
    try {
      corpus[i] = split_streams(parse_ops_line(lines[i]), variant);
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " (sentence " + std::to_string(i + 1) + ")");
    }
  });
  save_streams(corpus, out_src, out_tgt, out_sync);
  json cfg{{"variant", variant_name(variant)}};
  write_manifest(out_src, "streams", cfg.dump(), {ops_path}, 0);
}

void cmd_train_ngram(const std::string& tokens_path, int order,
                     const std::string& out_model) {
  auto lines = read_lines(tokens_path);
  std::vector<std::vector<Token>> corpus;
  corpus.reserve(lines.size());
  for (const auto& l : lines) corpus.push_back(split_tokens(l));
  NgramModel::train(corpus, order).save_arpa(out_model);
  json cfg{{"backend", "ngram"}, {"order", order}};
  write_manifest(out_model, "train", cfg.dump(), {tokens_path}, 0);
}

void cmd_train_nn(const std::string& src_stream, const std::string& tgt_stream,
                  const std::string& sync_path, const std::string& valid_src,
                  const std::string& valid_tgt, const std::string& valid_sync,
                  const ModelConfig& cfg, const std::string& out_model) {
  const bool explicit_valid = !valid_src.empty() || !valid_tgt.empty() || !valid_sync.empty();
  if (explicit_valid && (valid_src.empty() || valid_tgt.empty() || valid_sync.empty()))
    throw UsageError("validation stream files must be given all together");

  auto all = load_streams(src_stream, tgt_stream, sync_path);
  std::vector<StreamPair> train, valid;
  std::vector<std::string> inputs{src_stream, tgt_stream, sync_path};
  if (explicit_valid) {
    train = std::move(all);
    valid = load_streams(valid_src, valid_tgt, valid_sync);
    inputs.insert(inputs.end(), {valid_src, valid_tgt, valid_sync});
  } else {
    // Hold out every tenth sentence; tiny corpora validate on themselves.
    for (std::size_t i = 0; i < all.size(); ++i)
      (i % 10 == 9 ? valid : train).push_back(all[i]);
    if (valid.empty()) valid = train;
  }
  if (train.empty()) throw DataError("no training sentences after the validation split");

  std::vector<Token> src_tokens, tgt_tokens;
  for (const auto& sp : train) {
    src_tokens.insert(src_tokens.end(), sp.source.begin(), sp.source.end());
    tgt_tokens.insert(tgt_tokens.end(), sp.target.begin(), sp.target.end());
  }
  // Reordering symbols are reserved so the frequency cut can never drop them.
  auto sv = build_vocabulary(src_tokens, cfg.input_vocab_cap, reserved_symbols(train, true));
  auto tv = build_vocabulary(tgt_tokens, cfg.output_vocab_cap, reserved_symbols(train, false));

  std::vector<TrainingInstance> train_inst, valid_inst;
  for (const auto& sp : train) {
    auto inst = map_stream_instances(sp, cfg.n, cfg.m, sv, tv);
    train_inst.insert(train_inst.end(), inst.begin(), inst.end());
  }
  for (const auto& sp : valid) {
    auto inst = map_stream_instances(sp, cfg.n, cfg.m, sv, tv);
    valid_inst.insert(valid_inst.end(), inst.begin(), inst.end());
  }

  std::vector<EpochLog> log;
  NeuralModel model = train_neural(cfg, sv, tv, std::move(train_inst), valid_inst, &log);
  model.save(out_model);

  const std::string log_path = out_model + ".log";
  std::ofstream lf(log_path, std::ios::binary);
  if (!lf) throw DataError("cannot open " + log_path);
  lf << std::setprecision(10);
  for (const auto& e : log)
    lf << e.epoch << '\t' << e.train_nce_loss << '\t' << e.valid_ppl << '\t'
       << e.learning_rate << '\n';

  json c{{"backend", "nn"},
         {"n", cfg.n},
         {"m", cfg.m},
         {"input_vocab_cap", cfg.input_vocab_cap},
         {"output_vocab_cap", cfg.output_vocab_cap},
         {"embedding_dim", cfg.embedding_dim},
         {"hidden_dim", cfg.hidden_dim},
         {"output_embedding_dim", cfg.output_embedding_dim},
         {"noise_samples", cfg.noise_samples},
         {"batch_size", cfg.batch_size},
         {"epochs", cfg.epochs},
         {"learning_rate", cfg.learning_rate},
         {"seed", cfg.seed}};
  write_manifest(out_model, "train", c.dump(), inputs, cfg.seed);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char head[8] = {};
  in.read(head, sizeof head);
  LoadedModel lm;
  if (in.gcount() == 8 && std::string(head, 8) == "OPSQNN01") {
    lm.nn = std::make_unique<NeuralModel>(NeuralModel::load(path));
    return lm;
  }
  in.clear();
  in.seekg(0);
  std::string line;
  for (int i = 0; i < 10 && std::getline(in, line); ++i) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "\\data\\") {
      lm.ngram = std::make_unique<NgramModel>(NgramModel::load_arpa(path));
      return lm;
    }
  }
  throw DataError(path + " is neither an ARPA file nor a neural model container");
}

void cmd_score(const std::string& model_path, const std::string& src_stream,
               const std::string& tgt_stream, const std::string& sync_path,
               std::ostream& out) {
  auto lm = load_model(model_path);
  auto corpus = load_streams(src_stream, tgt_stream, sync_path);
  out << std::setprecision(12);
  double total = 0.0;
  long long events = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    double lp = lm.ngram ? lm.ngram->score_sequence(corpus[i].target)
                         : lm.nn->score_stream(corpus[i]);
    out << i << '\t' << lp << '\n';
    total += lp;
    events += static_cast<long long>(corpus[i].target.size()) + 1;
  }
  if (events == 0) throw DataError("nothing to score");
  out << "PPL\t" << std::exp(-total / static_cast<double>(events)) << '\n';
}

void cmd_score_incremental(const std::string& model_path, const std::string& src_path,
                           const std::string& tgt_path, const std::string& align_path,
                           Variant variant, bool swap_detection,
                           const std::string& phrases_path, std::ostream& out) {
  auto lm = load_model(model_path);
  auto corpus = load_corpus(src_path, tgt_path, align_path);
  std::vector<std::vector<int>> cuts(corpus.size());
  if (!phrases_path.empty()) {
    auto lines = read_lines(phrases_path);
    if (lines.size() != corpus.size())
      throw DataError("phrase file has " + std::to_string(lines.size()) + " lines, corpus has " +
                      std::to_string(corpus.size()));
    for (std::size_t i = 0; i < lines.size(); ++i)
      for (const auto& t : split_tokens(lines[i])) {
        try {
          cuts[i].push_back(std::stoi(t));
        } catch (...) {
          throw DataError("bad phrase cut '" + t + "' at sentence " + std::to_string(i + 1));
        }
      }
  }
  IncrementalScorer scorer =
      lm.ngram ? IncrementalScorer(*lm.ngram, variant, swap_detection)
               : IncrementalScorer(*lm.nn, variant, swap_detection);
  out << std::setprecision(12);
  double total = 0.0;
  long long events = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    double lp = 0.0;
    try {
      auto st = scorer.init();
      for (const auto& ph : make_phrases(corpus[i], cuts[i])) lp += scorer.extend(st, ph);
      lp += scorer.finalize(st);
      auto sp = split_streams(
          convert_variant(generate_operations(corpus[i]), variant, swap_detection), variant);
      events += static_cast<long long>(sp.target.size()) + 1;
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " (sentence " + std::to_string(i + 1) + ")");
    }
    out << i << '\t' << lp << '\n';
    total += lp;
  }
  if (events == 0) throw DataError("nothing to score");
  out << "PPL\t" << std::exp(-total / static_cast<double>(events)) << '\n';
}

ExportMode parse_export_mode(const std::string& name) {
  if (name == "preordered") return ExportMode::Preordered;
  if (name == "osm-augmented") return ExportMode::OsmAugmented;
  if (name == "coarse-augmented") return ExportMode::CoarseAugmented;
  throw UsageError("unknown export mode '" + name +
                   "' (expected preordered|osm-augmented|coarse-augmented)");
}

std::string export_mode_name(ExportMode mode) {
  switch (mode) {
    case ExportMode::Preordered: return "preordered";
    case ExportMode::OsmAugmented: return "osm-augmented";
    default: return "coarse-augmented";
  }
}

void cmd_export_nmt(const std::string& src_path, const std::string& tgt_path,
                    const std::string& align_path, ExportMode mode,
                    const std::string& out_src, const std::string& out_tgt,
                    const std::string& aux_src, const std::string& aux_out) {
  if (aux_src.empty() != aux_out.empty())
    throw UsageError("auxiliary output files must be given both or neither");
  auto corpus = load_corpus(src_path, tgt_path, align_path);
  std::vector<std::string> src_lines(corpus.size()), tgt_lines(corpus.size());
  for_each_indexed(corpus.size(), [&](std::size_t i) {
    try {
      auto ops = generate_operations(corpus[i]);
      if (mode == ExportMode::Preordered) {
        // Source tokens in target order, cepts kept intact.
        std::vector<Token> ordered;
        for (const auto& op : to_lexical(ops))
          ordered.insert(ordered.end(), op.src.begin(), op.src.end());
        src_lines[i] = join_tokens(ordered);
        tgt_lines[i] = join_tokens(corpus[i].target);
      } else {
        Variant v = mode == ExportMode::OsmAugmented ? Variant::Osm : Variant::Coarse;
        auto sp = split_streams(convert_variant(std::move(ops), v, false), v);
        src_lines[i] = join_tokens(sp.source);
        tgt_lines[i] = join_tokens(sp.target);
      }
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " (sentence " + std::to_string(i + 1) + ")");
    }
  });
  std::ofstream so(out_src, std::ios::binary), to(out_tgt, std::ios::binary);
  if (!so || !to) throw DataError("cannot open export output files");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    so << src_lines[i] << '\n';
    to << tgt_lines[i] << '\n';
  }
  if (!aux_src.empty()) {
    std::ofstream ao(aux_src, std::ios::binary), at(aux_out, std::ios::binary);
    if (!ao || !at) throw DataError("cannot open auxiliary output files");
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      ao << join_tokens(corpus[i].source) << '\n';
      at << src_lines[i] << '\n';
    }
  }
  json cfg{{"mode", export_mode_name(mode)}};
  write_manifest(out_src, "export-nmt", cfg.dump(), {src_path, tgt_path, align_path}, 0);
}

}  // namespace opseq
