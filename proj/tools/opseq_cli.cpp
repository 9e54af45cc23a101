// Command-line front end; talks to the library through the C API only.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "opseq.h"

namespace {

int report(int rc) {
  if (rc != OPSEQ_OK) std::fprintf(stderr, "error: %s\n", opseq_last_error());
  return rc;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operation-sequence modeling toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(opseq_version()));

  int rc = OPSEQ_OK;

  // extract-ops
  std::string x_src, x_tgt, x_align, x_variant = "osm", x_out;
  bool x_swap = false;
  auto* extract = app.add_subcommand("extract-ops",
                                     "convert an aligned corpus into operation sequences");
  extract->add_option("--src", x_src, "source text file")->required();
  extract->add_option("--tgt", x_tgt, "target text file")->required();
  extract->add_option("--align", x_align, "alignment file (Pharaoh i-j)")->required();
  extract->add_option("--variant", x_variant, "osm|coarse|lexical")
      ->check(CLI::IsMember({"osm", "coarse", "lexical"}));
  extract->add_flag("--swap-detection", x_swap, "label adjacent swaps SW in coarse output");
  extract->add_option("--out", x_out, "operations output file")->required();
  extract->callback([&] {
    rc = report(opseq_extract_ops(x_src.c_str(), x_tgt.c_str(), x_align.c_str(),
                                  x_variant.c_str(), x_swap ? 1 : 0, x_out.c_str()));
  });

  // streams
  std::string s_ops, s_variant = "osm", s_src, s_tgt, s_sync;
  auto* streams = app.add_subcommand("streams", "split operations into the two streams");
  streams->add_option("--ops", s_ops, "operations file")->required();
  streams->add_option("--variant", s_variant, "osm|coarse|lexical")
      ->check(CLI::IsMember({"osm", "coarse", "lexical"}));
  streams->add_option("--out-src", s_src, "source-stream output")->required();
  streams->add_option("--out-tgt", s_tgt, "target-stream output")->required();
  streams->add_option("--out-sync", s_sync, "sync output")->required();
  streams->callback([&] {
    rc = report(opseq_make_streams(s_ops.c_str(), s_variant.c_str(), s_src.c_str(),
                                   s_tgt.c_str(), s_sync.c_str()));
  });

  // train
  opseq_nn_config cfg;
  opseq_nn_config_defaults(&cfg);
  std::string t_backend, t_tokens, t_src, t_tgt, t_sync, t_vsrc, t_vtgt, t_vsync, t_out;
  int t_order = 5;
  auto* train = app.add_subcommand("train", "train a sequence model");
  train->add_option("--backend", t_backend, "ngram|nn")
      ->required()
      ->check(CLI::IsMember({"ngram", "nn"}));
  train->add_option("--tokens", t_tokens, "token file, one sequence per line (ngram)");
  train->add_option("--order", t_order, "model order (ngram)");
  train->add_option("--src-stream", t_src, "source-stream file (nn)");
  train->add_option("--tgt-stream", t_tgt, "target-stream file (nn)");
  train->add_option("--sync", t_sync, "sync file (nn)");
  train->add_option("--valid-src", t_vsrc, "validation source-stream file (nn)");
  train->add_option("--valid-tgt", t_vtgt, "validation target-stream file (nn)");
  train->add_option("--valid-sync", t_vsync, "validation sync file (nn)");
  train->add_option("--n", cfg.n, "target order");
  train->add_option("--m", cfg.m, "source window");
  train->add_option("--input-vocab-cap", cfg.input_vocab_cap, "source-stream vocab cap");
  train->add_option("--output-vocab-cap", cfg.output_vocab_cap, "target-stream vocab cap");
  train->add_option("--embedding-dim", cfg.embedding_dim, "input embedding width");
  train->add_option("--hidden-dim", cfg.hidden_dim, "hidden layer width");
  train->add_option("--output-embedding-dim", cfg.output_embedding_dim,
                    "output embedding width");
  train->add_option("--noise-samples", cfg.noise_samples, "NCE noise samples per instance");
  train->add_option("--batch-size", cfg.batch_size, "minibatch size");
  train->add_option("--epochs", cfg.epochs, "training epochs");
  train->add_option("--learning-rate", cfg.learning_rate, "initial learning rate");
  train->add_option("--seed", cfg.seed, "random seed");
  train->add_option("--out", t_out, "model output file")->required();
  train->callback([&] {
    if (t_backend == "ngram")
      rc = report(opseq_train_ngram(t_tokens.c_str(), t_order, t_out.c_str()));
    else
      rc = report(opseq_train_nn(t_src.c_str(), t_tgt.c_str(), t_sync.c_str(), opt(t_vsrc),
                                 opt(t_vtgt), opt(t_vsync), &cfg, t_out.c_str()));
  });

  // score
  std::string c_model, c_src, c_tgt, c_sync, c_align, c_variant = "osm", c_phrases,
              c_out = "-";
  bool c_incremental = false, c_swap = false;
  auto* score = app.add_subcommand("score", "per-sentence log-probs and corpus perplexity");
  score->add_option("--model", c_model, "model file (ARPA or neural container)")->required();
  score->add_option("--src-stream", c_src, "source-stream file");
  score->add_option("--tgt-stream", c_tgt, "target-stream file");
  score->add_option("--sync", c_sync, "sync file");
  score->add_flag("--incremental", c_incremental, "score phrase by phrase from a raw corpus");
  score->add_option("--src", c_src, "source text file (incremental)");
  score->add_option("--tgt", c_tgt, "target text file (incremental)");
  score->add_option("--align", c_align, "alignment file (incremental)");
  score->add_option("--variant", c_variant, "osm|coarse|lexical (incremental)")
      ->check(CLI::IsMember({"osm", "coarse", "lexical"}));
  score->add_flag("--swap-detection", c_swap, "SW labeling (incremental coarse)");
  score->add_option("--phrases", c_phrases, "per-sentence phrase cut positions (incremental)");
  score->add_option("--out", c_out, "output file, '-' = stdout");
  score->callback([&] {
    if (c_incremental)
      rc = report(opseq_score_incremental_file(c_model.c_str(), c_src.c_str(), c_tgt.c_str(),
                                               c_align.c_str(), c_variant.c_str(),
                                               c_swap ? 1 : 0, opt(c_phrases),
                                               c_out.c_str()));
    else
      rc = report(opseq_score_stream_files(c_model.c_str(), c_src.c_str(), c_tgt.c_str(),
                                           c_sync.c_str(), c_out.c_str()));
  });

  // export-nmt
  std::string e_src, e_tgt, e_align, e_mode, e_osrc, e_otgt, e_asrc, e_aout;
  auto* exp = app.add_subcommand("export-nmt", "rewrite a corpus for seq2seq training");
  exp->add_option("--src", e_src, "source text file")->required();
  exp->add_option("--tgt", e_tgt, "target text file")->required();
  exp->add_option("--align", e_align, "alignment file")->required();
  exp->add_option("--mode", e_mode, "preordered|osm-augmented|coarse-augmented")
      ->required()
      ->check(CLI::IsMember({"preordered", "osm-augmented", "coarse-augmented"}));
  exp->add_option("--out-src", e_osrc, "transformed source output")->required();
  exp->add_option("--out-tgt", e_otgt, "target output")->required();
  exp->add_option("--aux-src", e_asrc, "auxiliary original-source output");
  exp->add_option("--aux-out", e_aout, "auxiliary transformed-source output");
  exp->callback([&] {
    rc = report(opseq_export_nmt(e_src.c_str(), e_tgt.c_str(), e_align.c_str(),
                                 e_mode.c_str(), e_osrc.c_str(), e_otgt.c_str(), opt(e_asrc),
                                 opt(e_aout)));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : OPSEQ_ERR_USAGE;
  }
  return rc;
}
