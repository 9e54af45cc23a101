#include "opseq.h"

#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "pipeline.hpp"

namespace {

thread_local std::string g_last_error;

using opseq::DataError;
using opseq::NumericError;
using opseq::UsageError;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return OPSEQ_OK;
  } catch (const UsageError& e) {
    return fail(OPSEQ_ERR_USAGE, e.what());
  } catch (const NumericError& e) {
    return fail(OPSEQ_ERR_NUMERIC, e.what());
  } catch (const DataError& e) {
    return fail(OPSEQ_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(OPSEQ_ERR_DATA, e.what());
  }
}

std::string required(const char* arg, const char* name) {
  if (!arg || !*arg) throw UsageError(std::string(name) + " must be given");
  return arg;
}

std::string optional_str(const char* arg) { return arg ? arg : ""; }

// "-" or empty selects stdout.
class OutputTarget {
 public:
  explicit OutputTarget(const char* path) {
    std::string p = optional_str(path);
    if (!p.empty() && p != "-") {
      file_.open(p, std::ios::binary);
      if (!file_) throw DataError("cannot open " + p);
      use_file_ = true;
    }
  }
  std::ostream& stream() { return use_file_ ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
  bool use_file_ = false;
};

opseq::ModelConfig to_config(const opseq_nn_config* cfg) {
  if (!cfg) throw UsageError("config must be given");
  opseq::ModelConfig c;
  c.n = cfg->n;
  c.m = cfg->m;
  c.input_vocab_cap = cfg->input_vocab_cap;
  c.output_vocab_cap = cfg->output_vocab_cap;
  c.embedding_dim = cfg->embedding_dim;
  c.hidden_dim = cfg->hidden_dim;
  c.output_embedding_dim = cfg->output_embedding_dim;
  c.noise_samples = cfg->noise_samples;
  c.batch_size = cfg->batch_size;
  c.epochs = cfg->epochs;
  c.learning_rate = cfg->learning_rate;
  c.seed = cfg->seed;
  return c;
}

opseq::StreamPair parse_stream_pair(const char* source, const char* target,
                                    const char* sync) {
  opseq::StreamPair sp;
  sp.source = opseq::split_tokens(optional_str(source));
  sp.target = opseq::split_tokens(optional_str(target));
  for (const auto& t : opseq::split_tokens(optional_str(sync))) {
    try {
      sp.sync.push_back(std::stoi(t));
    } catch (...) {
      throw DataError("bad sync value '" + t + "'");
    }
  }
  if (sp.sync.size() != sp.target.size())
    throw DataError("sync length does not match the target stream");
  return sp;
}

opseq::Phrase parse_phrase(const char* source, const char* target, const char* links) {
  opseq::Phrase ph;
  for (const auto& item : opseq::split_tokens(optional_str(source))) {
    std::size_t colon = item.find(':');
    if (colon == std::string::npos || colon == 0)
      throw DataError("phrase source item '" + item + "' is not pos:token");
    try {
      ph.src_pos.push_back(std::stoi(item.substr(0, colon)));
    } catch (...) {
      throw DataError("bad source position in '" + item + "'");
    }
    ph.src_toks.push_back(item.substr(colon + 1));
  }
  ph.tgt = opseq::split_tokens(optional_str(target));
  ph.links = opseq::parse_alignment_line(optional_str(links));
  return ph;
}

}  // namespace

struct opseq_model {
  opseq::LoadedModel lm;
};

struct opseq_scorer {
  std::shared_ptr<opseq::LoadedModel> lm;
  opseq::Variant variant;
  bool swap_detection;
  opseq::ScorerState state;

  opseq::IncrementalScorer scorer() const {
    return lm->ngram ? opseq::IncrementalScorer(*lm->ngram, variant, swap_detection)
                     : opseq::IncrementalScorer(*lm->nn, variant, swap_detection);
  }
};

extern "C" {

const char* opseq_version(void) { return opseq::kVersion; }

const char* opseq_last_error(void) { return g_last_error.c_str(); }

int opseq_extract_ops(const char* src_path, const char* tgt_path, const char* align_path,
                      const char* variant, int swap_detection, const char* out_path) {
  return guarded([&] {
    opseq::cmd_extract_ops(required(src_path, "source path"),
                           required(tgt_path, "target path"),
                           required(align_path, "alignment path"),
                           opseq::parse_variant(required(variant, "variant")),
                           swap_detection != 0, required(out_path, "output path"));
  });
}

int opseq_make_streams(const char* ops_path, const char* variant, const char* out_src,
                       const char* out_tgt, const char* out_sync) {
  return guarded([&] {
    opseq::cmd_streams(required(ops_path, "operations path"),
                       opseq::parse_variant(required(variant, "variant")),
                       required(out_src, "source-stream output"),
                       required(out_tgt, "target-stream output"),
                       required(out_sync, "sync output"));
  });
}

int opseq_train_ngram(const char* tokens_path, int order, const char* out_model) {
  return guarded([&] {
    opseq::cmd_train_ngram(required(tokens_path, "token file"), order,
                           required(out_model, "model output"));
  });
}

void opseq_nn_config_defaults(opseq_nn_config* cfg) {
  if (!cfg) return;
  opseq::ModelConfig d;
  cfg->n = d.n;
  cfg->m = d.m;
  cfg->input_vocab_cap = d.input_vocab_cap;
  cfg->output_vocab_cap = d.output_vocab_cap;
  cfg->embedding_dim = d.embedding_dim;
  cfg->hidden_dim = d.hidden_dim;
  cfg->output_embedding_dim = d.output_embedding_dim;
  cfg->noise_samples = d.noise_samples;
  cfg->batch_size = d.batch_size;
  cfg->epochs = d.epochs;
  cfg->learning_rate = d.learning_rate;
  cfg->seed = d.seed;
}

int opseq_train_nn(const char* src_stream, const char* tgt_stream, const char* sync_path,
                   const char* valid_src, const char* valid_tgt, const char* valid_sync,
                   const opseq_nn_config* cfg, const char* out_model) {
  return guarded([&] {
    opseq::cmd_train_nn(required(src_stream, "source-stream file"),
                        required(tgt_stream, "target-stream file"),
                        required(sync_path, "sync file"), optional_str(valid_src),
                        optional_str(valid_tgt), optional_str(valid_sync), to_config(cfg),
                        required(out_model, "model output"));
  });
}

int opseq_score_stream_files(const char* model_path, const char* src_stream,
                             const char* tgt_stream, const char* sync_path,
                             const char* out_path) {
  return guarded([&] {
    OutputTarget out(out_path);
    opseq::cmd_score(required(model_path, "model path"),
                     required(src_stream, "source-stream file"),
                     required(tgt_stream, "target-stream file"),
                     required(sync_path, "sync file"), out.stream());
  });
}

int opseq_score_incremental_file(const char* model_path, const char* src_path,
                                 const char* tgt_path, const char* align_path,
                                 const char* variant, int swap_detection,
                                 const char* phrases_path, const char* out_path) {
  return guarded([&] {
    OutputTarget out(out_path);
    opseq::cmd_score_incremental(required(model_path, "model path"),
                                 required(src_path, "source path"),
                                 required(tgt_path, "target path"),
                                 required(align_path, "alignment path"),
                                 opseq::parse_variant(required(variant, "variant")),
                                 swap_detection != 0, optional_str(phrases_path),
                                 out.stream());
  });
}

int opseq_export_nmt(const char* src_path, const char* tgt_path, const char* align_path,
                     const char* mode, const char* out_src, const char* out_tgt,
                     const char* aux_src, const char* aux_out) {
  return guarded([&] {
    opseq::cmd_export_nmt(required(src_path, "source path"),
                          required(tgt_path, "target path"),
                          required(align_path, "alignment path"),
                          opseq::parse_export_mode(required(mode, "mode")),
                          required(out_src, "source output"),
                          required(out_tgt, "target output"), optional_str(aux_src),
                          optional_str(aux_out));
  });
}

int opseq_model_open(const char* path, opseq_model** out) {
  return guarded([&] {
    if (!out) throw UsageError("output handle must be given");
    auto handle = std::make_unique<opseq_model>();
    handle->lm = opseq::load_model(required(path, "model path"));
    *out = handle.release();
  });
}

void opseq_model_close(opseq_model* model) { delete model; }

int opseq_model_score(const opseq_model* model, const char* source_stream,
                      const char* target_stream, const char* sync_line, double* logprob) {
  return guarded([&] {
    if (!model || !logprob) throw UsageError("model and output pointer must be given");
    auto sp = parse_stream_pair(source_stream, target_stream, sync_line);
    *logprob = model->lm.ngram ? model->lm.ngram->score_sequence(sp.target)
                               : model->lm.nn->score_stream(sp);
  });
}

int opseq_scorer_new(const char* model_path, const char* variant, int swap_detection,
                     opseq_scorer** out) {
  return guarded([&] {
    if (!out) throw UsageError("output handle must be given");
    auto handle = std::make_unique<opseq_scorer>();
    handle->lm = std::make_shared<opseq::LoadedModel>(
        opseq::load_model(required(model_path, "model path")));
    handle->variant = opseq::parse_variant(required(variant, "variant"));
    handle->swap_detection = swap_detection != 0;
    handle->state = handle->scorer().init();
    *out = handle.release();
  });
}

int opseq_scorer_clone(const opseq_scorer* scorer, opseq_scorer** out) {
  return guarded([&] {
    if (!scorer || !out) throw UsageError("scorer and output handle must be given");
    *out = new opseq_scorer(*scorer);
  });
}

void opseq_scorer_free(opseq_scorer* scorer) { delete scorer; }

int opseq_scorer_extend(opseq_scorer* scorer, const char* source, const char* target,
                        const char* links, double* delta) {
  return guarded([&] {
    if (!scorer || !delta) throw UsageError("scorer and output pointer must be given");
    *delta = scorer->scorer().extend(scorer->state, parse_phrase(source, target, links));
  });
}

int opseq_scorer_finalize(const opseq_scorer* scorer, double* delta) {
  return guarded([&] {
    if (!scorer || !delta) throw UsageError("scorer and output pointer must be given");
    *delta = scorer->scorer().finalize(scorer->state);
  });
}

int opseq_scorer_total(const opseq_scorer* scorer, double* total) {
  return guarded([&] {
    if (!scorer || !total) throw UsageError("scorer and output pointer must be given");
    *total = scorer->state.total;
  });
}

}  // extern "C"
