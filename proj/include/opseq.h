/* C interface to the operation-sequence toolkit.
 *
 * Every function returning int yields OPSEQ_OK (0) on success or an error
 * code below; opseq_last_error() then describes the failure for the
 * calling thread. Handles are opaque and freed with their *_free/close
 * function. Passing NULL where a path or handle is required is a usage
 * error, except where a parameter is documented as optional.
 */
#ifndef OPSEQ_H
#define OPSEQ_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define OPSEQ_OK 0
#define OPSEQ_ERR_USAGE 1   /* bad arguments or configuration */
#define OPSEQ_ERR_DATA 2    /* malformed or inconsistent input data */
#define OPSEQ_ERR_NUMERIC 3 /* non-finite loss/parameters during training */

const char* opseq_version(void);
/* Message of the most recent failing call on this thread ("" if none). */
const char* opseq_last_error(void);

/* ---- pipeline commands (file to file) -------------------------------- */

/* variant is "osm", "coarse" or "lexical" throughout. */
int opseq_extract_ops(const char* src_path, const char* tgt_path, const char* align_path,
                      const char* variant, int swap_detection, const char* out_path);

int opseq_make_streams(const char* ops_path, const char* variant, const char* out_src,
                       const char* out_tgt, const char* out_sync);

int opseq_train_ngram(const char* tokens_path, int order, const char* out_model);

typedef struct opseq_nn_config {
  int32_t n;                 /* target order; context uses n-1 tokens */
  int32_t m;                 /* source window */
  int32_t input_vocab_cap;   /* source-stream vocabulary cap */
  int32_t output_vocab_cap;  /* target-stream vocabulary cap */
  int32_t embedding_dim;
  int32_t hidden_dim;
  int32_t output_embedding_dim;
  int32_t noise_samples;
  int32_t batch_size;
  int32_t epochs;
  double learning_rate;
  uint64_t seed;
} opseq_nn_config;

void opseq_nn_config_defaults(opseq_nn_config* cfg);

/* valid_* may all be NULL/empty; every tenth sentence is then held out. */
int opseq_train_nn(const char* src_stream, const char* tgt_stream, const char* sync_path,
                   const char* valid_src, const char* valid_tgt, const char* valid_sync,
                   const opseq_nn_config* cfg, const char* out_model);

/* Per-sentence "id<TAB>logprob" lines plus "PPL<TAB>value"; out_path NULL
 * or "-" writes to stdout. The model file may be ARPA or the binary
 * neural container; it is sniffed. */
int opseq_score_stream_files(const char* model_path, const char* src_stream,
                             const char* tgt_stream, const char* sync_path,
                             const char* out_path);

/* Incremental scoring over a raw corpus. phrases_path (optional) holds one
 * line of space-separated cut positions per sentence. */
int opseq_score_incremental_file(const char* model_path, const char* src_path,
                                 const char* tgt_path, const char* align_path,
                                 const char* variant, int swap_detection,
                                 const char* phrases_path, const char* out_path);

/* mode is "preordered", "osm-augmented" or "coarse-augmented"; aux_src and
 * aux_out (optional, both or neither) receive the original-source ->
 * transformed-source pair files. */
int opseq_export_nmt(const char* src_path, const char* tgt_path, const char* align_path,
                     const char* mode, const char* out_src, const char* out_tgt,
                     const char* aux_src, const char* aux_out);

/* ---- model handle ----------------------------------------------------- */

typedef struct opseq_model opseq_model;

int opseq_model_open(const char* path, opseq_model** out);
void opseq_model_close(opseq_model* model);
/* Natural-log score of one stream pair: whitespace-separated source and
 * target stream lines plus the sync positions line. */
int opseq_model_score(const opseq_model* model, const char* source_stream,
                      const char* target_stream, const char* sync_line, double* logprob);

/* ---- incremental scorer ----------------------------------------------- */

/* A scorer carries a model reference and one hypothesis state. Clone it to
 * fork hypotheses; clones share the model. */
typedef struct opseq_scorer opseq_scorer;

int opseq_scorer_new(const char* model_path, const char* variant, int swap_detection,
                     opseq_scorer** out);
int opseq_scorer_clone(const opseq_scorer* scorer, opseq_scorer** out);
void opseq_scorer_free(opseq_scorer* scorer);

/* Extends the hypothesis with one phrase.
 *   source: space-separated "pos:token" items, ascending global positions
 *           (may be empty for a target-only phrase);
 *   target: space-separated target tokens;
 *   links:  "i-j" pairs indexing into this phrase's source/target lists.
 * On success *delta receives the natural-log score increment. */
int opseq_scorer_extend(opseq_scorer* scorer, const char* source, const char* target,
                        const char* links, double* delta);

/* Score of closing the hypothesis now (trailing words + end symbol); does
 * not modify the state and may be called repeatedly. */
int opseq_scorer_finalize(const opseq_scorer* scorer, double* delta);

/* Sum of all extend deltas so far. */
int opseq_scorer_total(const opseq_scorer* scorer, double* total);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OPSEQ_H */
