#ifndef OPSEQ_PIPELINE_HPP
#define OPSEQ_PIPELINE_HPP

#include <iosfwd>
#include <memory>
#include <string>

#include "neural.hpp"
#include "ngram.hpp"
#include "scorer.hpp"
#include "streams.hpp"

namespace opseq {

inline constexpr const char* kVersion = "0.1.0";

// OPSEQ_THREADS (>= 1, default 1); per-sentence work may fan out across
// this many workers, with output always in input order.
int thread_count();

// Every artifact-producing command records how it ran: the command name,
// its configuration, FNV-1a digests of its inputs, seed, and tool
// version, as <artifact>.manifest.json. Equal manifests imply
// byte-identical artifacts.
void write_manifest(const std::string& artifact_path, const std::string& command,
                    const std::string& config_json,
                    const std::vector<std::string>& input_paths, std::uint64_t seed);

// Converts a three-file corpus into one operation line per sentence.
void cmd_extract_ops(const std::string& src_path, const std::string& tgt_path,
                     const std::string& align_path, Variant variant, bool swap_detection,
                     const std::string& out_path);

// Splits an operation corpus into the two stream files plus the sync file.
void cmd_streams(const std::string& ops_path, Variant variant, const std::string& out_src,
                 const std::string& out_tgt, const std::string& out_sync);

// Kneser-Ney model over a token file (one sequence per line; for the
// count-based sequence model this is the target-stream file). ARPA output.
void cmd_train_ngram(const std::string& tokens_path, int order,
                     const std::string& out_model);

// NCE-trained neural model over stream files. When the valid_* paths are
// empty, every tenth sentence is held out for validation. Writes the model
// plus "<out>.log" with one "epoch\ttrain_nce_loss\tvalid_ppl\tlr" line
// per epoch (epoch 0 = initial model).
void cmd_train_nn(const std::string& src_stream, const std::string& tgt_stream,
                  const std::string& sync_path, const std::string& valid_src,
                  const std::string& valid_tgt, const std::string& valid_sync,
                  const ModelConfig& cfg, const std::string& out_model);

// Either backend behind one handle; the file is sniffed (ARPA header vs.
// binary magic).
struct LoadedModel {
  std::unique_ptr<NgramModel> ngram;
  std::unique_ptr<NeuralModel> nn;
};
LoadedModel load_model(const std::string& path);

// Per-sentence "id<TAB>logprob" lines and a final "PPL<TAB>value".
void cmd_score(const std::string& model_path, const std::string& src_stream,
               const std::string& tgt_stream, const std::string& sync_path,
               std::ostream& out);
// Scores via the incremental API: each sentence is cut into phrases at the
// unit positions given by the matching line of phrases_path (space-
// separated integers; empty line or empty path = one phrase).
void cmd_score_incremental(const std::string& model_path, const std::string& src_path,
                           const std::string& tgt_path, const std::string& align_path,
                           Variant variant, bool swap_detection,
                           const std::string& phrases_path, std::ostream& out);

enum class ExportMode { Preordered, OsmAugmented, CoarseAugmented };
ExportMode parse_export_mode(const std::string& name);
std::string export_mode_name(ExportMode mode);

// Rewrites a corpus for sequence-to-sequence training: preordered emits
// the source linearized into target order against the original target;
// the augmented modes emit the osm/coarse stream pairs. aux_* (optional,
// both or neither) additionally emit original-source -> transformed-source
// parallel files for the auxiliary prediction model.
void cmd_export_nmt(const std::string& src_path, const std::string& tgt_path,
                    const std::string& align_path, ExportMode mode,
                    const std::string& out_src, const std::string& out_tgt,
                    const std::string& aux_src = "", const std::string& aux_out = "");

}  // namespace opseq

#endif
