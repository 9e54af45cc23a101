#ifndef OPSEQ_NEURAL_HPP
#define OPSEQ_NEURAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "streams.hpp"

namespace opseq {

// Feed-forward (m+n)-gram model: shared lookup layer over both stream
// vocabularies, one rectifier hidden layer, softmax output over the
// target-stream vocabulary. Trained with noise contrastive estimation.
struct ModelConfig {
  int n = 7;                  // target order (6 context tokens)
  int m = 7;                  // source window
  int input_vocab_cap = 20000;   // source-stream side
  int output_vocab_cap = 40000;  // target-stream side
  int embedding_dim = 150;
  int hidden_dim = 750;
  int output_embedding_dim = 750;  // = hidden_dim; the output weight width
  int noise_samples = 100;
  int batch_size = 1000;
  int epochs = 25;
  double learning_rate = 1.0;
  std::uint64_t seed = 1;

  int context_width() const { return (n - 1) + m; }
  void validate() const;
};

struct TrainingInstance {
  std::vector<int> context;  // (n-1) target-stream ids ++ m source-stream ids
  int label = 0;             // target-stream id
};

struct EpochLog {
  int epoch;
  double train_nce_loss;
  double valid_ppl;
  double learning_rate;
};

class NeuralModel {
 public:
  NeuralModel() = default;
  // Random init: weights uniform(-0.05, 0.05), biases zero except the
  // output bias which starts at -log|Vo| so untrained scores sit near
  // uniform (keeps NCE self-normalization stable).
  NeuralModel(const ModelConfig& cfg, Vocabulary source_vocab, Vocabulary target_vocab);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& source_vocab() const { return src_vocab_; }
  const Vocabulary& target_vocab() const { return tgt_vocab_; }
  int input_vocab_size() const { return tgt_vocab_.size() + src_vocab_.size(); }
  int output_vocab_size() const { return tgt_vocab_.size(); }

  // Input ids: target-stream tokens keep their vocabulary id, source-stream
  // tokens are offset by |target vocabulary|.
  int source_input_id(const Token& t) const { return tgt_vocab_.size() + src_vocab_.id(t); }
  int target_input_id(const Token& t) const { return tgt_vocab_.id(t); }

  // Hidden representation of one context; |ids| must equal context_width().
  Eigen::VectorXd forward(const std::vector<int>& context) const;
  Eigen::VectorXd logits(const std::vector<int>& context) const;
  double softmax_prob(const std::vector<int>& context, int label) const;
  double log_softmax(const std::vector<int>& context, int label) const;

  // NCE objective over a minibatch with the noise labels already drawn
  // (one row of noise_samples labels per instance). Returns the summed
  // loss; fills gradient blocks of the same shapes as the parameters.
  struct Gradients {
    Eigen::MatrixXd embeddings, hidden_w, output_w;
    Eigen::VectorXd hidden_b, output_b;
  };
  double nce_loss_and_grad(const std::vector<TrainingInstance>& batch,
                           const std::vector<std::vector<int>>& noise_labels,
                           const std::vector<double>& noise_dist, Gradients& grads) const;

  // One SGD minibatch step; draws noise internally. Returns the batch loss.
  double nce_step(const std::vector<TrainingInstance>& batch,
                  const std::vector<double>& noise_dist, double lr, std::mt19937_64& rng);

  double score_instances(const std::vector<TrainingInstance>& instances) const;
  // Maps a stream pair through the vocabularies and scores it with the
  // exact softmax (training may be NCE; scoring never is).
  double score_stream(const StreamPair& sp) const;
  double perplexity(const std::vector<StreamPair>& corpus) const;

  std::vector<TrainingInstance> map_instances(const StreamPair& sp) const;

  void save(const std::string& path) const;
  static NeuralModel load(const std::string& path);

  bool parameters_finite() const;

  // Parameter blocks (exposed for the finite-difference checks).
  Eigen::MatrixXd embeddings;  // |Vi| x D
  Eigen::MatrixXd hidden_w;    // H x (width*D)
  Eigen::VectorXd hidden_b;    // H
  Eigen::MatrixXd output_w;    // |Vo| x H
  Eigen::VectorXd output_b;    // |Vo|

 private:
  ModelConfig cfg_;
  Vocabulary src_vocab_;
  Vocabulary tgt_vocab_;
};

// Maps stream windows through the two vocabularies into id instances
// (target-stream ids as-is, source-stream ids offset by |target vocab|).
std::vector<TrainingInstance> map_stream_instances(const StreamPair& sp, int n, int m,
                                                   const Vocabulary& src_vocab,
                                                   const Vocabulary& tgt_vocab);

// Unigram distribution over the output vocabulary from training labels,
// floored so every label keeps positive noise mass.
std::vector<double> unigram_noise(const std::vector<TrainingInstance>& instances,
                                  int vocab_size);

// Seeded-shuffle minibatch NCE for `epochs` epochs; the learning rate
// halves whenever validation perplexity fails to improve and the returned
// model is the best-validation snapshot.
NeuralModel train_neural(const ModelConfig& cfg, Vocabulary source_vocab,
                         Vocabulary target_vocab, std::vector<TrainingInstance> train,
                         const std::vector<TrainingInstance>& valid,
                         std::vector<EpochLog>* log = nullptr);

}  // namespace opseq

#endif
