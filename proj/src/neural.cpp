#include "neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace opseq {

namespace {

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double uniform_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_discrete(const std::vector<double>& cumulative, std::mt19937_64& rng) {
  double u = uniform_draw(rng) * cumulative.back();
  auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("model file truncated");
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
  std::uint32_t rows, cols;
  read_pod(in, rows);
  read_pod(in, cols);
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) {
      double v;
      read_pod(in, v);
      m(r, c) = v;
    }
  return m;
}

void write_vocab(std::ofstream& out, const Vocabulary& v) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(v.reserved_count()));
  for (const auto& t : v.tokens()) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.size()));
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
}

Vocabulary read_vocab(std::ifstream& in) {
  std::uint32_t count, reserved;
  read_pod(in, count);
  read_pod(in, reserved);
  std::vector<Token> toks;
  toks.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t len;
    read_pod(in, len);
    std::string t(len, '\0');
    in.read(t.data(), len);
    if (!in) throw DataError("model file truncated");
    toks.push_back(std::move(t));
  }
  return Vocabulary::from_tokens(toks, static_cast<int>(reserved));
}

constexpr char kMagic[8] = {'O', 'P', 'S', 'Q', 'N', 'N', '0', '1'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void ModelConfig::validate() const {
  if (n < 1 || m < 0) throw UsageError("model orders must satisfy n >= 1, m >= 0");
  if (embedding_dim < 1 || hidden_dim < 1 || output_embedding_dim < 1)
    throw UsageError("model dimensions must be >= 1");
  if (output_embedding_dim != hidden_dim)
    throw UsageError("output embedding width must equal the hidden width");
  if (input_vocab_cap < 0 || output_vocab_cap < 0) throw UsageError("vocab caps must be >= 0");
  if (noise_samples < 1) throw UsageError("noise samples must be >= 1");
  if (batch_size < 1 || epochs < 0) throw UsageError("bad batch size or epoch count");
}

NeuralModel::NeuralModel(const ModelConfig& cfg, Vocabulary source_vocab,
                         Vocabulary target_vocab)
    : cfg_(cfg), src_vocab_(std::move(source_vocab)), tgt_vocab_(std::move(target_vocab)) {
  cfg_.validate();
  const int vi = input_vocab_size();
  const int vo = output_vocab_size();
  const int width = cfg_.context_width();
  std::mt19937_64 rng(cfg_.seed);
  auto u = [&rng]() { return (uniform_draw(rng) * 2.0 - 1.0) * 0.05; };
  embeddings.resize(vi, cfg_.embedding_dim);
  for (Eigen::Index r = 0; r < embeddings.rows(); ++r)
    for (Eigen::Index c = 0; c < embeddings.cols(); ++c) embeddings(r, c) = u();
  hidden_w.resize(cfg_.hidden_dim, width * cfg_.embedding_dim);
  for (Eigen::Index r = 0; r < hidden_w.rows(); ++r)
    for (Eigen::Index c = 0; c < hidden_w.cols(); ++c) hidden_w(r, c) = u();
  hidden_b = Eigen::VectorXd::Zero(cfg_.hidden_dim);
  output_w.resize(vo, cfg_.hidden_dim);
  for (Eigen::Index r = 0; r < output_w.rows(); ++r)
    for (Eigen::Index c = 0; c < output_w.cols(); ++c) output_w(r, c) = u();
  output_b = Eigen::VectorXd::Constant(vo, -std::log(static_cast<double>(vo)));
}

Eigen::VectorXd NeuralModel::forward(const std::vector<int>& context) const {
  const int width = cfg_.context_width();
  if (static_cast<int>(context.size()) != width)
    throw UsageError("context width mismatch: got " + std::to_string(context.size()) +
                     ", model expects " + std::to_string(width));
  Eigen::VectorXd x(width * cfg_.embedding_dim);
  for (int i = 0; i < width; ++i) {
    int id = context[static_cast<std::size_t>(i)];
    if (id < 0 || id >= input_vocab_size())
      throw UsageError("context id " + std::to_string(id) + " out of range");
    x.segment(i * cfg_.embedding_dim, cfg_.embedding_dim) = embeddings.row(id);
  }
  return (hidden_w * x + hidden_b).cwiseMax(0.0);
}

Eigen::VectorXd NeuralModel::logits(const std::vector<int>& context) const {
  return output_w * forward(context) + output_b;
}

double NeuralModel::softmax_prob(const std::vector<int>& context, int label) const {
  return std::exp(log_softmax(context, label));
}

double NeuralModel::log_softmax(const std::vector<int>& context, int label) const {
  if (label < 0 || label >= output_vocab_size())
    throw UsageError("output label out of range");
  Eigen::VectorXd z = logits(context);
  double mx = z.maxCoeff();
  double lse = std::log((z.array() - mx).exp().sum()) + mx;
  return z(label) - lse;
}

double NeuralModel::nce_loss_and_grad(const std::vector<TrainingInstance>& batch,
                                      const std::vector<std::vector<int>>& noise_labels,
                                      const std::vector<double>& noise_dist,
                                      Gradients& grads) const {
  const int width = cfg_.context_width();
  const int k = cfg_.noise_samples;
  grads.embeddings = Eigen::MatrixXd::Zero(embeddings.rows(), embeddings.cols());
  grads.hidden_w = Eigen::MatrixXd::Zero(hidden_w.rows(), hidden_w.cols());
  grads.hidden_b = Eigen::VectorXd::Zero(hidden_b.size());
  grads.output_w = Eigen::MatrixXd::Zero(output_w.rows(), output_w.cols());
  grads.output_b = Eigen::VectorXd::Zero(output_b.size());

  double loss = 0.0;
  const double log_k = std::log(static_cast<double>(k));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& inst = batch[i];
    Eigen::VectorXd x(width * cfg_.embedding_dim);
    for (int c = 0; c < width; ++c)
      x.segment(c * cfg_.embedding_dim, cfg_.embedding_dim) =
          embeddings.row(inst.context[static_cast<std::size_t>(c)]);
    Eigen::VectorXd pre = hidden_w * x + hidden_b;
    Eigen::VectorXd phi = pre.cwiseMax(0.0);

    Eigen::VectorXd gphi = Eigen::VectorXd::Zero(phi.size());
    auto touch = [&](int label, bool is_data) {
      // Unnormalized score with Z fixed to 1: log u = w.phi + b.
      double delta = output_w.row(label).dot(phi) + output_b(label) - log_k -
                     std::log(noise_dist[static_cast<std::size_t>(label)]);
      double g;
      if (is_data) {
        loss += -log_sigmoid(delta);
        g = -stable_sigmoid(-delta);
      } else {
        loss += -log_sigmoid(-delta);
        g = stable_sigmoid(delta);
      }
      grads.output_w.row(label) += g * phi.transpose();
      grads.output_b(label) += g;
      gphi += g * output_w.row(label).transpose();
    };
    touch(inst.label, true);
    for (int s = 0; s < k; ++s) touch(noise_labels[i][static_cast<std::size_t>(s)], false);

    Eigen::VectorXd gpre =
        (pre.array() > 0.0).select(gphi, Eigen::VectorXd::Zero(gphi.size()));
    grads.hidden_w += gpre * x.transpose();
    grads.hidden_b += gpre;
    Eigen::VectorXd gx = hidden_w.transpose() * gpre;
    for (int c = 0; c < width; ++c)
      grads.embeddings.row(inst.context[static_cast<std::size_t>(c)]) +=
          gx.segment(c * cfg_.embedding_dim, cfg_.embedding_dim).transpose();
  }
  return loss;
}

double NeuralModel::nce_step(const std::vector<TrainingInstance>& batch,
                             const std::vector<double>& noise_dist, double lr,
                             std::mt19937_64& rng) {
  std::vector<double> cumulative(noise_dist.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < noise_dist.size(); ++i) {
    if (noise_dist[i] <= 0.0) throw UsageError("noise distribution must be strictly positive");
    acc += noise_dist[i];
    cumulative[i] = acc;
  }
  std::vector<std::vector<int>> noise(batch.size());
  for (auto& row : noise) {
    row.resize(static_cast<std::size_t>(cfg_.noise_samples));
    for (auto& v : row) v = sample_discrete(cumulative, rng);
  }
  Gradients g;
  double loss = nce_loss_and_grad(batch, noise, noise_dist, g);
  if (!std::isfinite(loss))
    throw NumericError("non-finite NCE loss (batch of " + std::to_string(batch.size()) + ")");
  double scale = lr / static_cast<double>(batch.size());
  embeddings -= scale * g.embeddings;
  hidden_w -= scale * g.hidden_w;
  hidden_b -= scale * g.hidden_b;
  output_w -= scale * g.output_w;
  output_b -= scale * g.output_b;
  if (!parameters_finite()) throw NumericError("non-finite parameters after NCE update");
  return loss;
}

double NeuralModel::score_instances(const std::vector<TrainingInstance>& instances) const {
  double total = 0.0;
  for (const auto& inst : instances) total += log_softmax(inst.context, inst.label);
  return total;
}

std::vector<TrainingInstance> map_stream_instances(const StreamPair& sp, int n, int m,
                                                   const Vocabulary& src_vocab,
                                                   const Vocabulary& tgt_vocab) {
  auto windows = make_instances(sp, n, m);
  std::vector<TrainingInstance> out;
  out.reserve(windows.size());
  const int nt = n - 1;
  for (const auto& w : windows) {
    TrainingInstance inst;
    inst.context.reserve(w.context.size());
    for (std::size_t i = 0; i < w.context.size(); ++i)
      inst.context.push_back(static_cast<int>(i) < nt
                                 ? tgt_vocab.id(w.context[i])
                                 : tgt_vocab.size() + src_vocab.id(w.context[i]));
    inst.label = tgt_vocab.id(w.label);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TrainingInstance> NeuralModel::map_instances(const StreamPair& sp) const {
  return map_stream_instances(sp, cfg_.n, cfg_.m, src_vocab_, tgt_vocab_);
}

double NeuralModel::score_stream(const StreamPair& sp) const {
  return score_instances(map_instances(sp));
}

double NeuralModel::perplexity(const std::vector<StreamPair>& corpus) const {
  if (corpus.empty()) throw DataError("perplexity over an empty corpus");
  double total = 0.0;
  long long events = 0;
  for (const auto& sp : corpus) {
    total += score_stream(sp);
    events += static_cast<long long>(sp.target.size()) + 1;
  }
  return std::exp(-total / static_cast<double>(events));
}

bool NeuralModel::parameters_finite() const {
  return embeddings.allFinite() && hidden_w.allFinite() && hidden_b.allFinite() &&
         output_w.allFinite() && output_b.allFinite();
}

void NeuralModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path);
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kVersion);
  write_pod<std::int32_t>(out, cfg_.n);
  write_pod<std::int32_t>(out, cfg_.m);
  write_pod<std::int32_t>(out, cfg_.input_vocab_cap);
  write_pod<std::int32_t>(out, cfg_.output_vocab_cap);
  write_pod<std::int32_t>(out, cfg_.embedding_dim);
  write_pod<std::int32_t>(out, cfg_.hidden_dim);
  write_pod<std::int32_t>(out, cfg_.output_embedding_dim);
  write_pod<std::int32_t>(out, cfg_.noise_samples);
  write_pod<std::int32_t>(out, cfg_.batch_size);
  write_pod<std::int32_t>(out, cfg_.epochs);
  write_pod<double>(out, cfg_.learning_rate);
  write_pod<std::uint64_t>(out, cfg_.seed);
  write_vocab(out, src_vocab_);
  write_vocab(out, tgt_vocab_);
  write_matrix(out, embeddings);
  write_matrix(out, hidden_w);
  write_matrix(out, hidden_b);
  write_matrix(out, output_w);
  write_matrix(out, output_b);
  if (!out) throw DataError("write failed for " + path);
}

NeuralModel NeuralModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError(path + " is not a neural model file (bad magic)");
  std::uint32_t version;
  read_pod(in, version);
  if (version != kVersion)
    throw DataError("unsupported model version " + std::to_string(version));
  NeuralModel m;
  std::int32_t i32;
  read_pod(in, i32); m.cfg_.n = i32;
  read_pod(in, i32); m.cfg_.m = i32;
  read_pod(in, i32); m.cfg_.input_vocab_cap = i32;
  read_pod(in, i32); m.cfg_.output_vocab_cap = i32;
  read_pod(in, i32); m.cfg_.embedding_dim = i32;
  read_pod(in, i32); m.cfg_.hidden_dim = i32;
  read_pod(in, i32); m.cfg_.output_embedding_dim = i32;
  read_pod(in, i32); m.cfg_.noise_samples = i32;
  read_pod(in, i32); m.cfg_.batch_size = i32;
  read_pod(in, i32); m.cfg_.epochs = i32;
  read_pod(in, m.cfg_.learning_rate);
  read_pod(in, m.cfg_.seed);
  m.src_vocab_ = read_vocab(in);
  m.tgt_vocab_ = read_vocab(in);
  m.embeddings = read_matrix(in);
  m.hidden_w = read_matrix(in);
  Eigen::MatrixXd hb = read_matrix(in);
  m.hidden_b = hb.col(0);
  m.output_w = read_matrix(in);
  Eigen::MatrixXd ob = read_matrix(in);
  m.output_b = ob.col(0);
  if (m.embeddings.rows() != m.input_vocab_size() ||
      m.output_w.rows() != m.output_vocab_size() ||
      m.hidden_w.cols() != m.cfg_.context_width() * m.cfg_.embedding_dim)
    throw DataError("model parameter shapes do not match its configuration");
  return m;
}

std::vector<double> unigram_noise(const std::vector<TrainingInstance>& instances,
                                  int vocab_size) {
  std::vector<double> counts(static_cast<std::size_t>(vocab_size), 1.0);  // +1 floor
  for (const auto& inst : instances) counts[static_cast<std::size_t>(inst.label)] += 1.0;
  double total = 0.0;
  for (double c : counts) total += c;
  for (double& c : counts) c /= total;
  return counts;
}

NeuralModel train_neural(const ModelConfig& cfg, Vocabulary source_vocab,
                         Vocabulary target_vocab, std::vector<TrainingInstance> train,
                         const std::vector<TrainingInstance>& valid,
                         std::vector<EpochLog>* log) {
  if (train.empty() || valid.empty())
    throw DataError("neural training needs non-empty train and validation sets");
  NeuralModel model(cfg, std::move(source_vocab), std::move(target_vocab));
  for (const auto& inst : train)
    if (static_cast<int>(inst.context.size()) != cfg.context_width())
      throw DataError("training instance width does not match the model configuration");

  auto noise = unigram_noise(train, model.output_vocab_size());
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  auto valid_ppl = [&](const NeuralModel& m) {
    return std::exp(-m.score_instances(valid) / static_cast<double>(valid.size()));
  };

  double lr = cfg.learning_rate;
  NeuralModel best = model;
  double best_ppl = valid_ppl(model);
  if (log) log->push_back({0, 0.0, best_ppl, lr});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with explicit draws so the trajectory is reproducible.
    for (std::size_t i = train.size(); i > 1; --i)
      std::swap(train[i - 1], train[rng() % i]);
    double loss = 0.0;
    for (std::size_t at = 0; at < train.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t n = std::min<std::size_t>(cfg.batch_size, train.size() - at);
      std::vector<TrainingInstance> batch(train.begin() + static_cast<long>(at),
                                          train.begin() + static_cast<long>(at + n));
      loss += model.nce_step(batch, noise, lr, rng);
    }
    double vppl = valid_ppl(model);
    if (log) log->push_back({epoch, loss / static_cast<double>(train.size()), vppl, lr});
    if (vppl < best_ppl) {
      best_ppl = vppl;
      best = model;
    } else {
      lr /= 2.0;
    }
  }
  return best;
}

}  // namespace opseq
