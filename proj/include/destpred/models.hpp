#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "destpred/geo.hpp"
#include "destpred/nn.hpp"
#include "destpred/trajectory.hpp"

namespace destpred {

class SpacePartition;

struct ModelConfig {
  int s_embed_trip = 16;  // region embedding width
  int s_embed_meta = 4;   // per-attribute metadata embedding width
  int lstm_hidden = 64;
  int n_lstm = 1;
  int n_dense_meta = 1;   // hidden layers on the metadata branch
  int n_dense = 1;        // hidden layers on the trunk (a linear projection
                          // to n_r logits always follows)
  int dense_hidden = 64;
  int n_r = 0;            // region count; must match the partition
  int j = 5;              // first/last ids fed to the MLP
  int baseline_k = 100;   // candidate regions for the geometric baseline

  void validate() const;  // throws std::invalid_argument
};

// Scores over regions plus the derived point prediction.
struct Prediction {
  std::vector<double> scores;                  // length n_r, sums to 1
  GeoPoint y_gps_hat;                          // score-weighted centroid
  std::vector<std::pair<int, double>> top_n;   // (region id, score) descending
};

Prediction make_prediction(std::vector<double> scores,
                           std::span<const GeoPoint> centroids, int top_n);

// {"top_n":[{"region":..,"score":..}...],"dest":[lat,lon]}
std::string prediction_to_json(const Prediction& p);

// Metadata attributes in their fixed input order.
inline constexpr int kMetaAttrCount = 4;
extern const std::array<const char*, kMetaAttrCount> kMetaAttrNames;
// Vocabulary size per attribute including the trailing `unknown` slot.
std::array<int, kMetaAttrCount> meta_vocab_sizes();
// Embedding index per attribute; unknown bins map to the last slot.
// Throws std::invalid_argument on a bin outside its range.
std::array<int, kMetaAttrCount> meta_indices(const TripMetadata& m);

// Per-forward scratch shared by the neural models; owning one per thread
// makes concurrent inference on a shared model safe.
struct ModelCache {
  std::vector<int> seq0;  // zero-based region ids
  std::vector<char> mask;
  nn::LstmStack::Cache lstm;
  std::array<int, kMetaAttrCount> meta_ids{};
  std::vector<nn::DenseLayer::Cache> meta_dense;
  std::vector<double> meta_out;
  std::vector<nn::DenseLayer::Cache> trunk;  // hidden layers then projection
  std::vector<double> scores;
  std::vector<int> mlp_ids;  // zero-based, length 2j
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string kind() const = 0;
  virtual const ModelConfig& config() const = 0;
  // `points` and `region_seq` describe the same partial trip; metadata may
  // carry unknown bins. Returns scores, weighted point and the top-n list.
  virtual Prediction predict(std::span<const GeoPoint> points,
                             std::span<const int> region_seq,
                             const TripMetadata& meta,
                             std::span<const GeoPoint> centroids,
                             int top_n) const = 0;
};

class NeuralModel : public Predictor {
 public:
  explicit NeuralModel(ModelConfig cfg) : cfg_(std::move(cfg)) {}
  const ModelConfig& config() const override { return cfg_; }

  // region_seq uses 1-based region ids as produced by the partition encoder.
  virtual std::vector<double> forward_scores(std::span<const int> region_seq,
                                             const TripMetadata& meta,
                                             ModelCache* cache) const = 0;
  // d_scores = dLoss/d scores; accumulates parameter gradients.
  virtual void backward_scores(ModelCache& cache,
                               std::span<const double> d_scores) = 0;
  virtual std::vector<nn::Parameter*> parameters() = 0;

  void zero_grads();
  Prediction predict(std::span<const GeoPoint> points,
                     std::span<const int> region_seq, const TripMetadata& meta,
                     std::span<const GeoPoint> centroids,
                     int top_n) const override;

 protected:
  ModelConfig cfg_;
};

// Fig.-3-shaped predictor: region sequence through an LSTM stack, metadata
// attributes through per-attribute embeddings and a dense branch, both
// concatenated into a dense trunk ending in softmax scores.
class MultiInputLstm : public NeuralModel {
 public:
  MultiInputLstm(ModelConfig cfg, std::uint64_t init_seed);
  std::string kind() const override { return "multi_lstm"; }
  std::vector<double> forward_scores(std::span<const int> region_seq,
                                     const TripMetadata& meta,
                                     ModelCache* cache) const override;
  void backward_scores(ModelCache& cache,
                       std::span<const double> d_scores) override;
  std::vector<nn::Parameter*> parameters() override;

  nn::EmbeddingTable region_embed;
  std::vector<nn::EmbeddingTable> meta_embeds;  // one per attribute
  std::vector<nn::DenseLayer> meta_dense;
  nn::LstmStack lstm;
  std::vector<nn::DenseLayer> trunk;  // n_dense ReLU layers + linear to n_r
};

// Multi-input architecture minus the metadata branch.
class SingleInputLstm : public NeuralModel {
 public:
  SingleInputLstm(ModelConfig cfg, std::uint64_t init_seed);
  std::string kind() const override { return "single_lstm"; }
  std::vector<double> forward_scores(std::span<const int> region_seq,
                                     const TripMetadata& meta,
                                     ModelCache* cache) const override;
  void backward_scores(ModelCache& cache,
                       std::span<const double> d_scores) override;
  std::vector<nn::Parameter*> parameters() override;

  nn::EmbeddingTable region_embed;
  nn::LstmStack lstm;
  std::vector<nn::DenseLayer> trunk;
};

// Feeds the first j and last j region ids through embeddings and a dense
// stack. Sequences shorter than j are padded by repeating the first id at
// the front and the last id at the back.
class MlpModel : public NeuralModel {
 public:
  MlpModel(ModelConfig cfg, std::uint64_t init_seed);
  std::string kind() const override { return "mlp"; }
  std::vector<double> forward_scores(std::span<const int> region_seq,
                                     const TripMetadata& meta,
                                     ModelCache* cache) const override;
  void backward_scores(ModelCache& cache,
                       std::span<const double> d_scores) override;
  std::vector<nn::Parameter*> parameters() override;

  static std::vector<int> select_ids(std::span<const int> region_seq, int j);

  nn::EmbeddingTable region_embed;
  std::vector<nn::DenseLayer> trunk;
};

// Predicts the candidate centroid closest to the ray through the partial
// trip's first and last points; candidates are the k most frequent
// destination regions of the training set. Output is one-hot.
class GeometricBaseline : public Predictor {
 public:
  GeometricBaseline(ModelConfig cfg, std::vector<int> candidate_ids);
  static GeometricBaseline fit(std::span<const Trajectory> train,
                               const SpacePartition& partition,
                               ModelConfig cfg);

  std::string kind() const override { return "baseline"; }
  const ModelConfig& config() const override { return cfg_; }
  Prediction predict(std::span<const GeoPoint> points,
                     std::span<const int> region_seq, const TripMetadata& meta,
                     std::span<const GeoPoint> centroids,
                     int top_n) const override;

  const std::vector<int>& candidates() const { return candidates_; }

 private:
  ModelConfig cfg_;
  std::vector<int> candidates_;  // 1-based region ids, frequency-ordered
};

std::unique_ptr<NeuralModel> make_neural_model(const std::string& kind,
                                               const ModelConfig& cfg,
                                               std::uint64_t init_seed);

// Versioned JSON checkpoint: config echo, metadata attribute order, and
// named parameter tensors (candidate list for the baseline).
void save_model(const Predictor& model, const std::string& path);
std::unique_ptr<Predictor> load_model(const std::string& path);

}  // namespace destpred
