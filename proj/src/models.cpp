#include "destpred/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "destpred/partition.hpp"

namespace destpred {
namespace {

using nlohmann::json;

void check_positive(int v, const char* name) {
  if (v < 1) {
    throw std::invalid_argument(std::string(name) + " must be positive");
  }
}

std::vector<int> to_zero_based(std::span<const int> region_seq, int n_r) {
  if (region_seq.empty()) {
    throw std::invalid_argument("empty region sequence");
  }
  std::vector<int> out;
  out.reserve(region_seq.size());
  for (int id : region_seq) {
    if (id < 1 || id > n_r) {
      throw std::invalid_argument("region id out of range: " +
                                  std::to_string(id));
    }
    out.push_back(id - 1);
  }
  return out;
}

std::vector<nn::DenseLayer> make_trunk(const std::string& name,
                                       std::size_t in, const ModelConfig& cfg,
                                       Rng& rng) {
  std::vector<nn::DenseLayer> trunk;
  std::size_t cur = in;
  for (int l = 0; l < cfg.n_dense; ++l) {
    trunk.emplace_back(name + ".dense" + std::to_string(l), cur,
                       static_cast<std::size_t>(cfg.dense_hidden), true, rng);
    cur = static_cast<std::size_t>(cfg.dense_hidden);
  }
  trunk.emplace_back(name + ".out", cur, static_cast<std::size_t>(cfg.n_r),
                     false, rng);
  return trunk;
}

std::vector<double> run_dense(const std::vector<nn::DenseLayer>& layers,
                              std::vector<double> x,
                              std::vector<nn::DenseLayer::Cache>* caches) {
  if (caches) caches->assign(layers.size(), {});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i].forward(x, caches ? &(*caches)[i] : nullptr);
  }
  return x;
}

std::vector<double> dense_backward(std::vector<nn::DenseLayer>& layers,
                                   const std::vector<nn::DenseLayer::Cache>& caches,
                                   std::vector<double> d) {
  for (std::size_t i = layers.size(); i-- > 0;) {
    d = layers[i].backward(caches[i], d);
  }
  return d;
}

json config_to_json(const ModelConfig& c) {
  return json{{"s_embed_trip", c.s_embed_trip},
              {"s_embed_meta", c.s_embed_meta},
              {"lstm_hidden", c.lstm_hidden},
              {"n_lstm", c.n_lstm},
              {"n_dense_meta", c.n_dense_meta},
              {"n_dense", c.n_dense},
              {"dense_hidden", c.dense_hidden},
              {"n_r", c.n_r},
              {"j", c.j},
              {"baseline_k", c.baseline_k}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.s_embed_trip = j.at("s_embed_trip").get<int>();
  c.s_embed_meta = j.at("s_embed_meta").get<int>();
  c.lstm_hidden = j.at("lstm_hidden").get<int>();
  c.n_lstm = j.at("n_lstm").get<int>();
  c.n_dense_meta = j.at("n_dense_meta").get<int>();
  c.n_dense = j.at("n_dense").get<int>();
  c.dense_hidden = j.at("dense_hidden").get<int>();
  c.n_r = j.at("n_r").get<int>();
  c.j = j.at("j").get<int>();
  c.baseline_k = j.at("baseline_k").get<int>();
  c.validate();
  return c;
}

}  // namespace

void ModelConfig::validate() const {
  check_positive(s_embed_trip, "s_embed_trip");
  check_positive(s_embed_meta, "s_embed_meta");
  check_positive(lstm_hidden, "lstm_hidden");
  check_positive(n_lstm, "n_lstm");
  check_positive(n_dense_meta, "n_dense_meta");
  check_positive(n_dense, "n_dense");
  check_positive(dense_hidden, "dense_hidden");
  check_positive(n_r, "n_r");
  check_positive(j, "j");
  check_positive(baseline_k, "baseline_k");
}

Prediction make_prediction(std::vector<double> scores,
                           std::span<const GeoPoint> centroids, int top_n) {
  if (scores.size() != centroids.size()) {
    throw std::invalid_argument("scores/centroids length mismatch");
  }
  Prediction p;
  p.y_gps_hat = weighted_mean_point(centroids, scores);
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t keep = std::min<std::size_t>(
      scores.size(), static_cast<std::size_t>(std::max(top_n, 0)));
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(keep),
                    order.end(), [&](int a, int b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  p.top_n.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    p.top_n.emplace_back(order[i] + 1, scores[order[i]]);
  }
  p.scores = std::move(scores);
  return p;
}

std::string prediction_to_json(const Prediction& p) {
  json top = json::array();
  for (const auto& [region, score] : p.top_n) {
    top.push_back(json{{"region", region}, {"score", score}});
  }
  json j{{"top_n", top}, {"dest", {p.y_gps_hat.lat, p.y_gps_hat.lon}}};
  return j.dump();
}

const std::array<const char*, kMetaAttrCount> kMetaAttrNames = {
    "time", "day", "temperature", "precipitation"};

std::array<int, kMetaAttrCount> meta_vocab_sizes() {
  return {kTimeOfDayBins + 1, kDayOfWeekBins + 1, kTemperatureBins + 1,
          kPrecipitationBins + 1};
}

std::array<int, kMetaAttrCount> meta_indices(const TripMetadata& m) {
  const std::array<int, kMetaAttrCount> bins = {
      m.time_of_day_bin, m.day_of_week, m.temperature_bin,
      m.precipitation_bin};
  const std::array<int, kMetaAttrCount> sizes = {
      kTimeOfDayBins, kDayOfWeekBins, kTemperatureBins, kPrecipitationBins};
  std::array<int, kMetaAttrCount> out{};
  for (int a = 0; a < kMetaAttrCount; ++a) {
    const int b = bins[static_cast<std::size_t>(a)];
    const int n = sizes[static_cast<std::size_t>(a)];
    if (b == kUnknownBin) {
      out[static_cast<std::size_t>(a)] = n;  // trailing unknown slot
    } else if (b >= 0 && b < n) {
      out[static_cast<std::size_t>(a)] = b;
    } else {
      throw std::invalid_argument(
          std::string("metadata bin out of range for ") +
          kMetaAttrNames[static_cast<std::size_t>(a)]);
    }
  }
  return out;
}

void NeuralModel::zero_grads() {
  for (nn::Parameter* p : parameters()) p->zero_grad();
}

Prediction NeuralModel::predict(std::span<const GeoPoint> /*points*/,
                                std::span<const int> region_seq,
                                const TripMetadata& meta,
                                std::span<const GeoPoint> centroids,
                                int top_n) const {
  return make_prediction(forward_scores(region_seq, meta, nullptr), centroids,
                         top_n);
}

MultiInputLstm::MultiInputLstm(ModelConfig cfg, std::uint64_t init_seed)
    : NeuralModel(std::move(cfg)) {
  cfg_.validate();
  Rng rng(init_seed);
  region_embed = nn::EmbeddingTable(
      "region_embed", static_cast<std::size_t>(cfg_.s_embed_trip),
      static_cast<std::size_t>(cfg_.n_r), rng);
  const auto vocabs = meta_vocab_sizes();
  for (int a = 0; a < kMetaAttrCount; ++a) {
    meta_embeds.emplace_back(
        std::string("meta_embed.") + kMetaAttrNames[static_cast<std::size_t>(a)],
        static_cast<std::size_t>(cfg_.s_embed_meta),
        static_cast<std::size_t>(vocabs[static_cast<std::size_t>(a)]), rng);
  }
  std::size_t cur = static_cast<std::size_t>(kMetaAttrCount * cfg_.s_embed_meta);
  for (int l = 0; l < cfg_.n_dense_meta; ++l) {
    meta_dense.emplace_back("meta_dense" + std::to_string(l), cur,
                            static_cast<std::size_t>(cfg_.dense_hidden), true,
                            rng);
    cur = static_cast<std::size_t>(cfg_.dense_hidden);
  }
  lstm = nn::LstmStack("lstm", static_cast<std::size_t>(cfg_.s_embed_trip),
                       static_cast<std::size_t>(cfg_.lstm_hidden), cfg_.n_lstm,
                       rng);
  trunk = make_trunk(
      "trunk", static_cast<std::size_t>(cfg_.lstm_hidden) + cur, cfg_, rng);
}

std::vector<double> MultiInputLstm::forward_scores(
    std::span<const int> region_seq, const TripMetadata& meta,
    ModelCache* cache) const {
  ModelCache local;
  ModelCache& c = cache ? *cache : local;
  c.seq0 = to_zero_based(region_seq, cfg_.n_r);
  c.mask.assign(c.seq0.size(), 1);
  const nn::Tensor emb = region_embed.forward(c.seq0);
  const std::vector<double> h = lstm.forward(emb, c.mask, &c.lstm);

  c.meta_ids = meta_indices(meta);
  std::vector<double> me;
  me.reserve(static_cast<std::size_t>(kMetaAttrCount * cfg_.s_embed_meta));
  for (int a = 0; a < kMetaAttrCount; ++a) {
    const int id = c.meta_ids[static_cast<std::size_t>(a)];
    const nn::Tensor row =
        meta_embeds[static_cast<std::size_t>(a)].forward({&id, 1});
    me.insert(me.end(), row.v.begin(), row.v.end());
  }
  c.meta_out = run_dense(meta_dense, std::move(me), &c.meta_dense);

  const std::vector<double> z = nn::concat(h, c.meta_out);
  const std::vector<double> logits =
      run_dense(trunk, z, &c.trunk);
  c.scores = nn::softmax(logits);
  return c.scores;
}

void MultiInputLstm::backward_scores(ModelCache& c,
                                     std::span<const double> d_scores) {
  std::vector<double> d_logits = nn::softmax_backward(c.scores, d_scores);
  std::vector<double> d_z = dense_backward(trunk, c.trunk, std::move(d_logits));
  const std::size_t H = lstm.hidden();
  std::vector<double> d_h(d_z.begin(), d_z.begin() + static_cast<long>(H));
  std::vector<double> d_meta(d_z.begin() + static_cast<long>(H), d_z.end());

  d_meta = dense_backward(meta_dense, c.meta_dense, std::move(d_meta));
  const auto s = static_cast<std::size_t>(cfg_.s_embed_meta);
  for (int a = 0; a < kMetaAttrCount; ++a) {
    nn::Tensor d_row = nn::Tensor::zeros({1, s});
    std::copy_n(d_meta.begin() + static_cast<long>(a) * static_cast<long>(s),
                s, d_row.v.begin());
    const int id = c.meta_ids[static_cast<std::size_t>(a)];
    meta_embeds[static_cast<std::size_t>(a)].backward({&id, 1}, d_row);
  }

  const nn::Tensor d_emb = lstm.backward(c.lstm, d_h);
  region_embed.backward(c.seq0, d_emb);
}

std::vector<nn::Parameter*> MultiInputLstm::parameters() {
  std::vector<nn::Parameter*> ps{&region_embed.table};
  for (auto& e : meta_embeds) ps.push_back(&e.table);
  for (auto& l : meta_dense) {
    ps.push_back(&l.W);
    ps.push_back(&l.b);
  }
  for (auto& l : lstm.layers) {
    ps.push_back(&l.Wx);
    ps.push_back(&l.Wh);
    ps.push_back(&l.b);
  }
  for (auto& l : trunk) {
    ps.push_back(&l.W);
    ps.push_back(&l.b);
  }
  return ps;
}

SingleInputLstm::SingleInputLstm(ModelConfig cfg, std::uint64_t init_seed)
    : NeuralModel(std::move(cfg)) {
  cfg_.validate();
  Rng rng(init_seed);
  region_embed = nn::EmbeddingTable(
      "region_embed", static_cast<std::size_t>(cfg_.s_embed_trip),
      static_cast<std::size_t>(cfg_.n_r), rng);
  lstm = nn::LstmStack("lstm", static_cast<std::size_t>(cfg_.s_embed_trip),
                       static_cast<std::size_t>(cfg_.lstm_hidden), cfg_.n_lstm,
                       rng);
  trunk = make_trunk("trunk", static_cast<std::size_t>(cfg_.lstm_hidden), cfg_,
                     rng);
}

std::vector<double> SingleInputLstm::forward_scores(
    std::span<const int> region_seq, const TripMetadata& /*meta*/,
    ModelCache* cache) const {
  ModelCache local;
  ModelCache& c = cache ? *cache : local;
  c.seq0 = to_zero_based(region_seq, cfg_.n_r);
  c.mask.assign(c.seq0.size(), 1);
  const nn::Tensor emb = region_embed.forward(c.seq0);
  const std::vector<double> h = lstm.forward(emb, c.mask, &c.lstm);
  const std::vector<double> logits = run_dense(trunk, h, &c.trunk);
  c.scores = nn::softmax(logits);
  return c.scores;
}

void SingleInputLstm::backward_scores(ModelCache& c,
                                      std::span<const double> d_scores) {
  std::vector<double> d_logits = nn::softmax_backward(c.scores, d_scores);
  std::vector<double> d_h = dense_backward(trunk, c.trunk, std::move(d_logits));
  const nn::Tensor d_emb = lstm.backward(c.lstm, d_h);
  region_embed.backward(c.seq0, d_emb);
}

std::vector<nn::Parameter*> SingleInputLstm::parameters() {
  std::vector<nn::Parameter*> ps{&region_embed.table};
  for (auto& l : lstm.layers) {
    ps.push_back(&l.Wx);
    ps.push_back(&l.Wh);
    ps.push_back(&l.b);
  }
  for (auto& l : trunk) {
    ps.push_back(&l.W);
    ps.push_back(&l.b);
  }
  return ps;
}

MlpModel::MlpModel(ModelConfig cfg, std::uint64_t init_seed)
    : NeuralModel(std::move(cfg)) {
  cfg_.validate();
  Rng rng(init_seed);
  region_embed = nn::EmbeddingTable(
      "region_embed", static_cast<std::size_t>(cfg_.s_embed_trip),
      static_cast<std::size_t>(cfg_.n_r), rng);
  trunk = make_trunk(
      "trunk", static_cast<std::size_t>(2 * cfg_.j * cfg_.s_embed_trip), cfg_,
      rng);
}

std::vector<int> MlpModel::select_ids(std::span<const int> region_seq, int j) {
  const int len = static_cast<int>(region_seq.size());
  const int take = std::min(j, len);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(2 * j));
  for (int k = 0; k < j - take; ++k) out.push_back(region_seq.front());
  for (int k = 0; k < take; ++k) out.push_back(region_seq[static_cast<std::size_t>(k)]);
  for (int k = 0; k < take; ++k) {
    out.push_back(region_seq[static_cast<std::size_t>(len - take + k)]);
  }
  for (int k = 0; k < j - take; ++k) out.push_back(region_seq.back());
  return out;
}

std::vector<double> MlpModel::forward_scores(std::span<const int> region_seq,
                                             const TripMetadata& /*meta*/,
                                             ModelCache* cache) const {
  ModelCache local;
  ModelCache& c = cache ? *cache : local;
  const std::vector<int> seq0 = to_zero_based(region_seq, cfg_.n_r);
  c.mlp_ids = select_ids(seq0, cfg_.j);
  const nn::Tensor emb = region_embed.forward(c.mlp_ids);
  const std::vector<double> logits = run_dense(trunk, emb.v, &c.trunk);
  c.scores = nn::softmax(logits);
  return c.scores;
}

void MlpModel::backward_scores(ModelCache& c,
                               std::span<const double> d_scores) {
  std::vector<double> d_logits = nn::softmax_backward(c.scores, d_scores);
  std::vector<double> d_flat = dense_backward(trunk, c.trunk, std::move(d_logits));
  nn::Tensor d_emb = nn::Tensor::zeros(
      {c.mlp_ids.size(), static_cast<std::size_t>(cfg_.s_embed_trip)});
  d_emb.v = std::move(d_flat);
  region_embed.backward(c.mlp_ids, d_emb);
}

std::vector<nn::Parameter*> MlpModel::parameters() {
  std::vector<nn::Parameter*> ps{&region_embed.table};
  for (auto& l : trunk) {
    ps.push_back(&l.W);
    ps.push_back(&l.b);
  }
  return ps;
}

GeometricBaseline::GeometricBaseline(ModelConfig cfg,
                                     std::vector<int> candidate_ids)
    : cfg_(std::move(cfg)), candidates_(std::move(candidate_ids)) {
  cfg_.validate();
  if (candidates_.empty()) {
    throw std::invalid_argument("baseline needs at least one candidate");
  }
  for (int id : candidates_) {
    if (id < 1 || id > cfg_.n_r) {
      throw std::invalid_argument("baseline candidate out of range");
    }
  }
}

GeometricBaseline GeometricBaseline::fit(std::span<const Trajectory> train,
                                         const SpacePartition& partition,
                                         ModelConfig cfg) {
  if (cfg.n_r != partition.region_count()) {
    throw std::invalid_argument("model n_r does not match partition");
  }
  std::map<int, int> dest_count;
  for (const Trajectory& t : train) {
    if (t.points.empty()) continue;
    ++dest_count[partition.locate(t.points.back())];
  }
  if (dest_count.empty()) {
    throw std::invalid_argument("no destinations to rank");
  }
  std::vector<std::pair<int, int>> ranked(dest_count.begin(),
                                          dest_count.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> ids;
  for (const auto& [id, n] : ranked) {
    if (static_cast<int>(ids.size()) >= cfg.baseline_k) break;
    ids.push_back(id);
  }
  return GeometricBaseline(std::move(cfg), std::move(ids));
}

Prediction GeometricBaseline::predict(std::span<const GeoPoint> points,
                                      std::span<const int> /*region_seq*/,
                                      const TripMetadata& /*meta*/,
                                      std::span<const GeoPoint> centroids,
                                      int top_n) const {
  if (points.size() < 2) {
    throw std::invalid_argument("baseline needs >= 2 points");
  }
  if (static_cast<int>(centroids.size()) != cfg_.n_r) {
    throw std::invalid_argument("scores/centroids length mismatch");
  }
  const GeoPoint& first = points.front();
  const GeoPoint& last = points.back();
  const bool degenerate = first.lat == last.lat && first.lon == last.lon;

  int best_id = 0;
  double best_ray = 0.0, best_hav = 0.0;
  bool have = false;
  for (int id : candidates_) {
    const GeoPoint& c = centroids[static_cast<std::size_t>(id - 1)];
    const double hav = haversine_m(c, last);
    const double ray =
        degenerate ? hav : point_to_ray_distance_m(first, last, c);
    if (!have || ray < best_ray ||
        (ray == best_ray && hav < best_hav)) {
      have = true;
      best_id = id;
      best_ray = ray;
      best_hav = hav;
    }
  }

  std::vector<double> scores(centroids.size(), 0.0);
  scores[static_cast<std::size_t>(best_id - 1)] = 1.0;
  Prediction p = make_prediction(std::move(scores), centroids, top_n);
  return p;
}

std::unique_ptr<NeuralModel> make_neural_model(const std::string& kind,
                                               const ModelConfig& cfg,
                                               std::uint64_t init_seed) {
  if (kind == "multi_lstm") {
    return std::make_unique<MultiInputLstm>(cfg, init_seed);
  }
  if (kind == "single_lstm") {
    return std::make_unique<SingleInputLstm>(cfg, init_seed);
  }
  if (kind == "mlp") {
    return std::make_unique<MlpModel>(cfg, init_seed);
  }
  throw std::invalid_argument("unknown model kind: " + kind);
}

void save_model(const Predictor& model, const std::string& path) {
  json j;
  j["format"] = "destpred-model";
  j["version"] = 1;
  j["kind"] = model.kind();
  j["config"] = config_to_json(model.config());
  json order = json::array();
  for (const char* n : kMetaAttrNames) order.push_back(n);
  j["meta_order"] = order;

  if (const auto* base = dynamic_cast<const GeometricBaseline*>(&model)) {
    j["candidates"] = base->candidates();
  } else {
    const auto* neural = dynamic_cast<const NeuralModel*>(&model);
    if (!neural) throw std::invalid_argument("unknown model type");
    json params = json::object();
    for (nn::Parameter* p :
         const_cast<NeuralModel*>(neural)->parameters()) {
      params[p->name] = p->value.v;
    }
    j["params"] = std::move(params);
  }

  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump() << "\n";
}

std::unique_ptr<Predictor> load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid model file " + path + ": " + e.what());
  }
  if (j.value("format", "") != "destpred-model" || j.value("version", 0) != 1) {
    throw std::runtime_error("invalid model file " + path +
                             ": unknown format/version");
  }
  for (int a = 0; a < kMetaAttrCount; ++a) {
    if (j.at("meta_order").at(static_cast<std::size_t>(a)).get<std::string>() !=
        kMetaAttrNames[static_cast<std::size_t>(a)]) {
      throw std::runtime_error("invalid model file " + path +
                               ": metadata order mismatch");
    }
  }
  const ModelConfig cfg = config_from_json(j.at("config"));
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "baseline") {
    return std::make_unique<GeometricBaseline>(
        cfg, j.at("candidates").get<std::vector<int>>());
  }
  std::unique_ptr<NeuralModel> model = make_neural_model(kind, cfg, 0);
  const json& params = j.at("params");
  for (nn::Parameter* p : model->parameters()) {
    const auto it = params.find(p->name);
    if (it == params.end()) {
      throw std::runtime_error("invalid model file " + path + ": missing " +
                               p->name);
    }
    std::vector<double> vals = it->get<std::vector<double>>();
    if (vals.size() != p->value.v.size()) {
      throw std::runtime_error("invalid model file " + path +
                               ": size mismatch for " + p->name);
    }
    p->value.v = std::move(vals);
  }
  return model;
}

}  // namespace destpred
