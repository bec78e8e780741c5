#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "destpred/geo.hpp"
#include "destpred/partition.hpp"
#include "destpred/synth.hpp"
#include "destpred/training.hpp"

using namespace destpred;

namespace {

Trajectory line_trip(const std::string& id, GeoPoint a, GeoPoint b, int n) {
  Trajectory t;
  t.id = id;
  t.start_time = 1400000000;
  for (int i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    t.points.push_back({a.lat + f * (b.lat - a.lat),
                        a.lon + f * (b.lon - a.lon)});
    t.timestamps.push_back(t.start_time + 15 * i);
  }
  return t;
}

// Four tight symmetric blobs; each blob's mean is exactly its center, so a
// partition leaf per blob has its centroid on the center.
std::vector<GeoPoint> blob_points(std::vector<GeoPoint> centers) {
  std::vector<GeoPoint> pts;
  const double d = 0.0005;
  for (const auto& c : centers) {
    pts.push_back({c.lat + d, c.lon});
    pts.push_back({c.lat - d, c.lon});
    pts.push_back({c.lat, c.lon + d});
    pts.push_back({c.lat, c.lon - d});
  }
  return pts;
}

// Minimal stand-in predictors for evaluation-protocol tests.
class OneHotPredictor : public Predictor {
 public:
  OneHotPredictor(ModelConfig cfg, int region) : cfg_(cfg), region_(region) {}
  std::string kind() const override { return "stub"; }
  const ModelConfig& config() const override { return cfg_; }
  Prediction predict(std::span<const GeoPoint>, std::span<const int>,
                     const TripMetadata&, std::span<const GeoPoint> centroids,
                     int top_n) const override {
    std::vector<double> scores(centroids.size(), 0.0);
    scores[static_cast<std::size_t>(region_ - 1)] = 1.0;
    return make_prediction(std::move(scores), centroids, top_n);
  }

 private:
  ModelConfig cfg_;
  int region_;
};

class SpyPredictor : public Predictor {
 public:
  explicit SpyPredictor(ModelConfig cfg) : cfg_(cfg) {}
  std::string kind() const override { return "spy"; }
  const ModelConfig& config() const override { return cfg_; }
  Prediction predict(std::span<const GeoPoint> points, std::span<const int>,
                     const TripMetadata&, std::span<const GeoPoint> centroids,
                     int top_n) const override {
    sizes.push_back(points.size());
    first_lats.push_back(points.front().lat);
    std::vector<double> scores(centroids.size(),
                               1.0 / static_cast<double>(centroids.size()));
    return make_prediction(std::move(scores), centroids, top_n);
  }

  mutable std::vector<std::size_t> sizes;
  mutable std::vector<double> first_lats;

 private:
  ModelConfig cfg_;
};

}  // namespace

TEST_CASE("partial length is the only choice for three-point trips") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) CHECK(sample_partial_len(3, rng) == 2);
  CHECK_THROWS_AS(sample_partial_len(2, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_partial_len(1, rng), std::invalid_argument);
}

TEST_CASE("partial lengths are uniform over [2, N-1]") {
  Rng rng(7);
  const int draws = 10000;
  std::vector<int> counts(10, 0);
  for (int i = 0; i < draws; ++i) {
    const int len = sample_partial_len(10, rng);
    CHECK(len >= 2);
    CHECK(len <= 9);
    ++counts[static_cast<std::size_t>(len)];
  }
  // Binomial(10000, 1/8): mean 1250, sigma ~33; allow 3 sigma.
  for (int len = 2; len <= 9; ++len) {
    CHECK(counts[static_cast<std::size_t>(len)] > 1250 - 100);
    CHECK(counts[static_cast<std::size_t>(len)] < 1250 + 100);
  }
}

TEST_CASE("point loss is zero at the truth and matches finite differences") {
  const GeoPoint y{41.16, -8.59};
  CHECK(loss_e1(y, y) == doctest::Approx(0.0));

  const GeoPoint y_hat{41.15, -8.61};
  double d_lat = 0.0, d_lon = 0.0;
  loss_e1_grad(y_hat, y, d_lat, d_lon);

  const double h = 1e-7;
  const double n_lat = (loss_e1({y_hat.lat + h, y_hat.lon}, y) -
                        loss_e1({y_hat.lat - h, y_hat.lon}, y)) /
                       (2.0 * h);
  const double n_lon = (loss_e1({y_hat.lat, y_hat.lon + h}, y) -
                        loss_e1({y_hat.lat, y_hat.lon - h}, y)) /
                       (2.0 * h);
  CHECK(d_lat == doctest::Approx(n_lat).epsilon(1e-4));
  CHECK(d_lon == doctest::Approx(n_lon).epsilon(1e-4));
}

TEST_CASE("expected-centroid loss reduces to plain distances on one-hot") {
  const std::vector<GeoPoint> centroids{{41.10, -8.60}, {41.20, -8.55}};
  const GeoPoint y{41.12, -8.58};
  const std::vector<double> onehot{0.0, 1.0};
  CHECK(loss_e2(onehot, centroids, y) ==
        doctest::Approx(haversine_m(centroids[1], y)).epsilon(1e-12));

  const std::vector<double> uniform{0.5, 0.5};
  const double mean =
      0.5 * (haversine_m(centroids[0], y) + haversine_m(centroids[1], y));
  CHECK(loss_e2(uniform, centroids, y) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("spreading mass cannot beat concentrating it locally") {
  // In a near-planar neighbourhood the distance is convex, so the expected
  // centroid distance dominates the distance of the expected point.
  Rng rng(3);
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<GeoPoint> centroids;
    std::vector<double> w;
    double total = 0.0;
    for (int i = 0; i < 5; ++i) {
      centroids.push_back(
          {41.15 + rng.uniform(-0.004, 0.004), -8.61 + rng.uniform(-0.004, 0.004)});
      const double wi = rng.uniform(0.05, 1.0);
      w.push_back(wi);
      total += wi;
    }
    for (double& wi : w) wi /= total;
    const GeoPoint y{41.15 + rng.uniform(-0.004, 0.004),
                     -8.61 + rng.uniform(-0.004, 0.004)};
    const double e1 = loss_e1(weighted_mean_point(centroids, w), y);
    const double e2 = loss_e2(w, centroids, y);
    CHECK(e2 >= e1 * (1.0 - 1e-3));
  }
}

TEST_CASE("the loss mix steps from pure point error to the configured blend") {
  TrainConfig cfg;
  cfg.warmup_epochs = 2;
  cfg.alpha_final = 0.5;
  CHECK(alpha_for_epoch(cfg, 0) == 1.0);
  CHECK(alpha_for_epoch(cfg, 1) == 1.0);
  CHECK(alpha_for_epoch(cfg, 2) == 0.5);
  CHECK(alpha_for_epoch(cfg, 100) == 0.5);

  CHECK(loss_combined(1000.0, 1400.0, 0, cfg) == doctest::Approx(1000.0));
  CHECK(loss_combined(1000.0, 1400.0, 5, cfg) == doctest::Approx(1200.0));

  cfg.alpha_final = 1.0;  // point-error-only mode
  CHECK(loss_combined(1000.0, 1400.0, 50, cfg) == doctest::Approx(1000.0));
}

TEST_CASE("train config validation names bad fields") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha_final = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.lr_decay = 1.2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("example loss gradient matches finite differences on the scores") {
  const std::vector<GeoPoint> centroids{
      {41.10, -8.60}, {41.20, -8.55}, {41.15, -8.65}};
  const GeoPoint y{41.13, -8.59};
  std::vector<double> scores{0.2, 0.5, 0.3};
  const double alpha = 0.5;

  const ExampleLoss el = example_loss(scores, centroids, y, alpha, true);
  REQUIRE(el.d_scores.size() == 3);

  const double h = 1e-7;
  for (std::size_t i = 0; i < 3; ++i) {
    auto at = [&](double delta) {
      std::vector<double> s = scores;
      s[i] += delta;
      const ExampleLoss e = example_loss(s, centroids, y, alpha, false);
      return alpha * e.e1 + (1.0 - alpha) * e.e2;
    };
    const double numeric = (at(h) - at(-h)) / (2.0 * h);
    CHECK(el.d_scores[i] == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("training is reproducible seed for seed") {
  SynthConfig scfg;
  scfg.seed = 9;
  scfg.n_trips = 60;
  scfg.grid_size = 12;
  scfg.n_days = 7;
  const auto city = generate_synthetic_city(scfg);

  std::vector<GeoPoint> pts;
  for (const auto& t : city.trips)
    pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 400});

  ModelConfig mcfg;
  mcfg.s_embed_trip = 6;
  mcfg.s_embed_meta = 3;
  mcfg.lstm_hidden = 8;
  mcfg.dense_hidden = 8;
  mcfg.n_r = static_cast<int>(part.region_count());

  TrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.warmup_epochs = 1;
  tcfg.batch_size = 16;
  tcfg.lr = 0.005;
  tcfg.seed = 4;

  auto run = [&] {
    MultiInputLstm model(mcfg, 21);
    return train(model, city.trips, {}, part, tcfg);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_e1 == b.log[i].train_e1);
    CHECK(a.log[i].train_e2 == b.log[i].train_e2);
  }
}

TEST_CASE("validation error improves once the blended loss kicks in") {
  SynthConfig scfg;
  scfg.seed = 15;
  scfg.n_trips = 150;
  scfg.grid_size = 12;
  scfg.n_days = 10;
  scfg.scattered_prob = 0.0;
  const auto city = generate_synthetic_city(scfg);

  std::vector<Trajectory> train_cut(city.trips.begin(), city.trips.end() - 20);
  std::vector<Trajectory> val_cut(city.trips.end() - 20, city.trips.end());

  std::vector<GeoPoint> pts;
  for (const auto& t : train_cut)
    pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 600});

  ModelConfig mcfg;
  mcfg.s_embed_trip = 8;
  mcfg.s_embed_meta = 4;
  mcfg.lstm_hidden = 16;
  mcfg.dense_hidden = 16;
  mcfg.n_r = static_cast<int>(part.region_count());

  TrainConfig tcfg;
  tcfg.epochs = 12;
  tcfg.warmup_epochs = 2;
  tcfg.alpha_final = 0.5;
  tcfg.batch_size = 16;
  tcfg.lr = 0.01;
  tcfg.seed = 2;

  MultiInputLstm model(mcfg, 31);
  const TrainResult res = train(model, train_cut, val_cut, part, tcfg);
  REQUIRE(res.log.size() == 12);
  CHECK(res.used_val == 20);
  // First post-warmup epoch vs the tail of the run.
  CHECK(res.log.back().val_e2 < res.log[2].val_e2);
  CHECK(res.best_epoch >= 0);
}

TEST_CASE("a frozen model sees identical validation partials every epoch") {
  SynthConfig scfg;
  scfg.seed = 19;
  scfg.n_trips = 40;
  scfg.grid_size = 12;
  scfg.n_days = 7;
  const auto city = generate_synthetic_city(scfg);

  std::vector<Trajectory> train_cut(city.trips.begin(), city.trips.end() - 10);
  std::vector<Trajectory> val_cut(city.trips.end() - 10, city.trips.end());
  std::vector<GeoPoint> pts;
  for (const auto& t : train_cut)
    pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 300});

  ModelConfig mcfg;
  mcfg.s_embed_trip = 4;
  mcfg.s_embed_meta = 2;
  mcfg.lstm_hidden = 4;
  mcfg.dense_hidden = 4;
  mcfg.n_r = static_cast<int>(part.region_count());

  TrainConfig tcfg;
  tcfg.epochs = 4;
  tcfg.warmup_epochs = 0;
  tcfg.lr = 1e-30;  // effectively frozen parameters
  tcfg.seed = 8;

  MultiInputLstm model(mcfg, 5);
  const TrainResult res = train(model, train_cut, val_cut, part, tcfg);
  REQUIRE(res.log.size() == 4);
  for (std::size_t i = 1; i < res.log.size(); ++i) {
    CHECK(res.log[i].val_e1 ==
          doctest::Approx(res.log[0].val_e1).epsilon(1e-9));
    CHECK(res.log[i].val_e2 ==
          doctest::Approx(res.log[0].val_e2).epsilon(1e-9));
  }
}

TEST_CASE("the early stop threshold cuts training short") {
  SynthConfig scfg;
  scfg.seed = 23;
  scfg.n_trips = 30;
  scfg.grid_size = 12;
  scfg.n_days = 7;
  const auto city = generate_synthetic_city(scfg);
  std::vector<GeoPoint> pts;
  for (const auto& t : city.trips)
    pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 300});

  ModelConfig mcfg;
  mcfg.s_embed_trip = 4;
  mcfg.s_embed_meta = 2;
  mcfg.lstm_hidden = 4;
  mcfg.dense_hidden = 4;
  mcfg.n_r = static_cast<int>(part.region_count());

  TrainConfig tcfg;
  tcfg.epochs = 10;
  tcfg.warmup_epochs = 0;
  tcfg.seed = 3;
  tcfg.early_stop_train_e1 = 1e9;  // satisfied immediately

  MultiInputLstm model(mcfg, 7);
  const TrainResult res = train(model, city.trips, {}, part, tcfg);
  CHECK(res.log.size() == 1);
}

TEST_CASE("short trips are excluded from the training count") {
  std::vector<Trajectory> trips;
  trips.push_back(line_trip("a", {41.10, -8.62}, {41.14, -8.58}, 12));
  trips.push_back(line_trip("b", {41.11, -8.60}, {41.15, -8.57}, 8));
  trips.push_back(line_trip("short", {41.12, -8.61}, {41.13, -8.60}, 2));
  std::vector<GeoPoint> pts;
  for (const auto& t : trips) pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 8});

  ModelConfig mcfg;
  mcfg.s_embed_trip = 4;
  mcfg.s_embed_meta = 2;
  mcfg.lstm_hidden = 4;
  mcfg.dense_hidden = 4;
  mcfg.n_r = static_cast<int>(part.region_count());
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.warmup_epochs = 0;
  MultiInputLstm model(mcfg, 2);
  const TrainResult res = train(model, trips, {}, part, tcfg);
  CHECK(res.used_train == 2);
}

TEST_CASE("a predictor locked onto the true destination region scores zero") {
  const std::vector<GeoPoint> centers{
      {41.10, -8.60}, {41.10, -8.50}, {41.25, -8.60}, {41.25, -8.50}};
  const auto part =
      SpacePartition::build(blob_points(centers), {.points_per_region_max = 4});
  REQUIRE(part.region_count() == 4);

  const GeoPoint dest = centers[2];
  const int dest_region = part.locate(dest);
  // The leaf holding this blob averages exactly to the blob center.
  const GeoPoint c = part.region(dest_region).centroid;
  REQUIRE(haversine_m(c, dest) < 1e-6);

  std::vector<Trajectory> test;
  for (int i = 0; i < 6; ++i) {
    test.push_back(line_trip("t" + std::to_string(i),
                             {41.12 + 0.002 * i, -8.55}, dest, 10));
  }
  ModelConfig cfg;
  cfg.n_r = static_cast<int>(part.region_count());
  OneHotPredictor model(cfg, dest_region);
  const EvalReport rep = evaluate(model, test, part, 77);
  CHECK(rep.count == 6);
  CHECK(rep.e1_m < 1e-6);
  CHECK(rep.e2_m < 1e-6);
  for (double e : rep.completion_e1) CHECK(e < 1e-6);
}

TEST_CASE("evaluation never feeds the destination to the model") {
  std::vector<Trajectory> test;
  for (int i = 0; i < 5; ++i) {
    test.push_back(line_trip("t" + std::to_string(i), {41.10, -8.62},
                             {41.16 + 0.001 * i, -8.55}, 12));
  }
  test.push_back(line_trip("tiny", {41.11, -8.60}, {41.12, -8.59}, 2));
  std::vector<GeoPoint> pts;
  for (const auto& t : test) pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 16});

  ModelConfig cfg;
  cfg.n_r = static_cast<int>(part.region_count());
  SpyPredictor spy(cfg);
  const EvalReport rep = evaluate(spy, test, part, 5);

  CHECK(rep.count == 5);  // the 2-point trip is skipped
  CHECK(rep.completion_p.size() == 19);
  CHECK(rep.completion_p.front() == 5);
  CHECK(rep.completion_p.back() == 95);
  for (std::size_t s : spy.sizes) {
    CHECK(s >= 2);
    CHECK(s <= 11);  // N = 12 everywhere: the destination stays hidden
  }
  int hist_total = 0;
  for (int c : rep.histogram) hist_total += c;
  CHECK(hist_total == rep.count);
}

TEST_CASE("snippet queries clamp to the trip minus its destination") {
  std::vector<Trajectory> test;
  for (int i = 0; i < 4; ++i) {
    test.push_back(line_trip("t" + std::to_string(i), {41.10, -8.62},
                             {41.17, -8.54 + 0.001 * i}, 10));
  }
  std::vector<GeoPoint> pts;
  for (const auto& t : test) pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 16});
  ModelConfig cfg;
  cfg.n_r = static_cast<int>(part.region_count());

  SpyPredictor spy(cfg);
  snippet_evaluate(spy, test, part, 1e9, 1);
  for (std::size_t s : spy.sizes) CHECK(s == 9);  // all but the final point

  SpyPredictor a(cfg), b(cfg);
  snippet_evaluate(a, test, part, 30.0, 1);
  snippet_evaluate(b, test, part, 30.0, 2);
  REQUIRE(a.sizes.size() == b.sizes.size());
  for (std::size_t s : a.sizes) {
    CHECK(s >= 1);
    CHECK(s <= 9);
  }
  CHECK(a.first_lats != b.first_lats);  // different seeds, different windows

  SpyPredictor c(cfg);
  CHECK_THROWS_AS(snippet_evaluate(c, test, part, 0.0, 1),
                  std::invalid_argument);
}

TEST_CASE("competition export writes one row per trip") {
  std::vector<Trajectory> test;
  test.push_back(line_trip("T1", {41.10, -8.62}, {41.16, -8.55}, 12));
  test.push_back(line_trip("T2", {41.11, -8.61}, {41.15, -8.56}, 2));
  test.push_back(line_trip("T3", {41.12, -8.60}, {41.14, -8.57}, 7));
  std::vector<GeoPoint> pts;
  for (const auto& t : test) pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 16});

  ModelConfig cfg;
  cfg.n_r = static_cast<int>(part.region_count());
  SpyPredictor spy(cfg);
  const std::string path = "kaggle_test.csv";
  write_kaggle_csv(spy, test, part, path);

  std::ifstream f(path);
  std::string line;
  REQUIRE(std::getline(f, line));
  CHECK(line == "TRIP_ID,LATITUDE,LONGITUDE");
  int rows = 0;
  std::vector<std::string> ids;
  while (std::getline(f, line)) {
    ++rows;
    ids.push_back(line.substr(0, line.find(',')));
  }
  f.close();
  std::remove(path.c_str());
  CHECK(rows == 3);
  CHECK(ids == std::vector<std::string>{"T1", "T2", "T3"});
}

TEST_CASE("training log files carry the documented header") {
  std::vector<EpochLog> log(2);
  log[0] = {0, 1000.0, 1200.0, 1100.0, 1300.0, 1.0};
  log[1] = {1, 900.0, 1000.0, 950.0, 1050.0, 0.5};
  const std::string path = "train_log_test.csv";
  write_train_log(path, log);
  std::ifstream f(path);
  std::string line;
  REQUIRE(std::getline(f, line));
  CHECK(line == "epoch,train_E1,train_E2,val_E1,val_E2,alpha");
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  f.close();
  std::remove(path.c_str());
  CHECK(rows == 2);
}

TEST_CASE("model gradients on trajectory batches match finite differences") {
  std::vector<Trajectory> batch;
  batch.push_back(line_trip("a", {41.10, -8.62}, {41.16, -8.52}, 6));
  batch.push_back(line_trip("b", {41.18, -8.56}, {41.11, -8.60}, 5));
  batch.push_back(line_trip("c", {41.12, -8.58}, {41.17, -8.55}, 7));
  std::vector<GeoPoint> pts;
  for (const auto& t : batch) pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 5});

  ModelConfig cfg;
  cfg.s_embed_trip = 4;
  cfg.s_embed_meta = 2;
  cfg.lstm_hidden = 6;
  cfg.dense_hidden = 6;
  cfg.n_r = static_cast<int>(part.region_count());
  MultiInputLstm model(cfg, 13);

  const auto rep = check_model_gradients(model, batch, part, 0.5);
  CHECK(rep.max_rel_err < 1e-4);
  CHECK(rep.params_checked > 0);
}

TEST_CASE("mean region radius matches a hand computation") {
  const std::vector<GeoPoint> centers{{41.15, -8.61}};
  const auto pts = blob_points(centers);
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 10});
  REQUIRE(part.region_count() == 1);

  double expect = 0.0;
  for (const auto& p : pts) expect += haversine_m(centers[0], p);
  expect /= static_cast<double>(pts.size());
  CHECK(mean_region_radius_m(part, pts) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("eval report serializations are well formed") {
  std::vector<Trajectory> test;
  for (int i = 0; i < 4; ++i) {
    test.push_back(line_trip("t" + std::to_string(i), {41.10, -8.62},
                             {41.16, -8.55 + 0.001 * i}, 9));
  }
  std::vector<GeoPoint> pts;
  for (const auto& t : test) pts.insert(pts.end(), t.points.begin(), t.points.end());
  const auto part = SpacePartition::build(pts, {.points_per_region_max = 12});
  ModelConfig cfg;
  cfg.n_r = static_cast<int>(part.region_count());
  SpyPredictor spy(cfg);
  const EvalReport rep = evaluate(spy, test, part, 3);

  const std::string json = rep.to_json();
  CHECK(json.find("\"E1_m\"") != std::string::npos);
  CHECK(json.find("\"completion\"") != std::string::npos);

  std::istringstream csv(rep.completion_csv());
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "p,E1_m,E2_m");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 19);
}
