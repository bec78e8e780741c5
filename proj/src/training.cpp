#include "destpred/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace destpred {
namespace {

using nlohmann::json;

struct Encoded {
  const Trajectory* trip = nullptr;
  std::vector<int> seq;  // per-point region ids
};

std::vector<Encoded> encode_all(std::span<const Trajectory> trips,
                                const SpacePartition& partition) {
  std::vector<Encoded> out;
  out.reserve(trips.size());
  for (const Trajectory& t : trips) {
    if (t.points.empty()) continue;
    out.push_back({&t, partition.encode(t.points)});
  }
  return out;
}

std::vector<std::vector<double>> snapshot_params(
    std::span<nn::Parameter* const> params) {
  std::vector<std::vector<double>> s;
  s.reserve(params.size());
  for (const nn::Parameter* p : params) s.push_back(p->value.v);
  return s;
}

void restore_params(std::span<nn::Parameter* const> params,
                    const std::vector<std::vector<double>>& s) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value.v = s[i];
}

int completion_prefix_len(std::size_t n, int p) {
  const int len = static_cast<int>((p * n + 99) / 100);  // ceil(p*n/100)
  return std::clamp(len, 2, static_cast<int>(n) - 1);
}

}  // namespace

void TrainConfig::validate() const {
  if (alpha_final < 0.0 || alpha_final > 1.0) {
    throw std::invalid_argument("alpha_final must be in [0, 1]");
  }
  if (warmup_epochs < 0) {
    throw std::invalid_argument("warmup_epochs must be >= 0");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) {
    throw std::invalid_argument("lr_decay must be in (0, 1]");
  }
}

double alpha_for_epoch(const TrainConfig& cfg, int epoch) {
  return epoch < cfg.warmup_epochs ? 1.0 : cfg.alpha_final;
}

int sample_partial_len(std::size_t n, Rng& rng) {
  if (n < 3) throw std::invalid_argument("trajectory too short");
  return static_cast<int>(rng.uniform_int(2, static_cast<std::int64_t>(n) - 1));
}

double loss_e1(const GeoPoint& y_hat, const GeoPoint& y) {
  return haversine_m(y_hat, y);
}

void loss_e1_grad(const GeoPoint& y_hat, const GeoPoint& y, double& d_lat,
                  double& d_lon) {
  const double phi_p = deg2rad(y_hat.lat);
  const double phi_y = deg2rad(y.lat);
  const double u = deg2rad(y.lat - y_hat.lat) / 2.0;
  const double w = deg2rad(y.lon - y_hat.lon) / 2.0;

  const double sin_u = std::sin(u), cos_u = std::cos(u);
  const double sin_w = std::sin(w), cos_w = std::cos(w);
  const double h = std::clamp(
      sin_u * sin_u + std::cos(phi_p) * std::cos(phi_y) * sin_w * sin_w, 0.0,
      1.0 - 1e-12);

  // D = 2 r atan(sqrt(h/(1-h))) => dD/dh = r / sqrt(h (1-h)); floored so the
  // coincident-point case yields a finite (zero-direction) gradient.
  const double dd_dh =
      kEarthRadiusM / std::sqrt(std::max(h * (1.0 - h), 1e-30));
  const double dh_dphi =
      -sin_u * cos_u - std::sin(phi_p) * std::cos(phi_y) * sin_w * sin_w;
  const double dh_dlam = -std::cos(phi_p) * std::cos(phi_y) * sin_w * cos_w;

  d_lat = dd_dh * dh_dphi * kPi / 180.0;
  d_lon = dd_dh * dh_dlam * kPi / 180.0;
}

double loss_e2(std::span<const double> scores,
               std::span<const GeoPoint> centroids, const GeoPoint& y) {
  if (scores.size() != centroids.size()) {
    throw std::invalid_argument("scores/centroids length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum += scores[i] * haversine_m(centroids[i], y);
  }
  return sum;
}

double loss_combined(double e1, double e2, int epoch, const TrainConfig& cfg) {
  const double a = alpha_for_epoch(cfg, epoch);
  return a * e1 + (1.0 - a) * e2;
}

ExampleLoss example_loss(std::span<const double> scores,
                         std::span<const GeoPoint> centroids, const GeoPoint& y,
                         double alpha, bool with_grad) {
  ExampleLoss el;
  el.y_hat = weighted_mean_point(centroids, scores);
  el.e1 = haversine_m(el.y_hat, y);
  el.e2 = loss_e2(scores, centroids, y);
  if (with_grad) {
    double d_lat = 0.0, d_lon = 0.0;
    loss_e1_grad(el.y_hat, y, d_lat, d_lon);
    el.d_scores.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double de1 = d_lat * centroids[i].lat + d_lon * centroids[i].lon;
      const double de2 = haversine_m(centroids[i], y);
      el.d_scores[i] = alpha * de1 + (1.0 - alpha) * de2;
    }
  }
  return el;
}

void write_train_log(const std::string& path,
                     std::span<const EpochLog> log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "epoch,train_E1,train_E2,val_E1,val_E2,alpha\n";
  char buf[256];
  for (const EpochLog& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.epoch,
                  r.train_e1, r.train_e2, r.val_e1, r.val_e2, r.alpha);
    f << buf;
  }
}

TrainResult train(NeuralModel& model, std::span<const Trajectory> train_trips,
                  std::span<const Trajectory> val_trips,
                  const SpacePartition& partition, const TrainConfig& cfg,
                  const std::string& log_csv_path,
                  const std::string& checkpoint_path) {
  cfg.validate();
  if (model.config().n_r != partition.region_count()) {
    throw std::invalid_argument("model n_r does not match partition");
  }
  const std::vector<GeoPoint> centroids = partition.centroids();
  const std::vector<nn::Parameter*> params = model.parameters();

  std::vector<Encoded> train_enc = encode_all(train_trips, partition);
  std::vector<Encoded> val_enc = encode_all(val_trips, partition);
  std::erase_if(train_enc, [](const Encoded& e) { return e.seq.size() < 3; });
  std::erase_if(val_enc, [](const Encoded& e) { return e.seq.size() < 3; });
  if (train_enc.empty()) {
    throw std::invalid_argument("no trainable trips (need N >= 3)");
  }

  TrainResult res;
  res.used_train = static_cast<int>(train_enc.size());
  res.used_val = static_cast<int>(val_enc.size());

  Rng rng(cfg.seed);
  nn::Adam opt(cfg.lr);
  ModelCache cache;
  std::vector<std::vector<double>> best;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::size_t> order(train_enc.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double alpha = alpha_for_epoch(cfg, epoch);
    opt.lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
    rng.shuffle(order);

    double e1_sum = 0.0, e2_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_n = 1.0 / static_cast<double>(stop - start);
      model.zero_grads();
      for (std::size_t k = start; k < stop; ++k) {
        const Encoded& ex = train_enc[order[k]];
        const int len = sample_partial_len(ex.seq.size(), rng);
        const std::span<const int> prefix(ex.seq.data(),
                                          static_cast<std::size_t>(len));
        const std::vector<double> scores =
            model.forward_scores(prefix, ex.trip->meta, &cache);
        ExampleLoss el =
            example_loss(scores, centroids, ex.trip->destination(), alpha,
                         true);
        if (!std::isfinite(el.e1) || !std::isfinite(el.e2)) {
          throw std::runtime_error(
              "diverged at epoch " + std::to_string(epoch) + ", trip " +
              ex.trip->id + ": e1=" + std::to_string(el.e1) +
              " e2=" + std::to_string(el.e2));
        }
        for (double& g : el.d_scores) g *= inv_n;
        model.backward_scores(cache, el.d_scores);
        e1_sum += el.e1;
        e2_sum += el.e2;
        ++seen;
      }
      try {
        opt.step(params);
      } catch (const std::runtime_error&) {
        throw std::runtime_error("diverged at epoch " + std::to_string(epoch) +
                                 ": non-finite gradient");
      }
    }

    EpochLog row;
    row.epoch = epoch;
    row.alpha = alpha;
    row.train_e1 = e1_sum / static_cast<double>(seen);
    row.train_e2 = e2_sum / static_cast<double>(seen);
    row.val_e1 = nan;
    row.val_e2 = nan;

    if (!val_enc.empty()) {
      // Re-seeding per epoch keeps the validation partials identical across
      // epochs, so the per-epoch metric is comparable.
      Rng vrng(cfg.seed ^ 0x5DEECE66DULL);
      double v1 = 0.0, v2 = 0.0;
      for (const Encoded& ex : val_enc) {
        const int len = sample_partial_len(ex.seq.size(), vrng);
        const std::span<const int> prefix(ex.seq.data(),
                                          static_cast<std::size_t>(len));
        const std::vector<double> scores =
            model.forward_scores(prefix, ex.trip->meta, &cache);
        const ExampleLoss el = example_loss(
            scores, centroids, ex.trip->destination(), cfg.alpha_final, false);
        v1 += el.e1;
        v2 += el.e2;
      }
      row.val_e1 = v1 / static_cast<double>(val_enc.size());
      row.val_e2 = v2 / static_cast<double>(val_enc.size());
      const double metric = cfg.alpha_final * row.val_e1 +
                            (1.0 - cfg.alpha_final) * row.val_e2;
      if (res.best_epoch < 0 || metric < res.best_val) {
        res.best_epoch = epoch;
        res.best_val = metric;
        best = snapshot_params(params);
      }
    }

    res.log.push_back(row);
    if (cfg.early_stop_train_e1 > 0.0 &&
        row.train_e1 < cfg.early_stop_train_e1) {
      break;
    }
  }

  if (!best.empty()) {
    restore_params(params, best);
  } else {
    res.best_epoch = res.log.back().epoch;
    res.best_val = nan;
  }
  if (!checkpoint_path.empty()) save_model(model, checkpoint_path);
  if (!log_csv_path.empty()) write_train_log(log_csv_path, res.log);
  return res;
}

std::string EvalReport::to_json() const {
  json curve = json::array();
  for (std::size_t i = 0; i < completion_p.size(); ++i) {
    curve.push_back(json{{"p", completion_p[i]},
                         {"E1_m", completion_e1[i]},
                         {"E2_m", completion_e2[i]}});
  }
  json j{{"E1_m", e1_m},
         {"E2_m", e2_m},
         {"count", count},
         {"completion", curve},
         {"histogram_bin_m", histogram_bin_m},
         {"histogram", histogram}};
  return j.dump();
}

std::string EvalReport::completion_csv() const {
  std::string out = "p,E1_m,E2_m\n";
  char buf[128];
  for (std::size_t i = 0; i < completion_p.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", completion_p[i],
                  completion_e1[i], completion_e2[i]);
    out += buf;
  }
  return out;
}

EvalReport evaluate(const Predictor& model, std::span<const Trajectory> test,
                    const SpacePartition& partition, std::uint64_t seed) {
  const std::vector<GeoPoint> centroids = partition.centroids();
  Rng rng(seed);
  EvalReport rep;
  for (int p = 5; p <= 95; p += 5) rep.completion_p.push_back(p);
  rep.completion_e1.assign(rep.completion_p.size(), 0.0);
  rep.completion_e2.assign(rep.completion_p.size(), 0.0);

  for (const Trajectory& t : test) {
    if (t.points.size() < 3) continue;
    const std::vector<int> seq = partition.encode(t.points);
    const GeoPoint& y = t.destination();

    const int len = sample_partial_len(t.points.size(), rng);
    const std::span<const GeoPoint> pts(t.points.data(),
                                        static_cast<std::size_t>(len));
    const std::span<const int> ids(seq.data(), static_cast<std::size_t>(len));
    const Prediction pred = model.predict(pts, ids, t.meta, centroids, 1);
    const double e1 = haversine_m(pred.y_gps_hat, y);
    const double e2 = loss_e2(pred.scores, centroids, y);
    rep.e1_m += e1;
    rep.e2_m += e2;
    const auto bin = static_cast<std::size_t>(e1 / rep.histogram_bin_m);
    if (bin >= rep.histogram.size()) rep.histogram.resize(bin + 1, 0);
    ++rep.histogram[bin];

    for (std::size_t i = 0; i < rep.completion_p.size(); ++i) {
      const int plen = completion_prefix_len(t.points.size(),
                                             rep.completion_p[i]);
      const std::span<const GeoPoint> cpts(t.points.data(),
                                           static_cast<std::size_t>(plen));
      const std::span<const int> cids(seq.data(),
                                      static_cast<std::size_t>(plen));
      const Prediction cp = model.predict(cpts, cids, t.meta, centroids, 1);
      rep.completion_e1[i] += haversine_m(cp.y_gps_hat, y);
      rep.completion_e2[i] += loss_e2(cp.scores, centroids, y);
    }
    ++rep.count;
  }

  if (rep.count > 0) {
    const double inv = 1.0 / rep.count;
    rep.e1_m *= inv;
    rep.e2_m *= inv;
    for (double& v : rep.completion_e1) v *= inv;
    for (double& v : rep.completion_e2) v *= inv;
  }
  return rep;
}

EvalReport snippet_evaluate(const Predictor& model,
                            std::span<const Trajectory> test,
                            const SpacePartition& partition, double t_seconds,
                            std::uint64_t seed) {
  if (!(t_seconds > 0.0)) throw std::invalid_argument("empty snippet");
  const std::vector<GeoPoint> centroids = partition.centroids();
  Rng rng(seed);
  EvalReport rep;

  for (const Trajectory& t : test) {
    if (t.points.size() < 3 || t.timestamps.size() != t.points.size()) {
      continue;
    }
    const std::vector<int> seq = partition.encode(t.points);
    const GeoPoint& y = t.destination();
    // Final point excluded: the label never appears in the query window.
    const std::size_t usable = t.points.size() - 1;
    std::size_t s = 0, e = usable - 1;
    if (static_cast<double>(t.timestamps[usable - 1] - t.timestamps[0]) >
        t_seconds) {
      s = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(usable) - 2));
      e = s + 1;
      while (e + 1 < usable &&
             static_cast<double>(t.timestamps[e + 1] - t.timestamps[s]) <=
                 t_seconds) {
        ++e;
      }
    }
    const std::size_t n = e - s + 1;
    const std::span<const GeoPoint> pts(t.points.data() + s, n);
    const std::span<const int> ids(seq.data() + s, n);
    const Prediction pred = model.predict(pts, ids, t.meta, centroids, 1);
    const double e1 = haversine_m(pred.y_gps_hat, y);
    rep.e1_m += e1;
    rep.e2_m += loss_e2(pred.scores, centroids, y);
    const auto bin = static_cast<std::size_t>(e1 / rep.histogram_bin_m);
    if (bin >= rep.histogram.size()) rep.histogram.resize(bin + 1, 0);
    ++rep.histogram[bin];
    ++rep.count;
  }
  if (rep.count > 0) {
    rep.e1_m /= rep.count;
    rep.e2_m /= rep.count;
  }
  return rep;
}

void write_kaggle_csv(const Predictor& model,
                      std::span<const Trajectory> test,
                      const SpacePartition& partition,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "TRIP_ID,LATITUDE,LONGITUDE\n";
  const std::vector<GeoPoint> centroids = partition.centroids();
  char buf[256];
  for (const Trajectory& t : test) {
    if (t.points.empty()) continue;
    std::vector<GeoPoint> query(t.points.begin(),
                                t.points.size() > 1 ? t.points.end() - 1
                                                    : t.points.end());
    if (query.size() < 2) query.push_back(query.front());
    const std::vector<int> ids = partition.encode(query);
    const Prediction pred =
        model.predict(query, ids, t.meta, centroids, 1);
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", t.id.c_str(),
                  pred.y_gps_hat.lat, pred.y_gps_hat.lon);
    f << buf;
  }
}

nn::GradCheckReport check_model_gradients(NeuralModel& model,
                                          std::span<const Trajectory> batch,
                                          const SpacePartition& partition,
                                          double alpha, double h,
                                          double denom_floor) {
  const std::vector<GeoPoint> centroids = partition.centroids();
  std::vector<Encoded> enc = encode_all(batch, partition);
  std::erase_if(enc, [](const Encoded& e) { return e.seq.size() < 3; });
  if (enc.empty()) {
    throw std::invalid_argument("gradient check needs trips with N >= 3");
  }
  const double inv_n = 1.0 / static_cast<double>(enc.size());

  const auto loss = [&]() {
    double sum = 0.0;
    for (const Encoded& ex : enc) {
      const std::span<const int> prefix(ex.seq.data(), ex.seq.size() - 1);
      const std::vector<double> scores =
          model.forward_scores(prefix, ex.trip->meta, nullptr);
      const ExampleLoss el = example_loss(scores, centroids,
                                          ex.trip->destination(), alpha,
                                          false);
      sum += alpha * el.e1 + (1.0 - alpha) * el.e2;
    }
    return sum * inv_n;
  };
  const auto grads = [&]() {
    model.zero_grads();
    ModelCache cache;
    for (const Encoded& ex : enc) {
      const std::span<const int> prefix(ex.seq.data(), ex.seq.size() - 1);
      const std::vector<double> scores =
          model.forward_scores(prefix, ex.trip->meta, &cache);
      ExampleLoss el = example_loss(scores, centroids, ex.trip->destination(),
                                    alpha, true);
      for (double& g : el.d_scores) g *= inv_n;
      model.backward_scores(cache, el.d_scores);
    }
  };

  const std::vector<nn::Parameter*> params = model.parameters();
  return nn::gradient_check(params, loss, grads, h, denom_floor);
}

double mean_region_radius_m(const SpacePartition& partition,
                            std::span<const GeoPoint> points) {
  const int n_r = partition.region_count();
  std::vector<double> sum(static_cast<std::size_t>(n_r), 0.0);
  std::vector<int> cnt(static_cast<std::size_t>(n_r), 0);
  for (const GeoPoint& p : points) {
    const int id = partition.locate(p);
    const auto i = static_cast<std::size_t>(id - 1);
    sum[i] += haversine_m(p, partition.region(id).centroid);
    ++cnt[i];
  }
  double total = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (cnt[i] == 0) continue;
    total += sum[i] / cnt[i];
    ++used;
  }
  if (used == 0) throw std::invalid_argument("no points to measure");
  return total / used;
}

}  // namespace destpred
