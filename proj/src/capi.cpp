#include "destpred.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "destpred/geo.hpp"
#include "destpred/ingest.hpp"
#include "destpred/models.hpp"
#include "destpred/partition.hpp"
#include "destpred/preprocess.hpp"
#include "destpred/routing.hpp"
#include "destpred/synth.hpp"
#include "destpred/training.hpp"
#include "destpred/trajectory.hpp"

struct dp_dataset {
  std::vector<destpred::Trajectory> trips;
};

struct dp_partition {
  destpred::SpacePartition part;
};

struct dp_model {
  std::unique_ptr<destpred::Predictor> model;
};

struct dp_graph {
  destpred::RoadGraph g;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename F>
dp_status wrap(F&& f) {
  try {
    f();
    return DP_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return DP_EINVAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return DP_ERUNTIME;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::runtime_error("out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void fill_stats(dp_parse_stats* out, const destpred::ParseStats& s) {
  if (!out) return;
  out->rows = static_cast<long long>(s.rows);
  out->parsed = static_cast<long long>(s.parsed);
  out->rejected = static_cast<long long>(s.rejected);
  out->dropped_missing = static_cast<long long>(s.dropped_missing);
}

destpred::TripMetadata meta_from_array(const int* meta4) {
  destpred::TripMetadata m;
  if (meta4) {
    m.time_of_day_bin = meta4[0];
    m.day_of_week = meta4[1];
    m.temperature_bin = meta4[2];
    m.precipitation_bin = meta4[3];
  }
  return m;
}

// JSON-lines partial: [lat,lon] point lines plus an optional object line
// {"time_bin":..,"day_of_week":..,"temp_bin":..,"precip_bin":..}.
std::pair<std::vector<destpred::GeoPoint>, destpred::TripMetadata>
parse_partial_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read " + path);
  std::vector<destpred::GeoPoint> points;
  destpred::TripMetadata meta;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " +
                                  e.what());
    }
    if (j.is_array()) {
      if (j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                    ": point must be [lat, lon]");
      }
      destpred::GeoPoint p{j[0].get<double>(), j[1].get<double>()};
      if (!destpred::is_valid(p)) {
        throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                    ": coordinates out of range");
      }
      points.push_back(p);
    } else if (j.is_object()) {
      meta.time_of_day_bin = j.value("time_bin", destpred::kUnknownBin);
      meta.day_of_week = j.value("day_of_week", destpred::kUnknownBin);
      meta.temperature_bin = j.value("temp_bin", destpred::kUnknownBin);
      meta.precipitation_bin = j.value("precip_bin", destpred::kUnknownBin);
    } else {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected a point array or meta object");
    }
  }
  if (points.empty()) {
    throw std::invalid_argument(path + ": no points");
  }
  return {std::move(points), meta};
}

destpred::Prediction predict_points(const dp_model* m, const dp_partition* p,
                                    std::span<const destpred::GeoPoint> pts,
                                    const destpred::TripMetadata& meta,
                                    int top_n) {
  const std::vector<destpred::GeoPoint> centroids = p->part.centroids();
  const std::vector<int> ids = p->part.encode(pts);
  return m->model->predict(pts, ids, meta, centroids, top_n);
}

}  // namespace

extern "C" {

const char* dp_last_error(void) { return g_last_error.c_str(); }

void dp_string_free(char* s) { std::free(s); }

/* ---------------- datasets ---------------- */

dp_status dp_dataset_load_jsonl(const char* path, dp_dataset** out) {
  return wrap([&] {
    require(path && out, "null argument");
    auto d = std::make_unique<dp_dataset>();
    d->trips = destpred::load_trips_jsonl(path);
    *out = d.release();
  });
}

dp_status dp_dataset_save_jsonl(const dp_dataset* d, const char* path) {
  return wrap([&] {
    require(d && path, "null argument");
    destpred::save_trips_jsonl(path, d->trips);
  });
}

dp_status dp_ingest_porto(const char* csv_path, dp_dataset** out,
                          dp_parse_stats* stats) {
  return wrap([&] {
    require(csv_path && out, "null argument");
    destpred::ParseStats s;
    auto d = std::make_unique<dp_dataset>();
    d->trips = destpred::parse_porto_csv(csv_path, &s);
    fill_stats(stats, s);
    *out = d.release();
  });
}

dp_status dp_ingest_crawdad(const char* dir_path, dp_dataset** out,
                            dp_parse_stats* stats) {
  return wrap([&] {
    require(dir_path && out, "null argument");
    destpred::ParseStats s;
    auto d = std::make_unique<dp_dataset>();
    d->trips = destpred::parse_crawdad_sf(dir_path, &s);
    fill_stats(stats, s);
    *out = d.release();
  });
}

dp_status dp_dataset_attach_weather(dp_dataset* d, const char* weather_csv,
                                    long long* joined_out) {
  return wrap([&] {
    require(d && weather_csv, "null argument");
    const std::size_t joined = destpred::attach_weather(d->trips, weather_csv);
    if (joined_out) *joined_out = static_cast<long long>(joined);
  });
}

dp_status dp_dataset_len(const dp_dataset* d, long long* out) {
  return wrap([&] {
    require(d && out, "null argument");
    *out = static_cast<long long>(d->trips.size());
  });
}

dp_status dp_dataset_split(const dp_dataset* d, unsigned long long seed,
                           dp_dataset** train, dp_dataset** val,
                           dp_dataset** test) {
  return wrap([&] {
    require(d && train && val && test, "null argument");
    destpred::DatasetSplit s = destpred::split_dataset(d->trips, seed);
    auto a = std::make_unique<dp_dataset>();
    auto b = std::make_unique<dp_dataset>();
    auto c = std::make_unique<dp_dataset>();
    a->trips = std::move(s.train);
    b->trips = std::move(s.validation);
    c->trips = std::move(s.test);
    *train = a.release();
    *val = b.release();
    *test = c.release();
  });
}

void dp_dataset_free(dp_dataset* d) { delete d; }

/* ---------------- preprocessing ---------------- */

void dp_preprocess_config_init(dp_preprocess_config* cfg) {
  if (!cfg) return;
  const destpred::PreprocessConfig d;
  cfg->min_duration_s = d.min_duration_s;
  cfg->max_duration_s = d.max_duration_s;
  cfg->max_speed_kmh = d.speed_limit_kmh;
  cfg->bbox_lat_min = d.bbox.lat_min;
  cfg->bbox_lat_max = d.bbox.lat_max;
  cfg->bbox_lon_min = d.bbox.lon_min;
  cfg->bbox_lon_max = d.bbox.lon_max;
  cfg->tau_fixed = 0.0;
  cfg->tau_percentile = 95.0;
}

dp_status dp_preprocess(const dp_dataset* d, const dp_preprocess_config* cfg,
                        dp_dataset** out, char** report_csv_out,
                        double* tau_threshold_out) {
  return wrap([&] {
    require(d && cfg && out, "null argument");
    destpred::PreprocessConfig pc;
    pc.min_duration_s = cfg->min_duration_s;
    pc.max_duration_s = cfg->max_duration_s;
    pc.speed_limit_kmh = cfg->max_speed_kmh;
    pc.bbox = destpred::BBox{cfg->bbox_lat_min, cfg->bbox_lat_max,
                             cfg->bbox_lon_min, cfg->bbox_lon_max};
    if (cfg->tau_fixed > 0.0) {
      pc.tau = destpred::TauThreshold::fixed_value(cfg->tau_fixed);
    } else {
      pc.tau = destpred::TauThreshold::from_percentile(
          static_cast<int>(cfg->tau_percentile));
    }
    auto [trips, report] = destpred::run_pipeline(d->trips, pc);
    auto res = std::make_unique<dp_dataset>();
    res->trips = std::move(trips);
    if (report_csv_out) *report_csv_out = dup_string(report.to_csv());
    if (tau_threshold_out) *tau_threshold_out = report.tau_threshold;
    *out = res.release();
  });
}

/* ---------------- partition ---------------- */

dp_status dp_partition_build(const dp_dataset* d, int points_per_region_max,
                             dp_partition** out) {
  return wrap([&] {
    require(d && out, "null argument");
    std::vector<destpred::GeoPoint> points;
    for (const auto& t : d->trips) {
      points.insert(points.end(), t.points.begin(), t.points.end());
    }
    destpred::PartitionConfig cfg;
    cfg.points_per_region_max = points_per_region_max;
    auto p = std::make_unique<dp_partition>();
    p->part = destpred::SpacePartition::build(points, cfg);
    *out = p.release();
  });
}

dp_status dp_partition_save(const dp_partition* p, const char* path) {
  return wrap([&] {
    require(p && path, "null argument");
    p->part.save(path);
  });
}

dp_status dp_partition_load(const char* path, dp_partition** out) {
  return wrap([&] {
    require(path && out, "null argument");
    auto p = std::make_unique<dp_partition>();
    p->part = destpred::SpacePartition::load(path);
    *out = p.release();
  });
}

dp_status dp_partition_region_count(const dp_partition* p, int* out) {
  return wrap([&] {
    require(p && out, "null argument");
    *out = p->part.region_count();
  });
}

dp_status dp_partition_locate(const dp_partition* p, double lat, double lon,
                              int* region_id_out) {
  return wrap([&] {
    require(p && region_id_out, "null argument");
    *region_id_out = p->part.locate(destpred::GeoPoint{lat, lon});
  });
}

dp_status dp_partition_export_geojson(const dp_partition* p,
                                      const char* path) {
  return wrap([&] {
    require(p && path, "null argument");
    p->part.export_geojson(path);
  });
}

void dp_partition_free(dp_partition* p) { delete p; }

/* ---------------- synthetic city ---------------- */

void dp_synth_config_init(dp_synth_config* cfg) {
  if (!cfg) return;
  const destpred::SynthConfig d;
  cfg->seed = d.seed;
  cfg->n_trips = d.n_trips;
  cfg->grid_size = d.grid_size;
  cfg->n_pois = d.n_pois;
  cfg->jitter_sigma_m = d.jitter_sigma_m;
  cfg->spacing_m = d.spacing_m;
  cfg->speed_mps = d.speed_mps;
  cfg->base_lat = d.base_lat;
  cfg->base_lon = d.base_lon;
  cfg->n_days = d.n_days;
  cfg->min_trip_m = d.min_trip_m;
  cfg->scattered_prob = d.scattered_prob;
}

dp_status dp_synth_generate(const dp_synth_config* cfg, dp_dataset** trips,
                            dp_graph** graph, const char* weather_csv_path) {
  return wrap([&] {
    require(cfg && trips, "null argument");
    destpred::SynthConfig sc;
    sc.seed = cfg->seed;
    sc.n_trips = cfg->n_trips;
    sc.grid_size = cfg->grid_size;
    sc.n_pois = cfg->n_pois;
    sc.jitter_sigma_m = cfg->jitter_sigma_m;
    sc.spacing_m = cfg->spacing_m;
    sc.speed_mps = cfg->speed_mps;
    sc.base_lat = cfg->base_lat;
    sc.base_lon = cfg->base_lon;
    sc.n_days = cfg->n_days;
    sc.min_trip_m = cfg->min_trip_m;
    sc.scattered_prob = cfg->scattered_prob;
    destpred::SyntheticCity city = destpred::generate_synthetic_city(sc);
    if (weather_csv_path) {
      destpred::save_weather_csv(city.weather, weather_csv_path);
    }
    auto d = std::make_unique<dp_dataset>();
    d->trips = std::move(city.trips);
    *trips = d.release();
    if (graph) {
      auto g = std::make_unique<dp_graph>();
      g->g = std::move(city.graph);
      *graph = g.release();
    }
  });
}

/* ---------------- models ---------------- */

void dp_model_config_init(dp_model_config* cfg) {
  if (!cfg) return;
  const destpred::ModelConfig d;
  cfg->s_embed_trip = d.s_embed_trip;
  cfg->s_embed_meta = d.s_embed_meta;
  cfg->lstm_hidden = d.lstm_hidden;
  cfg->n_lstm = d.n_lstm;
  cfg->n_dense_meta = d.n_dense_meta;
  cfg->n_dense = d.n_dense;
  cfg->dense_hidden = d.dense_hidden;
  cfg->j = d.j;
  cfg->baseline_k = d.baseline_k;
}

void dp_train_config_init(dp_train_config* cfg) {
  if (!cfg) return;
  const destpred::TrainConfig d;
  cfg->alpha_final = d.alpha_final;
  cfg->warmup_epochs = d.warmup_epochs;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->lr = d.lr;
  cfg->lr_decay = d.lr_decay;
  cfg->seed = d.seed;
  cfg->early_stop_train_e1 = d.early_stop_train_e1;
}

namespace {

destpred::ModelConfig model_config_from(const dp_model_config* mcfg,
                                        const dp_partition* partition) {
  destpred::ModelConfig mc;
  mc.s_embed_trip = mcfg->s_embed_trip;
  mc.s_embed_meta = mcfg->s_embed_meta;
  mc.lstm_hidden = mcfg->lstm_hidden;
  mc.n_lstm = mcfg->n_lstm;
  mc.n_dense_meta = mcfg->n_dense_meta;
  mc.n_dense = mcfg->n_dense;
  mc.dense_hidden = mcfg->dense_hidden;
  mc.j = mcfg->j;
  mc.baseline_k = mcfg->baseline_k;
  mc.n_r = partition->part.region_count();
  return mc;
}

}  // namespace

dp_status dp_model_train(const char* kind, const dp_dataset* train,
                         const dp_dataset* val, const dp_partition* partition,
                         const dp_model_config* mcfg,
                         const dp_train_config* tcfg, const char* log_csv_path,
                         const char* checkpoint_path, dp_model** out) {
  return wrap([&] {
    require(kind && train && partition && mcfg && tcfg && out,
            "null argument");
    const destpred::ModelConfig mc = model_config_from(mcfg, partition);
    destpred::TrainConfig tc;
    tc.alpha_final = tcfg->alpha_final;
    tc.warmup_epochs = tcfg->warmup_epochs;
    tc.epochs = tcfg->epochs;
    tc.batch_size = tcfg->batch_size;
    tc.lr = tcfg->lr;
    tc.lr_decay = tcfg->lr_decay;
    tc.seed = tcfg->seed;
    tc.early_stop_train_e1 = tcfg->early_stop_train_e1;

    std::unique_ptr<destpred::NeuralModel> model =
        destpred::make_neural_model(kind, mc, tc.seed);
    static const std::vector<destpred::Trajectory> kEmpty;
    destpred::train(*model, train->trips, val ? val->trips : kEmpty,
                    partition->part, tc, log_csv_path ? log_csv_path : "",
                    checkpoint_path ? checkpoint_path : "");
    auto m = std::make_unique<dp_model>();
    m->model = std::move(model);
    *out = m.release();
  });
}

dp_status dp_model_fit_baseline(const dp_dataset* train,
                                const dp_partition* partition,
                                const dp_model_config* mcfg, dp_model** out) {
  return wrap([&] {
    require(train && partition && mcfg && out, "null argument");
    const destpred::ModelConfig mc = model_config_from(mcfg, partition);
    auto m = std::make_unique<dp_model>();
    m->model = std::make_unique<destpred::GeometricBaseline>(
        destpred::GeometricBaseline::fit(train->trips, partition->part, mc));
    *out = m.release();
  });
}

dp_status dp_model_save(const dp_model* m, const char* path) {
  return wrap([&] {
    require(m && path, "null argument");
    destpred::save_model(*m->model, path);
  });
}

dp_status dp_model_load(const char* path, dp_model** out) {
  return wrap([&] {
    require(path && out, "null argument");
    auto m = std::make_unique<dp_model>();
    m->model = destpred::load_model(path);
    *out = m.release();
  });
}

dp_status dp_model_kind(const dp_model* m, char** out) {
  return wrap([&] {
    require(m && out, "null argument");
    *out = dup_string(m->model->kind());
  });
}

dp_status dp_model_predict(const dp_model* m, const dp_partition* partition,
                           const double* points, int n_points,
                           const int* meta4, int top_n, char** json_out) {
  return wrap([&] {
    require(m && partition && points && json_out, "null argument");
    require(n_points >= 1, "need at least one point");
    std::vector<destpred::GeoPoint> pts;
    pts.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
      pts.push_back(destpred::GeoPoint{points[2 * i], points[2 * i + 1]});
    }
    const destpred::Prediction pred =
        predict_points(m, partition, pts, meta_from_array(meta4), top_n);
    *json_out = dup_string(destpred::prediction_to_json(pred));
  });
}

dp_status dp_model_predict_file(const dp_model* m,
                                const dp_partition* partition,
                                const char* partial_path, int top_n,
                                char** json_out) {
  return wrap([&] {
    require(m && partition && partial_path && json_out, "null argument");
    const auto [pts, meta] = parse_partial_file(partial_path);
    const destpred::Prediction pred =
        predict_points(m, partition, pts, meta, top_n);
    *json_out = dup_string(destpred::prediction_to_json(pred));
  });
}

dp_status dp_model_evaluate(const dp_model* m, const dp_dataset* test,
                            const dp_partition* partition,
                            unsigned long long seed, char** report_json_out,
                            char** curve_csv_out) {
  return wrap([&] {
    require(m && test && partition && report_json_out, "null argument");
    const destpred::EvalReport rep =
        destpred::evaluate(*m->model, test->trips, partition->part, seed);
    *report_json_out = dup_string(rep.to_json());
    if (curve_csv_out) *curve_csv_out = dup_string(rep.completion_csv());
  });
}

dp_status dp_model_snippet_evaluate(const dp_model* m, const dp_dataset* test,
                                    const dp_partition* partition,
                                    double t_seconds, unsigned long long seed,
                                    char** report_json_out) {
  return wrap([&] {
    require(m && test && partition && report_json_out, "null argument");
    const destpred::EvalReport rep = destpred::snippet_evaluate(
        *m->model, test->trips, partition->part, t_seconds, seed);
    *report_json_out = dup_string(rep.to_json());
  });
}

dp_status dp_model_kaggle_csv(const dp_model* m, const dp_dataset* test,
                              const dp_partition* partition,
                              const char* path) {
  return wrap([&] {
    require(m && test && partition && path, "null argument");
    destpred::write_kaggle_csv(*m->model, test->trips, partition->part, path);
  });
}

void dp_model_free(dp_model* m) { delete m; }

/* ---------------- road graph / routes ---------------- */

dp_status dp_graph_load(const char* nodes_path, const char* edges_path,
                        dp_graph** out, int* duplicate_warnings) {
  return wrap([&] {
    require(nodes_path && edges_path && out, "null argument");
    auto g = std::make_unique<dp_graph>();
    g->g = destpred::load_graph(nodes_path, edges_path, duplicate_warnings);
    *out = g.release();
  });
}

dp_status dp_graph_save(const dp_graph* g, const char* nodes_path,
                        const char* edges_path) {
  return wrap([&] {
    require(g && nodes_path && edges_path, "null argument");
    destpred::save_graph(g->g, nodes_path, edges_path);
  });
}

dp_status dp_route_predict_file(const dp_graph* g, const dp_model* m,
                                const dp_partition* partition,
                                const char* partial_path, int top_n,
                                const char* geojson_out_path,
                                char** summary_json_out) {
  return wrap([&] {
    require(g && m && partition && partial_path && geojson_out_path,
            "null argument");
    require(top_n >= 1, "top_n must be >= 1");
    const auto [pts, meta] = parse_partial_file(partial_path);
    const destpred::Prediction pred =
        predict_points(m, partition, pts, meta, top_n);
    std::vector<destpred::RouteTarget> targets;
    targets.reserve(pred.top_n.size());
    for (const auto& [region, score] : pred.top_n) {
      targets.push_back(destpred::RouteTarget{
          region, score, partition->part.region(region).centroid});
    }
    const destpred::RoutePrediction rp =
        destpred::predict_routes(g->g, pts.back(), targets);
    destpred::export_routes_geojson(g->g, rp, geojson_out_path);
    if (summary_json_out) {
      nlohmann::json j{{"routes", rp.routes.size()},
                       {"unreachable", rp.unreachable}};
      *summary_json_out = dup_string(j.dump());
    }
  });
}

void dp_graph_free(dp_graph* g) { delete g; }

} /* extern "C" */
