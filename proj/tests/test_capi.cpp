#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "destpred.h"

// Everything here goes through the C header against the shared library; no
// C++ core headers are included on purpose.

namespace {

#define REQUIRE_OK(call)                 \
  do {                                   \
    const dp_status st__ = (call);       \
    INFO("last error: ", dp_last_error()); \
    REQUIRE(st__ == DP_OK);              \
  } while (0)

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::string s((std::istreambuf_iterator<char>(f)),
                std::istreambuf_iterator<char>());
  return s;
}

dp_dataset* make_city(int n_trips, unsigned long long seed,
                      dp_graph** graph = nullptr,
                      const char* weather_csv = nullptr) {
  dp_synth_config cfg;
  dp_synth_config_init(&cfg);
  cfg.seed = seed;
  cfg.n_trips = n_trips;
  cfg.grid_size = 12;
  cfg.n_days = 7;
  dp_dataset* trips = nullptr;
  REQUIRE_OK(dp_synth_generate(&cfg, &trips, graph, weather_csv));
  REQUIRE(trips != nullptr);
  return trips;
}

}  // namespace

TEST_CASE("the whole pipeline runs through the C interface") {
  dp_graph* graph = nullptr;
  dp_dataset* all = make_city(120, 31, &graph, "capi_weather.csv");
  REQUIRE(graph != nullptr);

  long long n = 0;
  REQUIRE_OK(dp_dataset_len(all, &n));
  CHECK(n == 120);

  long long joined = -1;
  REQUIRE_OK(dp_dataset_attach_weather(all, "capi_weather.csv", &joined));
  CHECK(joined == 120);
  std::remove("capi_weather.csv");

  dp_dataset* train = nullptr;
  dp_dataset* val = nullptr;
  dp_dataset* test = nullptr;
  REQUIRE_OK(dp_dataset_split(all, 7, &train, &val, &test));
  long long n_train = 0, n_val = 0, n_test = 0;
  REQUIRE_OK(dp_dataset_len(train, &n_train));
  REQUIRE_OK(dp_dataset_len(val, &n_val));
  REQUIRE_OK(dp_dataset_len(test, &n_test));
  CHECK(n_train == 108);
  CHECK(n_val == 6);
  CHECK(n_test == 6);

  dp_partition* part = nullptr;
  REQUIRE_OK(dp_partition_build(train, 400, &part));
  int regions = 0;
  REQUIRE_OK(dp_partition_region_count(part, &regions));
  CHECK(regions >= 2);

  int rid = 0;
  REQUIRE_OK(dp_partition_locate(part, 41.15, -8.61, &rid));
  CHECK(rid >= 1);
  CHECK(rid <= regions);

  REQUIRE_OK(dp_partition_save(part, "capi_partition.json"));
  dp_partition* reloaded = nullptr;
  REQUIRE_OK(dp_partition_load("capi_partition.json", &reloaded));
  std::remove("capi_partition.json");
  int regions2 = 0;
  REQUIRE_OK(dp_partition_region_count(reloaded, &regions2));
  CHECK(regions2 == regions);
  int rid2 = 0;
  REQUIRE_OK(dp_partition_locate(reloaded, 41.15, -8.61, &rid2));
  CHECK(rid2 == rid);
  dp_partition_free(reloaded);

  dp_model_config mcfg;
  dp_model_config_init(&mcfg);
  mcfg.s_embed_trip = 4;
  mcfg.s_embed_meta = 3;
  mcfg.lstm_hidden = 8;
  mcfg.dense_hidden = 8;
  mcfg.j = 3;
  dp_train_config tcfg;
  dp_train_config_init(&tcfg);
  tcfg.epochs = 1;
  tcfg.warmup_epochs = 1;
  tcfg.batch_size = 16;
  tcfg.seed = 3;

  dp_model* model = nullptr;
  REQUIRE_OK(dp_model_train("multi_lstm", train, val, part, &mcfg, &tcfg,
                            "capi_log.csv", "capi_model.json", &model));
  const std::string log = slurp("capi_log.csv");
  CHECK(log.rfind("epoch,train_E1,train_E2,val_E1,val_E2,alpha", 0) == 0);
  std::remove("capi_log.csv");

  char* kind = nullptr;
  REQUIRE_OK(dp_model_kind(model, &kind));
  CHECK(std::string(kind) == "multi_lstm");
  dp_string_free(kind);

  dp_model* restored = nullptr;
  REQUIRE_OK(dp_model_load("capi_model.json", &restored));
  std::remove("capi_model.json");
  char* kind2 = nullptr;
  REQUIRE_OK(dp_model_kind(restored, &kind2));
  CHECK(std::string(kind2) == "multi_lstm");
  dp_string_free(kind2);
  dp_model_free(restored);

  char* report = nullptr;
  char* curve = nullptr;
  REQUIRE_OK(dp_model_evaluate(model, test, part, 5, &report, &curve));
  {
    const auto j = nlohmann::json::parse(report);
    CHECK(j.at("count").get<long long>() == 6);
    CHECK(j.at("E1_m").get<double>() >= 0.0);
    CHECK(j.at("E2_m").get<double>() >= 0.0);
    CHECK(j.contains("completion"));
  }
  CHECK(std::string(curve).rfind("p,E1_m,E2_m", 0) == 0);
  dp_string_free(report);
  dp_string_free(curve);

  char* snippet = nullptr;
  REQUIRE_OK(dp_model_snippet_evaluate(model, test, part, 600.0, 5, &snippet));
  CHECK(nlohmann::json::parse(snippet).at("count").get<long long>() >= 1);
  dp_string_free(snippet);

  const double pts[4] = {41.150, -8.615, 41.150, -8.612};
  const int meta4[4] = {30, 2, 4, 0};
  char* pred = nullptr;
  REQUIRE_OK(dp_model_predict(model, part, pts, 2, meta4, 3, &pred));
  {
    const auto j = nlohmann::json::parse(pred);
    REQUIRE(j.at("top_n").size() == 3);
    CHECK(j.at("top_n")[0].at("region").get<int>() >= 1);
    CHECK(j.at("dest").size() == 2);
  }
  dp_string_free(pred);

  {
    std::ofstream partial("capi_partial.jsonl");
    partial << "[41.150,-8.615]\n[41.150,-8.612]\n"
            << "{\"time_bin\":30,\"day_of_week\":2,\"temp_bin\":4,"
               "\"precip_bin\":0}\n";
  }
  char* pred2 = nullptr;
  REQUIRE_OK(dp_model_predict_file(model, part, "capi_partial.jsonl", 3,
                                   &pred2));
  CHECK(nlohmann::json::parse(pred2).at("top_n").size() == 3);
  dp_string_free(pred2);

  REQUIRE_OK(dp_graph_save(graph, "capi_nodes.txt", "capi_edges.txt"));
  dp_graph* graph2 = nullptr;
  int dups = -1;
  REQUIRE_OK(dp_graph_load("capi_nodes.txt", "capi_edges.txt", &graph2,
                           &dups));
  std::remove("capi_nodes.txt");
  std::remove("capi_edges.txt");
  CHECK(dups == 0);

  char* summary = nullptr;
  REQUIRE_OK(dp_route_predict_file(graph2, model, part, "capi_partial.jsonl",
                                   3, "capi_routes.geojson", &summary));
  std::remove("capi_partial.jsonl");
  {
    const auto j = nlohmann::json::parse(summary);
    CHECK(j.at("routes").get<long long>() >= 1);
    CHECK(j.at("unreachable").get<long long>() >= 0);
  }
  dp_string_free(summary);
  const auto geo = nlohmann::json::parse(slurp("capi_routes.geojson"));
  CHECK(geo.at("type") == "FeatureCollection");
  std::remove("capi_routes.geojson");
  dp_graph_free(graph2);

  REQUIRE_OK(dp_model_kaggle_csv(model, test, part, "capi_kaggle.csv"));
  const std::string kaggle = slurp("capi_kaggle.csv");
  CHECK(kaggle.rfind("TRIP_ID,LATITUDE,LONGITUDE", 0) == 0);
  std::remove("capi_kaggle.csv");

  dp_model* baseline = nullptr;
  REQUIRE_OK(dp_model_fit_baseline(train, part, &mcfg, &baseline));
  char* bkind = nullptr;
  REQUIRE_OK(dp_model_kind(baseline, &bkind));
  CHECK(std::string(bkind) == "baseline");
  dp_string_free(bkind);
  char* bpred = nullptr;
  REQUIRE_OK(dp_model_predict(baseline, part, pts, 2, nullptr, 2, &bpred));
  CHECK(nlohmann::json::parse(bpred).at("top_n").size() >= 1);
  dp_string_free(bpred);
  dp_model_free(baseline);

  dp_model_free(model);
  dp_partition_free(part);
  dp_graph_free(graph);
  dp_dataset_free(train);
  dp_dataset_free(val);
  dp_dataset_free(test);
  dp_dataset_free(all);
}

TEST_CASE("preprocessing is reachable through the C interface") {
  dp_dataset* all = make_city(80, 33);

  dp_preprocess_config pcfg;
  dp_preprocess_config_init(&pcfg);
  CHECK(pcfg.min_duration_s == doctest::Approx(120.0));
  CHECK(pcfg.max_speed_kmh > 0.0);
  pcfg.tau_fixed = 2.0;

  dp_dataset* clean = nullptr;
  char* report = nullptr;
  double tau = 0.0;
  REQUIRE_OK(dp_preprocess(all, &pcfg, &clean, &report, &tau));
  CHECK(tau == doctest::Approx(2.0));
  CHECK(std::string(report).rfind("step,kept_count,kept_percent", 0) == 0);
  dp_string_free(report);

  long long kept = 0;
  REQUIRE_OK(dp_dataset_len(clean, &kept));
  CHECK(kept > 0);
  CHECK(kept <= 80);

  REQUIRE_OK(dp_dataset_save_jsonl(clean, "capi_clean.jsonl"));
  dp_dataset* back = nullptr;
  REQUIRE_OK(dp_dataset_load_jsonl("capi_clean.jsonl", &back));
  std::remove("capi_clean.jsonl");
  long long kept2 = 0;
  REQUIRE_OK(dp_dataset_len(back, &kept2));
  CHECK(kept2 == kept);

  dp_dataset_free(back);
  dp_dataset_free(clean);
  dp_dataset_free(all);
}

TEST_CASE("null arguments fail with a message instead of crashing") {
  dp_dataset* d = nullptr;
  CHECK(dp_dataset_load_jsonl(nullptr, &d) == DP_EINVAL);
  CHECK(std::strlen(dp_last_error()) > 0);
  CHECK(dp_dataset_load_jsonl("x.jsonl", nullptr) == DP_EINVAL);
  CHECK(dp_dataset_len(nullptr, nullptr) == DP_EINVAL);
  CHECK(dp_partition_build(nullptr, 100, nullptr) == DP_EINVAL);
  CHECK(dp_partition_locate(nullptr, 0.0, 0.0, nullptr) == DP_EINVAL);
  CHECK(dp_model_load(nullptr, nullptr) == DP_EINVAL);
  CHECK(dp_graph_load(nullptr, nullptr, nullptr, nullptr) == DP_EINVAL);

  dp_dataset* trips = make_city(30, 35);
  dp_partition* part = nullptr;
  REQUIRE_OK(dp_partition_build(trips, 200, &part));
  dp_model_config mcfg;
  dp_model_config_init(&mcfg);
  dp_model* baseline = nullptr;
  REQUIRE_OK(dp_model_fit_baseline(trips, part, &mcfg, &baseline));

  char* out = nullptr;
  CHECK(dp_model_predict(baseline, part, nullptr, 2, nullptr, 2, &out) ==
        DP_EINVAL);
  const double pts[2] = {41.15, -8.61};
  CHECK(dp_model_predict(baseline, part, pts, 0, nullptr, 2, &out) ==
        DP_EINVAL);
  CHECK(out == nullptr);

  dp_model_free(baseline);
  dp_partition_free(part);
  dp_dataset_free(trips);

  // Frees must tolerate NULL like free() does.
  dp_string_free(nullptr);
  dp_dataset_free(nullptr);
  dp_partition_free(nullptr);
  dp_model_free(nullptr);
  dp_graph_free(nullptr);
}

TEST_CASE("missing and corrupt files are runtime failures") {
  dp_dataset* d = nullptr;
  CHECK(dp_dataset_load_jsonl("capi_missing.jsonl", &d) == DP_ERUNTIME);
  CHECK(std::string(dp_last_error()).find("capi_missing.jsonl") !=
        std::string::npos);

  dp_graph* g = nullptr;
  CHECK(dp_graph_load("capi_missing_nodes.txt", "capi_missing_edges.txt", &g,
                      nullptr) == DP_ERUNTIME);

  dp_model* m = nullptr;
  CHECK(dp_model_load("capi_missing_model.json", &m) == DP_ERUNTIME);

  {
    std::ofstream f("capi_garbage.json");
    f << "this is not a model\n";
  }
  CHECK(dp_model_load("capi_garbage.json", &m) == DP_ERUNTIME);
  CHECK(std::strlen(dp_last_error()) > 0);
  std::remove("capi_garbage.json");
}

TEST_CASE("an unknown model kind is rejected up front") {
  dp_dataset* trips = make_city(40, 39);
  dp_partition* part = nullptr;
  REQUIRE_OK(dp_partition_build(trips, 200, &part));
  dp_model_config mcfg;
  dp_model_config_init(&mcfg);
  dp_train_config tcfg;
  dp_train_config_init(&tcfg);
  tcfg.epochs = 1;

  dp_model* model = nullptr;
  CHECK(dp_model_train("transformer", trips, nullptr, part, &mcfg, &tcfg,
                       nullptr, nullptr, &model) == DP_EINVAL);
  CHECK(std::string(dp_last_error()).find("transformer") !=
        std::string::npos);

  dp_partition_free(part);
  dp_dataset_free(trips);
}

TEST_CASE("splitting a tiny dataset is refused") {
  dp_dataset* trips = make_city(10, 41);
  dp_dataset* a = nullptr;
  dp_dataset* b = nullptr;
  dp_dataset* c = nullptr;
  CHECK(dp_dataset_split(trips, 1, &a, &b, &c) == DP_EINVAL);
  CHECK(std::string(dp_last_error()).find("20") != std::string::npos);
  dp_dataset_free(trips);
}
