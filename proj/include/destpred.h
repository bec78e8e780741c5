#ifndef DESTPRED_H
#define DESTPRED_H

/* C interface to the trajectory destination/route prediction core.
 *
 * All functions return dp_status; on failure dp_last_error() describes the
 * problem (thread-local storage, valid until the next failing call on the
 * same thread). Strings returned through char** outputs are heap-allocated
 * and must be released with dp_string_free(). Handles are opaque and must be
 * released with their matching *_free function. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dp_status {
  DP_OK = 0,       /* success */
  DP_EINVAL = 1,   /* invalid argument / validation failure */
  DP_ERUNTIME = 2  /* runtime failure (I/O, divergence, ...) */
} dp_status;

const char* dp_last_error(void);
void dp_string_free(char* s);

typedef struct dp_dataset dp_dataset;
typedef struct dp_partition dp_partition;
typedef struct dp_model dp_model;
typedef struct dp_graph dp_graph;

/* ------------------------------------------------------------------ */
/* datasets                                                            */

typedef struct dp_parse_stats {
  long long rows;            /* data rows seen */
  long long parsed;          /* trips kept */
  long long rejected;        /* malformed rows */
  long long dropped_missing; /* rows flagged as having missing data */
} dp_parse_stats;

dp_status dp_dataset_load_jsonl(const char* path, dp_dataset** out);
dp_status dp_dataset_save_jsonl(const dp_dataset* d, const char* path);
/* Kaggle-style taxi CSV with a POLYLINE column of [lon,lat] pairs. */
dp_status dp_ingest_porto(const char* csv_path, dp_dataset** out,
                          dp_parse_stats* stats);
/* Directory of mobility traces, one "lat lon occupied time" file per cab;
 * occupied runs become trips. */
dp_status dp_ingest_crawdad(const char* dir_path, dp_dataset** out,
                            dp_parse_stats* stats);
/* Joins hourly weather ("date,hour,temperature_c,precip_mm") onto trip
 * start times; unmatched trips keep unknown bins. *joined_out receives the
 * number of trips that matched. */
dp_status dp_dataset_attach_weather(dp_dataset* d, const char* weather_csv,
                                    long long* joined_out);
dp_status dp_dataset_len(const dp_dataset* d, long long* out);
/* Seeded deterministic 90/5/5 shuffle split. */
dp_status dp_dataset_split(const dp_dataset* d, unsigned long long seed,
                           dp_dataset** train, dp_dataset** val,
                           dp_dataset** test);
void dp_dataset_free(dp_dataset* d);

/* ------------------------------------------------------------------ */
/* preprocessing                                                       */

typedef struct dp_preprocess_config {
  double min_duration_s;  /* default 120 */
  double max_duration_s;  /* default 7200 */
  double max_speed_kmh;   /* default 240 */
  double bbox_lat_min, bbox_lat_max, bbox_lon_min, bbox_lon_max;
  /* tau_fixed > 0 selects a fixed roundtrip-factor threshold; otherwise the
   * threshold is the tau_percentile-th percentile of the surviving trips. */
  double tau_fixed;       /* default 0 (off) */
  double tau_percentile;  /* default 95 */
} dp_preprocess_config;

void dp_preprocess_config_init(dp_preprocess_config* cfg);

/* Runs the four cleaning steps. *report_csv_out (optional) receives the
 * per-step "step,kept_count,kept_percent" table; *tau_threshold_out
 * (optional) the resolved roundtrip-factor threshold. */
dp_status dp_preprocess(const dp_dataset* d, const dp_preprocess_config* cfg,
                        dp_dataset** out, char** report_csv_out,
                        double* tau_threshold_out);

/* ------------------------------------------------------------------ */
/* space partition                                                     */

dp_status dp_partition_build(const dp_dataset* d, int points_per_region_max,
                             dp_partition** out);
dp_status dp_partition_save(const dp_partition* p, const char* path);
dp_status dp_partition_load(const char* path, dp_partition** out);
dp_status dp_partition_region_count(const dp_partition* p, int* out);
dp_status dp_partition_locate(const dp_partition* p, double lat, double lon,
                              int* region_id_out);
dp_status dp_partition_export_geojson(const dp_partition* p, const char* path);
void dp_partition_free(dp_partition* p);

/* ------------------------------------------------------------------ */
/* synthetic city                                                      */

typedef struct dp_synth_config {
  unsigned long long seed;
  int n_trips;
  int grid_size;
  int n_pois;
  double jitter_sigma_m;
  double spacing_m;
  double speed_mps;
  double base_lat, base_lon;
  int n_days;
  double min_trip_m;
  double scattered_prob;
} dp_synth_config;

void dp_synth_config_init(dp_synth_config* cfg);

/* Generates trips plus the ground-truth road graph; when weather_csv_path is
 * non-NULL the matching hourly weather table is written there. */
dp_status dp_synth_generate(const dp_synth_config* cfg, dp_dataset** trips,
                            dp_graph** graph, const char* weather_csv_path);

/* ------------------------------------------------------------------ */
/* models                                                              */

typedef struct dp_model_config {
  int s_embed_trip;
  int s_embed_meta;
  int lstm_hidden;
  int n_lstm;
  int n_dense_meta;
  int n_dense;
  int dense_hidden;
  int j;
  int baseline_k;
} dp_model_config;

typedef struct dp_train_config {
  double alpha_final;
  int warmup_epochs;
  int epochs;
  int batch_size;
  double lr;
  double lr_decay; /* per-epoch multiplicative factor, 1 = constant */
  unsigned long long seed;
  double early_stop_train_e1; /* <= 0 disables */
} dp_train_config;

void dp_model_config_init(dp_model_config* cfg);
void dp_train_config_init(dp_train_config* cfg);

/* kind: "multi_lstm" | "single_lstm" | "mlp". Trains on `train`, selects the
 * best epoch on `val`, writes the training log CSV and checkpoint when the
 * paths are non-NULL, and returns the trained model. */
dp_status dp_model_train(const char* kind, const dp_dataset* train,
                         const dp_dataset* val, const dp_partition* partition,
                         const dp_model_config* mcfg,
                         const dp_train_config* tcfg, const char* log_csv_path,
                         const char* checkpoint_path, dp_model** out);
/* Geometric baseline: ranks destination regions by training frequency. */
dp_status dp_model_fit_baseline(const dp_dataset* train,
                                const dp_partition* partition,
                                const dp_model_config* mcfg, dp_model** out);
dp_status dp_model_save(const dp_model* m, const char* path);
dp_status dp_model_load(const char* path, dp_model** out);
dp_status dp_model_kind(const dp_model* m, char** out);

/* Scores a partial trajectory. points = lat,lon pairs (2*n_points doubles);
 * meta4 = {time_bin, day_of_week, temp_bin, precip_bin} with -1 for unknown
 * (may be NULL for all-unknown). Returns the prediction JSON
 * {"top_n":[{"region":..,"score":..}...],"dest":[lat,lon]}. */
dp_status dp_model_predict(const dp_model* m, const dp_partition* partition,
                           const double* points, int n_points,
                           const int* meta4, int top_n, char** json_out);
/* Same, reading the partial from a JSON-lines file of [lat,lon] points with
 * an optional metadata object line. */
dp_status dp_model_predict_file(const dp_model* m,
                                const dp_partition* partition,
                                const char* partial_path, int top_n,
                                char** json_out);

/* Random-partial evaluation; curve_csv_out (optional) receives the
 * completion-curve table "p,E1_m,E2_m". */
dp_status dp_model_evaluate(const dp_model* m, const dp_dataset* test,
                            const dp_partition* partition,
                            unsigned long long seed, char** report_json_out,
                            char** curve_csv_out);
/* Random contiguous windows of duration t_seconds. */
dp_status dp_model_snippet_evaluate(const dp_model* m, const dp_dataset* test,
                                    const dp_partition* partition,
                                    double t_seconds, unsigned long long seed,
                                    char** report_json_out);
/* "TRIP_ID,LATITUDE,LONGITUDE" rows, one per trip. */
dp_status dp_model_kaggle_csv(const dp_model* m, const dp_dataset* test,
                              const dp_partition* partition, const char* path);
void dp_model_free(dp_model* m);

/* ------------------------------------------------------------------ */
/* road graph / routes                                                 */

dp_status dp_graph_load(const char* nodes_path, const char* edges_path,
                        dp_graph** out, int* duplicate_warnings);
dp_status dp_graph_save(const dp_graph* g, const char* nodes_path,
                        const char* edges_path);
/* Routes from the partial's last point to the model's top-n destination
 * regions; overlapping edges accumulate the sum of their routes' scores.
 * Writes a GeoJSON FeatureCollection; summary_json_out (optional) receives
 * {"routes":..,"unreachable":..}. */
dp_status dp_route_predict_file(const dp_graph* g, const dp_model* m,
                                const dp_partition* partition,
                                const char* partial_path, int top_n,
                                const char* geojson_out_path,
                                char** summary_json_out);
void dp_graph_free(dp_graph* g);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DESTPRED_H */
