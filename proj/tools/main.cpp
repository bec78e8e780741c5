// Batch front end for the destination prediction toolkit. All pipeline work
// goes through the C API in destpred.h; this file only parses arguments,
// resolves the run configuration and moves bytes between files.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "destpred.h"

namespace fs = std::filesystem;

namespace {

// exit code 1: validation / missing prerequisite, 2: internal failure
struct CliError {
  int code;
  std::string msg;
};

void check(dp_status st) {
  if (st == DP_OK) return;
  throw CliError{st == DP_EINVAL ? 1 : 2, dp_last_error()};
}

struct CStr {
  char* p = nullptr;
  ~CStr() { dp_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  explicit Handle(T* q) : p(q) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    if (this != &o) {
      reset();
      p = o.p;
      o.p = nullptr;
    }
    return *this;
  }
  ~Handle() { reset(); }
  void reset() {
    if (p) Free(p);
    p = nullptr;
  }
  T** out() {
    reset();
    return &p;
  }
  T* get() const { return p; }
};

using Dataset = Handle<dp_dataset, dp_dataset_free>;
using Partition = Handle<dp_partition, dp_partition_free>;
using Model = Handle<dp_model, dp_model_free>;
using Graph = Handle<dp_graph, dp_graph_free>;

/* ---------------- run configuration ---------------- */

struct RunConfig {
  std::string data_dir;
  unsigned long long seed = 42;
  int threads = 1;
  dp_preprocess_config pre;
  int points_per_region_max = 1000;
  dp_synth_config synth;
  std::string model_kind = "multi_lstm";
  dp_model_config model;
  dp_train_config train;
  int predict_top_n = 5;
  int route_top_n = 5;
  double snippet_seconds = 0.0;

  RunConfig() {
    dp_preprocess_config_init(&pre);
    dp_synth_config_init(&synth);
    dp_model_config_init(&model);
    dp_train_config_init(&train);
  }
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t idx = 0;
    out = std::stod(s, &idx);
    return idx == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_int(const std::string& s, int& out) {
  try {
    std::size_t idx = 0;
    out = std::stoi(s, &idx);
    return idx == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_ull(const std::string& s, unsigned long long& out) {
  try {
    std::size_t idx = 0;
    out = std::stoull(s, &idx);
    return idx == s.size();
  } catch (...) {
    return false;
  }
}

struct KeyDef {
  std::string name;
  std::function<bool(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<KeyDef> config_keys(RunConfig& c) {
  auto d = [](double& v) {
    return KeyDef{"", [&v](const std::string& s) { return parse_double(s, v); },
                  [&v] { return fmt_double(v); }};
  };
  auto i = [](int& v) {
    return KeyDef{"", [&v](const std::string& s) { return parse_int(s, v); },
                  [&v] { return std::to_string(v); }};
  };
  auto u = [](unsigned long long& v) {
    return KeyDef{"", [&v](const std::string& s) { return parse_ull(s, v); },
                  [&v] { return std::to_string(v); }};
  };

  std::vector<std::pair<std::string, KeyDef>> defs = {
      {"data_dir",
       {"", [&c](const std::string& s) { c.data_dir = s; return true; },
        [&c] { return c.data_dir; }}},
      {"seed", u(c.seed)},
      {"threads", i(c.threads)},
      {"preprocess.min_duration_s", d(c.pre.min_duration_s)},
      {"preprocess.max_duration_s", d(c.pre.max_duration_s)},
      {"preprocess.max_speed_kmh", d(c.pre.max_speed_kmh)},
      {"preprocess.bbox_lat_min", d(c.pre.bbox_lat_min)},
      {"preprocess.bbox_lat_max", d(c.pre.bbox_lat_max)},
      {"preprocess.bbox_lon_min", d(c.pre.bbox_lon_min)},
      {"preprocess.bbox_lon_max", d(c.pre.bbox_lon_max)},
      {"preprocess.tau_fixed", d(c.pre.tau_fixed)},
      {"preprocess.tau_percentile", d(c.pre.tau_percentile)},
      {"partition.points_per_region_max", i(c.points_per_region_max)},
      {"synth.n_trips", i(c.synth.n_trips)},
      {"synth.grid_size", i(c.synth.grid_size)},
      {"synth.n_pois", i(c.synth.n_pois)},
      {"synth.jitter_sigma_m", d(c.synth.jitter_sigma_m)},
      {"synth.spacing_m", d(c.synth.spacing_m)},
      {"synth.speed_mps", d(c.synth.speed_mps)},
      {"synth.base_lat", d(c.synth.base_lat)},
      {"synth.base_lon", d(c.synth.base_lon)},
      {"synth.n_days", i(c.synth.n_days)},
      {"synth.min_trip_m", d(c.synth.min_trip_m)},
      {"synth.scattered_prob", d(c.synth.scattered_prob)},
      {"model.kind",
       {"",
        [&c](const std::string& s) {
          if (s != "multi_lstm" && s != "single_lstm" && s != "mlp" &&
              s != "baseline") {
            return false;
          }
          c.model_kind = s;
          return true;
        },
        [&c] { return c.model_kind; }}},
      {"model.s_embed_trip", i(c.model.s_embed_trip)},
      {"model.s_embed_meta", i(c.model.s_embed_meta)},
      {"model.lstm_hidden", i(c.model.lstm_hidden)},
      {"model.n_lstm", i(c.model.n_lstm)},
      {"model.n_dense_meta", i(c.model.n_dense_meta)},
      {"model.n_dense", i(c.model.n_dense)},
      {"model.dense_hidden", i(c.model.dense_hidden)},
      {"model.j", i(c.model.j)},
      {"model.baseline_k", i(c.model.baseline_k)},
      {"train.alpha_final", d(c.train.alpha_final)},
      {"train.warmup_epochs", i(c.train.warmup_epochs)},
      {"train.epochs", i(c.train.epochs)},
      {"train.batch_size", i(c.train.batch_size)},
      {"train.lr", d(c.train.lr)},
      {"train.lr_decay", d(c.train.lr_decay)},
      {"train.early_stop_train_e1", d(c.train.early_stop_train_e1)},
      {"predict.top_n", i(c.predict_top_n)},
      {"route.top_n", i(c.route_top_n)},
      {"eval.snippet_seconds", d(c.snippet_seconds)},
  };

  std::vector<KeyDef> keys;
  keys.reserve(defs.size());
  for (auto& [name, def] : defs) {
    def.name = name;
    keys.push_back(std::move(def));
  }
  return keys;
}

void load_config_file(const std::string& path, std::vector<KeyDef>& keys) {
  std::ifstream f(path);
  if (!f) throw CliError{1, "cannot read config file: " + path};
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    if (strip(line).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw CliError{1, path + ":" + std::to_string(lineno) +
                            ": expected `key = value`"};
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    KeyDef* def = nullptr;
    for (auto& k : keys) {
      if (k.name == key) {
        def = &k;
        break;
      }
    }
    if (!def) {
      throw CliError{1, path + ":" + std::to_string(lineno) +
                            ": unknown config key '" + key + "'"};
    }
    if (!def->set(value)) {
      throw CliError{1, path + ":" + std::to_string(lineno) +
                            ": invalid value for '" + key + "': " + value};
    }
  }
}

/* ---------------- plumbing ---------------- */

struct Ctx {
  RunConfig cfg;
  std::vector<KeyDef> keys;  // bound to cfg, declaration order
  std::string command;
  std::string started_utc;
};

std::string utc_now_iso() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Inputs resolve against data_dir when not found as given; outputs never do.
std::string resolve_input(const Ctx& ctx, const std::string& path,
                          const std::string& hint) {
  if (fs::exists(path)) return path;
  if (!ctx.cfg.data_dir.empty() && fs::path(path).is_relative()) {
    const fs::path joined = fs::path(ctx.cfg.data_dir) / path;
    if (fs::exists(joined)) return joined.string();
  }
  std::string msg = "missing prerequisite artifact: " + path;
  if (!hint.empty()) msg += "\n  hint: " + hint;
  throw CliError{1, msg};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CliError{2, "cannot write " + path.string()};
  f << text;
}

// Deterministic snapshot of the resolved configuration; timestamps live in
// the run_info.json sidecar so reports stay byte-identical across runs.
void emit_run_files(const Ctx& ctx, const fs::path& out_dir) {
  std::string snap = "# resolved configuration (defaults, then config file, "
                     "then command line)\n";
  for (const auto& k : ctx.keys) {
    snap += k.name + " = " + k.get() + "\n";
  }
  write_text(out_dir / "config.resolved", snap);
  nlohmann::json info{{"command", ctx.command},
                      {"started_utc", ctx.started_utc},
                      {"finished_utc", utc_now_iso()}};
  write_text(out_dir / "run_info.json", info.dump(2) + "\n");
}

fs::path make_out_dir(const std::string& out) {
  if (out.empty()) throw CliError{1, "--out is required"};
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{1, "cannot create output directory: " + out};
  return dir;
}

long long dataset_len(const Dataset& d) {
  long long n = 0;
  check(dp_dataset_len(d.get(), &n));
  return n;
}

/* ---------------- commands ---------------- */

struct IngestArgs {
  std::string format = "porto";
  std::string in;
  std::string weather;
  std::string out;
};

void cmd_ingest(Ctx& ctx, const IngestArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string in = resolve_input(ctx, a.in, "pass the raw dataset path");
  Dataset d;
  dp_parse_stats stats{};
  if (a.format == "porto") {
    check(dp_ingest_porto(in.c_str(), d.out(), &stats));
  } else if (a.format == "crawdad") {
    check(dp_ingest_crawdad(in.c_str(), d.out(), &stats));
  } else if (a.format == "jsonl") {
    check(dp_dataset_load_jsonl(in.c_str(), d.out()));
    stats.rows = stats.parsed = dataset_len(d);
  } else {
    throw CliError{1, "unknown --format: " + a.format};
  }
  long long joined = 0;
  if (!a.weather.empty()) {
    const std::string w =
        resolve_input(ctx, a.weather, "weather CSV: date,hour,temperature_c,precip_mm");
    check(dp_dataset_attach_weather(d.get(), w.c_str(), &joined));
  }
  const fs::path trips = out_dir / "trips.jsonl";
  check(dp_dataset_save_jsonl(d.get(), trips.string().c_str()));
  nlohmann::json j{{"rows", stats.rows},
                   {"parsed", stats.parsed},
                   {"rejected", stats.rejected},
                   {"dropped_missing", stats.dropped_missing},
                   {"trips", dataset_len(d)},
                   {"weather_joined", joined}};
  write_text(out_dir / "ingest_stats.json", j.dump(2) + "\n");
  emit_run_files(ctx, out_dir);
  std::cout << "ingested " << dataset_len(d) << " trips -> " << trips.string()
            << "\n";
}

struct InOutArgs {
  std::string in;
  std::string out;
};

void cmd_preprocess(Ctx& ctx, const InOutArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string in =
      resolve_input(ctx, a.in, "run `destpred ingest` or `destpred synth` first");
  Dataset d;
  check(dp_dataset_load_jsonl(in.c_str(), d.out()));
  const long long before = dataset_len(d);
  Dataset clean;
  CStr report;
  double tau = 0.0;
  check(dp_preprocess(d.get(), &ctx.cfg.pre, clean.out(), &report.p, &tau));
  const fs::path clean_path = out_dir / "clean.jsonl";
  check(dp_dataset_save_jsonl(clean.get(), clean_path.string().c_str()));
  write_text(out_dir / "report.csv", report.str());
  nlohmann::json j{{"input_trips", before},
                   {"kept_trips", dataset_len(clean)},
                   {"tau_threshold", tau}};
  write_text(out_dir / "preprocess.json", j.dump(2) + "\n");
  emit_run_files(ctx, out_dir);
  std::cout << report.str() << "kept " << dataset_len(clean) << "/" << before
            << " trips (tau threshold " << fmt_double(tau) << ") -> "
            << clean_path.string() << "\n";
}

void cmd_partition(Ctx& ctx, const InOutArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string in =
      resolve_input(ctx, a.in, "run `destpred preprocess` first");
  Dataset d;
  check(dp_dataset_load_jsonl(in.c_str(), d.out()));
  Partition p;
  check(dp_partition_build(d.get(), ctx.cfg.points_per_region_max, p.out()));
  const fs::path part_path = out_dir / "partition.json";
  check(dp_partition_save(p.get(), part_path.string().c_str()));
  int regions = 0;
  check(dp_partition_region_count(p.get(), &regions));
  nlohmann::json j{{"regions", regions}, {"trips", dataset_len(d)}};
  write_text(out_dir / "partition_summary.json", j.dump(2) + "\n");
  emit_run_files(ctx, out_dir);
  std::cout << "built " << regions << " regions -> " << part_path.string()
            << "\n";
}

struct ExportRegionsArgs {
  std::string partition;
  std::string out;
};

void cmd_export_regions(Ctx& ctx, const ExportRegionsArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string part_path =
      resolve_input(ctx, a.partition, "run `destpred partition` first");
  Partition p;
  check(dp_partition_load(part_path.c_str(), p.out()));
  const fs::path geo = out_dir / "regions.geojson";
  check(dp_partition_export_geojson(p.get(), geo.string().c_str()));
  emit_run_files(ctx, out_dir);
  std::cout << "wrote " << geo.string() << "\n";
}

void cmd_synth(Ctx& ctx, const std::string& out) {
  const fs::path out_dir = make_out_dir(out);
  dp_synth_config sc = ctx.cfg.synth;
  sc.seed = ctx.cfg.seed;
  Dataset d;
  Graph g;
  const fs::path weather = out_dir / "weather.csv";
  check(dp_synth_generate(&sc, d.out(), g.out(), weather.string().c_str()));
  const fs::path trips = out_dir / "trips.jsonl";
  check(dp_dataset_save_jsonl(d.get(), trips.string().c_str()));
  const fs::path nodes = out_dir / "graph.nodes";
  const fs::path edges = out_dir / "graph.edges";
  check(dp_graph_save(g.get(), nodes.string().c_str(),
                      edges.string().c_str()));
  emit_run_files(ctx, out_dir);
  std::cout << "generated " << dataset_len(d) << " trips -> "
            << trips.string() << "\n";
}

struct TrainArgs {
  std::string in;
  std::string partition;
  std::string out;
  std::string kind;  // empty: take model.kind from config
};

void cmd_train(Ctx& ctx, const TrainArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string in =
      resolve_input(ctx, a.in, "run `destpred preprocess` or `destpred synth` first");
  const std::string part_path =
      resolve_input(ctx, a.partition, "run `destpred partition` first");
  const std::string kind = a.kind.empty() ? ctx.cfg.model_kind : a.kind;

  Dataset d;
  check(dp_dataset_load_jsonl(in.c_str(), d.out()));
  Partition p;
  check(dp_partition_load(part_path.c_str(), p.out()));
  Dataset train, val, test;
  check(dp_dataset_split(d.get(), ctx.cfg.seed, train.out(), val.out(),
                         test.out()));

  dp_train_config tc = ctx.cfg.train;
  tc.seed = ctx.cfg.seed;
  const fs::path model_path = out_dir / "model.json";
  Model m;
  if (kind == "baseline") {
    check(dp_model_fit_baseline(train.get(), p.get(), &ctx.cfg.model,
                                m.out()));
    check(dp_model_save(m.get(), model_path.string().c_str()));
  } else {
    const fs::path log_path = out_dir / "train_log.csv";
    check(dp_model_train(kind.c_str(), train.get(), val.get(), p.get(),
                         &ctx.cfg.model, &tc, log_path.string().c_str(),
                         model_path.string().c_str(), m.out()));
  }
  emit_run_files(ctx, out_dir);
  std::cout << "trained " << kind << " on " << dataset_len(train)
            << " trips (validation " << dataset_len(val) << ") -> "
            << model_path.string() << "\n";
}

struct EvalArgs {
  std::string in;
  std::string partition;
  std::string model;
  std::string out;
  std::string kaggle_out;
  double snippet_seconds = -1.0;  // <0: take from config
};

void cmd_eval(Ctx& ctx, const EvalArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string in =
      resolve_input(ctx, a.in, "pass the same trips file used for training");
  const std::string part_path =
      resolve_input(ctx, a.partition, "run `destpred partition` first");
  const std::string model_path =
      resolve_input(ctx, a.model, "run `destpred train` first");

  Dataset d;
  check(dp_dataset_load_jsonl(in.c_str(), d.out()));
  Partition p;
  check(dp_partition_load(part_path.c_str(), p.out()));
  Model m;
  check(dp_model_load(model_path.c_str(), m.out()));
  Dataset train, val, test;
  check(dp_dataset_split(d.get(), ctx.cfg.seed, train.out(), val.out(),
                         test.out()));

  CStr report, curve;
  check(dp_model_evaluate(m.get(), test.get(), p.get(), ctx.cfg.seed,
                          &report.p, &curve.p));
  write_text(out_dir / "eval.json", report.str() + "\n");
  write_text(out_dir / "completion.csv", curve.str());

  const double snippet =
      a.snippet_seconds >= 0.0 ? a.snippet_seconds : ctx.cfg.snippet_seconds;
  if (snippet > 0.0) {
    CStr snip;
    check(dp_model_snippet_evaluate(m.get(), test.get(), p.get(), snippet,
                                    ctx.cfg.seed, &snip.p));
    write_text(out_dir / "snippet.json", snip.str() + "\n");
  }
  if (!a.kaggle_out.empty()) {
    check(dp_model_kaggle_csv(m.get(), test.get(), p.get(),
                              a.kaggle_out.c_str()));
  }
  emit_run_files(ctx, out_dir);
  const auto j = nlohmann::json::parse(report.str());
  std::cout << "test trips: " << j["count"] << "  E1: " << j["E1_m"]
            << " m  E2: " << j["E2_m"] << " m\n";
}

struct PredictArgs {
  std::string model;
  std::string partition;
  std::string in;
  std::string out;  // optional file
  int top_n = -1;   // <0: take from config
};

void cmd_predict(Ctx& ctx, const PredictArgs& a) {
  const std::string model_path =
      resolve_input(ctx, a.model, "run `destpred train` first");
  const std::string part_path =
      resolve_input(ctx, a.partition, "run `destpred partition` first");
  const std::string in = resolve_input(
      ctx, a.in, "JSON lines: [lat,lon] points plus an optional meta object");
  Partition p;
  check(dp_partition_load(part_path.c_str(), p.out()));
  Model m;
  check(dp_model_load(model_path.c_str(), m.out()));
  const int top_n = a.top_n > 0 ? a.top_n : ctx.cfg.predict_top_n;
  CStr json;
  check(dp_model_predict_file(m.get(), p.get(), in.c_str(), top_n, &json.p));
  if (!a.out.empty()) {
    fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_text(out, json.str() + "\n");
  }
  std::cout << json.str() << "\n";
}

struct RouteArgs {
  std::string graph_nodes;
  std::string graph_edges;
  std::string model;
  std::string partition;
  std::string in;
  std::string out;
  int top_n = -1;  // <0: take from config
};

void cmd_route(Ctx& ctx, const RouteArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string nodes =
      resolve_input(ctx, a.graph_nodes, "node file lines: `id lat lon`");
  const std::string edges =
      resolve_input(ctx, a.graph_edges, "edge file lines: `u v cost`");
  const std::string model_path =
      resolve_input(ctx, a.model, "run `destpred train` first");
  const std::string part_path =
      resolve_input(ctx, a.partition, "run `destpred partition` first");
  const std::string in = resolve_input(
      ctx, a.in, "JSON lines: [lat,lon] points plus an optional meta object");

  Graph g;
  int dup = 0;
  check(dp_graph_load(nodes.c_str(), edges.c_str(), g.out(), &dup));
  if (dup > 0) {
    std::cerr << "note: " << dup
              << " duplicate edge(s) collapsed to the minimum cost\n";
  }
  Partition p;
  check(dp_partition_load(part_path.c_str(), p.out()));
  Model m;
  check(dp_model_load(model_path.c_str(), m.out()));
  const int top_n = a.top_n > 0 ? a.top_n : ctx.cfg.route_top_n;
  const fs::path geo = out_dir / "routes.geojson";
  CStr summary;
  check(dp_route_predict_file(g.get(), m.get(), p.get(), in.c_str(), top_n,
                              geo.string().c_str(), &summary.p));
  write_text(out_dir / "route_summary.json", summary.str() + "\n");
  emit_run_files(ctx, out_dir);
  std::cout << summary.str() << "\n";
}

struct FullReproArgs {
  std::string porto_csv;
  std::string weather;
  std::string out;
};

// Chains the full recipe on the real dataset and reports the achieved
// figures. Informational only: the published headline numbers need the full
// dataset and hours of training, so nothing here is pass/fail.
void cmd_full_repro(Ctx& ctx, const FullReproArgs& a) {
  const fs::path out_dir = make_out_dir(a.out);
  const std::string csv = resolve_input(
      ctx, a.porto_csv,
      "download the Porto taxi training CSV and pass it via --in");

  std::cout << "[1/5] ingest\n";
  IngestArgs ing;
  ing.format = "porto";
  ing.in = csv;
  ing.weather = a.weather;
  ing.out = (out_dir / "ingest").string();
  cmd_ingest(ctx, ing);

  std::cout << "[2/5] preprocess\n";
  InOutArgs pre;
  pre.in = (out_dir / "ingest" / "trips.jsonl").string();
  pre.out = (out_dir / "preprocess").string();
  cmd_preprocess(ctx, pre);

  std::cout << "[3/5] partition\n";
  InOutArgs part;
  part.in = (out_dir / "preprocess" / "clean.jsonl").string();
  part.out = (out_dir / "partition").string();
  cmd_partition(ctx, part);

  std::cout << "[4/5] train (" << ctx.cfg.model_kind << ")\n";
  TrainArgs tr;
  tr.in = part.in;
  tr.partition = (out_dir / "partition" / "partition.json").string();
  tr.out = (out_dir / "train").string();
  cmd_train(ctx, tr);

  std::cout << "[5/5] eval\n";
  EvalArgs ev;
  ev.in = part.in;
  ev.partition = tr.partition;
  ev.model = (out_dir / "train" / "model.json").string();
  ev.out = (out_dir / "eval").string();
  ev.kaggle_out = (out_dir / "eval" / "kaggle.csv").string();
  cmd_eval(ctx, ev);

  emit_run_files(ctx, out_dir);
  std::cout << "full run complete; figures above are informational, not a "
               "pass/fail gate\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Trajectory destination and route prediction pipeline.\n"
      "Run configuration comes from a key-value config file (--config); "
      "unknown keys are rejected. Relative input paths are also tried under "
      "data_dir (config key, overridden by DESTPRED_DATA_DIR)."};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  unsigned long long seed_flag = 0;
  int threads_flag = 0;
  bool full_repro = false;
  app.add_option("--config", config_path, "key = value config file");
  auto* seed_opt =
      app.add_option("--seed", seed_flag, "override the config seed");
  auto* threads_opt = app.add_option(
      "--threads", threads_flag, "cap worker threads (recorded in the config "
      "snapshot; the pipeline currently runs one worker)");
  app.add_flag("--full-repro", full_repro,
               "run ingest -> preprocess -> partition -> train -> eval on the "
               "real dataset and report achieved errors (not a gate)");

  FullReproArgs fr;
  app.add_option("--in", fr.porto_csv, "raw dataset CSV (with --full-repro)");
  app.add_option("--weather", fr.weather,
                 "hourly weather CSV (with --full-repro)");
  app.add_option("--out", fr.out, "output directory (with --full-repro)");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand(
      "ingest", "parse a raw dataset into the trip JSONL format");
  ingest->add_option("--format", ingest_args.format,
                     "porto | crawdad | jsonl");
  ingest->add_option("--in", ingest_args.in, "raw dataset path")->required();
  ingest->add_option("--weather", ingest_args.weather,
                     "hourly weather CSV to join");
  ingest->add_option("--out", ingest_args.out, "output directory")
      ->required();

  InOutArgs pre_args;
  auto* preprocess = app.add_subcommand(
      "preprocess", "run the four trip cleaning steps and report survivors");
  preprocess->add_option("--in", pre_args.in, "trips JSONL")->required();
  preprocess->add_option("--out", pre_args.out, "output directory")
      ->required();

  InOutArgs part_args;
  auto* partition = app.add_subcommand(
      "partition", "build the space partition from all trip points");
  partition->add_option("--in", part_args.in, "trips JSONL")->required();
  partition->add_option("--out", part_args.out, "output directory")
      ->required();

  std::string synth_out;
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic city: trips, road graph, weather");
  synth->add_option("--out", synth_out, "output directory")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a destination model");
  train->add_option("--in", train_args.in, "trips JSONL")->required();
  train->add_option("--partition", train_args.partition, "partition file")
      ->required();
  train->add_option("--kind", train_args.kind,
                    "multi_lstm | single_lstm | mlp | baseline "
                    "(default: model.kind)");
  train->add_option("--out", train_args.out, "output directory")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand(
      "eval", "evaluate a model on the held-out test split");
  eval->add_option("--in", eval_args.in, "trips JSONL")->required();
  eval->add_option("--partition", eval_args.partition, "partition file")
      ->required();
  eval->add_option("--model", eval_args.model, "model checkpoint")
      ->required();
  eval->add_option("--kaggle-out", eval_args.kaggle_out,
                   "also write TRIP_ID,LATITUDE,LONGITUDE rows here");
  eval->add_option("--snippet-seconds", eval_args.snippet_seconds,
                   "also query random windows of this duration");
  eval->add_option("--out", eval_args.out, "output directory")->required();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand(
      "predict", "predict the destination of a partial trip");
  predict->add_option("--model", predict_args.model, "model checkpoint")
      ->required();
  predict->add_option("--partition", predict_args.partition, "partition file")
      ->required();
  predict->add_option("--in", predict_args.in, "partial trip JSONL")
      ->required();
  predict->add_option("--top-n", predict_args.top_n, "regions to report");
  predict->add_option("--out", predict_args.out,
                      "also write the prediction JSON here");

  RouteArgs route_args;
  auto* route = app.add_subcommand(
      "route", "predict routes to the top destination regions");
  route->add_option("--graph-nodes", route_args.graph_nodes, "node file")
      ->required();
  route->add_option("--graph-edges", route_args.graph_edges, "edge file")
      ->required();
  route->add_option("--model", route_args.model, "model checkpoint")
      ->required();
  route->add_option("--partition", route_args.partition, "partition file")
      ->required();
  route->add_option("--in", route_args.in, "partial trip JSONL")->required();
  route->add_option("--top-n", route_args.top_n, "routes to predict");
  route->add_option("--out", route_args.out, "output directory")->required();

  ExportRegionsArgs export_args;
  auto* export_regions = app.add_subcommand(
      "export-regions", "write the partition leaves as GeoJSON boxes");
  export_regions
      ->add_option("--partition", export_args.partition, "partition file")
      ->required();
  export_regions->add_option("--out", export_args.out, "output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Ctx ctx;
    ctx.keys = config_keys(ctx.cfg);
    ctx.started_utc = utc_now_iso();
    if (!config_path.empty()) load_config_file(config_path, ctx.keys);
    if (const char* env = std::getenv("DESTPRED_DATA_DIR")) {
      if (*env) ctx.cfg.data_dir = env;
    }
    if (seed_opt->count() > 0) ctx.cfg.seed = seed_flag;
    if (threads_opt->count() > 0) ctx.cfg.threads = threads_flag;
    if (ctx.cfg.threads < 1) throw CliError{1, "--threads must be >= 1"};

    if (ingest->parsed()) {
      ctx.command = "ingest";
      cmd_ingest(ctx, ingest_args);
    } else if (preprocess->parsed()) {
      ctx.command = "preprocess";
      cmd_preprocess(ctx, pre_args);
    } else if (partition->parsed()) {
      ctx.command = "partition";
      cmd_partition(ctx, part_args);
    } else if (synth->parsed()) {
      ctx.command = "synth";
      cmd_synth(ctx, synth_out);
    } else if (train->parsed()) {
      ctx.command = "train";
      cmd_train(ctx, train_args);
    } else if (eval->parsed()) {
      ctx.command = "eval";
      cmd_eval(ctx, eval_args);
    } else if (predict->parsed()) {
      ctx.command = "predict";
      cmd_predict(ctx, predict_args);
    } else if (route->parsed()) {
      ctx.command = "route";
      cmd_route(ctx, route_args);
    } else if (export_regions->parsed()) {
      ctx.command = "export-regions";
      cmd_export_regions(ctx, export_args);
    } else if (full_repro) {
      ctx.command = "full-repro";
      cmd_full_repro(ctx, fr);
    } else {
      std::cerr << app.help() << "\n";
      return 1;
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.msg << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
