/*
 * Copyright 2026 The hsseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "hsseg/harness.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hsseg/checkpoint.hpp"
#include "hsseg/dataset.hpp"
#include "hsseg/error.hpp"
#include "hsseg/gradcheck.hpp"
#include "hsseg/heatmap.hpp"
#include "hsseg/pnm.hpp"
#include "hsseg/rng.hpp"
#include "hsseg/synth.hpp"

namespace hsseg {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << bytes;
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string dataset_digest(const fs::path& root) {
  return hex64(fnv1a64(read_file(root / "manifest.json")));
}

std::vector<std::string> selected_categories(const HarnessConfig& cfg, const ordered_json& manifest) {
  const std::vector<std::string> all = manifest_categories(manifest);
  if (cfg.categories.empty()) return all;
  for (const auto& c : cfg.categories) {
    if (std::find(all.begin(), all.end(), c) == all.end()) {
      throw ValidationError("category '" + c + "' not in dataset");
    }
  }
  return cfg.categories;
}

struct PlannedRun {
  RunSpec spec;
  std::uint64_t seed = 0;
  std::string run_id;
};

// Executes `runs` in order, persisting each one. Returns records in order.
std::vector<RunRecord> run_serial(const HarnessConfig& cfg, const std::vector<PlannedRun>& runs,
                                  std::ostream& log) {
  const fs::path root = cfg.resolved_data_root();
  const ordered_json manifest = read_manifest(root);
  std::vector<RunRecord> out;
  std::string loaded;
  CategoryData data;
  for (const PlannedRun& run : runs) {
    if (loaded != run.spec.category) {
      data = load_category(root, manifest, run.spec.category);
      loaded = run.spec.category;
    }
    FcnParams params;
    std::vector<EpochLog> epochs;
    RunRecord rec = execute_run(data, run.spec, run.seed, &params, &epochs);

    save_checkpoint(cfg.out_dir / "checkpoints" / (rec.run_id + ".ckpt.tmp"), params);
    fs::rename(cfg.out_dir / "checkpoints" / (rec.run_id + ".ckpt.tmp"),
               cfg.out_dir / "checkpoints" / (rec.run_id + ".ckpt"));
    std::string lines;
    for (const EpochLog& e : epochs) {
      ordered_json l;
      l["epoch"] = e.epoch;
      l["mean_loss"] = e.mean_loss;
      l["lr"] = e.lr;
      lines += l.dump() + "\n";
    }
    write_file_atomic(cfg.out_dir / "logs" / (rec.run_id + ".jsonl"), lines);
    append_result(cfg.results_path(), rec);

    log << rec.run_id << "  " << rec.category << " seed " << rec.seed << ' '
        << loss_variant_name(rec.loss_variant) << '/' << supervision_name(rec.supervision)
        << "  auroc " << fmt("%.4f", rec.pixel_auroc) << " ap " << fmt("%.4f", rec.pixel_ap)
        << "  " << fmt("%.1f", rec.wall_time_s) << "s\n";
    log.flush();
    out.push_back(std::move(rec));
  }
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return 2;
  return 1;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path HarnessConfig::resolved_data_root() const {
  return data_root.empty() ? out_dir / "data" : data_root;
}

fs::path HarnessConfig::results_path() const { return out_dir / "results.jsonl"; }

fs::path default_out_dir() {
  const char* env = std::getenv("HSSEG_OUT");
  return env && *env ? fs::path(env) : fs::path("hsseg_out");
}

ordered_json config_to_json(const HarnessConfig& cfg) {
  ordered_json j;
  j["data_root"] = cfg.data_root.string();
  j["categories"] = cfg.categories;
  j["seeds"] = cfg.seeds;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  std::vector<std::string> variants;
  for (LossVariant v : cfg.variants) variants.push_back(loss_variant_name(v));
  j["loss_variants"] = variants;
  j["supervision"] = supervision_name(cfg.supervision);
  j["alpha"] = cfg.alpha;
  j["out_dir"] = cfg.out_dir.string();
  j["data_seed"] = cfg.data_seed;
  j["num_categories"] = cfg.num_categories;
  j["jobs"] = cfg.jobs;
  return j;
}

HarnessConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known{"data_root", "categories", "seeds",    "epochs",
                                           "batch_size", "loss_variants", "supervision", "alpha",
                                           "out_dir",   "data_seed",  "num_categories", "jobs"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
  }
  HarnessConfig cfg;
  if (j.contains("data_root")) cfg.data_root = get_as<std::string>(j, "data_root");
  if (j.contains("categories")) cfg.categories = get_as<std::vector<std::string>>(j, "categories");
  if (j.contains("seeds")) cfg.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds");
  if (j.contains("epochs")) cfg.epochs = get_as<int>(j, "epochs");
  if (j.contains("batch_size")) cfg.batch_size = get_as<std::size_t>(j, "batch_size");
  if (j.contains("loss_variants")) {
    cfg.variants.clear();
    for (const auto& v : get_as<std::vector<std::string>>(j, "loss_variants")) {
      cfg.variants.push_back(parse_loss_variant(v));
    }
  }
  if (j.contains("supervision")) cfg.supervision = parse_supervision(get_as<std::string>(j, "supervision"));
  if (j.contains("alpha")) cfg.alpha = get_as<double>(j, "alpha");
  if (j.contains("out_dir")) cfg.out_dir = get_as<std::string>(j, "out_dir");
  if (j.contains("data_seed")) cfg.data_seed = get_as<std::uint64_t>(j, "data_seed");
  if (j.contains("num_categories")) cfg.num_categories = get_as<std::size_t>(j, "num_categories");
  if (j.contains("jobs")) cfg.jobs = get_as<int>(j, "jobs");
  validate(cfg);
  return cfg;
}

HarnessConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void validate(const HarnessConfig& cfg) {
  if (cfg.seeds.empty()) throw ValidationError("config: seeds must not be empty");
  if (cfg.epochs < 1) throw ValidationError("config: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ValidationError("config: batch_size must be >= 1");
  if (cfg.variants.empty()) throw ValidationError("config: loss_variants must not be empty");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("config: alpha must lie in (0,1)");
  if (cfg.num_categories < 1 || cfg.num_categories > 10) {
    throw ValidationError("config: num_categories must be in [1,10]");
  }
  if (cfg.jobs < 1) throw ValidationError("config: jobs must be >= 1");
  if (cfg.out_dir.empty()) throw ValidationError("config: out_dir must not be empty");
}

ordered_json record_to_json(const RunRecord& r) {
  ordered_json j;
  j["run_id"] = r.run_id;
  j["category"] = r.category;
  j["seed"] = r.seed;
  j["loss_variant"] = loss_variant_name(r.loss_variant);
  j["supervision"] = supervision_name(r.supervision);
  j["epochs"] = r.epochs;
  j["pixel_auroc"] = r.pixel_auroc;
  j["pixel_ap"] = r.pixel_ap;
  j["wall_time_s"] = r.wall_time_s;
  j["config_digest"] = r.config_digest;
  j["created_at"] = r.created_at;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.category = j.at("category").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.loss_variant = parse_loss_variant(j.at("loss_variant").get<std::string>());
    r.supervision = parse_supervision(j.at("supervision").get<std::string>());
    r.epochs = j.at("epochs").get<int>();
    r.pixel_auroc = j.at("pixel_auroc").get<double>();
    r.pixel_ap = j.at("pixel_ap").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.created_at = j.at("created_at").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed run record: ") + e.what());
  }
  for (double m : {r.pixel_auroc, r.pixel_ap}) {
    if (!(m >= 0.0 && m <= 1.0)) throw ValidationError("run record " + r.run_id + ": metric outside [0,1]");
  }
  return r;
}

std::string record_fingerprint(const RunRecord& r) {
  ordered_json j = record_to_json(r);
  j.erase("wall_time_s");
  j.erase("created_at");
  return j.dump();
}

ordered_json run_spec_json(const RunSpec& spec) {
  ordered_json j;
  j["category"] = spec.category;
  j["loss_variant"] = loss_variant_name(spec.variant);
  j["supervision"] = supervision_name(spec.supervision);
  j["epochs"] = spec.epochs;
  j["batch_size"] = spec.batch_size;
  j["dataset"] = spec.dataset_digest;
  return j;
}

std::string config_digest(const RunSpec& spec) { return hex64(fnv1a64(run_spec_json(spec).dump())); }

std::string make_run_id(const RunSpec& spec, std::uint64_t seed) {
  return hex64(splitmix64(fnv1a64(run_spec_json(spec).dump()) ^ splitmix64(seed)));
}

void cmd_gen_data(const HarnessConfig& cfg, bool force, std::ostream& log) {
  validate(cfg);
  const fs::path root = cfg.resolved_data_root();
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!force) {
      throw ValidationError("output " + root.string() + " exists and is not empty (use --force to overwrite)");
    }
    if (!fs::exists(root / "manifest.json")) {
      throw ValidationError("refusing to overwrite " + root.string() + ": not a dataset directory");
    }
    fs::remove_all(root);
  }
  std::vector<CategorySpec> specs;
  for (std::size_t i = 0; i < cfg.num_categories; ++i) specs.push_back(make_category(static_cast<int>(i)));
  write_dataset(root, specs, cfg.data_seed, DatasetCounts{});
  log << "wrote " << specs.size() << " categories to " << root.string() << '\n';
}

RunRecord execute_run(const CategoryData& data, const RunSpec& spec, std::uint64_t seed,
                      FcnParams* params_out, std::vector<EpochLog>* log_out) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig tc;
  tc.variant = spec.variant;
  tc.supervision = spec.supervision;
  tc.seed = seed;
  tc.epochs = spec.epochs;
  tc.batch_size = spec.batch_size;
  TrainResult tr = train_run(data, tc);
  std::vector<std::size_t> excluded;
  if (spec.supervision == Supervision::semi) excluded = select_semi_images(data, seed);
  const EvalResult ev = evaluate(tr.params, data, excluded, spec.batch_size);

  RunRecord r;
  r.run_id = make_run_id(spec, seed);
  r.category = spec.category;
  r.seed = seed;
  r.loss_variant = spec.variant;
  r.supervision = spec.supervision;
  r.epochs = spec.epochs;
  r.pixel_auroc = ev.metrics.auroc;
  r.pixel_ap = ev.metrics.ap;
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.config_digest = config_digest(spec);
  r.created_at = utc_now();
  if (params_out) *params_out = std::move(tr.params);
  if (log_out) *log_out = std::move(tr.log);
  return r;
}

std::vector<RunRecord> cmd_train(const HarnessConfig& cfg, bool force, std::ostream& log) {
  validate(cfg);
  const fs::path root = cfg.resolved_data_root();
  if (!fs::exists(root / "manifest.json")) {
    throw ValidationError("no dataset at " + root.string() + " (run gen-data first)");
  }
  const ordered_json manifest = read_manifest(root);
  const std::vector<std::string> cats = selected_categories(cfg, manifest);
  const std::string digest = dataset_digest(root);

  fs::create_directories(cfg.out_dir / "checkpoints");
  fs::create_directories(cfg.out_dir / "logs");

  std::set<std::string> done;
  for (const RunRecord& r : read_results(cfg.results_path())) done.insert(r.run_id);

  std::vector<PlannedRun> all, todo;
  for (const std::string& c : cats) {
    for (std::uint64_t seed : cfg.seeds) {
      for (LossVariant v : cfg.variants) {
        PlannedRun p{RunSpec{c, v, cfg.supervision, cfg.epochs, cfg.batch_size, digest}, seed, {}};
        p.run_id = make_run_id(p.spec, seed);
        all.push_back(p);
        if (force || !done.count(p.run_id)) {
          todo.push_back(p);
        } else {
          log << p.run_id << "  skipped (already recorded)\n";
        }
      }
    }
  }

  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(todo.size()));
  if (jobs <= 1) {
    run_serial(cfg, todo, log);
  } else {
    // Children must not re-emit whatever the parent still has buffered.
    log.flush();
    std::cout.flush();
    std::fflush(nullptr);
    std::vector<pid_t> children;
    for (int w = 0; w < jobs; ++w) {
      std::vector<PlannedRun> mine;
      for (std::size_t i = w; i < todo.size(); i += jobs) mine.push_back(todo[i]);
      const pid_t pid = fork();
      if (pid < 0) throw std::runtime_error("fork failed");
      if (pid == 0) {
        int code = 0;
        try {
#ifdef _OPENMP
          omp_set_num_threads(1);
#endif
          std::ostringstream buf;
          for (const PlannedRun& p : mine) {
            run_serial(cfg, {p}, buf);
            std::fputs(buf.str().c_str(), stdout);
            std::fflush(stdout);
            buf.str("");
          }
        } catch (const std::exception& e) {
          std::fprintf(stderr, "worker %d: %s\n", w, e.what());
          code = exit_code_for(e);
        }
        std::_Exit(code);
      }
      children.push_back(pid);
    }
    int worst = 0;
    for (pid_t pid : children) {
      int status = 0;
      waitpid(pid, &status, 0);
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 2;
      worst = std::max(worst, code);
    }
    if (worst == 2) throw NumericalError("a training worker failed with a numerical error");
    if (worst != 0) throw ValidationError("a training worker failed");
  }

  std::map<std::string, RunRecord> by_id;
  for (RunRecord& r : read_results(cfg.results_path())) by_id[r.run_id] = std::move(r);
  std::vector<RunRecord> out;
  for (const PlannedRun& p : all) {
    auto it = by_id.find(p.run_id);
    if (it == by_id.end()) throw std::runtime_error("run " + p.run_id + " missing from results");
    out.push_back(it->second);
  }
  return out;
}

PixelScores cmd_eval(const EvalRequest& req, std::ostream& out) {
  const FcnParams params = load_checkpoint(req.checkpoint);
  const ordered_json manifest = read_manifest(req.data_root);
  const CategoryData data = load_category(req.data_root, manifest, req.category);
  std::vector<std::size_t> excluded;
  if (req.supervision == Supervision::semi) excluded = select_semi_images(data, req.seed);
  const EvalResult ev = evaluate(params, data, excluded);
  out << "category " << req.category << "\n"
      << "pixel_auroc " << fmt("%.6f", ev.metrics.auroc) << "\n"
      << "pixel_ap " << fmt("%.6f", ev.metrics.ap) << "\n";
  if (req.heatmap_dir) {
    fs::create_directories(*req.heatmap_dir);
    const std::size_t h = ev.scores.dim(2), w = ev.scores.dim(3);
    for (std::size_t k = 0; k < ev.test_indices.size(); ++k) {
      Tensor map({1, h, w});
      std::copy_n(ev.scores.data() + k * h * w, h * w, map.data());
      const std::string stem = fs::path(data.test[ev.test_indices[k]].file).stem().string();
      write_heatmap_pgm(*req.heatmap_dir / (stem + "_heatmap.pgm"), map);
    }
    out << "wrote " << ev.test_indices.size() << " heatmaps to " << req.heatmap_dir->string() << "\n";
  }
  return ev.metrics;
}

std::vector<RunRecord> read_results(const fs::path& path) {
  std::vector<RunRecord> out;
  if (!fs::exists(path)) return out;
  std::ifstream in(path);
  std::string line;
  std::map<std::string, std::size_t> index;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    RunRecord r = record_from_json(j);
    auto it = index.find(r.run_id);
    if (it != index.end()) {
      out[it->second] = std::move(r);
    } else {
      index.emplace(r.run_id, out.size());
      out.push_back(std::move(r));
    }
  }
  return out;
}

void append_result(const fs::path& path, const RunRecord& r) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const std::string line = record_to_json(r).dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw ValidationError("cannot open " + path.string());
  if (::flock(fd, LOCK_EX) != 0) {
    ::close(fd);
    throw std::runtime_error("cannot lock " + path.string());
  }
  std::size_t written = 0;
  bool ok = true;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n <= 0) {
      ok = false;
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::flock(fd, LOCK_UN);
  ::close(fd);
  if (!ok) throw std::runtime_error("write failed: " + path.string());
}

std::string metric_name(Metric m) { return m == Metric::auroc ? "auroc" : "ap"; }

Metric parse_metric(const std::string& s) {
  if (s == "auroc") return Metric::auroc;
  if (s == "ap") return Metric::ap;
  throw ValidationError("unknown metric '" + s + "' (expected auroc|ap)");
}

std::string method_label(const RunRecord& r) {
  std::string m = loss_variant_name(r.loss_variant);
  if (r.supervision == Supervision::semi) m += "-semi";
  return m;
}

Comparison compare_records(const std::vector<RunRecord>& records, Metric metric, double alpha) {
  // method -> category -> seed -> value
  std::map<std::string, std::map<std::string, std::map<std::uint64_t, double>>> grouped;
  for (const RunRecord& r : records) {
    grouped[method_label(r)][r.category][r.seed] = metric == Metric::auroc ? r.pixel_auroc : r.pixel_ap;
  }
  if (grouped.size() < 2) throw ValidationError("compare: need records of at least two methods");

  std::set<std::string> cats;
  for (const auto& [m, per_cat] : grouped) {
    for (const auto& [c, v] : per_cat) cats.insert(c);
  }
  std::string mismatch;
  for (const auto& [m, per_cat] : grouped) {
    for (const std::string& c : cats) {
      if (!per_cat.count(c)) mismatch += "\n  " + m + " has no records for " + c;
    }
  }
  if (!mismatch.empty()) throw ValidationError("compare: category sets differ between methods:" + mismatch);
  if (cats.size() < 3) throw ValidationError("compare: need at least three common categories");

  Comparison out;
  out.metric = metric;
  out.means.datasets.assign(cats.begin(), cats.end());
  for (const auto& [m, per_cat] : grouped) {
    out.means.methods.push_back(m);
    std::vector<double> means, stds;
    std::vector<std::size_t> counts;
    for (const std::string& c : out.means.datasets) {
      const auto& seeds = per_cat.at(c);
      double sum = 0.0;
      for (const auto& [s, v] : seeds) sum += v;
      const double mean = sum / static_cast<double>(seeds.size());
      double ss = 0.0;
      for (const auto& [s, v] : seeds) ss += (v - mean) * (v - mean);
      means.push_back(mean);
      stds.push_back(seeds.size() > 1 ? std::sqrt(ss / static_cast<double>(seeds.size() - 1)) : 0.0);
      counts.push_back(seeds.size());
    }
    out.means.values.push_back(std::move(means));
    out.stds.push_back(std::move(stds));
    out.seed_counts.push_back(std::move(counts));
  }
  out.means.validate();
  out.model = build_cd_model(out.means, alpha);
  return out;
}

std::string comparison_csv(const Comparison& c) {
  std::string s = "method,category,mean_metric,std_metric\n";
  for (std::size_t m = 0; m < c.means.methods.size(); ++m) {
    for (std::size_t d = 0; d < c.means.datasets.size(); ++d) {
      s += c.means.methods[m] + "," + c.means.datasets[d] + "," + fmt("%.6f", c.means.values[m][d]) + "," +
           fmt("%.6f", c.stds[m][d]) + "\n";
    }
  }
  return s;
}

std::string comparison_table(const Comparison& c) {
  const std::size_t k = c.means.methods.size();
  std::size_t width = 14;
  for (const auto& d : c.means.datasets) width = std::max(width, d.size() + 2);
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  std::string s = pad("category", width);
  for (const auto& m : c.means.methods) s += pad(m, 18);
  s += "\n";
  for (std::size_t d = 0; d < c.means.datasets.size(); ++d) {
    s += pad(c.means.datasets[d], width);
    for (std::size_t m = 0; m < k; ++m) s += pad(fmt("%.4f", c.means.values[m][d]), 18);
    s += "\n";
  }
  s += pad("mean (std)", width);
  for (std::size_t m = 0; m < k; ++m) {
    const auto& v = c.means.values[m];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    s += pad(fmt("%.4f", mean) + " (" + fmt("%.4f", sd) + ")", 18);
  }
  s += "\n";
  return s;
}

static void print_cd_model(const CdModel& model, std::ostream& out) {
  out << "average ranks:";
  for (std::size_t m = 0; m < model.methods.size(); ++m) {
    out << "  " << model.methods[m] << ' ' << fmt("%.3f", model.avg_ranks[m]);
  }
  out << "\npairwise Wilcoxon signed-rank (Holm, alpha " << fmt("%.2f", model.alpha) << "):\n";
  for (std::size_t a = 0; a < model.methods.size(); ++a) {
    for (std::size_t b = a + 1; b < model.methods.size(); ++b) {
      out << "  " << model.methods[a] << " vs " << model.methods[b] << "  W "
          << fmt("%.1f", model.statistic[a][b]) << "  p " << fmt("%.6g", model.raw_p[a][b])
          << "  p_holm " << fmt("%.6g", model.adjusted_p[a][b])
          << (model.adjusted_p[a][b] < model.alpha ? "  significant" : "") << "\n";
    }
  }
}

Comparison cmd_compare(const std::vector<fs::path>& results, Metric metric, double alpha,
                       const fs::path& out_dir, std::ostream& out) {
  if (results.empty()) throw ValidationError("compare: no results files given");
  std::map<std::string, RunRecord> merged;
  for (const fs::path& p : results) {
    if (!fs::exists(p)) throw ValidationError("compare: no results file " + p.string());
    for (RunRecord& r : read_results(p)) merged[r.run_id] = std::move(r);
  }
  std::vector<RunRecord> records;
  for (auto& [id, r] : merged) records.push_back(std::move(r));

  Comparison c = compare_records(records, metric, alpha);
  fs::create_directories(out_dir);
  write_file_atomic(out_dir / ("compare_" + metric_name(metric) + ".csv"), comparison_csv(c));
  render_cd_svg(c.model, out_dir / ("cd_" + metric_name(metric) + ".svg"));

  out << "pixel " << metric_name(metric) << " (seed means)\n" << comparison_table(c) << "\n";
  print_cd_model(c.model, out);
  out << "wrote " << (out_dir / ("compare_" + metric_name(metric) + ".csv")).string() << " and "
      << (out_dir / ("cd_" + metric_name(metric) + ".svg")).string() << "\n";
  return c;
}

CdModel cmd_compare_matrix(const fs::path& csv, double alpha, const fs::path& out_dir, std::ostream& out) {
  const CdModel model = build_cd_model(read_score_matrix_csv(csv), alpha);
  fs::create_directories(out_dir);
  const fs::path svg = out_dir / (csv.stem().string() + "_cd.svg");
  render_cd_svg(model, svg);
  print_cd_model(model, out);
  out << "wrote " << svg.string() << "\n";
  return model;
}

int cmd_loss_check(std::ostream& out) {
  const GradCheckReport report = run_gradient_checks();
  for (const GradCheckStats& s : report.ops) {
    char line[160];
    std::snprintf(line, sizeof line, "%-20s cases %3d  skipped %3d  max rel err %.3e  tol %.0e  %s\n",
                  s.op.c_str(), s.cases, s.skipped, s.max_rel_error, s.tolerance,
                  s.passed() ? "ok" : "FAIL");
    out << line;
  }
  out << fmt("%.2f", report.seconds) << "s  " << (report.passed() ? "all gradients ok" : "gradient check FAILED")
      << "\n";
  return report.passed() ? 0 : 2;
}

}  // namespace hsseg
