// tpi: text prompt injection toolkit.
//
// Subcommands: inject, manifest, run, sweep, evaluate, pgd-demo. Settings
// resolve as flags > --config JSON > built-in defaults, and every run prints
// its effective settings in a reproducibility header.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tpi/dataset.hpp"
#include "tpi/debug_dump.hpp"
#include "tpi/errors.hpp"
#include "tpi/eval.hpp"
#include "tpi/image.hpp"
#include "tpi/inject.hpp"
#include "tpi/pgd.hpp"
#include "tpi/png_codec.hpp"
#include "tpi/ppm.hpp"
#include "tpi/resize.hpp"
#include "tpi/version.hpp"
#include "tpi/vlm_client.hpp"

namespace fs = std::filesystem;

namespace {

// Documented exit-code families (also in README).
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;
constexpr int kExitValidation = 5;
constexpr int kExitPlacement = 6;
constexpr int kExitEndpoint = 7;
constexpr int kExitOracle = 8;

int exit_code_for(tpi::Errc code) {
  using tpi::Errc;
  switch (code) {
    case Errc::IoError:
      return kExitIo;
    case Errc::MalformedHeader:
    case Errc::MaxvalUnsupported:
    case Errc::TruncatedPayload:
    case Errc::PngDecodeError:
    case Errc::PngEncodeError:
    case Errc::JsonError:
    case Errc::CorruptRecord:
      return kExitFormat;
    case Errc::InvalidArgument:
    case Errc::DimensionMismatch:
    case Errc::EmptyText:
    case Errc::UnsupportedGlyph:
    case Errc::FontTooSmall:
    case Errc::OutOfBounds:
    case Errc::EmptyDataset:
    case Errc::SampleTooLarge:
    case Errc::TooFewBreeds:
    case Errc::EmptyRecords:
      return kExitValidation;
    case Errc::DoesNotFit:
    case Errc::StampTooLarge:
    case Errc::NoValidPosition:
    case Errc::PlacementExhausted:
    case Errc::ConsistencyUnreachable:
      return kExitPlacement;
    case Errc::TransportError:
    case Errc::HttpError:
    case Errc::MalformedResponse:
      return kExitEndpoint;
    case Errc::OracleFailure:
      return kExitOracle;
  }
  return kExitInternal;
}

// All tunables of every subcommand, in one bag so a --config file can feed
// any of them. Keys match the long flag names with '-' replaced by '_'.
struct Settings {
  // shared
  std::string config_path;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware threads
  // inject
  std::string in_path;
  std::string out_path;
  std::string text;
  int eps = 16;
  int repeats = 1;
  int font_size = 30;
  int stride = 1;
  bool dynamic = false;
  double limit = 400.0;
  int z_max = 50;
  int z_min = 10;
  bool allow_partial = false;
  std::string report_path;
  std::string dump_stamp;
  std::string dump_heatmap;
  // manifest
  std::string dataset_dir;
  std::string manifest_out;
  int sample = 0;  // 0 = keep all
  // run / sweep
  std::string manifest_path;
  std::string records_path;
  std::string out_dir;
  std::string base_url;
  std::string model = "llava-next-72b";
  std::string api_key_env = "TPI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 3;
  int max_in_flight = 4;
  int backoff_ms = 1000;
  bool self_check = false;
  bool attack = false;
  bool dry_run = false;
  bool resume = false;
  std::vector<int> eps_grid = {8, 16, 32};
  std::vector<int> repeats_grid = {1, 4, 8};
  std::vector<int> font_grid = {10, 20, 30, 40, 50};
  // evaluate
  std::string records_dir;
  bool table = false;
  std::string table_out;
  std::string csv_out;
  // pgd-demo
  std::string oracle = "quadratic";
  int steps = 50;
  double pgd_eps = 16.0;  // 8-bit channel units
  double alpha = 0.0;     // 0 = eps/10
  int width = 16;
  int height = 16;
  bool maximize = false;
  std::string trace_path = "pgd_trace.csv";
  std::string out_prefix = "pgd";
};

// Manual pre-scan so config values land before CLI11 parses the real flags;
// CLI11 then only overwrites what the user actually passed.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

template <typename T>
void maybe_set(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_config(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) tpi::fail(tpi::Errc::IoError, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    tpi::fail(tpi::Errc::JsonError, std::string("bad config JSON: ") + ex.what());
  }
  maybe_set(j, "seed", s.seed);
  maybe_set(j, "jobs", s.jobs);
  maybe_set(j, "text", s.text);
  maybe_set(j, "eps", s.eps);
  maybe_set(j, "repeats", s.repeats);
  maybe_set(j, "font_size", s.font_size);
  maybe_set(j, "stride", s.stride);
  maybe_set(j, "dynamic", s.dynamic);
  maybe_set(j, "limit", s.limit);
  maybe_set(j, "z_max", s.z_max);
  maybe_set(j, "z_min", s.z_min);
  maybe_set(j, "allow_partial", s.allow_partial);
  maybe_set(j, "base_url", s.base_url);
  maybe_set(j, "model", s.model);
  maybe_set(j, "api_key_env", s.api_key_env);
  maybe_set(j, "timeout", s.timeout_s);
  maybe_set(j, "max_retries", s.max_retries);
  maybe_set(j, "max_in_flight", s.max_in_flight);
  maybe_set(j, "backoff_ms", s.backoff_ms);
  maybe_set(j, "self_check", s.self_check);
  maybe_set(j, "eps_grid", s.eps_grid);
  maybe_set(j, "repeats_grid", s.repeats_grid);
  maybe_set(j, "font_grid", s.font_grid);
  maybe_set(j, "sample", s.sample);
  maybe_set(j, "steps", s.steps);
  maybe_set(j, "pgd_eps", s.pgd_eps);
  maybe_set(j, "alpha", s.alpha);
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void print_header(const std::string& command, const KeyValues& kv) {
  std::cout << "# tpi " << tpi::kVersion << " " << command << "\n";
  std::cout << "#";
  for (const auto& [k, v] : kv) std::cout << " " << k << "=" << v;
  std::cout << "\n";
}

nlohmann::json header_json(const std::string& command, const KeyValues& kv) {
  nlohmann::json j;
  j["tool"] = std::string("tpi ") + tpi::kVersion;
  j["command"] = command;
  for (const auto& [k, v] : kv) j["settings"][k] = v;
  return j;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

void save_image_file(const std::string& path, const tpi::Image& img) {
  std::string ext = fs::path(path).extension().string();
  if (ext == ".png") {
    tpi::write_file(path, tpi::encode_png(img));
  } else {
    tpi::write_file(path, tpi::save_ppm(img));
  }
}

nlohmann::json report_json(const tpi::InjectionReport& report) {
  nlohmann::json placements = nlohmann::json::array();
  for (const auto& p : report.placements)
    placements.push_back({{"x", p.x},
                          {"y", p.y},
                          {"w", p.w},
                          {"h", p.h},
                          {"score", p.score},
                          {"polarity", p.polarity}});
  return nlohmann::json{{"font_size", report.font_size},
                        {"stamp_w", report.stamp_w},
                        {"stamp_h", report.stamp_h},
                        {"lines", report.lines},
                        {"realized_max_delta", report.realized_max_delta},
                        {"partial", report.partial},
                        {"placements", std::move(placements)}};
}

// ---- inject ----

int cmd_inject(const Settings& s) {
  KeyValues kv = {{"in", s.in_path},
                  {"out", s.out_path},
                  {"text", s.text},
                  {"eps", std::to_string(s.eps)},
                  {"repeats", std::to_string(s.repeats)},
                  {"font_size", std::to_string(s.font_size)},
                  {"stride", std::to_string(s.stride)},
                  {"dynamic", s.dynamic ? "true" : "false"},
                  {"limit", std::to_string(s.limit)},
                  {"z_max", std::to_string(s.z_max)},
                  {"z_min", std::to_string(s.z_min)},
                  {"allow_partial", s.allow_partial ? "true" : "false"}};
  print_header("inject", kv);

  tpi::Image input = tpi::load_image_file(s.in_path);
  tpi::Image output;
  tpi::InjectionReport report;
  if (s.dynamic) {
    std::tie(output, report) =
        tpi::inject_dynamic(input, s.text, s.eps, s.repeats, s.limit, s.z_max, s.z_min, s.stride);
  } else {
    tpi::InjectionConfig cfg;
    cfg.text = s.text;
    cfg.font_size = s.font_size;
    cfg.epsilon = s.eps;
    cfg.repeats = s.repeats;
    cfg.stride = s.stride;
    cfg.allow_partial = s.allow_partial;
    std::tie(output, report) = tpi::inject(input, cfg);
  }
  save_image_file(s.out_path, output);

  if (!s.dump_stamp.empty()) {
    tpi::TextStamp stamp = tpi::layout_text(s.text, report.font_size, input.width);
    save_image_file(s.dump_stamp, tpi::stamp_to_image(stamp));
  }
  if (!s.dump_heatmap.empty()) {
    tpi::IntegralTables tables(input);
    auto map = tpi::consistency_map(tables, report.stamp_w, report.stamp_h, s.stride);
    save_image_file(s.dump_heatmap, tpi::heatmap_to_image(map));
  }
  if (!s.report_path.empty()) {
    nlohmann::json j = header_json("inject", kv);
    j["result"] = report_json(report);
    std::ofstream out(s.report_path, std::ios::trunc);
    if (!out) tpi::fail(tpi::Errc::IoError, "cannot open " + s.report_path + " for writing");
    out << j.dump(2) << "\n";
  }
  std::cout << "placed " << report.placements.size() << " repeats at font size "
            << report.font_size << ", realized max delta " << report.realized_max_delta
            << (report.partial ? " (partial)" : "") << "\n";
  return kExitOk;
}

// ---- manifest ----

int cmd_manifest(const Settings& s) {
  KeyValues kv = {{"dir", s.dataset_dir},
                  {"out", s.manifest_out},
                  {"sample", std::to_string(s.sample)},
                  {"seed", std::to_string(s.seed)}};
  print_header("manifest", kv);

  auto images = tpi::scan_dataset(s.dataset_dir);
  if (s.sample > 0) images = tpi::sample_subset(images, static_cast<std::size_t>(s.sample), s.seed);
  tpi::Manifest manifest = tpi::build_manifest(images, s.seed);
  tpi::write_manifest(s.manifest_out, manifest);
  std::cout << "wrote " << manifest.entries.size() << " entries to " << s.manifest_out << "\n";
  return kExitOk;
}

// ---- run ----

tpi::EndpointConfig endpoint_from(const Settings& s) {
  tpi::EndpointConfig cfg;
  cfg.base_url = s.base_url;
  cfg.api_key_env = s.api_key_env;
  cfg.model = s.model;
  cfg.timeout_s = s.timeout_s;
  cfg.max_retries = s.max_retries;
  cfg.max_in_flight = s.max_in_flight;
  cfg.backoff_base_ms = s.backoff_ms;
  return cfg;
}

int cmd_run(const Settings& s) {
  KeyValues kv = {{"manifest", s.manifest_path},
                  {"records", s.records_path},
                  {"base_url", s.base_url},
                  {"model", s.model},
                  {"attack", s.attack ? "true" : "false"},
                  {"eps", std::to_string(s.eps)},
                  {"repeats", std::to_string(s.repeats)},
                  {"font_size", std::to_string(s.font_size)},
                  {"seed", std::to_string(s.seed)},
                  {"max_in_flight", std::to_string(s.max_in_flight)},
                  {"self_check", s.self_check ? "true" : "false"}};
  print_header("run", kv);

  tpi::Manifest manifest = tpi::read_manifest(s.manifest_path);
  std::optional<tpi::AttackSpec> attack;
  if (s.attack)
    attack = tpi::AttackSpec{s.eps, s.repeats, s.font_size, s.stride, s.allow_partial};
  tpi::RunOptions options{s.records_path, s.seed, s.self_check};
  auto records = tpi::run_trials(endpoint_from(s), manifest, attack, options);
  auto metrics = tpi::compute_metrics(records);
  std::cout << "total=" << metrics.total << " unmatched=" << metrics.unmatched
            << " untargeted_asr=" << tpi::format_tenths(metrics.untargeted_asr_tenths)
            << "% targeted_asr=" << tpi::format_tenths(metrics.targeted_asr_tenths)
            << "% accuracy=" << tpi::format_tenths(metrics.accuracy_tenths) << "%\n";
  return kExitOk;
}

// ---- sweep ----

std::string cell_records_name(int eps, int repeats, int font) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "records_e%d_r%d_z%d.jsonl", eps, repeats, font);
  return buf;
}

bool cell_complete(const fs::path& file, std::size_t expected) {
  std::ifstream in(file);
  if (!in) return false;
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  return lines >= expected;
}

void sweep_dry_run(const Settings& s, const tpi::Manifest& manifest) {
  fs::create_directories(fs::path(s.out_dir) / "images");
  unsigned jobs = s.jobs > 0 ? static_cast<unsigned>(s.jobs)
                             : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= manifest.entries.size()) return;
      const auto& entry = manifest.entries[i];
      tpi::Image resized;
      try {
        resized = tpi::resize_bilinear(tpi::load_image_file(entry.path), tpi::kModelInputSize,
                                       tpi::kModelInputSize);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "skip " << entry.id << ": " << e.what() << "\n";
        continue;
      }
      for (int eps : s.eps_grid) {
        for (int repeats : s.repeats_grid) {
          for (int font : s.font_grid) {
            tpi::InjectionConfig cfg;
            cfg.text = tpi::make_inject_prompt(entry.choices.target);
            cfg.font_size = font;
            cfg.epsilon = eps;
            cfg.repeats = repeats;
            cfg.stride = s.stride;
            cfg.allow_partial = s.allow_partial;
            char name[128];
            std::snprintf(name, sizeof(name), "%s_e%d_r%d_z%d.png", entry.id.c_str(), eps, repeats,
                          font);
            try {
              auto [injected, report] = tpi::inject(resized, cfg);
              tpi::write_file((fs::path(s.out_dir) / "images" / name).string(),
                              tpi::encode_png(injected));
            } catch (const tpi::Error& e) {
              std::lock_guard<std::mutex> lock(log_mutex);
              std::cerr << "cell (" << eps << "," << repeats << "," << font << ") " << entry.id
                        << ": " << e.name() << "\n";
            }
          }
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

int cmd_sweep(const Settings& s) {
  KeyValues kv = {{"manifest", s.manifest_path},
                  {"out_dir", s.out_dir},
                  {"eps_grid", join_ints(s.eps_grid)},
                  {"repeats_grid", join_ints(s.repeats_grid)},
                  {"font_grid", join_ints(s.font_grid)},
                  {"dry_run", s.dry_run ? "true" : "false"},
                  {"resume", s.resume ? "true" : "false"},
                  {"base_url", s.base_url},
                  {"model", s.model},
                  {"seed", std::to_string(s.seed)},
                  {"allow_partial", s.allow_partial ? "true" : "false"}};
  print_header("sweep", kv);

  tpi::Manifest manifest = tpi::read_manifest(s.manifest_path);
  fs::create_directories(s.out_dir);

  if (s.dry_run) {
    sweep_dry_run(s, manifest);
    std::cout << "dry run: wrote injected variants under " << s.out_dir << "/images\n";
    return kExitOk;
  }

  std::vector<tpi::CellSummary> cells;
  for (int eps : s.eps_grid) {
    for (int repeats : s.repeats_grid) {
      for (int font : s.font_grid) {
        fs::path records_file = fs::path(s.out_dir) / cell_records_name(eps, repeats, font);
        if (s.resume && cell_complete(records_file, manifest.entries.size())) {
          std::cout << "cell (" << eps << "," << repeats << "," << font << "): resume skip\n";
        } else {
          tpi::AttackSpec attack{eps, repeats, font, s.stride, s.allow_partial};
          tpi::RunOptions options{records_file.string(), s.seed, s.self_check};
          try {
            tpi::run_trials(endpoint_from(s), manifest, attack, options);
          } catch (const tpi::Error& e) {
            std::cerr << "cell (" << eps << "," << repeats << "," << font << ") failed: "
                      << e.what() << "\n";
            continue;
          }
        }
        try {
          auto records = tpi::read_records(records_file.string());
          cells.push_back(
              {tpi::AttackParams{eps, repeats, font}, tpi::compute_metrics(records)});
        } catch (const tpi::Error& e) {
          std::cerr << "cell (" << eps << "," << repeats << "," << font << ") unreadable: "
                    << e.what() << "\n";
        }
      }
    }
  }
  require(!cells.empty(), tpi::Errc::EmptyRecords, "no sweep cell produced records");

  tpi::SweepTables tables = tpi::render_tables(cells);
  std::cout << tables.text;
  std::ofstream text_out(fs::path(s.out_dir) / "tables.txt", std::ios::trunc);
  text_out << tables.text;
  std::ofstream csv_out(fs::path(s.out_dir) / "tables.csv", std::ios::trunc);
  csv_out << tables.csv;
  std::cout << "tables written to " << s.out_dir << "/tables.{txt,csv}\n";
  return kExitOk;
}

// ---- evaluate ----

int cmd_evaluate(const Settings& s) {
  KeyValues kv = {{"records", s.records_path},
                  {"records_dir", s.records_dir},
                  {"table", s.table ? "true" : "false"}};
  print_header("evaluate", kv);

  std::vector<std::string> files;
  if (!s.records_path.empty()) files.push_back(s.records_path);
  if (!s.records_dir.empty()) {
    for (const auto& entry : fs::directory_iterator(s.records_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
  }
  require(!files.empty(), tpi::Errc::EmptyRecords, "no records file given");

  std::map<std::optional<tpi::AttackParams>, std::vector<tpi::TrialRecord>> groups;
  for (const auto& file : files) {
    for (auto& r : tpi::read_records(file)) {
      auto key = r.attack;
      groups[key].push_back(std::move(r));
    }
  }

  for (const auto& [params, records] : groups) {
    auto metrics = tpi::compute_metrics(records);
    if (params) {
      std::cout << "eps=" << params->epsilon << " repeats=" << params->repeats
                << " font_size=" << params->font_size << ": ";
    } else {
      std::cout << "baseline: ";
    }
    std::cout << "total=" << metrics.total << " unmatched=" << metrics.unmatched
              << " untargeted_asr=" << tpi::format_tenths(metrics.untargeted_asr_tenths)
              << "% targeted_asr=" << tpi::format_tenths(metrics.targeted_asr_tenths)
              << "% accuracy=" << tpi::format_tenths(metrics.accuracy_tenths) << "%\n";
  }

  if (s.table) {
    std::vector<tpi::CellSummary> cells;
    for (const auto& [params, records] : groups)
      if (params) cells.push_back({*params, tpi::compute_metrics(records)});
    require(!cells.empty(), tpi::Errc::EmptyRecords, "--table needs attack-tagged records");
    tpi::SweepTables tables = tpi::render_tables(cells);
    std::cout << tables.text;
    if (!s.table_out.empty()) {
      std::ofstream out(s.table_out, std::ios::trunc);
      out << tables.text;
    }
    if (!s.csv_out.empty()) {
      std::ofstream out(s.csv_out, std::ios::trunc);
      out << tables.csv;
    }
  }
  return kExitOk;
}

// ---- pgd-demo ----

int cmd_pgd_demo(const Settings& s) {
  double eps = s.pgd_eps / 255.0;
  double alpha = s.alpha > 0.0 ? s.alpha : eps / 10.0;
  KeyValues kv = {{"oracle", s.oracle},
                  {"steps", std::to_string(s.steps)},
                  {"eps", std::to_string(s.pgd_eps)},
                  {"alpha", std::to_string(alpha)},
                  {"width", std::to_string(s.width)},
                  {"height", std::to_string(s.height)},
                  {"maximize", s.maximize ? "true" : "false"},
                  {"seed", std::to_string(s.seed)}};
  print_header("pgd-demo", kv);

  tpi::FloatImage x0(s.width, s.height);
  tpi::SplitMix64 rng(s.seed);
  for (auto& v : x0.values) v = rng.next_unit();

  tpi::LossOracle oracle;
  if (s.oracle == "linear") {
    std::vector<double> weights(x0.size());
    tpi::SplitMix64 wrng(s.seed ^ 0xA5A5A5A5ULL);
    for (auto& w : weights) w = wrng.next_unit() * 2.0 - 1.0;
    oracle = tpi::make_linear_oracle(std::move(weights));
  } else if (s.oracle == "quadratic") {
    tpi::FloatImage target(s.width, s.height, 0.5);
    oracle = tpi::make_quadratic_oracle(std::move(target));
  } else if (s.oracle == "classifier") {
    oracle = tpi::make_classifier_oracle(s.seed);
  } else {
    tpi::fail(tpi::Errc::InvalidArgument,
              "unknown oracle '" + s.oracle + "' (linear, quadratic, classifier)");
  }

  auto result = tpi::run_pgd(oracle, x0, eps, alpha, s.steps, s.maximize);

  std::ofstream trace(s.trace_path, std::ios::trunc);
  if (!trace) tpi::fail(tpi::Errc::IoError, "cannot open " + s.trace_path + " for writing");
  trace << "step,loss\n";
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    char row[64];
    std::snprintf(row, sizeof(row), "%zu,%.12g\n", i, result.trace[i]);
    trace << row;
  }
  tpi::write_file(s.out_prefix + "_before.ppm", tpi::save_ppm(tpi::to_image(x0)));
  tpi::write_file(s.out_prefix + "_after.ppm", tpi::save_ppm(tpi::to_image(result.final_point)));
  std::cout << "loss " << result.trace.front() << " -> " << result.trace.back() << " over "
            << s.steps << " steps; trace in " << s.trace_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  try {
    std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) apply_config(config_path, s);
  } catch (const tpi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }

  CLI::App app{"text prompt injection toolkit"};
  app.set_version_flag("--version", std::string("tpi ") + tpi::kVersion);
  app.add_option("--config", s.config_path, "JSON config file (flags take precedence)");
  app.require_subcommand(1);

  auto* inject = app.add_subcommand("inject", "embed a text prompt into one image");
  inject->add_option("--in", s.in_path, "input image (PPM or PNG)")->required();
  inject->add_option("--out", s.out_path, "output image (.ppm or .png)")->required();
  inject->add_option("--text", s.text, "prompt text to embed")->required();
  inject->add_option("--eps", s.eps, "l_inf budget in channel units [0,255]");
  inject->add_option("--repeats", s.repeats, "number of non-overlapping stamps");
  inject->add_option("--font-size", s.font_size, "glyph cell size in pixels (>= 8)");
  inject->add_option("--stride", s.stride, "placement search stride");
  inject->add_flag("--dynamic", s.dynamic, "choose font size dynamically");
  inject->add_option("--limit", s.limit, "consistency limit c for --dynamic");
  inject->add_option("--z-max", s.z_max, "largest font size for --dynamic");
  inject->add_option("--z-min", s.z_min, "smallest font size for --dynamic");
  inject->add_flag("--allow-partial", s.allow_partial, "accept fewer repeats when space runs out");
  inject->add_option("--report", s.report_path, "write placement report JSON here");
  inject->add_option("--dump-stamp", s.dump_stamp, "write the stamp mask preview image here");
  inject->add_option("--dump-heatmap", s.dump_heatmap, "write the consistency heatmap here");

  auto* manifest = app.add_subcommand("manifest", "scan a pet-image directory into a manifest");
  manifest->add_option("--dir", s.dataset_dir, "dataset directory")->required();
  manifest->add_option("--out", s.manifest_out, "manifest JSON output path")->required();
  manifest->add_option("--sample", s.sample, "seeded random subset size (0 = all)");
  manifest->add_option("--seed", s.seed, "sampling and choice seed");

  auto* run = app.add_subcommand("run", "query an endpoint for every manifest entry");
  run->add_option("--manifest", s.manifest_path, "manifest JSON")->required();
  run->add_option("--records", s.records_path, "output records JSONL")->required();
  run->add_option("--base-url", s.base_url, "endpoint base URL")->required();
  run->add_option("--model", s.model, "model identifier");
  run->add_option("--api-key-env", s.api_key_env, "environment variable holding the API key");
  run->add_option("--timeout", s.timeout_s, "request timeout in seconds");
  run->add_option("--max-retries", s.max_retries, "retry count for transient failures");
  run->add_option("--max-in-flight", s.max_in_flight, "request concurrency bound");
  run->add_option("--backoff-ms", s.backoff_ms, "base backoff in milliseconds");
  run->add_flag("--attack", s.attack, "inject the target prompt before querying");
  run->add_option("--eps", s.eps, "attack l_inf budget");
  run->add_option("--repeats", s.repeats, "attack repeats");
  run->add_option("--font-size", s.font_size, "attack font size");
  run->add_option("--stride", s.stride, "placement search stride");
  run->add_flag("--allow-partial", s.allow_partial, "accept fewer repeats when space runs out");
  run->add_flag("--self-check", s.self_check, "verify the budget on every injected image");
  run->add_option("--seed", s.seed, "option-shuffle seed");

  auto* sweep = app.add_subcommand("sweep", "run the full eps x repeats x font grid");
  sweep->add_option("--manifest", s.manifest_path, "manifest JSON")->required();
  sweep->add_option("--out-dir", s.out_dir, "directory for per-cell records and tables")
      ->required();
  sweep->add_option("--base-url", s.base_url, "endpoint base URL");
  sweep->add_option("--model", s.model, "model identifier");
  sweep->add_option("--api-key-env", s.api_key_env, "environment variable holding the API key");
  sweep->add_option("--timeout", s.timeout_s, "request timeout in seconds");
  sweep->add_option("--max-retries", s.max_retries, "retry count for transient failures");
  sweep->add_option("--max-in-flight", s.max_in_flight, "request concurrency bound");
  sweep->add_option("--backoff-ms", s.backoff_ms, "base backoff in milliseconds");
  sweep->add_option("--eps", s.eps_grid, "epsilon grid")->delimiter(',');
  sweep->add_option("--repeats", s.repeats_grid, "repeats grid")->delimiter(',');
  sweep->add_option("--font-sizes", s.font_grid, "font size grid")->delimiter(',');
  sweep->add_option("--stride", s.stride, "placement search stride");
  sweep->add_flag("--allow-partial", s.allow_partial, "accept fewer repeats when space runs out");
  sweep->add_flag("--dry-run", s.dry_run, "only generate injected images, no network");
  sweep->add_flag("--resume", s.resume, "skip cells whose records file is complete");
  sweep->add_flag("--self-check", s.self_check, "verify the budget on every injected image");
  sweep->add_option("--jobs", s.jobs, "worker threads for image generation");
  sweep->add_option("--seed", s.seed, "option-shuffle seed");

  auto* evaluate = app.add_subcommand("evaluate", "compute metrics from records files");
  evaluate->add_option("--records", s.records_path, "one records JSONL file");
  evaluate->add_option("--records-dir", s.records_dir, "directory of *.jsonl record files");
  evaluate->add_flag("--table", s.table, "render sweep tables");
  evaluate->add_option("--table-out", s.table_out, "write the text table here");
  evaluate->add_option("--csv-out", s.csv_out, "write the CSV table here");

  auto* pgd = app.add_subcommand("pgd-demo", "run the PGD engine on a toy oracle");
  pgd->add_option("--oracle", s.oracle, "linear | quadratic | classifier");
  pgd->add_option("--steps", s.steps, "iteration count");
  pgd->add_option("--eps", s.pgd_eps, "l_inf budget in channel units [0,255]");
  pgd->add_option("--alpha", s.alpha, "step size in [0,1] space (0 = eps/10)");
  pgd->add_option("--width", s.width, "demo image width");
  pgd->add_option("--height", s.height, "demo image height");
  pgd->add_flag("--maximize", s.maximize, "ascend instead of descend");
  pgd->add_option("--trace", s.trace_path, "loss trace CSV path");
  pgd->add_option("--out-prefix", s.out_prefix, "prefix for before/after PPM dumps");
  pgd->add_option("--seed", s.seed, "initial point seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (inject->parsed()) return cmd_inject(s);
    if (manifest->parsed()) return cmd_manifest(s);
    if (run->parsed()) return cmd_run(s);
    if (sweep->parsed()) return cmd_sweep(s);
    if (evaluate->parsed()) return cmd_evaluate(s);
    if (pgd->parsed()) return cmd_pgd_demo(s);
  } catch (const tpi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
