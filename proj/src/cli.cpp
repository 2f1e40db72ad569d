// Copyright 2026 The csexpand Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "csx/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <memory>
#include <optional>
#include <sstream>

#include "csx/cassette.hpp"
#include "csx/config.hpp"
#include "csx/corpus.hpp"
#include "csx/evaluate.hpp"
#include "csx/expand.hpp"
#include "csx/http_backend.hpp"
#include "csx/metrics.hpp"
#include "csx/mock_backends.hpp"
#include "csx/report.hpp"
#include "csx/text.hpp"

namespace csx {

namespace fs = std::filesystem;

namespace {

constexpr char kSampleFile[] = "sample.jsonl";
constexpr char kExpansionsFile[] = "expansions.jsonl";

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> mode;
  std::optional<std::string> judge_model;
  std::optional<std::string> generator_model;
  std::optional<std::string> run_dir;
  std::optional<std::string> run_id;
  bool json = false;
  bool strict = true;
  bool resume = false;
  bool verbose = false;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
};

RunConfig load_config(const Options& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = RunConfig::load(o.config_path);
  } else {
    cfg.base_dir = fs::current_path();
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.backend) {
    auto spec = *o.backend;
    // Paths given on the command line are relative to the working directory.
    for (const char* prefix : {"replay:", "record:"}) {
      if (spec.rfind(prefix, 0) == 0) {
        const fs::path p = spec.substr(std::string(prefix).size());
        spec = prefix + (p.is_absolute() ? p : fs::absolute(p)).string();
      }
    }
    cfg.backend = spec;
  }
  if (o.mode) cfg.mode = parse_mode(*o.mode);
  if (o.judge_model) cfg.judge_model = *o.judge_model;
  if (o.generator_model) cfg.generator_model = *o.generator_model;
  if (o.run_dir) cfg.run_dir = fs::absolute(*o.run_dir).string();
  if (o.run_id) cfg.run_id = *o.run_id;
  cfg.validate();
  return cfg;
}

// Owns the backend chain built from a spec string.
struct BackendChain {
  std::unique_ptr<Backend> inner;
  std::unique_ptr<Backend> outer;
  Backend& get() { return outer ? *outer : *inner; }
};

BackendChain make_backend(const RunConfig& cfg) {
  BackendChain chain;
  const auto& spec = cfg.backend;
  auto http = [&] {
    HttpBackendConfig hc;
    hc.base_url = cfg.base_url;
    hc.api_key = cfg.resolved_api_key();
    hc.policy = cfg.policy;
    if (hc.api_key.empty()) {
      throw Error(ErrorKind::kAuthError, "no API key; set the variable named in " + cfg.api_key);
    }
    return std::make_unique<HttpBackend>(hc);
  };
  if (spec == "http") {
    chain.inner = http();
  } else if (spec.rfind("mock:", 0) == 0) {
    chain.inner = make_mock_backend(spec.substr(5));
  } else if (spec.rfind("replay:", 0) == 0) {
    chain.inner = std::make_unique<CassetteBackend>(cfg.resolve(spec.substr(7)),
                                                    CassetteMode::kReplay);
  } else if (spec.rfind("record:", 0) == 0) {
    chain.inner = http();
    chain.outer = std::make_unique<CassetteBackend>(cfg.resolve(spec.substr(7)),
                                                    CassetteMode::kRecord, chain.inner.get());
  } else {
    throw Error(ErrorKind::kConfigError, "unknown backend '" + spec + "'");
  }
  return chain;
}

void write_run_config(const RunConfig& cfg) {
  fs::create_directories(cfg.run_path());
  write_file_atomic(cfg.run_path() / "config.json", cfg.to_json().dump(2) + "\n");
}

void emit(const Io& io, const Options& o, const nlohmann::json& summary,
          const std::string& human) {
  if (o.json) {
    io.out << summary.dump(2) << "\n";
  } else {
    io.out << human;
  }
}

std::vector<Dialogue> read_corpus_inputs(const RunConfig& cfg, bool strict, SkipReport* skips) {
  if (cfg.corpus.empty()) throw Error(ErrorKind::kConfigError, "config lists no corpus files");
  std::vector<Dialogue> all;
  for (const auto& in : cfg.corpus) {
    const auto src = Source::parse(in.source.empty() ? "other" : in.source);
    auto r = ingest(cfg.resolve(in.path), src, in.adapter, IngestOptions{strict});
    if (skips) {
      skips->skipped += r.skips.skipped;
      for (const auto& [k, v] : r.skips.reasons) skips->reasons[k] += v;
    }
    for (auto& d : r.dialogues) all.push_back(std::move(d));
  }
  return all;
}

// --- stages ---------------------------------------------------------------

int stage_sample(const RunConfig& cfg, const Options& o, const Io& io) {
  SkipReport skips;
  const auto corpus = read_corpus_inputs(cfg, o.strict, &skips);
  auto plan = cfg.sample_plan();
  if (plan.sources.empty()) {
    for (const auto& d : corpus) plan.sources.push_back(d.source);
  }
  const auto picked = sample(corpus, plan);
  write_run_config(cfg);
  write_file_atomic(cfg.run_path() / kSampleFile, to_canonical_jsonl(picked));

  std::map<std::string, std::size_t> per_source;
  for (const auto& d : picked) ++per_source[d.source.name()];
  const auto positions = count_expandable_turns(picked);
  nlohmann::json summary = {{"run_id", cfg.run_id},
                            {"dialogues", picked.size()},
                            {"per_source", per_source},
                            {"expandable_turns", positions},
                            {"expected_records", positions * cfg.load_catalog_or_default().size()},
                            {"ingest", skips.to_json()}};
  write_file_atomic(cfg.run_path() / "sample_summary.json", summary.dump(2) + "\n");
  emit(io, o, summary,
       fmt::format("sampled {} dialogues ({} expandable turns) into {}\n", picked.size(),
                   positions, (cfg.run_path() / kSampleFile).string()));
  return 0;
}

// First transient failure decides the exit status; other failures are data.
int status_for(const std::vector<std::string>& error_names) {
  for (const auto& n : error_names) {
    auto k = error_kind_from_name(n);
    if (k && is_transient(*k)) return exit_code(*k);
  }
  return 0;
}

int stage_expand(const RunConfig& cfg, const Options& o, const Io& io) {
  const auto job = make_expansion_job(cfg, load_corpus(cfg.run_path() / kSampleFile));

  auto backend = make_backend(cfg);
  const auto out_path = cfg.run_path() / kExpansionsFile;
  if (!o.resume && fs::exists(out_path)) fs::remove(out_path);
  write_run_config(cfg);
  const auto summary = expand_corpus(job, backend.get(), out_path);
  auto j = summary.to_json();
  j["generator_model"] = cfg.generator_model;
  j["mode"] = mode_name(cfg.mode);
  j["template_sha"] = job.templates.sha256();
  write_file_atomic(cfg.run_path() / "expand_summary.json", j.dump(2) + "\n");

  std::vector<std::string> errors;
  for (const auto& f : summary.failures) errors.push_back(f.error);
  emit(io, o, j,
       fmt::format("expanded {} of {} positions ({} resumed, {} re-asked, {} failed); "
                   "{} records, {} gaps\n",
                   summary.positions_expanded, summary.positions_total,
                   summary.positions_resumed, summary.positions_reasked,
                   summary.failures.size(), summary.records_total, summary.gaps.size()));
  return status_for(errors);
}

fs::path rankings_path(const RunConfig& cfg, const std::string& judge_label) {
  return cfg.run_path() / ("rankings." + file_stem_for(judge_label) + ".jsonl");
}

int stage_judge(const RunConfig& cfg, const Options& o, const Io& io) {
  const auto job = make_judge_job(cfg);
  const auto dialogues = load_corpus(cfg.run_path() / kSampleFile);
  const auto expansions = load_expansions(cfg.run_path() / kExpansionsFile);
  auto backend = make_backend(cfg);
  const auto label = cfg.effective_judge_label();
  const auto out_path = rankings_path(cfg, label);
  if (!o.resume && fs::exists(out_path)) fs::remove(out_path);
  write_run_config(cfg);
  const auto summary = judge_set(expansions, dialogues, job, backend.get(), out_path);
  auto j = summary.to_json();
  j["judge_model"] = cfg.judge_model;
  j["judge_label"] = label;
  write_file_atomic(cfg.run_path() / ("judge_summary." + file_stem_for(label) + ".json"),
                    j.dump(2) + "\n");

  std::vector<std::string> errors;
  for (const auto& r : load_rankings(out_path)) {
    if (r.failed) errors.push_back(r.error);
  }
  emit(io, o, j,
       fmt::format("judged {} of {} records with {} ({} resumed, {} failed, {} completed)\n",
                   summary.judged, summary.records_total, label, summary.resumed,
                   summary.failed, summary.completed));
  return status_for(errors);
}

int stage_import(const RunConfig& cfg, const Options& o, const Io& io, const std::string& input,
                 const std::string& label) {
  const auto catalog = cfg.load_catalog_or_default();
  const auto expansions = load_expansions(cfg.run_path() / kExpansionsFile);
  const auto rows = import_external_rankings(input, catalog, &expansions, cfg.run_id, label);
  const auto out_path = rankings_path(cfg, label);
  write_file_atomic(out_path, to_jsonl(rows));
  std::size_t completed = 0;
  for (const auto& r : rows) completed += r.completion_applied ? 1 : 0;
  nlohmann::json j = {{"judge_label", label}, {"records", rows.size()}, {"completed", completed}};
  emit(io, o, j,
       fmt::format("imported {} rankings as {} ({} completed)\n", rows.size(), label, completed));
  return 0;
}

int stage_report(const RunConfig& cfg, const Options& o, const Io& io) {
  const auto catalog = cfg.load_catalog_or_default();
  const auto label = cfg.effective_judge_label();
  const auto rankings = load_rankings(rankings_path(cfg, label));
  const auto expansions = load_expansions(cfg.run_path() / kExpansionsFile);
  const auto dialogues = load_corpus(cfg.run_path() / kSampleFile);
  ReportOptions ro{cfg.effective_generator_label(), label, cfg.ks};
  const auto rep = build_report(rankings, &expansions, catalog, ro);

  const auto dir = cfg.run_path() / "report" / file_stem_for(label);
  fs::create_directories(dir);
  write_file_atomic(dir / "metrics.json", rep.to_json().dump(2) + "\n");
  const auto cf = render_confusion(rep);
  write_file_atomic(dir / "confusion.csv", cf.counts_csv);
  write_file_atomic(dir / "confusion_normalized.csv", cf.normalized_csv);
  write_file_atomic(dir / "confusion.json", cf.json);
  CrossGrid grid;
  grid.set(ro.generator_label, ro.judge_label, rep);
  const auto text = render_grid(grid, GridFormat::Text);
  write_file_atomic(dir / "grid.txt", text);
  write_file_atomic(dir / "grid.csv", render_grid(grid, GridFormat::Csv));
  write_file_atomic(dir / "grid.json", render_grid(grid, GridFormat::Json));
  SampleOptions so;
  so.n_per_relation = cfg.samples_per_relation;
  so.seed = cfg.seed;
  write_file_atomic(dir / "samples.txt", render_samples(expansions, dialogues, so));
  emit(io, o, rep.to_json(), text);
  return 0;
}

// Grid file: {"rows":[...], "columns":[...], "cells":[{"generator","judge",
// "rankings","expansions"?,"catalog"?}]}; paths relative to the file.
int stage_grid(const Options& o, const Io& io, const fs::path& grid_file,
               const std::string& out_dir) {
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(read_file(grid_file));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigError, grid_file.string() + ": " + e.what());
  }
  const auto base = grid_file.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  CrossGrid grid;
  try {
    for (const auto& r : spec.value("rows", nlohmann::json::array())) {
      grid.add_row(r.get<std::string>());
    }
    for (const auto& c : spec.value("columns", nlohmann::json::array())) {
      grid.add_column(c.get<std::string>());
    }
    for (const auto& cell : spec.at("cells")) {
      const auto catalog = cell.contains("catalog")
                               ? load_catalog(resolve(cell["catalog"].get<std::string>()))
                               : catalog_default();
      const auto rankings = load_rankings(resolve(cell.at("rankings").get<std::string>()));
      std::optional<ExpansionSet> expansions;
      if (cell.contains("expansions")) {
        expansions = load_expansions(resolve(cell["expansions"].get<std::string>()));
      }
      ReportOptions ro{cell.at("generator").get<std::string>(),
                       cell.at("judge").get<std::string>(),
                       {1, 5, 10}};
      grid.set(ro.generator_label, ro.judge_label,
               build_report(rankings, expansions ? &*expansions : nullptr, catalog, ro));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigError, grid_file.string() + ": " + e.what());
  }
  const auto text = render_grid(grid, GridFormat::Text);
  const auto json = render_grid(grid, GridFormat::Json);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "grid.txt", text);
    write_file_atomic(fs::path(out_dir) / "grid.csv", render_grid(grid, GridFormat::Csv));
    write_file_atomic(fs::path(out_dir) / "grid.json", json);
  }
  io.out << (o.json ? json : text);
  return 0;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    files[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  }
  return files;
}

int stage_replay_check(const RunConfig& cfg, const Options& o, const Io& io,
                       const std::string& scratch) {
  if (cfg.backend.rfind("replay:", 0) != 0) {
    throw Error(ErrorKind::kConfigError, "replay-check needs a replay:<cassette> backend");
  }
  RunConfig copy = cfg;
  copy.run_dir = scratch.empty() ? (cfg.resolve(cfg.run_dir).string() + ".replay-check")
                                 : fs::absolute(scratch).string();
  if (fs::exists(copy.run_path())) fs::remove_all(copy.run_path());
  Options quiet = o;
  quiet.json = false;
  quiet.resume = false;
  std::ostringstream sink;
  Io silent{sink, io.err};
  for (auto stage : {stage_sample, stage_expand, stage_judge, stage_report}) {
    if (int rc = stage(copy, quiet, silent); rc != 0) return rc;
  }
  const auto want = snapshot(cfg.run_path());
  const auto got = snapshot(copy.run_path());
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : want) {
    auto it = got.find(name);
    if (it == got.end() || it->second != bytes) differing.push_back(name);
  }
  for (const auto& [name, bytes] : got) {
    if (!want.count(name)) differing.push_back(name);
  }
  std::sort(differing.begin(), differing.end());
  differing.erase(std::unique(differing.begin(), differing.end()), differing.end());
  nlohmann::json j = {{"run", cfg.run_path().string()},
                      {"replay", copy.run_path().string()},
                      {"files", want.size()},
                      {"differing", differing}};
  std::string human;
  if (differing.empty()) {
    human = fmt::format("replay matches: {} files identical\n", want.size());
  } else {
    human = fmt::format("replay differs in {} file(s):\n", differing.size());
    for (const auto& d : differing) human += "  " + d + "\n";
  }
  emit(io, o, j, human);
  return differing.empty() ? 0 : kExitMismatch;
}

int stage_validate(const RunConfig& cfg, const Options& o, const Io& io) {
  const auto catalog = cfg.load_catalog_or_default();
  const auto templates = cfg.load_templates_or_default();
  if (cfg.exemplars_path) load_exemplars(cfg.resolve(*cfg.exemplars_path));
  for (const auto& in : cfg.corpus) {
    if (!fs::exists(cfg.resolve(in.path))) {
      throw Error(ErrorKind::kFileUnreadable, "missing corpus file " + in.path);
    }
  }
  auto j = cfg.to_json();
  j["template_sha"] = templates.sha256();
  j["relations"] = catalog.size();
  emit(io, o, j, fmt::format("config ok: run {} ({} relations, templates {})\n", cfg.run_id,
                             catalog.size(), templates.sha256().substr(0, 12)));
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "Run configuration (JSON)");
  cmd->add_option("--seed", o.seed, "Sampling seed");
  cmd->add_option("--backend", o.backend, "http | mock:<kind> | replay:<path> | record:<path>");
  cmd->add_option("--mode", o.mode, "zero-shot | one-shot");
  cmd->add_option("--judge-model", o.judge_model, "Judge model name");
  cmd->add_option("--generator-model", o.generator_model, "Generator model name");
  cmd->add_option("--run-dir", o.run_dir, "Directory holding run directories");
  cmd->add_option("--run-id", o.run_id, "Run identifier");
  cmd->add_flag("--json", o.json, "Print a JSON summary");
  cmd->add_flag("--strict,!--lenient", o.strict, "Fail on malformed input (default strict)");
  cmd->add_flag("--resume", o.resume, "Continue an interrupted run");
  cmd->add_flag("-v,--verbose", o.verbose, "Debug logging");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Commonsense expansion of dialogue turns and listwise relation ranking", "csx"};
  app.require_subcommand(1);

  std::string adapter = "canonical", source, input, output;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a raw dataset to canonical JSONL");
  add_common(ingest_cmd, o);
  const auto names = adapter_names();
  ingest_cmd->add_option("--adapter", adapter, "Input format")
      ->check(CLI::IsMember(std::vector<std::string>(names.begin(), names.end())));
  ingest_cmd->add_option("--source", source, "Source label for formats without one");
  ingest_cmd->add_option("input", input, "Raw dataset file")->required();
  ingest_cmd->add_option("-o,--out", output, "Canonical JSONL output")->required();

  auto* sample_cmd = app.add_subcommand("sample", "Draw the seeded dialogue sample");
  add_common(sample_cmd, o);
  auto* expand_cmd = app.add_subcommand("expand", "Generate one response per relation and turn");
  add_common(expand_cmd, o);
  auto* judge_cmd = app.add_subcommand("judge", "Rank relation definitions for each expansion");
  add_common(judge_cmd, o);

  std::string judge_label = "external";
  auto* import_cmd =
      app.add_subcommand("import-rankings", "Import rankings produced by another evaluator");
  add_common(import_cmd, o);
  import_cmd->add_option("input", input, "JSONL rankings")->required();
  import_cmd->add_option("--label", judge_label, "Judge label for the imported set");

  std::string grid_file, out_dir;
  auto* report_cmd = app.add_subcommand("report", "Compute metrics and render reports");
  add_common(report_cmd, o);
  report_cmd->add_option("--grid", grid_file, "Grid description (generators x judges)");
  report_cmd->add_option("--out", out_dir, "Output directory for --grid");

  std::string scratch;
  auto* check_cmd =
      app.add_subcommand("replay-check", "Re-run a recorded pipeline and compare outputs");
  add_common(check_cmd, o);
  check_cmd->add_option("--scratch", scratch, "Directory for the re-run");

  auto* validate_cmd = app.add_subcommand("validate-config", "Check a run configuration");
  add_common(validate_cmd, o);

  std::vector<std::string> argv_store = {"csx"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : exit_code(ErrorKind::kInvalidArgument);
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  sink->set_pattern("[%l] %v");
  auto logger = std::make_shared<spdlog::logger>("csx", sink);
  logger->set_level(o.verbose ? spdlog::level::debug : spdlog::level::warn);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> prev;
    ~Restore() { spdlog::set_default_logger(prev); }
  } restore{previous};

  const Io io{out, err};
  try {
    if (ingest_cmd->parsed()) {
      const auto src = Source::parse(source.empty() ? "other" : source);
      const auto r = ingest(input, src, adapter, IngestOptions{o.strict});
      write_file_atomic(output, to_canonical_jsonl(r.dialogues));
      nlohmann::json j = {{"dialogues", r.dialogues.size()},
                          {"skipped", r.skips.skipped},
                          {"reasons", r.skips.reasons}};
      emit(io, o, j,
           fmt::format("ingested {} dialogues, skipped {}\n", r.dialogues.size(),
                       r.skips.skipped));
      return 0;
    }
    if (report_cmd->parsed() && !grid_file.empty()) return stage_grid(o, io, grid_file, out_dir);
    const auto cfg = load_config(o);
    if (sample_cmd->parsed()) return stage_sample(cfg, o, io);
    if (expand_cmd->parsed()) return stage_expand(cfg, o, io);
    if (judge_cmd->parsed()) return stage_judge(cfg, o, io);
    if (import_cmd->parsed()) return stage_import(cfg, o, io, input, judge_label);
    if (report_cmd->parsed()) return stage_report(cfg, o, io);
    if (check_cmd->parsed()) return stage_replay_check(cfg, o, io, scratch);
    if (validate_cmd->parsed()) return stage_validate(cfg, o, io);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << error_name(ErrorKind::kIoError) << ": " << e.what() << "\n";
    return exit_code(ErrorKind::kIoError);
  }
  return exit_code(ErrorKind::kInvalidArgument);
}

}  // namespace csx
