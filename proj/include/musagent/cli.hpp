#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "musagent/config.hpp"
#include "musagent/coordinator.hpp"
#include "musagent/evaluation.hpp"
#include "musagent/ingest.hpp"
#include "musagent/manifest.hpp"
#include "musagent/musicxml_writer.hpp"
#include "musagent/reference.hpp"
#include "musagent/render.hpp"
#include "musagent/stylistic.hpp"

namespace musagent {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,    // usage error, or some batch entries failed
  kExitParse = 2,      // unreadable or malformed input, schema violation
  kExitAnalysis = 3,   // analysis could not produce a report
  kExitIdentity = 4,   // report and reference describe different works
  kExitOverwrite = 5,  // refusing to overwrite an existing file
};

inline constexpr const char* kDbEnvVar = "MUSAGENT_DB";

namespace cli_detail {

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("error while writing " + path.string());
}

inline AnalysisConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return config_from_json(read_json(path));
}

// --db, then the environment variable, then the built-in seed.
inline StyleDatabase load_database(const std::string& flag) {
  std::string path = flag;
  if (path.empty())
    if (const char* env = std::getenv(kDbEnvVar)) path = env;
  if (path.empty()) return seed_database();
  return load_reference_db(read_json(path));
}

inline std::string num(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  s << v;
  return s.str();
}

inline std::string agreement_text(const AgreementStats& s, const AuditOutcome& audit) {
  std::ostringstream out;
  if (s.segmentation_assessed) {
    out << "precision\t" << num(s.segmentation_precision) << "\n"
        << "recall\t" << num(s.segmentation_recall) << "\n"
        << "f1\t" << num(s.segmentation_f1) << "\n"
        << "boundary_match_pct\t" << num(s.boundary_match_pct) << "\n";
  }
  if (s.tonal_agreement) out << "tonal_agreement\t" << tonal_agreement_name(*s.tonal_agreement) << "\n";
  if (s.modulation_assessed) out << "modulation_jaccard\t" << num(s.modulation_jaccard) << "\n";
  for (const auto& v : audit.verdicts)
    out << "verdict\t" << dimension_name(v.dimension) << "\t" << verdict_name(v.verdict) << "\t" << v.note << "\n";
  for (const auto& n : audit.notes) out << "skipped\t" << n << "\n";
  return out.str();
}

inline void attach_audit(AnalysisReport& report, const AuditOutcome& audit) {
  report.verdicts = audit.verdicts;
  report.verdict_notes = audit.notes;
}

// Maps library exceptions to exit codes and reports them on err.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const IdentityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIdentity;
  } catch (const AnalysisError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& env : e.envelopes())
      err << "  " << agent_name(env.agent) << ": " << (env.error() ? *env.error() : "ok") << "\n";
    return kExitAnalysis;
  } catch (const ConsistencyError& e) {
    err << "error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const PlanError& e) {
    err << "error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const SchemaError& e) {
    err << "error: schema violation at " << e.path() << ": " << e.what() << "\n";
    return kExitParse;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  std::string path;
  std::optional<SourceFormat> format;
  std::string config;
  std::string db;
  std::string work_id;
  std::string reference;
  std::string out_json;
  std::string out_text;
  std::string out_musicxml;
};

inline int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  return guarded(err, [&] {
    const auto cfg = load_config(o.config);
    const auto db = load_database(o.db);
    auto parsed = load_score(o.path, o.format);
    for (const auto& w : parsed.diagnostics.warnings) err << "warning: " << w.location << ": " << w.message << "\n";
    const std::string work_id = o.work_id.empty() ? std::filesystem::path(o.path).stem().string() : o.work_id;
    auto report = run_analysis(parsed.score, cfg, db, o.path, work_id);
    if (!o.reference.empty()) {
      auto ref = reference_from_json(read_json(o.reference));
      attach_audit(report, audit_consistency(report, ref, cfg.evaluation, db));
    }
    for (const auto& env : report.envelopes)
      if (!env.ok) err << "warning: " << agent_name(env.agent) << " agent failed: " << *env.error() << "\n";
    if (!o.out_json.empty()) write_text(o.out_json, serialize_report(report));
    if (!o.out_text.empty()) write_text(o.out_text, render_human(report));
    if (!o.out_musicxml.empty()) write_text(o.out_musicxml, write_annotated_musicxml(parsed.score, report));
    if (o.out_json.empty() && o.out_text.empty() && o.out_musicxml.empty()) out << render_human(report);
    return static_cast<int>(kExitOk);
  });
}

struct BatchOptions {
  std::string manifest;
  std::string config;
  std::string db;
  std::string out_dir;
  int jobs = 1;
};

struct BatchResult {
  std::vector<CorpusEntry> entries;
  std::vector<std::optional<AnalysisReport>> reports;
};

// Analyzes every manifest entry on up to `jobs` threads. Results are
// indexed by manifest position.
inline BatchResult run_batch(const CorpusManifest& manifest, const AnalysisConfig& cfg, const StyleDatabase& db,
                             int jobs) {
  using namespace cli_detail;
  const std::size_t n = manifest.entries.size();
  BatchResult result;
  result.entries.resize(n);
  result.reports.resize(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& e = manifest.entries[i];
      CorpusEntry& entry = result.entries[i];
      entry.work_id = e.work_id;
      try {
        auto parsed = load_score(manifest.resolve(e.path), e.format);
        auto report = run_analysis(parsed.score, cfg, db, e.path, e.work_id);
        if (!e.title.empty()) report.source.title = e.title;
        if (!e.composer.empty()) report.source.composer = e.composer;
        std::optional<ReferenceAnnotation> ref;
        if (e.reference) ref = reference_from_json(read_json(manifest.resolve(*e.reference)));
        if (e.style) {
          if (!ref) ref = ReferenceAnnotation{e.work_id, {}, {}, {}, {}, {}};
          if (!ref->style) ref->style = e.style;
        }
        if (ref) {
          entry.stats = compare_to_reference(report, *ref, cfg.evaluation);
          auto audit = audit_consistency(report, *ref, cfg.evaluation, db);
          entry.verdicts = audit.verdicts;
          attach_audit(report, audit);
        }
        result.reports[i] = std::move(report);
      } catch (const std::exception& ex) {
        entry.error = ex.what();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::jthread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return result;
}

inline int cmd_batch(const BatchOptions& o, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CorpusManifest manifest;
  AnalysisConfig cfg;
  std::optional<StyleDatabase> db;
  if (int rc = guarded(err, [&] {
        manifest = manifest_from_json(read_json(o.manifest), std::filesystem::path(o.manifest).parent_path());
        cfg = load_config(o.config);
        db = load_database(o.db);
        return static_cast<int>(kExitOk);
      });
      rc != kExitOk)
    return rc;

  auto result = run_batch(manifest, cfg, *db, o.jobs);
  int rc = kExitOk;
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const auto& e = result.entries[i];
    if (!e.error.empty()) {
      err << "error: " << e.work_id << ": " << e.error << "\n";
      rc = kExitFailure;
      continue;
    }
    if (!o.out_dir.empty()) {
      int wrc = guarded(err, [&] {
        write_text(std::filesystem::path(o.out_dir) / (e.work_id + ".json"), serialize_report(*result.reports[i]));
        return static_cast<int>(kExitOk);
      });
      if (wrc != kExitOk) rc = kExitFailure;
    }
  }
  out << corpus_table_tsv(result.entries) << "\n" << corpus_summary_text(corpus_summary(result.entries));
  return rc;
}

inline int cmd_compare(const std::string& report_path, const std::string& reference_path, const std::string& config,
                       const std::string& db_path, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  return guarded(err, [&] {
    const auto cfg = load_config(config);
    const auto db = load_database(db_path);
    auto report = parse_report(read_file(report_path));
    auto ref = reference_from_json(read_json(reference_path));
    auto stats = compare_to_reference(report, ref, cfg.evaluation);
    auto audit = audit_consistency(report, ref, cfg.evaluation, db);
    out << "work_id\t" << report.source.work_id << "\n" << agreement_text(stats, audit);
    return static_cast<int>(kExitOk);
  });
}

inline int cmd_db_init(const std::string& path, bool force, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  if (std::filesystem::exists(path) && !force) {
    err << "error: " << path << " exists; pass --force to overwrite\n";
    return kExitOverwrite;
  }
  return guarded(err, [&] {
    write_text(path, to_json(seed_database()).dump(2) + "\n");
    out << "wrote " << seed_database().profiles.size() << " profiles to " << path << "\n";
    return static_cast<int>(kExitOk);
  });
}

inline int cmd_db_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  return guarded(err, [&] {
    auto db = load_reference_db(read_json(path));
    for (const auto& p : db.profiles) out << p.label << "\n";
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multi-agent symbolic music analysis"};
  app.require_subcommand(1);
  long long seed = 0;
  app.add_option("--seed", seed, "Reserved; the pipeline is deterministic");

  AnalyzeOptions ao;
  std::string format_name_flag;
  auto* analyze = app.add_subcommand("analyze", "Analyze one score");
  analyze->add_option("path", ao.path, "Score file (MusicXML, MIDI or kern)")->required();
  analyze->add_option("--format", format_name_flag, "Override format detection: musicxml, midi or kern");
  analyze->add_option("--config", ao.config, "Agent parameter file (JSON)");
  analyze->add_option("--db", ao.db, std::string("Style database (JSON); default $") + kDbEnvVar + " or the seed");
  analyze->add_option("--work-id", ao.work_id, "Work id recorded in the report (default: file stem)");
  analyze->add_option("--reference", ao.reference, "Reference annotation to audit against");
  analyze->add_option("--out-json", ao.out_json, "Write the machine report here");
  analyze->add_option("--out-text", ao.out_text, "Write the human report here");
  analyze->add_option("--out-musicxml", ao.out_musicxml, "Write the annotated score here");
  analyze->add_option("--seed", seed, "Reserved");

  BatchOptions bo;
  auto* batch = app.add_subcommand("batch", "Analyze every work of a corpus manifest");
  batch->add_option("manifest", bo.manifest, "Corpus manifest (JSON)")->required();
  batch->add_option("--config", bo.config, "Agent parameter file (JSON)");
  batch->add_option("--db", bo.db, "Style database (JSON)");
  batch->add_option("--jobs", bo.jobs, "Works analyzed concurrently")->check(CLI::PositiveNumber);
  batch->add_option("--out-dir", bo.out_dir, "Directory for per-work machine reports");
  batch->add_option("--seed", seed, "Reserved");

  std::string report_path, reference_path, compare_config, compare_db;
  auto* compare = app.add_subcommand("compare", "Compare a machine report with a reference annotation");
  compare->add_option("report", report_path, "Machine report (JSON)")->required();
  compare->add_option("reference", reference_path, "Reference annotation (JSON)")->required();
  compare->add_option("--config", compare_config, "Agent parameter file (JSON)");
  compare->add_option("--db", compare_db, "Style database (JSON)");

  std::string db_path;
  bool force = false;
  auto* db = app.add_subcommand("db", "Manage the style database");
  db->require_subcommand(1);
  auto* db_init = db->add_subcommand("init", "Write the seed database");
  db_init->add_option("path", db_path, "Destination")->required();
  db_init->add_flag("--force", force, "Overwrite an existing file");
  auto* db_validate = db->add_subcommand("validate", "Check a database and list its labels");
  db_validate->add_option("path", db_path, "Database file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitFailure;
  }

  if (analyze->parsed()) {
    if (!format_name_flag.empty()) {
      try {
        ao.format = parse_format_name(format_name_flag);
      } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
      }
    }
    return cmd_analyze(ao, out, err);
  }
  if (batch->parsed()) return cmd_batch(bo, out, err);
  if (compare->parsed()) return cmd_compare(report_path, reference_path, compare_config, compare_db, out, err);
  if (db_init->parsed()) return cmd_db_init(db_path, force, out, err);
  if (db_validate->parsed()) return cmd_db_validate(db_path, out, err);
  return kExitFailure;
}

}  // namespace musagent
