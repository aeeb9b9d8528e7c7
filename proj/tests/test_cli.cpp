#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "minicorpus.hpp"
#include "support.hpp"

using namespace musagent;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("musagent_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& name) const { return path / name; }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "musagent");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int count_lines(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(Cli, AnalyzePrintsHumanReport) {
  auto r = cli({"analyze", testsupport::fixture("bwv281.krn").string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("# "), std::string::npos);
  EXPECT_NE(r.out.find("bwv281"), std::string::npos);
}

TEST(Cli, AnalyzeCorruptFileIsParseError) {
  auto r = cli({"analyze", testsupport::fixture("corrupt.mid").string()});
  EXPECT_EQ(r.code, kExitParse);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, AnalyzeMissingFileAndBadFormat) {
  EXPECT_EQ(cli({"analyze", "/nonexistent/file.krn"}).code, kExitParse);
  EXPECT_EQ(cli({"analyze", testsupport::fixture("bwv281.krn").string(), "--format", "mp3"}).code, kExitFailure);
  EXPECT_EQ(cli({"analyze"}).code, kExitFailure);
  EXPECT_EQ(cli({}).code, kExitFailure);
}

TEST(Cli, AnalyzeWritesOutputs) {
  TempDir tmp;
  const auto json = tmp / "r.json", text = tmp / "r.txt", xml = tmp / "r.musicxml";
  auto r = cli({"analyze", testsupport::fixture("bwv281.krn").string(), "--work-id", "w1", "--out-json", json.string(),
                "--out-text", text.string(), "--out-musicxml", xml.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  auto report = parse_report(slurp(json));
  EXPECT_EQ(report.source.work_id, "w1");
  EXPECT_EQ(slurp(text), render_human(report));
  auto again = load_score(xml);
  EXPECT_TRUE(validate(again.score).empty());
}

TEST(Cli, AnalyzeWithReferenceAttachesVerdicts) {
  TempDir tmp;
  auto s = testsupport::aaba_work(0);
  spit(tmp / "w.musicxml", write_annotated_musicxml(s, AnalysisReport{}));
  auto report = run_analysis(s, AnalysisConfig{}, default_style_database(), "", "w");
  spit(tmp / "ref.json", to_json(reference_from_report(report)).dump());
  auto r = cli({"analyze", (tmp / "w.musicxml").string(), "--reference", (tmp / "ref.json").string(), "--out-json",
                (tmp / "out.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto parsed = parse_report(slurp(tmp / "out.json"));
  ASSERT_EQ(parsed.verdicts.size(), 3u);
  for (const auto& v : parsed.verdicts) EXPECT_EQ(v.verdict, Verdict::Consistent) << dimension_name(v.dimension);
}

TEST(Cli, AnalyzeReferenceIdentityMismatch) {
  TempDir tmp;
  spit(tmp / "ref.json", R"({"work_id": "other"})");
  auto r = cli({"analyze", testsupport::fixture("bwv281.krn").string(), "--reference", (tmp / "ref.json").string()});
  EXPECT_EQ(r.code, kExitIdentity);
}

TEST(Cli, BatchAllSucceed) {
  TempDir tmp;
  nlohmann::json m;
  m["works"] = {{{"path", testsupport::fixture("bwv281.krn").string()}, {"work_id", "a"}},
                {{"path", testsupport::fixture("bwv366.krn").string()}, {"work_id", "b"}},
                {{"path", testsupport::fixture("two_measures.musicxml").string()}, {"work_id", "c"}}};
  spit(tmp / "m.json", m.dump());
  auto r = cli({"batch", (tmp / "m.json").string(), "--out-dir", (tmp / "out").string(), "--jobs", "2"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  for (const char* id : {"a", "b", "c"}) EXPECT_TRUE(fs::exists(tmp / "out" / (std::string(id) + ".json")));
  EXPECT_NE(r.out.find("works\t3\nfailures\t0"), std::string::npos);
}

TEST(Cli, BatchPartialFailure) {
  TempDir tmp;
  nlohmann::json m;
  m["works"] = {{{"path", testsupport::fixture("bwv281.krn").string()}, {"work_id", "a"}},
                {{"path", testsupport::fixture("corrupt.mid").string()}, {"work_id", "bad"}},
                {{"path", testsupport::fixture("bwv366.krn").string()}, {"work_id", "b"}}};
  spit(tmp / "m.json", m.dump());
  auto r = cli({"batch", (tmp / "m.json").string(), "--out-dir", (tmp / "out").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("bad"), std::string::npos);
  EXPECT_TRUE(fs::exists(tmp / "out" / "a.json"));
  EXPECT_TRUE(fs::exists(tmp / "out" / "b.json"));
  EXPECT_FALSE(fs::exists(tmp / "out" / "bad.json"));
  EXPECT_NE(r.out.find("bad\tfailed"), std::string::npos);
}

TEST(Cli, BatchSummaryCoversManifest) {
  TempDir tmp;
  auto works = testsupport::mini_corpus();
  auto manifest = testsupport::write_mini_corpus(tmp.path, works);
  auto r = cli({"batch", manifest.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // Header plus one row per work before the blank separator line.
  const auto table = r.out.substr(0, r.out.find("\n\n") + 1);
  EXPECT_EQ(count_lines(table), 1 + static_cast<int>(works.size()));
  EXPECT_NE(r.out.find("works\t" + std::to_string(works.size())), std::string::npos);
}

TEST(Cli, BatchManifestErrors) {
  TempDir tmp;
  spit(tmp / "m.json", R"({"works": []})");
  EXPECT_EQ(cli({"batch", (tmp / "m.json").string()}).code, kExitParse);
  spit(tmp / "m.json", "{");
  EXPECT_EQ(cli({"batch", (tmp / "m.json").string()}).code, kExitParse);
  EXPECT_EQ(cli({"batch", (tmp / "m.json").string(), "--jobs", "0"}).code, kExitFailure);
}

TEST(Cli, CompareSelfIsPerfect) {
  TempDir tmp;
  auto report = run_analysis(testsupport::aaba_work(0), AnalysisConfig{}, default_style_database(), "", "w");
  spit(tmp / "r.json", serialize_report(report));
  spit(tmp / "ref.json", to_json(reference_from_report(report)).dump());
  auto r = cli({"compare", (tmp / "r.json").string(), (tmp / "ref.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("f1\t1.0000"), std::string::npos);
  EXPECT_NE(r.out.find("tonal_agreement\texact"), std::string::npos);
  EXPECT_NE(r.out.find("modulation_jaccard\t1.0000"), std::string::npos);
  EXPECT_EQ(r.out.find("Hallucination"), std::string::npos);
}

TEST(Cli, CompareIdentityMismatch) {
  TempDir tmp;
  auto report = run_analysis(testsupport::aaba_work(0), AnalysisConfig{}, default_style_database(), "", "w");
  spit(tmp / "r.json", serialize_report(report));
  spit(tmp / "ref.json", R"({"work_id": "x"})");
  EXPECT_EQ(cli({"compare", (tmp / "r.json").string(), (tmp / "ref.json").string()}).code, kExitIdentity);
}

TEST(Cli, CompareRecallThreeQuarters) {
  TempDir tmp;
  AnalysisConfig cfg;
  cfg.structural = testsupport::xxyx_config();
  auto report = run_analysis(testsupport::xxyx_fixture(), cfg, default_style_database(), "", "x");
  ASSERT_EQ(report.outline->boundaries(), (std::vector<int>{4, 8, 12}));
  spit(tmp / "r.json", serialize_report(report));
  spit(tmp / "ref.json", R"({"work_id": "x", "boundaries": [4, 8, 12, 14]})");
  auto r = cli({"compare", (tmp / "r.json").string(), (tmp / "ref.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("precision\t1.0000"), std::string::npos);
  EXPECT_NE(r.out.find("recall\t0.7500"), std::string::npos);
  EXPECT_NE(r.out.find("boundary_match_pct\t75.0000"), std::string::npos);
}

TEST(Cli, CompareMalformedInputs) {
  TempDir tmp;
  spit(tmp / "r.json", "not json");
  spit(tmp / "ref.json", R"({"work_id": "x"})");
  EXPECT_EQ(cli({"compare", (tmp / "r.json").string(), (tmp / "ref.json").string()}).code, kExitParse);
}

TEST(Cli, DbInitAndValidate) {
  TempDir tmp;
  const auto db = (tmp / "db.json").string();
  auto init = cli({"db", "init", db});
  ASSERT_EQ(init.code, kExitOk) << init.err;
  auto v = cli({"db", "validate", db});
  ASSERT_EQ(v.code, kExitOk) << v.err;
  EXPECT_EQ(count_lines(v.out), 8);
  EXPECT_EQ(load_reference_db(nlohmann::json::parse(slurp(db))), default_style_database());
}

TEST(Cli, DbInitRefusesOverwrite) {
  TempDir tmp;
  const auto db = (tmp / "db.json").string();
  spit(db, "keep");
  EXPECT_EQ(cli({"db", "init", db}).code, kExitOverwrite);
  EXPECT_EQ(slurp(db), "keep");
  EXPECT_EQ(cli({"db", "init", db, "--force"}).code, kExitOk);
  EXPECT_EQ(cli({"db", "validate", db}).code, kExitOk);
}

TEST(Cli, DbValidateRejectsMissingSpread) {
  TempDir tmp;
  auto j = to_json(default_style_database());
  j["profiles"][0]["features"]["chromaticism"].erase("spread");
  spit(tmp / "db.json", j.dump());
  auto r = cli({"db", "validate", (tmp / "db.json").string()});
  EXPECT_EQ(r.code, kExitParse);
  EXPECT_NE(r.err.find("schema violation"), std::string::npos);
}

TEST(Cli, DatabaseFromFlagIsUsed) {
  TempDir tmp;
  nlohmann::json features;
  for (const auto& [name, field] : style_fields()) {
    (void)field;
    features[name] = {{"mean", 0.5}, {"spread", 0.1}};
  }
  spit(tmp / "db.json", nlohmann::json{{"profiles", {{{"label", "Solo"}, {"features", features}}}}}.dump());
  auto r = cli({"analyze", testsupport::fixture("bwv281.krn").string(), "--db", (tmp / "db.json").string(), "--out-json",
                (tmp / "r.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(parse_report(slurp(tmp / "r.json")).style->top_label, "Solo");
}

TEST(ShippedFiles, MatchLibraryDefaults) {
  auto db = load_reference_db(nlohmann::json::parse(slurp(testsupport::source_path("data/style_db.json"))));
  EXPECT_EQ(db, default_style_database());
  auto cfg = nlohmann::json::parse(slurp(testsupport::source_path("data/default_config.json")));
  EXPECT_EQ(to_json(config_from_json(cfg)), to_json(AnalysisConfig{}));
}

TEST(ShippedFiles, CorpusManifestsParse) {
  const auto path = testsupport::source_path("corpus/manifest.json");
  auto m = manifest_from_json(nlohmann::json::parse(slurp(path)), path.parent_path());
  EXPECT_GE(m.entries.size(), 10u);
  for (const auto& e : m.entries) {
    EXPECT_TRUE(fs::exists(m.resolve(e.path))) << e.path;
    ASSERT_TRUE(e.style);
    EXPECT_NE(default_style_database().find(*e.style), nullptr) << *e.style;
  }
  auto t = manifest_from_json(nlohmann::json::parse(slurp(testsupport::source_path("corpus/repertoire_template.json"))));
  for (const auto& e : t.entries) {
    ASSERT_TRUE(e.style);
    EXPECT_NE(default_style_database().find(*e.style), nullptr) << *e.style;
  }
}
