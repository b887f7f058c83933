#include <gtest/gtest.h>

#include "citehist/project.hpp"
#include "support.hpp"

using testsupport::run_cli;

namespace {

std::string mini() { return testsupport::fixture("mini.txt"); }

bool has_line(const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (line.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Cli, ParseMini) {
    testsupport::TempDir dir;
    auto r = run_cli({"parse", mini()}, dir.path());
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out, "5 records, 23 cited references, 0 warnings\n");
    EXPECT_TRUE(std::filesystem::exists(dir / "citehist.json"));
}

TEST(Cli, ParseGoldenReportsWarningOnStderr) {
    testsupport::TempDir dir;
    auto r = run_cli({"parse", testsupport::fixture("golden_wos.txt")}, dir.path());
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "5 records, 25 cited references, 1 warnings\n");
    EXPECT_NE(r.err.find("198X"), std::string::npos);
}

TEST(Cli, ParseCheckLeavesProjectAlone) {
    testsupport::TempDir dir;
    auto r = run_cli({"parse", "--check", mini()}, dir.path());
    EXPECT_EQ(r.status, 0);
    EXPECT_FALSE(std::filesystem::exists(dir / "citehist.json"));
}

TEST(Cli, ParseErrorsAreDataErrors) {
    testsupport::TempDir dir;
    testsupport::spit(dir / "empty.txt", "FN Clarivate Analytics Web of Science\nVR 1.0\nEF\n");
    auto r = run_cli({"parse", (dir / "empty.txt").string()}, dir.path());
    EXPECT_EQ(r.status, 2);
    EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
    EXPECT_EQ(run_cli({"parse", (dir / "missing.txt").string()}, dir.path()).status, 2);
}

TEST(Cli, FreshProjectHasNoCorpus) {
    testsupport::TempDir dir;
    auto r = run_cli({"rpys"}, dir.path());
    EXPECT_EQ(r.status, 2);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("no corpus loaded"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    testsupport::TempDir dir;
    EXPECT_EQ(run_cli({}, dir.path()).status, 1);
    EXPECT_EQ(run_cli({"frobnicate"}, dir.path()).status, 1);
    EXPECT_EQ(run_cli({"rpys", "--bogus"}, dir.path()).status, 1);
    EXPECT_EQ(run_cli({"--format", "xml", "export", "pajek"}, dir.path()).status, 1);
    EXPECT_EQ(run_cli({"graph", "shortest", "--from", "x"}, dir.path()).status, 1);
    run_cli({"parse", mini()}, dir.path());
    EXPECT_EQ(run_cli({"--threshold", "1.5", "disambig", "auto"}, dir.path()).status, 1);
    EXPECT_EQ(run_cli({"--range", "2000-1900", "rpys"}, dir.path()).status, 1);
    EXPECT_EQ(run_cli({"--segments", "decades", "multi-rpys"}, dir.path()).status, 1);
}

TEST(Cli, ProjectDirFromEnvironment) {
    testsupport::TempDir dir, elsewhere;
    auto env = "CITEHIST_PROJECT_DIR=" + testsupport::shell_quote(elsewhere.path().string());
    EXPECT_EQ(run_cli({"parse", mini()}, dir.path(), env).status, 0);
    EXPECT_TRUE(std::filesystem::exists(elsewhere / "citehist.json"));
    EXPECT_FALSE(std::filesystem::exists(dir / "citehist.json"));
    EXPECT_EQ(run_cli({"rpys"}, dir.path(), env).status, 0);
    auto explicit_path = (dir / "other.json").string();
    EXPECT_EQ(run_cli({"--project", explicit_path, "parse", mini()}, dir.path(), env).status, 0);
    EXPECT_TRUE(std::filesystem::exists(explicit_path));
}

TEST(Cli, ShortestPaths) {
    testsupport::TempDir dir;
    run_cli({"parse", testsupport::fixture("disconnected.txt")}, dir.path());
    auto none = run_cli({"graph", "shortest", "--from", "WOS:ISLAND-A1", "--to", "WOS:ISLAND-B1"}, dir.path());
    EXPECT_EQ(none.status, 0) << none.err;
    EXPECT_EQ(none.out, "no path\n");
    auto some = run_cli({"graph", "shortest", "--from", "WOS:ISLAND-A2", "--to", "WOS:ISLAND-A1"}, dir.path());
    EXPECT_EQ(some.status, 0);
    EXPECT_EQ(some.out, "WOS:ISLAND-A2 -> WOS:ISLAND-A1\n");
    auto unknown = run_cli({"graph", "shortest", "--from", "WOS:ISLAND-A1", "--to", "NOWHERE"}, dir.path());
    EXPECT_EQ(unknown.status, 2);
    EXPECT_NE(unknown.err.find("NOWHERE"), std::string::npos);
}

TEST(Cli, AnalysesProduceTables) {
    testsupport::TempDir dir;
    run_cli({"parse", mini()}, dir.path());
    auto auto_run = run_cli({"disambig", "auto"}, dir.path());
    EXPECT_EQ(auto_run.out, "18 distinct references, 16 clusters, 2 with variants\n");
    EXPECT_EQ(run_cli({"rpys"}, dir.path()).out.rfind("year,count,median5,deviation\n", 0), 0u);
    EXPECT_EQ(run_cli({"multi-rpys"}, dir.path()).status, 0);
    EXPECT_EQ(run_cli({"stats"}, dir.path()).status, 0);
    EXPECT_EQ(run_cli({"stats", "--table", "profile"}, dir.path()).status, 0);
    EXPECT_EQ(run_cli({"graph", "build"}, dir.path()).status, 0);
    auto mp = run_cli({"graph", "mainpath"}, dir.path());
    EXPECT_EQ(mp.status, 0);
    EXPECT_TRUE(has_line(mp.out, "1,4,WOS:000339143600007,2014,"));
    auto comm = run_cli({"graph", "communities"}, dir.path());
    EXPECT_EQ(comm.out.rfind("node_id,community\n", 0), 0u);
    auto docs = run_cli({"coupling", "docs"}, dir.path());
    EXPECT_EQ(docs.out.rfind("source,target,shared,cosine\n", 0), 0u);
    auto authors = run_cli({"--format", "pajek", "coupling", "authors"}, dir.path());
    EXPECT_EQ(authors.out.rfind("*Vertices ", 0), 0u);
    auto pajek = run_cli({"export", "pajek"}, dir.path());
    EXPECT_EQ(pajek.out.rfind("*Vertices 5\n", 0), 0u);
    EXPECT_NE(pajek.out.find("*Arcs\n"), std::string::npos);
    auto out_file = (dir / "net.net").string();
    EXPECT_EQ(run_cli({"--out", out_file, "export", "pajek"}, dir.path()).out, "");
    EXPECT_EQ(testsupport::slurp(out_file), pajek.out);
}

TEST(Cli, ReviewRoundTrip) {
    testsupport::TempDir dir;
    run_cli({"parse", mini()}, dir.path());
    run_cli({"disambig", "auto"}, dir.path());
    EXPECT_FALSE(has_line(run_cli({"rpys", "--min-count", "3"}, dir.path()).out, "LOTKA"));

    auto review = (dir / "review.txt").string();
    ASSERT_EQ(run_cli({"--out", review, "disambig", "review-export"}, dir.path()).status, 0);
    auto text = testsupport::slurp(review);
    auto pair = text.find("[pair ");
    ASSERT_NE(pair, std::string::npos) << text;
    EXPECT_NE(text.find("LOTKA AJ, 1926, J WASH ACAD SCI, P16", pair), std::string::npos);
    auto action = text.find("action: keep", pair);
    text.replace(action, 12, "action: accept");
    testsupport::spit(review, text);

    auto r = run_cli({"disambig", "review-import", review}, dir.path());
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out, "1 decisions recorded, 1 in ledger\n");
    auto after = run_cli({"rpys", "--min-count", "3"}, dir.path()).out;
    EXPECT_TRUE(has_line(after, "LOTKA")) << after;
    auto ledger = citehist::load_project(dir / "citehist.json").ledger;
    ASSERT_EQ(ledger.size(), 1u);
    EXPECT_EQ(ledger[0].actor, "review");
}

TEST(Cli, MalformedReviewFileNamesTheLine) {
    testsupport::TempDir dir;
    run_cli({"parse", mini()}, dir.path());
    auto review = (dir / "review.txt").string();
    testsupport::spit(review, "# header\n[cluster C1]\naction: accept\n1 | 2 | A\n3 | 1 | B\n");
    auto r = run_cli({"disambig", "review-import", review}, dir.path());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("review.txt:5:"), std::string::npos) << r.err;
    EXPECT_TRUE(citehist::load_project(dir / "citehist.json").ledger.empty());
}

TEST(Cli, LockPreventsConcurrentMutation) {
    testsupport::TempDir dir;
    run_cli({"parse", mini()}, dir.path());
    auto lock = citehist::ProjectLock::try_acquire(dir / "citehist.json");
    ASSERT_TRUE(lock);
    auto before = testsupport::slurp(dir / "citehist.json");
    auto r = run_cli({"disambig", "auto"}, dir.path());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("locked"), std::string::npos);
    EXPECT_EQ(testsupport::slurp(dir / "citehist.json"), before);
    EXPECT_EQ(run_cli({"rpys"}, dir.path()).status, 0);
}

TEST(Cli, ReparseWithDifferentExportWarns) {
    testsupport::TempDir dir;
    run_cli({"parse", mini()}, dir.path());
    EXPECT_TRUE(run_cli({"parse", mini()}, dir.path()).err.empty());
    auto path = dir / "citehist.json";
    auto p = citehist::load_project(path);
    p.ledger.push_back({citehist::DecisionKind::split, {"LOTKA AJ, 1926, J WASH ACAD SCI, P16"}, "user", "t"});
    citehist::save_project(path, p);
    auto r = run_cli({"parse", testsupport::fixture("golden_wos.txt")}, dir.path());
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.err.find("fingerprint"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("ledger is kept"), std::string::npos) << r.err;
    EXPECT_EQ(citehist::load_project(path).ledger.size(), 1u);
    EXPECT_EQ(run_cli({"rpys"}, dir.path()).status, 0);
}

TEST(Cli, PipelineIsReproducible) {
    auto run = [](const testsupport::TempDir& dir) {
        std::string env = "SOURCE_DATE_EPOCH=1700000000";
        run_cli({"parse", mini()}, dir.path(), env);
        run_cli({"--seed", "42", "disambig", "auto"}, dir.path(), env);
        run_cli({"--seed", "42", "--out", "net.net", "export", "pajek"}, dir.path(), env);
        run_cli({"--seed", "42", "--out", "communities.csv", "graph", "communities"}, dir.path(), env);
        run_cli({"--seed", "42", "--out", "rpys.csv", "rpys"}, dir.path(), env);
        std::vector<std::string> out;
        for (const char* f : {"citehist.json", "net.net", "communities.csv", "rpys.csv"}) out.push_back(testsupport::slurp(dir / f));
        return out;
    };
    testsupport::TempDir a, b;
    auto x = run(a), y = run(b);
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_FALSE(x[i].empty());
        EXPECT_EQ(x[i], y[i]) << i;
    }
}
