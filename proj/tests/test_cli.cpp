#include "doctest.h"
#include "helpers.hpp"

#include "qlab/classify.hpp"
#include "qlab/cli.hpp"
#include "qlab/errors.hpp"
#include "qlab/oscsum.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("qlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter()
    {
        static int c = 0;
        return c;
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
    int code;
    std::string out, err;
};

Result qlab_run(const std::vector<std::string>& args)
{
    std::ostringstream o, e;
    const int c = run_command(args, o, e);
    return {c, o.str(), e.str()};
}

std::string slurp(const std::string& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

void write(const std::string& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("check exit codes and output")
{
    TempDir d;
    save_pair(qtest::pair_r2s2_st(), d / "nd.json");
    save_pair(qtest::pair_sum_sq(), d / "deg.json");
    auto r = qlab_run({"check", "--pair", d / "nd.json"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("NONDEGENERATE", 0) == 0);
    r = qlab_run({"check", "--pair", d / "deg.json", "--json"});
    CHECK(r.code == kExitVerdict);
    CHECK(nlohmann::json::parse(r.out)["verdict"] == "DEGENERATE");
    CHECK(qlab_run({"classify", "--pair", d / "deg.json"}).code == kExitVerdict);
    CHECK(qlab_run({"check"}).code == kExitError);
    CHECK(qlab_run({"nonsense"}).code == kExitError);
    CHECK(qlab_run({"--help"}).code == kExitOk);
}

TEST_CASE("corrupted pair file names file and line")
{
    TempDir d;
    write(d / "bad.json", "{\n  \"A1\": [[1,0,0],\n  [0,1,0]\n  [0,0,1]],\n}");
    const auto r = qlab_run({"check", "--pair", d / "bad.json"});
    CHECK(r.code == kExitError);
    CHECK(r.err.find("bad.json:4") != std::string::npos);
}

TEST_CASE("reduce, cylinder")
{
    TempDir d;
    save_pair(normal_form_pair(qtest::q(1), qtest::q(2)), d / "nf.json");
    save_pair(qtest::pair_r2_s2(), d / "r2s2.json");
    auto r = qlab_run({"reduce", "--pair", d / "nf.json"});
    CHECK(r.code == kExitOk);
    CHECK(nlohmann::json::parse(r.out)["reducible"] == true);
    CHECK(qlab_run({"reduce", "--pair", d / "r2s2.json"}).code == kExitVerdict);

    r = qlab_run({"cylinder", "--audit"});
    CHECK(r.code == kExitOk);
    CHECK(nlohmann::json::parse(r.out)["ok"] == true);
    r = qlab_run({"cylinder", "--pair", d / "nf.json", "--plane", "0,0,0", "--eta", "1/4"});
    CHECK(r.code == kExitOk);
    CHECK(nlohmann::json::parse(r.out).contains("frame"));
    CHECK(qlab_run({"cylinder", "--pair", d / "nf.json", "--plane", "0,0,0", "--eta", "2"}).code == kExitVerdict);
    CHECK(qlab_run({"cylinder", "--pair", d / "nf.json"}).code == kExitError);
}

TEST_CASE("ratio and expsum CSV, TOML config precedence")
{
    TempDir d;
    save_pair(normal_form_pair(qtest::q(1), qtest::q(1)), d / "nf.json");
    auto r = qlab_run({"ratio", "--pair", d / "nf.json", "--g", "delta:1,0,1", "--N", "4,16", "--p", "2,14/3", "--mc", "200", "--out", d / "r.csv"});
    REQUIRE(r.code == kExitOk);
    std::ifstream f(d / "r.csv", std::ios::binary);
    const auto t = read_csv(f);
    CHECK(t.rows.size() == 4);
    for (const auto& row : t.rows)
        CHECK(std::stod(row[t.column("ratio")]) == 1.0);
    CHECK(qlab_run({"ratio", "--pair", d / "nf.json", "--N", "8", "--mc", "100"}).code == kExitError);

    write(d / "cfg.toml", "[expsum]\nmc = 500\nN = [4, 6]\np = [\"2\"]\n");
    r = qlab_run({"--config", d / "cfg.toml", "expsum", "--pair", d / "nf.json"});
    REQUIRE(r.code == kExitOk);
    std::istringstream a(r.out);
    auto ta = read_csv(a);
    CHECK(ta.rows.size() == 2);
    CHECK(ta.rows[0][ta.column("mc")] == "500");
    r = qlab_run({"--config", d / "cfg.toml", "expsum", "--pair", d / "nf.json", "--mc", "300"});
    std::istringstream b(r.out);
    auto tb = read_csv(b);
    CHECK(tb.rows[0][tb.column("mc")] == "300");
}

TEST_CASE("fit refuses mixed rows")
{
    TempDir d;
    save_pair(normal_form_pair(qtest::q(1), qtest::q(1)), d / "a.json");
    save_pair(qtest::pair_r2s2_st(), d / "b.json");
    REQUIRE(qlab_run({"expsum", "--pair", d / "a.json", "--N", "4,8,16", "--p", "2", "--mc", "400", "--out", d / "a.csv"}).code == 0);
    REQUIRE(qlab_run({"expsum", "--pair", d / "b.json", "--N", "4,8,16", "--p", "2,4", "--mc", "400", "--out", d / "b.csv"}).code == 0);
    auto r = qlab_run({"fit", "--in", d / "a.csv"});
    CHECK(r.code == kExitOk);
    const auto fit = nlohmann::json::parse(r.out);
    CHECK(fit["points"] == 3);

    r = qlab_run({"fit", "--in", d / "b.csv"});
    CHECK(r.code == kExitError);
    CHECK(qlab_run({"fit", "--in", d / "b.csv", "--p", "4"}).code == kExitOk);

    write(d / "mixed.csv", slurp(d / "a.csv") + slurp(d / "b.csv").substr(csv_header().size() + 2));
    r = qlab_run({"fit", "--in", d / "mixed.csv", "--p", "2"});
    CHECK(r.code == kExitError);
    CHECK(r.err.find("--force") != std::string::npos);
    CHECK(qlab_run({"fit", "--in", d / "mixed.csv", "--p", "2", "--force"}).code == kExitOk);
}

TEST_CASE("thread cap leaves CSV bytes unchanged")
{
    TempDir d;
    save_pair(qtest::pair_r2s2_st(), d / "p.json");
    const std::vector<std::string> args{"expsum", "--pair", d / "p.json", "--N", "6,9", "--p", "2,6", "--mc", "2000", "--seed", "3"};
    const auto a = qlab_run(args);
    auto capped = args;
    capped.insert(capped.begin(), {"--threads", "1"});
    const auto b = qlab_run(capped);
    ::setenv("QLAB_THREADS", "2", 1);
    const auto c = qlab_run(args);
    ::unsetenv("QLAB_THREADS");
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
}

TEST_CASE("run_manifest")
{
    TempDir d;
    save_pair(qtest::pair_r2s2_st(), d / "pair.json");

    auto empty = run_manifest(nlohmann::json{{"commands", nlohmann::json::array()}}, d.path.string());
    CHECK(empty.commands.empty());
    CHECK(empty.status == "ok");

    const nlohmann::json m{{"pair", "pair.json"},
                           {"seed", 7},
                           {"output_dir", "out"},
                           {"commands",
                            {{{"id", "nd"}, {"argv", {"check", "--json"}}},
                             {{"id", "es"}, {"argv", {"expsum", "--N", "4,8,16", "--p", "2", "--mc", "500", "--out", "es.csv"}}},
                             {{"id", "fit"}, {"argv", {"fit", "--in", "es.csv"}}}}}};
    write(d / "m.json", m.dump(2));
    const auto rep = run_manifest(d / "m.json");
    REQUIRE(rep.commands.size() == 3);
    CHECK(rep.commands[0].verdict == "NONDEGENERATE");
    CHECK(rep.commands[0].status == "ok");
    CHECK(fs::exists(d.path / "out" / "es.csv"));
    CHECK(fs::exists(d.path / "out" / "nd.out"));
    const std::string first = slurp(d / "out/es.csv");
    run_manifest(d / "m.json");
    CHECK(slurp(d / "out/es.csv") == first);
    CHECK(first.find(",7\r\n") != std::string::npos);

    CHECK_THROWS_AS(run_manifest(nlohmann::json{{"comands", nlohmann::json::array()}}, d.path.string()), SchemaError);
    CHECK_THROWS_AS(run_manifest(nlohmann::json{{"pair", "missing.json"}}, d.path.string()), SchemaError);
    CHECK_THROWS_AS(run_manifest(nlohmann::json{{"commands", {{{"id", "x"}}}}}, d.path.string()), SchemaError);
    CHECK_THROWS_AS(run_manifest(nlohmann::json{{"commands", {{{"id", "x"}, {"argv", {"check"}}}, {{"id", "x"}, {"argv", {"check"}}}}}},
                                 d.path.string()),
                    SchemaError);
    try {
        run_manifest(nlohmann::json{{"pair", "pair.json"}, {"commands", {{{"id", "bad-ratio"}, {"argv", {"ratio", "--N", "8", "--mc", "10"}}}}}},
                     d.path.string());
        FAIL("no throw");
    } catch (const CommandFailed& e) {
        CHECK(std::string(e.what()).find("bad-ratio") != std::string::npos);
    }
    write(d / "broken.json", "{\n \"commands\": [\n  {\"id\": \"a\",\n }\n]}");
    try {
        run_manifest(d / "broken.json");
        FAIL("no throw");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("broken.json:4") != std::string::npos);
    }
}

TEST_CASE("quick suite is marked non-certifying")
{
    TempDir d;
    const auto r = qlab_run({"suite", "--quick", "--out", d / "s"});
    CHECK(r.out.rfind("NON-CERTIFYING", 0) == 0);
    const auto rep = nlohmann::json::parse(slurp(d / "s/report.json"));
    CHECK(rep["non_certifying"] == true);
    CHECK(rep["verdicts"].size() == 13);
    CHECK(rep["verdicts"][8]["pass"] == true);
}

}
