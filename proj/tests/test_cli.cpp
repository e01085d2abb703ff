#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace zipvc::testing;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kBin = ZIPVC_BIN;

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("zipvc_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

// Runs the CLI with stdout and stderr captured to files; returns the exit code.
int run(const std::string& args, const fs::path& out, const fs::path& err) {
  const std::string cmd = kBin.string() + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> tsv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, '\t')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("test: toy data with a fixed seed is byte-identical across runs") {
  Scratch s;
  const fs::path toy = data_dir() / "toy";
  const std::string args = "test --pheno " + quoted(toy / "pheno.csv") + " --geno " + quoted(toy / "geno.csv") +
                           " --resamples 200 --seed 7 --out ";
  REQUIRE(run(args + quoted(s / "a.json"), s / "a.out", s / "a.err") == 0);
  REQUIRE(run(args + quoted(s / "b.json"), s / "b.out", s / "b.err") == 0);
  CHECK(slurp(s / "a.json") == slurp(s / "b.json"));
  CHECK(slurp(s / "a.out") == slurp(s / "b.out"));
  const auto line = tsv_rows(slurp(s / "a.out"));
  REQUIRE(line.size() == 1);
  CHECK(line[0].size() == 5);

  const json report = json::parse(slurp(s / "a.json"));
  for (const char* key : {"p_pi", "p_lambda", "p_min", "p_fisher", "p_std", "q_pi", "q_lambda", "q_std", "sigma2_pi",
                          "sigma2_lambda", "n", "p", "q", "K", "B", "seed", "basis", "warnings", "manifest"}) {
    CHECK_MESSAGE(report.contains(key), key);
  }
  CHECK(report["n"] == 50);
  CHECK(report["seed"] == 7);
  CHECK(report["manifest"]["inputs"].size() == 2);
  CHECK(std::stod(line[0][0]) == report["p_pi"].get<double>());

  // A different seed changes the resampling-calibrated p-values only.
  REQUIRE(run("test --pheno " + quoted(toy / "pheno.csv") + " --geno " + quoted(toy / "geno.csv") +
                  " --resamples 200 --seed 8 --out " + quoted(s / "c.json"),
              s / "c.out", s / "c.err") == 0);
  const json other = json::parse(slurp(s / "c.json"));
  CHECK(other["q_pi"] == report["q_pi"]);
  CHECK(other["sigma2_pi"] != report["sigma2_pi"]);
}

TEST_CASE("test: argument and input errors exit with code 3") {
  Scratch s;
  const fs::path toy = data_dir() / "toy";
  CHECK(run("test --geno " + quoted(toy / "geno.csv") + " --out " + quoted(s / "r.json"), s / "o", s / "e") == 3);
  CHECK(slurp(s / "e").find("--pheno") != std::string::npos);
  CHECK(slurp(s / "e").find("Usage") != std::string::npos);
  CHECK(run("test --pheno " + quoted(toy / "missing.csv") + " --geno " + quoted(toy / "geno.csv") + " --out " +
                quoted(s / "r.json"),
            s / "o", s / "e") == 3);
  CHECK(run("test --pheno " + quoted(toy / "pheno.csv") + " --geno " + quoted(toy / "geno.csv") +
                " --kernel ibs --out " + quoted(s / "r.json"),
            s / "o", s / "e") == 3);
  CHECK(slurp(s / "e").find("ibs") != std::string::npos);
  CHECK(run("test --pheno " + quoted(toy / "pheno.csv") + " --geno " + quoted(toy / "geno.csv") +
                " --resamples 50 --out " + quoted(s / "r.json"),
            s / "o", s / "e") == 3);
  CHECK(run("--help", s / "o", s / "e") == 0);
  CHECK(run("frobnicate", s / "o", s / "e") == 3);
}

TEST_CASE("test: bundled null data set shows no signal") {
  Scratch s;
  const fs::path d = data_dir() / "null";
  REQUIRE(run("test --pheno " + quoted(d / "pheno.csv") + " --geno " + quoted(d / "geno.csv") + " --covar " +
                  quoted(d / "covar.csv") + " --resamples 1000 --seed 1 --out " + quoted(s / "r.json"),
              s / "o", s / "e") == 0);
  const json report = json::parse(slurp(s / "r.json"));
  for (const char* key : {"p_pi", "p_lambda", "p_min", "p_fisher", "p_std"}) {
    CAPTURE(key);
    CHECK(report[key].get<double>() > 0.001);
  }
  CHECK(report["q"] == 5);
  CHECK(report["p"] == 8);
}

TEST_CASE("prune: correlated-pair fixture against a hand correlation table") {
  Scratch s;
  const fs::path fixture = data_dir() / "prune" / "pairs.csv";
  // Columns of the fixture.
  const std::vector<double> a{0, 1, 2, 0, 1, 2, 0, 1}, c{0, 1, 2, 0, 2, 2, 1, 1}, d{1, 0, 2, 0, 1, 0, 2, 1};
  CHECK(hand_pearson(a, c) == doctest::Approx(11.0 / 13.0).epsilon(1e-14));
  CHECK(hand_pearson(a, d) == doctest::Approx(-1.0 / 39.0).epsilon(1e-14));
  CHECK(hand_pearson(c, d) == doctest::Approx(3.0 / 13.0).epsilon(1e-14));

  auto prune = [&](double threshold) {
    const std::string tag = std::to_string(threshold);
    REQUIRE(run("prune --geno " + quoted(fixture) + " --threshold " + tag + " --out " + quoted(s / (tag + ".csv")) +
                    " --report " + quoted(s / (tag + ".json")),
                s / "o", s / "e") == 0);
    return json::parse(slurp(s / (tag + ".json")));
  };

  // 0.99: only the duplicate b goes, with correlation exactly 1.
  json r = prune(0.99);
  CHECK(r["kept"] == json::array({"a", "c", "d"}));
  REQUIRE(r["dropped"].size() == 1);
  CHECK(r["dropped"][0]["snp"] == "b");
  CHECK(r["dropped"][0]["correlated_with"] == "a");
  CHECK(r["dropped"][0]["correlation"] == 1.0);
  CHECK(slurp(s / (std::to_string(0.99) + ".csv")).substr(0, 9) == "id,a,c,d\n");

  // 0.8: c also goes (11/13 > 0.8); d stays (|r| <= 3/13).
  r = prune(0.8);
  CHECK(r["kept"] == json::array({"a", "d"}));
  REQUIRE(r["dropped"].size() == 2);
  CHECK(r["dropped"][1]["snp"] == "c");
  CHECK(r["dropped"][1]["correlation"].get<double>() == doctest::Approx(11.0 / 13.0).epsilon(1e-14));

  // 1.0: nothing exceeds the threshold.
  r = prune(1.0);
  CHECK(r["kept"].size() == 4);
  CHECK(r["dropped"].empty());

  // Constant column is an input error.
  std::ofstream(s / "flat.csv") << "id,a,z\ns1,0,1\ns2,1,1\ns3,2,1\n";
  CHECK(run("prune --geno " + quoted(s / "flat.csv") + " --out " + quoted(s / "x.csv") + " --report " +
                quoted(s / "x.json"),
            s / "o", s / "e") == 3);
  CHECK(slurp(s / "e").find("'z'") != std::string::npos);
}

TEST_CASE("simulate: setting 1b table and thread-count invariance") {
  Scratch s;
  const fs::path preset = data_dir() / "presets" / "setting1b_apoe.json";
  const std::string args = "simulate --config " + quoted(preset) + " --replicates 200 --resamples 200";
  REQUIRE(run(args + " --threads 1 --out " + quoted(s / "t1.tsv"), s / "o", s / "e") == 0);
  REQUIRE(run(args + " --threads 8 --out " + quoted(s / "t8.tsv"), s / "o", s / "e") == 0);
  const std::string t1 = slurp(s / "t1.tsv");
  CHECK(t1 == slurp(s / "t8.tsv"));
  const auto rows = tsv_rows(t1);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"setting", "test", "replicates", "rejections", "rate", "se"});
  std::set<std::string> tests;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 6);
    tests.insert(rows[i][1]);
    const double rate = std::stod(rows[i][4]);
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
  }
  CHECK(tests.size() == 9);
  const json manifest = json::parse(slurp(s / "t1.tsv.manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest.contains("wall_time_seconds"));
}

TEST_CASE("simulate: under overdispersion the ZIP Wald lambda test rejects more than VC lambda") {
  Scratch s;
  const fs::path preset = data_dir() / "presets" / "setting4_od.json";
  REQUIRE(run("simulate --config " + quoted(preset) + " --replicates 60 --out " + quoted(s / "od.tsv"), s / "o",
              s / "e") == 0);
  double wald = -1.0, vc = -1.0;
  for (const auto& row : tsv_rows(slurp(s / "od.tsv"))) {
    if (row.size() < 5) continue;
    if (row[1] == "wald_zip_lambda") wald = std::stod(row[4]);
    if (row[1] == "vc_lambda") vc = std::stod(row[4]);
  }
  CHECK(wald > vc);
}

TEST_CASE("simulate: config errors name the offending key") {
  Scratch s;
  std::ofstream(s / "bad.json") << R"({"n": 100, "profile": "nope.json"})";
  CHECK(run("simulate --config " + quoted(s / "bad.json") + " --out " + quoted(s / "x.tsv"), s / "o", s / "e") == 3);
  CHECK(slurp(s / "e").find("config.profile") != std::string::npos);
}
