#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path& dir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / "binpick_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string at(const char* name) { return (dir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(BINPICK_EXE) + " " + args + " >" + at("stdout.txt") + " 2>" + at("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == ',') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    out.push_back(cells);
  }
  return out;
}

// PGM (P2) header and pixel values.
struct Pgm {
  int w = 0, h = 0, maxval = 0;
  std::vector<long> px;
};

Pgm read_pgm(const std::string& path) {
  std::istringstream in(slurp(path));
  std::string magic;
  Pgm p;
  in >> magic >> p.w >> p.h >> p.maxval;
  long v;
  while (in >> v) p.px.push_back(v);
  return p;
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

const std::string kQuiet =
    R"({"noise": {"tray_jitter_sigma": 0, "bin_jitter_sigma": 0,
                  "estimator": {"dot_jitter_sigma": 0, "pixel_noise_sigma": 0, "dropout_prob": 0}}})";

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("teleport") == 2);
  CHECK(run("gen-scene --objects 0 --out " + at("zero.json")) == 2);
  CHECK(run("gen-scene --objects 5") == 2);
  CHECK(run("gen-scene --objects 5 --shape cube --out " + at("cube.json")) == 2);
  CHECK(run("bench --suite juggling --out " + at("j.csv")) == 2);
  write(at("bad.json"), R"({"gripper": {"max_open_width": -3}})");
  CHECK(run("config --config " + at("bad.json")) == 2);
  CHECK(run("config --config " + at("nowhere.json")) == 4);
}

TEST_CASE("gen-scene") {
  REQUIRE(run("gen-scene --objects 150 --shape disk --seed 42 --out " + at("s1.json")) == 0);
  REQUIRE(run("gen-scene --objects 150 --shape disk --seed 42 --out " + at("s2.json")) == 0);
  CHECK(slurp(at("s1.json")) == slurp(at("s2.json")));
  const auto doc = nlohmann::json::parse(slurp(at("s1.json")));
  CHECK(doc["items"].size() == 150);

  CHECK(run("gen-scene --objects 300 --seed 1 --out " + at("s300.json")) == 0);
  CHECK(run("gen-scene --objects 5000 --seed 1 --out " + at("s5000.json")) == 3);
  CHECK(run("gen-scene --objects 10 --out " + at("no/such/dir/s.json")) == 4);
}

TEST_CASE("run") {
  write(at("quiet.json"), kQuiet);
  REQUIRE(run("gen-scene --objects 1 --shape disk --seed 3 --out " + at("one.json")) == 0);
  REQUIRE(run("run --scene " + at("one.json") + " --config " + at("quiet.json") + " --out " + at("r1.csv")) == 0);
  const auto rows = csv_rows(at("r1.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "two-stage");
  CHECK(rows[1][4] == "true");
  CHECK(rows[1][7] == "8");
  CHECK(slurp(at("stdout.txt")).find("success=true") != std::string::npos);

  REQUIRE(run("run --scene " + at("one.json") + " --config " + at("quiet.json") + " --out " + at("r2.csv")) == 0);
  CHECK(slurp(at("r1.csv")) == slurp(at("r2.csv")));

  REQUIRE(run("run --mode one-stage --scene " + at("one.json") + " --out " + at("r3.csv")) == 0);
  CHECK(csv_rows(at("r3.csv"))[1][7] == "3");

  // A failed trial still exits 0.
  REQUIRE(run("gen-scene --objects 250 --seed 8 --out " + at("dense.json")) == 0);
  CHECK(run("run --mode one-stage --seed 1 --scene " + at("dense.json") + " --out " + at("r4.csv")) == 0);

  CHECK(run("run --scene " + at("absent.json") + " --out " + at("r5.csv")) == 4);
  CHECK(run("run --mode sideways --scene " + at("one.json") + " --out " + at("r5.csv")) == 2);
  write(at("broken.json"), "{ oops");
  CHECK(run("run --scene " + at("broken.json") + " --out " + at("r5.csv")) == 4);
}

TEST_CASE("bench") {
  REQUIRE(run("bench --suite singulation --trials 5 --seed 4 --threads 2 --out " + at("sing.csv")) == 0);
  const auto rows = csv_rows(at("sing.csv"));
  CHECK(rows.size() == 121);

  // Summary means recomputed from the CSV.
  const auto summary = nlohmann::json::parse(slurp(at("sing.summary.json")));
  std::map<std::pair<std::string, std::string>, std::pair<int, double>> acc;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto& a = acc[{rows[i][1], rows[i][2]}];
    ++a.first;
    a.second += std::stod(rows[i][5]);
  }
  REQUIRE(summary["groups"].size() == acc.size());
  for (const auto& g : summary["groups"]) {
    const auto& a = acc.at({g["policy"].get<std::string>(), std::to_string(g["cluster_size"].get<int>())});
    CHECK(g["count"] == a.first);
    CHECK(g["mean_singulation_count"].get<double>() == doctest::Approx(a.second / a.first).epsilon(1e-12));
  }

  REQUIRE(run("bench --suite singulation --trials 5 --seed 4 --threads 1 --out " + at("sing2.csv") + " --summary " +
              at("sing2.json")) == 0);
  CHECK(slurp(at("sing.csv")) == slurp(at("sing2.csv")));
  CHECK(slurp(at("sing.summary.json")) == slurp(at("sing2.json")));

  REQUIRE(run("bench --suite pipeline --trials 3 --seed 4 --out " + at("pipe.csv")) == 0);
  CHECK(csv_rows(at("pipe.csv")).size() == 7);
  CHECK(run("bench --suite pipeline --trials -1 --out " + at("pipe.csv")) == 2);
}

TEST_CASE("render") {
  REQUIRE(run("gen-scene --objects 1 --shape disk --seed 3 --out " + at("one.json")) == 0);
  REQUIRE(run("render --what density --scene " + at("one.json") + " --out " + at("dens")) == 0);
  const Pgm d = read_pgm(at("dens/density.pgm"));
  CHECK(static_cast<long>(d.px.size()) == static_cast<long>(d.w) * d.h);
  long sum = 0, support = 0;
  for (long v : d.px) sum += v;
  const auto cells = csv_rows(at("dens/density.csv"));
  for (const auto& row : cells)
    for (const auto& c : row) support += !c.empty() && std::stod(c) > 0.0;
  CHECK(support > 0);
  CHECK(std::abs(sum - 10000) <= support / 2 + 1);

  REQUIRE(run("gen-scene --objects 150 --shape disk --seed 42 --out " + at("s1.json")) == 0);
  REQUIRE(run("render --what masks --scene " + at("s1.json") + " --out " + at("m1")) == 0);
  REQUIRE(run("render --what masks --scene " + at("s1.json") + " --out " + at("m2")) == 0);
  CHECK(slurp(at("m1/masks.pgm")) == slurp(at("m2/masks.pgm")));
  const Pgm m = read_pgm(at("m1/masks.pgm"));
  const std::set<long> grays(m.px.begin(), m.px.end());
  CHECK(grays.size() == 151);
  CHECK(m.maxval == 150);

  REQUIRE(run("render --what masks --region tray --scene " + at("s1.json") + " --out " + at("m3")) == 0);
  CHECK(read_pgm(at("m3/masks.pgm")).px.size() > 0);
  CHECK(run("render --what xray --scene " + at("s1.json") + " --out " + at("m4")) == 2);
}

TEST_CASE("config command and BINPICK_CONFIG") {
  REQUIRE(run("config") == 0);
  const std::string defaults = slurp(at("stdout.txt"));
  REQUIRE(run("config --out " + at("dump.json")) == 0);
  CHECK(slurp(at("dump.json")) == defaults);
  REQUIRE(run("config --config " + at("dump.json")) == 0);
  CHECK(slurp(at("stdout.txt")) == defaults);

  write(at("env.json"), R"({"density": {"kernel_sigma_px": 4}})");
  const std::string env = std::string("BINPICK_CONFIG=") + at("env.json") + " ";
  const std::string cmd = env + BINPICK_EXE + " config >" + at("env_out.txt");
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(nlohmann::json::parse(slurp(at("env_out.txt")))["density"]["kernel_sigma_px"] == 4.0);
}
