// Golden-file regression for every experiment kind. Set PMORDER_UPDATE_GOLDEN=1
// to rewrite the expected files from the current build.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmorder/experiments.hpp"

using namespace pmorder;
namespace fs = std::filesystem;

namespace {

const fs::path kGoldenDir = PMORDER_GOLDEN_DIR;

bool updating() {
  const char* v = std::getenv("PMORDER_UPDATE_GOLDEN");
  return v && std::string(v) == "1";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in, "missing golden file " << p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 + 1e-9 * std::max(std::abs(a), std::abs(b)); }

// Structural equality with numeric tolerance; `where` names the first mismatch.
bool json_close(const Json& a, const Json& b, std::string& where, const std::string& path = "$") {
  if (a.is_number() && b.is_number()) {
    if (close(a.get<double>(), b.get<double>())) return true;
    where = path + ": " + a.dump() + " vs " + b.dump();
    return false;
  }
  if (a.type() != b.type() || a.size() != b.size()) {
    where = path + ": shape differs";
    return false;
  }
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k)) {
        where = path + "." + k + ": missing";
        return false;
      }
      if (!json_close(v, b[k], where, path + "." + k)) return false;
    }
    return true;
  }
  if (a.is_array()) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!json_close(a[i], b[i], where, path + "[" + std::to_string(i) + "]")) return false;
    return true;
  }
  if (a == b) return true;
  where = path + ": " + a.dump() + " vs " + b.dump();
  return false;
}

std::vector<std::vector<std::string>> csv_cells(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) row.push_back(c);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

bool cell_close(const std::string& a, const std::string& b) {
  if (a == b) return true;
  char* ea = nullptr;
  char* eb = nullptr;
  const double x = std::strtod(a.c_str(), &ea), y = std::strtod(b.c_str(), &eb);
  if (ea == a.c_str() || eb == b.c_str() || *ea || *eb) return false;
  // Cells carry 12 significant digits.
  return std::abs(x - y) <= 1e-12 + 1e-9 * std::max(std::abs(x), std::abs(y));
}

Json comparable(const ExperimentReport& r) {
  Json j = r.to_json();
  j.erase("provenance");
  return j;
}

std::string csv_text(const Table& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

std::vector<fs::path> golden_cases() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(kGoldenDir))
    if (e.is_directory() && fs::exists(e.path() / "config.json")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("every kind has a golden case") {
  for (const auto& k : experiment_kinds()) CHECK_MESSAGE(fs::exists(kGoldenDir / k / "config.json"), k);
}

TEST_CASE("golden reports") {
  for (const fs::path& dir : golden_cases()) {
    CAPTURE(dir.filename().string());
    const ExperimentConfig cfg = parse_config(Json::parse(slurp(dir / "config.json")));
    const ExperimentReport report = run_experiment(cfg);
    const Json got = comparable(report);
    if (updating()) {
      fs::remove_all(dir / "expected");
      fs::create_directories(dir / "expected" / "tables");
      std::ofstream(dir / "expected" / "report.json") << got.dump(2) << '\n';
      for (const Table& t : report.tables)
        std::ofstream(dir / "expected" / "tables" / (t.name + ".csv"), std::ios::binary) << csv_text(t);
      continue;
    }
    CHECK(report.passed());
    std::string where;
    const Json want = Json::parse(slurp(dir / "expected" / "report.json"));
    CHECK_MESSAGE(json_close(got, want, where), where);
    std::size_t n_expected = 0;
    for (const auto& e : fs::directory_iterator(dir / "expected" / "tables")) n_expected += e.is_regular_file();
    CHECK(report.tables.size() == n_expected);
    for (const Table& t : report.tables) {
      CAPTURE(t.name);
      const auto a = csv_cells(csv_text(t));
      const auto b = csv_cells(slurp(dir / "expected" / "tables" / (t.name + ".csv")));
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].size() == b[i].size());
        for (std::size_t j = 0; j < a[i].size(); ++j)
          CHECK_MESSAGE(cell_close(a[i][j], b[i][j]), "row " << i << " col " << j << ": " << a[i][j] << " vs " << b[i][j]);
      }
    }
  }
}

TEST_CASE("thread count does not change results") {
  for (const char* kind : {"ordering-sweep", "gap-brackets"}) {
    CAPTURE(kind);
    const ExperimentConfig cfg = parse_config(Json{{"kind", kind}, {"seed", 11}});
    const Json one = comparable(run_experiment(cfg, {std::nullopt, 1}));
    const Json four = comparable(run_experiment(cfg, {std::nullopt, 4}));
    CHECK(one == four);
  }
}

TEST_CASE("seed override and reproducibility") {
  const ExperimentConfig cfg = parse_config(Json{{"kind", "ring-vs-marginal"}, {"seed", 1}});
  const ExperimentReport a = run_experiment(cfg, {std::uint64_t{5}, 1});
  const ExperimentReport b = run_experiment(parse_config(Json{{"kind", "ring-vs-marginal"}, {"seed", 5}}));
  CHECK(a.seed == 5);
  CHECK(comparable(a) == comparable(b));
  CHECK(comparable(a) != comparable(run_experiment(cfg)));
}

TEST_CASE("config schema") {
  CHECK_THROWS(parse_config(Json::object()));
  CHECK_THROWS(parse_config(Json::array()));
  CHECK_THROWS(parse_config(Json{{"kind", "no-such-kind"}}));
  CHECK_THROWS(parse_config(Json{{"kind", "averaging"}, {"extra", 1}}));
  CHECK_THROWS(parse_config(Json{{"kind", "averaging"}, {"params", {{"k_maxx", 3}}}}));
  CHECK_THROWS(parse_config(Json{{"kind", "averaging"}, {"params", {{"k_max", "three"}}}}));
  CHECK_THROWS(parse_config(Json{{"kind", "averaging"}, {"seed", -1}}));
  CHECK_THROWS(parse_config(Json{{"kind", "stratify-abc"}, {"params", {{"gk", {{"Q", 1.0}}}}}}));

  const ExperimentConfig c = parse_config(Json{{"kind", "stratify-abc"}, {"params", {{"gk", {{"g", 1.0}}}}}});
  CHECK(c.params["gk"]["g"].get<double>() == 1.0);
  CHECK(c.params["gk"]["A"].get<double>() == 3.0);
  CHECK(c.params.contains("eps"));

  // Invalid values surface when the experiment runs.
  CHECK_THROWS(run_experiment(parse_config(Json{{"kind", "averaging"}, {"params", {{"k_max", 2.5}}}})));
  CHECK_THROWS(run_experiment(
      parse_config(Json{{"kind", "averaging"}, {"params", {{"base", {{"atoms", {1.0, 3.0}}, {"probs", {0.5, 0.5}}}}}}})));
}

TEST_CASE("report files") {
  const fs::path dir = fs::temp_directory_path() / "pmorder_report_test";
  fs::remove_all(dir);
  const ExperimentReport r = run_experiment(parse_config(Json{{"kind", "counterexample"}}));
  write_report(r, dir);
  const Json j = Json::parse(slurp(dir / "report.json"));
  CHECK(j["kind"] == "counterexample");
  CHECK(j["passed"] == true);
  CHECK(j["provenance"]["git_hash"].get<std::string>() == build_git_hash());
  CHECK(j["provenance"]["timestamp"].get<std::string>().size() == 20);
  CHECK(fs::exists(dir / "tables" / "counterexample.csv"));
  CHECK(slurp(dir / "tables" / "counterexample.csv").rfind("law,a,b,", 0) == 0);
  fs::remove_all(dir);
}
