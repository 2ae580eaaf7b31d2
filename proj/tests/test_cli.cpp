#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tcl2spin/cli.hpp"

using namespace tcl2spin;

namespace {

namespace fs = std::filesystem;

fs::path scratch() {
  auto dir = fs::temp_directory_path() / ("tcl2spin_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

json small_config() {
  return json::parse(R"({
    "spin": "1", "omega_s": 1.0, "alpha": 0.8, "phi": 0.0, "coupling": "sz",
    "bath": {"eta": 0.05, "exponent_s": 3.0, "omega_c": 10.0, "temperature": 1.0},
    "grid": {"t_max": 5.0, "steps": 1000}
  })");
}

fs::path write_config(const json& doc, const std::string& name) {
  const auto p = scratch() / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "tcl2spin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw std::runtime_error("no column " + name);
  }
};

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  Csv csv;
  std::string line, cell;
  std::getline(in, line);
  std::istringstream h(line);
  while (std::getline(h, cell, ',')) csv.header.push_back(cell);
  while (std::getline(in, line)) {
    std::istringstream r(line);
    std::vector<double> row;
    while (std::getline(r, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

}  // namespace

TEST(Cli, SweepProducesOneRowPerValue) {
  auto doc = small_config();
  doc["alpha"] = 0.0;
  doc["sweep"] = {{"parameter", "alpha"}, {"values", {0.0, std::numbers::pi / 8, std::numbers::pi / 4}}};
  const auto out = scratch() / "sweep.csv";
  const auto r = run({"sweep", "--config", write_config(doc, "sweep.json").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = read_csv(out);
  ASSERT_EQ(csv.rows.size(), 3u);
  EXPECT_EQ(csv.header[0], "alpha");
  for (const auto& row : csv.rows) {
    const double n = row[csv.column("n_rhp")];
    EXPECT_TRUE(std::isfinite(n));
    EXPECT_GE(n, 0.0);
    EXPECT_LT(n, 1.0);
  }
}

TEST(Cli, ThreadedSweepMatchesSerial) {
  auto doc = small_config();
  doc["grid"] = {{"t_max", 2.0}, {"steps", 400}};
  doc["sweep"] = {{"parameter", "temperature"}, {"values", {0.0, 0.5, 1.0}}};
  const auto cfg = write_config(doc, "tsweep.json").string();
  const auto a = scratch() / "s1.csv", b = scratch() / "s3.csv";
  ASSERT_EQ(run({"sweep", "--config", cfg, "--out", a.string()}).code, 0);
  ASSERT_EQ(run({"sweep", "--config", cfg, "--out", b.string(), "--threads", "3"}).code, 0);
  std::ifstream fa(a), fb(b);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(fa), {}), std::string(std::istreambuf_iterator<char>(fb), {}));
}

TEST(Cli, UncoupledEvolutionIsConstant) {
  auto doc = small_config();
  doc["bath"]["eta"] = 0.0;
  doc["initial_state"] = {{"kind", "superposition"}, {"indices", {0, 1}}, {"amplitudes", {1.0, 1.0}}};
  const auto out = scratch() / "free.csv";
  const auto r = run({"evolve", "--config", write_config(doc, "free.json").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = read_csv(out);
  ASSERT_EQ(csv.rows.size(), 1001u);
  for (const auto& row : csv.rows)
    for (std::size_t k = 1; k < csv.column("min_eig"); ++k) EXPECT_EQ(row[k], csv.rows.front()[k]) << csv.header[k];
  EXPECT_NEAR(csv.rows.front()[csv.column("re_rho_0_1")], 0.5, 1e-15);
}

TEST(Cli, MeasuredWitnessMatchesSpin1ClosedForm) {
  const auto doc = small_config();
  const auto out = scratch() / "measure.csv";
  const auto r = run({"measure", "--config", write_config(doc, "measure.json").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = read_csv(out);
  ASSERT_FALSE(csv.rows.empty());

  const auto spec = parse_config(doc).model();
  const auto model = prepare(spec);
  const auto rates = stage_rates(spec);
  const double h = spec.grid.step();
  double peak = 0.0;
  for (const auto& row : csv.rows) {
    const double t = row[csv.column("t")];
    const auto k = static_cast<std::size_t>(std::lround(t / h));
    const double expected = g_analytic_spin1(spin1_rates(make_snapshot(rates, 2 * k, model.c)));
    const double got = row[csv.column("g")];
    EXPECT_NEAR(got, expected, std::max(1e-9, 1e-5 * expected)) << "t=" << t;
    peak = std::max(peak, got);
  }
  EXPECT_GT(peak, 0.0);
  const auto side = bundle_from_json(json::parse(std::ifstream(out.string() + ".report.json")));
  ASSERT_TRUE(side.divisibility.has_value());
  EXPECT_GT(side.divisibility->n_rhp, 0.0);
}

TEST(Cli, JsonRatesOutput) {
  auto doc = small_config();
  doc["grid"] = {{"t_max", 1.0}, {"steps", 200}};
  doc["output"] = {{"format", "json"}};
  const auto out = scratch() / "rates.json";
  ASSERT_EQ(run({"rates", "--config", write_config(doc, "rates.json").string(), "--out", out.string()}).code, 0);
  const auto b = bundle_from_json(json::parse(std::ifstream(out)));
  EXPECT_EQ(b.kind, "rates");
  ASSERT_TRUE(b.table.has_value());
  EXPECT_EQ(b.table->rows.size(), 201u);
  EXPECT_EQ(b.table->header.size(), 1u + 6u * 5u);
}

TEST(Cli, ExitCodes) {
  auto bad = small_config();
  bad["alpha"] = 4.0;
  auto r = run({"measure", "--config", write_config(bad, "bad.json").string(), "--out", "x.csv"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("alpha"), std::string::npos) << r.err;

  r = run({"evolve", "--config", (scratch() / "does_not_exist.json").string(), "--out", "x.csv"});
  EXPECT_EQ(r.code, 1);

  r = run({"evolve", "--out", "x.csv"});
  EXPECT_EQ(r.code, 1);

  auto coarse = small_config();
  coarse["grid"] = {{"t_max", 5.0}, {"steps", 10}};
  r = run({"evolve", "--config", write_config(coarse, "coarse.json").string(), "--out",
           (scratch() / "coarse.csv").string()});
  EXPECT_EQ(r.code, 2) << r.err;

  r = run({"evolve", "--config", write_config(small_config(), "ok.json").string(), "--out",
           (scratch() / "missing_dir" / "o.csv").string()});
  EXPECT_EQ(r.code, 1);

  r = run({"validate"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}
