#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mner/errors.hpp"
#include "mner/io/csv.hpp"
#include "mner/io/ingest.hpp"
#include "mner/io/report.hpp"
#include "mner/io/run_config.hpp"
#include "mner/uncertainty.hpp"

#ifndef MNER_TEST_DATA
#define MNER_TEST_DATA "."
#endif

using namespace mner;
using namespace mner::io;

namespace {

CsvTable table(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

RunConfig simple_config(std::vector<std::string> responses, std::vector<std::vector<std::string>> cov) {
  RunConfig c;
  c.input = "in-memory";
  c.area_column = "area";
  c.responses = std::move(responses);
  c.covariates = std::move(cov);
  return c;
}

}  // namespace

TEST_CASE("csv reader") {
  const CsvTable t = table("\xEF\xBB\xBF" "a, b ,c\r\n1,\"x,y\",3\r\n\r\n4,\"say \"\"hi\"\"\",6\n");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[1][1] == "say \"hi\"");
  CHECK(t.column("c") == 2);
  CHECK(t.column("zz") == -1);
  CHECK_THROWS_AS(table("a,a\n1,2\n"), DuplicateHeader);
  CHECK_THROWS_AS(table("a,b\n1\n"), InvalidInput);
  CHECK_THROWS_AS(table(""), InvalidInput);
  CHECK_THROWS_AS(table("a\n\"open\n"), InvalidInput);
}

TEST_CASE("number formatting round-trips") {
  for (const double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 123456789.123456789}) {
    double y = 0.0;
    REQUIRE(parse_double(format_double(x), y));
    CHECK(y == x);
  }
  double y = 0.0;
  CHECK_FALSE(parse_double("1.5x", y));
  CHECK_FALSE(parse_double("", y));
  CHECK_FALSE(parse_double("nan", y));
  CHECK(parse_double(" +2 ", y));
  CHECK(y == 2.0);
  CHECK(matrix_suffix(1, 2) == "12");
  CHECK(matrix_suffix(10, 2) == "10_2");
  std::ostringstream out;
  write_csv_row(out, {"a", "b,c", "d\"e"});
  CHECK(out.str() == "a,\"b,c\",\"d\"\"e\"\n");
}

TEST_CASE("run config grammar") {
  std::istringstream in(
      "# comment\n[data]\ninput = f.csv ; trailing\narea = id\nresponses = y1, y2\n"
      "[covariates]\ny1 = a, b\nall = c\n[estimation]\nalpha = 0.1\nell = 1, -1\nseed = 42\n[output]\ndir = out\n");
  const RunConfig c = parse_run_config(in);
  CHECK(c.input == "f.csv");
  CHECK(c.responses == std::vector<std::string>{"y1", "y2"});
  CHECK(c.covariates == std::vector<std::vector<std::string>>{{"a", "b"}, {"c"}});
  CHECK(c.alpha == 0.1);
  CHECK(c.ell == std::vector<double>{1.0, -1.0});
  CHECK(c.seed == 42u);
  CHECK(c.output_dir == "out");
  CHECK(c.v_form == VarianceForm::Printed);
  CHECK_NOTHROW(c.validate());

  auto parse = [](const std::string& s) {
    std::istringstream is(s);
    return parse_run_config(is);
  };
  CHECK_THROWS_AS(parse("[data]\nbogus = 1\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("[nowhere]\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("[data]\narea = a\narea = b\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("[estimation]\nalpha = lots\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("[estimation]\nseed = -3\n"), InvalidConfig);
  CHECK(parse("[estimation]\nv_form = delta\n").v_form == VarianceForm::Delta);
  CHECK_THROWS_AS(parse("[estimation]\nv_form = exact\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("[data]\nresponses = y\n[covariates]\nz = a\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("[data]\ninput = x\narea = a\nresponses = y\n").validate(), InvalidConfig);
}

TEST_CASE("ingest minimal file") {
  const CsvTable t = table("area,y,x\nA,1.0,0.5\nA,2.0,1.5\nB,3.0,-1\nB,4.5,2\n");
  const Ingested in = ingest_table(t, simple_config({"y"}, {{"x"}}));
  CHECK(in.data.m() == 2);
  CHECK(in.data.area_sizes() == std::vector<int>{2, 2});
  CHECK(in.data.s() == 2);
  CHECK(in.data.area_ids() == std::vector<std::string>{"A", "B"});
  CHECK(in.coefficient_names == std::vector<std::string>{"y:(Intercept)", "y:x"});
  CHECK(in.data.area(1).regressor(1)(0, 1) == 2.0);
}

TEST_CASE("ingest groups by first appearance") {
  const CsvTable t = table("area,y,x\nB,1,0\nA,2,1\nB,3,2\nC,4,3\nA,5,4\n");
  const Ingested in = ingest_table(t, simple_config({"y"}, {{"x"}}));
  CHECK(in.data.area_ids() == std::vector<std::string>{"B", "A", "C"});
  CHECK(in.data.area_sizes() == std::vector<int>{2, 2, 1});
  CHECK(in.data.area(0).responses()(1, 0) == 3.0);
}

TEST_CASE("ingest errors") {
  const auto cfg = simple_config({"y"}, {{"x"}});
  CHECK_THROWS_AS(ingest_table(table("area,x\nA,1\nB,2\n"), cfg), MissingColumn);
  CHECK_THROWS_AS(ingest_table(table("area,y\nA,1\nB,2\n"), cfg), MissingColumn);
  CHECK_THROWS_AS(ingest_table(table("area,y,x\nA,1,2\nB,oops,2\n"), cfg), NonNumericCell);
  CHECK_THROWS_AS(ingest_table(table("area,y,x\nA,1,2\n ,1,2\n"), cfg), EmptyArea);
  CHECK_THROWS_AS(ingest_table(table("area,y,x\nA,1,2\nA,1,3\n"), cfg), InvalidInput);
  try {
    ingest_table(table("area,y,x\nA,1,2\nB,2,zz\n"), cfg);
    FAIL("expected NonNumericCell");
  } catch (const NonNumericCell& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("'x'") != std::string::npos);
  }
}

TEST_CASE("land-price shaped file gives the 3 x 12 block design") {
  const RunConfig c = load_run_config(std::string(MNER_TEST_DATA) + "/plp_small.ini");
  const Ingested in = ingest_csv(c.input, c);
  CHECK(in.data.k() == 3);
  CHECK(in.data.s() == 12);
  const auto r = in.data.area(0).regressor(0);
  for (Eigen::Index d = 0; d < 3; ++d) {
    for (Eigen::Index col = 0; col < 12; ++col) {
      const bool own_block = col / 4 == d;
      if (!own_block) CHECK(r(d, col) == 0.0);
      if (own_block && col % 4 == 0) CHECK(r(d, col) == 1.0);
    }
  }
  CHECK(in.coefficient_names[5] == "y2:FAR");
}

TEST_CASE("predict CSV round-trips bit-exactly") {
  const RunConfig c = load_run_config(std::string(MNER_TEST_DATA) + "/plp_small.ini");
  const Ingested in = ingest_csv(c.input, c);
  EblupResult r = eblup(in.data);
  const auto sizes = in.data.area_sizes();
  const SizeProfile profile(sizes);
  for (auto& p : r.predictions) msem_estimate(r.fit, profile, p);

  std::ostringstream out;
  write_predictions_csv(out, r.predictions);
  const CsvTable t = table(out.str());
  REQUIRE(t.rows.size() == r.predictions.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& p = r.predictions[i];
    CHECK(t.rows[i][static_cast<std::size_t>(t.column("area"))] == p.area_id);
    for (Eigen::Index a = 0; a < 3; ++a) {
      double x = 0.0;
      REQUIRE(parse_double(t.rows[i][static_cast<std::size_t>(t.column("theta_" + std::to_string(a + 1)))], x));
      CHECK(x == p.theta_hat(a));
      for (Eigen::Index b = 0; b < 3; ++b) {
        const long col = t.column("msem_" + matrix_suffix(a + 1, b + 1));
        REQUIRE(col >= 0);
        REQUIRE(parse_double(t.rows[i][static_cast<std::size_t>(col)], x));
        CHECK(x == p.mse->msem(a, b));
      }
    }
  }

  const Json j = Json::parse(predictions_json(r.predictions).dump());
  CHECK(matrix_from_json(j[0]["msem"]) == r.predictions[0].mse->msem.matrix());
  const Json f = Json::parse(fit_json(r.fit, in.data, in.coefficient_names).dump());
  CHECK(matrix_from_json(f["beta_cov"]) == r.fit.beta_cov);
  CHECK(f["s"] == 12);
  CHECK(f["beta"]["y1:(Intercept)"].get<double>() == r.fit.beta(0));
}

TEST_CASE("target file") {
  const auto dir = std::filesystem::temp_directory_path() / "mner_io_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "t.csv");
    f << "area,c_11,c_12\nB,1,0.5\nA,1,2\n";
  }
  const auto m = read_targets((dir / "t.csv").string(), "area", 1, 2);
  CHECK(m.at("B")(0, 1) == 0.5);
  CHECK(m.at("A")(0, 1) == 2.0);
  CHECK_THROWS_AS(read_targets((dir / "t.csv").string(), "area", 2, 2), MissingColumn);
}
