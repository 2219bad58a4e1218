#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "slowfast/error.hpp"
#include "slowfast/report.hpp"

using namespace slowfast;

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  for (double v : {1.0 / 3.0, 2.0 / 7.0, 1e300, 4.9406564584124654e-324})
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("csv and summary text") {
  TableReport r;
  r.name = "demo";
  r.columns = {"a", "b"};
  r.rows = {{1.0, 0.5}, {2.0, 0.25}};
  r.add_summary("slope", -1.0);
  r.add_summary("label", "x");
  CHECK(r.summary_value("slope") == "-1");
  CHECK(r.summary_value("missing").empty());
  CHECK(to_csv(r, "p") == "# p\na,b\n1,0.5\n2,0.25\n");
  CHECK(to_summary(r) == "report = demo\nslope = -1\nlabel = x\n");
  CHECK(comment_block("one\ntwo\n") == "# one\n# two\n");
}

TEST_CASE("atomic writes create parent directories and leave no temporary file") {
  const auto dir = std::filesystem::temp_directory_path() / "slowfast_report_test" / "nested";
  const auto path = (dir / "f.txt").string();
  write_file_atomically(path, "hello\n");
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  CHECK(s.str() == "hello\n");
  CHECK(!std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir.parent_path());
}

TEST_CASE("unwritable paths raise Io") {
  try {
    write_file_atomically("/proc/slowfast/x.txt", "x");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}
