#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

using namespace steeple;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

std::string quoted(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Result cli(const std::string& args) {
  const char* exe = std::getenv("STEEPLE_CLI");
  REQUIRE(exe != nullptr);
  std::string cmd = quoted(exe) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string without_header(const std::string& text) {
  auto nl = text.find('\n');
  return text.substr(nl + 1);
}

}  // namespace

TEST_CASE("two-flip enumeration prints three thirds") {
  Result r = cli("--fixture two-flip --method enumerate");
  CHECK(r.status == 0);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 4);
  CHECK(ls[0].rfind("# steeple input=fixture:two-flip method=enumerate", 0) == 0);
  for (std::size_t i = 1; i < 4; ++i) {
    auto j = nlohmann::json::parse(ls[i]);
    CHECK(j.at("probability").get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  CHECK(ls[1].find("(false true)") != std::string::npos);
  CHECK(ls[3].find("(true true)") != std::string::npos);
}

TEST_CASE("sample lines follow the schema") {
  Result r = cli("--fixture two-flip --samples 5 --seed 3");
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 6);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto j = nlohmann::json::parse(ls[i]);
    CHECK(j.at("index").get<int>() == static_cast<int>(i - 1));
    CHECK(j.at("value").is_string());
    CHECK(j.at("accepted_attempts").get<int>() >= 1);
  }
  auto mh = lines(cli("--fixture two-flip --samples 5 --method mh").out);
  REQUIRE(mh.size() == 6);
  CHECK(!nlohmann::json::parse(mh[1]).contains("accepted_attempts"));
}

TEST_CASE("output is reproducible for each method") {
  for (const char* method : {"rejection", "mh", "enumerate"}) {
    CAPTURE(method);
    std::string args = std::string("--fixture sprinkler --samples 200 --seed 11 --method ") + method;
    Result a = cli(args), b = cli(args);
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
  }
  CHECK(cli("--fixture sprinkler --samples 200 --seed 1").out != cli("--fixture sprinkler --samples 200 --seed 2").out);
}

TEST_CASE("exit statuses") {
  CHECK(cli("-e " + quoted("(flip")).status == 2);
  CHECK(cli("-e " + quoted("(query '(flip) (lambda (v) false))") + " --max-attempts 1000").status == 3);
  CHECK(cli("-e " + quoted("(query '(flip) (lambda (v) false))") + " --method enumerate").status == 4);
  CHECK(cli("--fixture no-such-fixture").status == 1);
  CHECK(cli("").status == 1);
  CHECK(cli("--method bogus --fixture two-flip").status != 0);
}

TEST_CASE("summary frequency for the sprinkler") {
  Result r = cli("--fixture sprinkler --format summary --samples 10000 --seed 5");
  CHECK(r.status == 0);
  double freq = -1.0;
  for (const auto& line : lines(r.out)) {
    if (line.rfind("true\t", 0) == 0) freq = std::stod(line.substr(line.rfind('\t') + 1));
  }
  CHECK(freq == doctest::Approx(testing::sprinkler_oracle(0.9, 0.3, 0.8, 0.2, 0.1)).epsilon(0.035));
}

TEST_CASE("csv output") {
  auto ls = lines(cli("--fixture two-flip --format csv --samples 2").out);
  REQUIRE(ls.size() == 4);
  CHECK(ls[1] == "index,value,accepted_attempts");
  CHECK(ls[2].rfind("0,\"(", 0) == 0);
}

TEST_CASE("listing fixtures") {
  Result r = cli("--list-fixtures");
  CHECK(r.status == 0);
  CHECK(r.out.find("red-light\t") != std::string::npos);
  CHECK(lines(r.out).size() == list_fixtures().size());
}

TEST_CASE("definition overrides") {
  Result r = cli("-e " + quoted("(define p 0.0) (flip p)") + " --samples 3 --set p=1.0");
  CHECK(r.status == 0);
  CHECK(r.out.find("set:p=1.0") != std::string::npos);
  CHECK(r.out.find("false") == std::string::npos);
}

TEST_CASE("programs without a query sample the last value") {
  auto ls = lines(cli("-e " + quoted("(define x (flip 1.0)) x") + " --samples 2").out);
  REQUIRE(ls.size() == 3);
  CHECK(ls[1].find("\"value\":\"true\"") != std::string::npos);
  auto exact = lines(cli("--fixture geometric --method enumerate --max-choices 3").out);
  CHECK(exact.back().find("residual") != std::string::npos);
}

TEST_CASE("several queries in one program are labelled") {
  std::ostringstream out, err;
  RunConfig config;
  config.samples = 2;
  int status = run_script(testing::interp(), "(query '(flip) (lambda (v) v)) (query '(flip) (lambda (v) (not v)))",
                          config, out, err);
  CHECK(status == 0);
  CHECK(out.str().find("# t0") != std::string::npos);
  CHECK(out.str().find("# t1") != std::string::npos);
}

TEST_CASE("the session keeps definitions and prints queries as the script runner does") {
  RunConfig config;
  config.samples = 20;
  config.seed = 4;
  std::istringstream in("(define (coin) (flip 0.7))\n(query '(list (coin) (coin))\n  (lambda (v) (first v)))\n:quit\n");
  std::ostringstream session_out;
  repl(testing::interp(), config, in, session_out, false);

  std::ostringstream script_out, err;
  run_script(testing::interp(), "(define (coin) (flip 0.7)) (query '(list (coin) (coin)) (lambda (v) (first v)))",
             config, script_out, err);
  CHECK(session_out.str() == without_header(script_out.str()));
}

TEST_CASE("session directives and errors") {
  std::istringstream in(
      ":method enumerate\n"
      "(query '(flip) (lambda (v) true))\n"
      "(+ 1 2)\n"
      "(car\n"
      "  '(a))\n"
      "(oops\n"
      ")\n"
      ":samples x\n"
      ":frobnicate\n"
      "(+ 40 2)\n");
  std::ostringstream out;
  repl(testing::interp(), RunConfig{}, in, out, false);
  std::string text = out.str();
  CHECK(text.find("\"probability\":0.5") != std::string::npos);
  CHECK(text.find("3\n") != std::string::npos);
  CHECK(text.find("a\n") != std::string::npos);
  CHECK(text.find("unknown directive :frobnicate") != std::string::npos);
  CHECK(text.find("42\n") != std::string::npos);
}
