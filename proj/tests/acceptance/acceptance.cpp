// Acceptance checks: one PASS or FAIL line per criterion.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"

using namespace steeple;
using testing::Histogram;

#ifndef STEEPLE_CLI_PATH
#define STEEPLE_CLI_PATH "steeple"
#endif

namespace {

const Interpreter& interp() { return testing::interp(); }

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int number, const std::string& title, double limit_seconds, const std::function<Outcome()>& body) {
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > limit_seconds) {
    o.ok = false;
    o.detail += "; over the time limit";
  }
  if (!o.ok) ++failures;
  std::ostringstream line;
  line.precision(4);
  line << (o.ok ? "PASS" : "FAIL") << " " << number << " " << title << ": " << o.detail << " [" << secs << " s of "
       << limit_seconds << "]";
  std::cout << line.str() << std::endl;
}

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

Histogram rejection_hist(const QueryProblem& p, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Value> values;
  for (auto& s : rejection_query(interp(), p, n, rng)) values.push_back(s.value);
  return testing::frequencies(values);
}

Histogram mh_hist(const QueryProblem& p, std::size_t n, std::size_t burn, std::size_t lag, std::uint64_t seed) {
  Rng rng(seed);
  return testing::frequencies(mh_query(interp(), p, n, burn, lag, rng));
}

std::vector<Value> items(std::string_view source, std::uint64_t seed) {
  auto v = list_elements(interp().run(source, seed));
  if (!v) throw std::runtime_error("expected a list");
  return *v;
}

Outcome two_flip() {
  QueryProblem p = load_query(interp(), get_fixture("two-flip").source);
  Histogram thirds = {{"(true true)", 1.0 / 3}, {"(true false)", 1.0 / 3}, {"(false true)", 1.0 / 3}};
  double exact = testing::total_variation(testing::distribution(enumerate_query(interp(), p)), thirds);
  double rej = testing::total_variation(rejection_hist(p, 10000, 1), thirds);
  double mh = testing::total_variation(mh_hist(p, 50000, 1000, 5, 2), thirds);
  return {exact < 1e-12 && rej <= 0.02 && mh <= 0.02,
          "exact TV " + num(exact) + ", rejection TV " + num(rej) + ", MH TV " + num(mh)};
}

Outcome sprinkler() {
  double oracle = testing::sprinkler_oracle(0.9, 0.3, 0.8, 0.2, 0.1);
  QueryProblem p = load_query(interp(), get_fixture("sprinkler").source);
  double exact = enumerate_query(interp(), p).probability("true");
  Histogram truth = {{"true", oracle}, {"false", 1 - oracle}};
  double mh = testing::total_variation(mh_hist(p, 12000, 1000, 2, 3), truth);
  return {std::abs(exact - oracle) <= 1e-9 && mh <= 0.02,
          "oracle " + num(oracle) + ", exact " + num(exact) + ", MH TV " + num(mh)};
}

Outcome weights() {
  double worst = 0.0;
  int checked = 0;
  for (const auto& f : list_fixtures()) {
    if (!f.finite) continue;
    Fixture full = get_fixture(f.name);
    EnumerationLimits limits{10000, 1e-5};
    EnumerationResult r = f.kind == "query-problem" ? enumerate_query(interp(), load_query(interp(), full.source))
                                                    : enumerate(interp(), full.source, limits);
    worst = std::max(worst, std::abs(r.total_mass() + (f.kind == "query-problem" ? 0.0 : r.residual) - 1.0));
    ++checked;
  }
  std::string geometric = get_fixture("geometric").source;
  double ratio_error = 0.0;
  double previous = enumerate(interp(), geometric, {5, 1e-300}).residual;
  for (std::size_t m = 6; m <= 15; ++m) {
    double r = enumerate(interp(), geometric, {m, 1e-300}).residual;
    ratio_error = std::max(ratio_error, std::abs(r / previous - 0.5));
    previous = r;
  }
  return {checked > 0 && worst <= 1e-9 && ratio_error <= 1e-6,
          std::to_string(checked) + " fixtures, worst |mass + residual - 1| " + num(worst) +
              ", worst residual ratio error " + num(ratio_error)};
}

Outcome mem_semantics() {
  int plain = 0, memo = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    plain += interp().run("(= (flip) (flip))", seed).is_true();
    memo += interp().run("(define f (mem flip)) (= (f) (f))", seed).is_true();
  }
  double freq = plain / double(n);
  return {std::abs(freq - 0.5) <= 0.015 && memo == n,
          "unmemoized agreement " + num(freq) + ", memoized " + std::to_string(memo) + "/" + std::to_string(n)};
}

Outcome dpmem_limits() {
  int divergences = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    auto v = items("(define f (DPmem 0 (lambda (x) (flip)))) (list (f 1) (f 1) (f 2) (f 1) (f 2))", seed);
    // As with mem, later calls repeat the first answer for their argument.
    divergences += !(values_equal(v[0], v[1]) && values_equal(v[0], v[3]) && values_equal(v[2], v[4]));
  }
  int reuse_runs = 0;
  const int runs = 20;
  for (int seed = 0; seed < runs; ++seed) {
    SamplingSource src;
    EvalContext ctx(interp(), Rng(seed), src, "t");
    auto forms = compile_program("(define f (DPmem 1e12 flip)) (repeat 1000 f)");
    interp().run_top_level(forms, interp().global_env(), ctx);
    int reuse = 0;
    for (const auto& c : ctx.trace().choices()) reuse += c.erp->name() == "crp-seat" && !c.value.is_symbol();
    reuse_runs += reuse > 0;
  }
  return {divergences == 0 && reuse_runs == 0,
          "alpha 0 divergences " + std::to_string(divergences) + "/" + std::to_string(n) +
              ", alpha 1e12 runs with reuse " + std::to_string(reuse_runs) + "/" + std::to_string(runs)};
}

int distinct(const std::vector<Value>& v) {
  std::string label = testing::partition_label(v);
  int k = 0;
  for (std::size_t i = 0; i < label.size(); ++i) k += label[i] == static_cast<char>('0' + i);
  return k;
}

Outcome crp_tables() {
  const int runs = 20000;
  double total = 0.0;
  for (int seed = 0; seed < runs; ++seed) total += distinct(items("(define d (DPmem 1.0 gensym)) (repeat 10 d)", seed));
  double expected = 0.0;
  for (int i = 1; i <= 10; ++i) expected += 1.0 / i;
  double mean = total / runs;
  return {std::abs(mean - expected) <= 0.05, "mean tables " + num(mean) + ", expected " + num(expected)};
}

Outcome crp_vs_sticks() {
  const int runs = 50000;
  std::map<std::string, double> crp, sticks;
  for (int seed = 0; seed < runs; ++seed) {
    crp[testing::partition_label(items("(define d (DPmem 1.0 gensym)) (repeat 4 d)", seed))] += 1;
    sticks[testing::partition_label(items("(define d (sb-DPmem 1.0 gensym)) (repeat 4 d)", seed + runs))] += 1;
  }
  std::vector<double> a, b;
  testing::aligned_counts(crp, sticks, a, b);
  double p = testing::chi_square_two_sample_p(a, b);
  return {p > 0.01 && a.size() == 15, std::to_string(a.size()) + " partitions, chi-square p " + num(p)};
}

Outcome stationarity() {
  QueryProblem p = load_query(interp(), get_fixture("two-flip").source);
  const std::array<std::string, 3> names = {"(true true)", "(true false)", "(false true)"};
  MhChain chain(interp(), p, Rng(0));
  double t[3][3] = {};
  for (int s = 0; s < 3; ++s) {
    std::optional<MhState> from;
    for (std::uint64_t seed = 0; !from && seed < 1000; ++seed) {
      MhChain c(interp(), p, Rng(seed));
      if (print_value(c.state().value) == names[s]) from = c.state();
    }
    if (!from) return {false, "no chain state " + names[s]};
    double leave = 0.0;
    const double per_move = 1.0 / (2.0 * static_cast<double>(from->trace.size()));
    for (std::size_t index = 0; index < from->trace.size(); ++index) {
      for (bool v : {true, false}) {
        auto proposal = chain.propose(*from, index, Value::boolean(v));
        if (!proposal.state) continue;
        std::string to = print_value(proposal.state->value);
        for (int d = 0; d < 3; ++d) {
          if (d != s && names[d] == to) {
            t[s][d] += per_move * proposal.acceptance;
            leave += per_move * proposal.acceptance;
          }
        }
      }
    }
    t[s][s] = 1.0 - leave;
  }
  double worst = 0.0;
  for (int j = 0; j < 3; ++j) {
    double pi_t = 0.0;
    for (int i = 0; i < 3; ++i) pi_t += t[i][j] / 3.0;
    worst = std::max(worst, std::abs(pi_t - 1.0 / 3.0));
  }
  return {worst <= 1e-12, "max |piT - pi| " + num(worst)};
}

double go_on_red(int position) {
  QueryProblem p = load_query(interp(), get_fixture("red-light").source, 0,
                              {{"start-position", std::to_string(position)}});
  return rejection_hist(p, 5000, 100 + position)["go"];
}

Outcome red_light() {
  double p0 = go_on_red(0), p4 = go_on_red(4), p6 = go_on_red(6);
  return {p0 - p4 >= 0.05 && p4 - p6 >= 0.10,
          "P(go | red) at 0: " + num(p0) + ", at 4: " + num(p4) + ", at 6: " + num(p6)};
}

Outcome clustering() {
  QueryProblem p = load_query(interp(), get_fixture("gaussian-mixture-clustering").source);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j) pairs.emplace_back(i, j);
  }
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    auto samples = mh_query(interp(), p, 2000, 10000, 10, rng);
    double same = 0.0, cross = 0.0;
    int n_same = 0, n_cross = 0;
    for (const auto& s : samples) {
      auto flags = *list_elements(s);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        bool together = (pairs[k].first < 6) == (pairs[k].second < 6);
        (together ? same : cross) += flags[k].is_true();
        ++(together ? n_same : n_cross);
      }
    }
    same /= n_same;
    cross /= n_cross;
    ok = ok && same > 0.8 && cross < 0.2;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + " same " + num(same) +
              " cross " + num(cross);
  }
  return {ok, detail};
}

std::string capture(const std::string& args) {
  std::string cmd = std::string("'") + STEEPLE_CLI_PATH + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("cannot start the command-line tool");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw std::runtime_error("command-line tool exited abnormally: " + args);
  return out;
}

Outcome determinism() {
  const std::vector<std::string> runs = {
      "--fixture sprinkler --method rejection --samples 500 --seed 7",
      "--fixture sprinkler --method mh --samples 500 --seed 7",
      "--fixture sprinkler --method enumerate",
      "--fixture two-flip --method mh --samples 300 --lag 3 --seed 9 --format csv",
      "--fixture gaussian-mixture --method rejection --samples 50 --seed 4",
      "--fixture pcfg --method enumerate --min-path-prob 1e-6 --format summary",
  };
  int identical = 0;
  for (const auto& args : runs) {
    std::string first = capture(args);
    bool same = !first.empty();
    for (int k = 0; k < 2; ++k) same = same && capture(args) == first;
    identical += same;
  }
  return {identical == static_cast<int>(runs.size()),
          std::to_string(identical) + "/" + std::to_string(runs.size()) + " configurations byte-identical over 3 runs"};
}

}  // namespace

int main() {
  criterion(1, "two flips given at least one", 5, two_flip);
  criterion(2, "sprinkler posterior", 10, sprinkler);
  criterion(3, "enumeration weight and truncation", 60, weights);
  criterion(4, "mem semantics", 60, mem_semantics);
  criterion(5, "DPmem concentration limits", 60, dpmem_limits);
  criterion(6, "expected number of restaurant tables", 10, crp_tables);
  criterion(7, "restaurant and stick-breaking partitions", 120, crp_vs_sticks);
  criterion(8, "two-flip chain stationarity", 5, stationarity);
  criterion(9, "red-light planning", 120, red_light);
  criterion(10, "infinite mixture clustering", 300, clustering);
  criterion(11, "command-line determinism", 120, determinism);
  std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria not met") << std::endl;
  return failures == 0 ? 0 : 1;
}
