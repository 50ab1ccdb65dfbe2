// Command-line front end: run a program, a fixture or an interactive session.

#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "steeple/prelude.hpp"
#include "steeple/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"steeple: a Church interpreter with query by rejection, enumeration and Metropolis-Hastings"};

  std::string file, inline_source, fixture, method = "rejection", format = "jsonl";
  bool interactive = false, list = false;
  steeple::RunConfig config;
  std::size_t burn_in = 0;
  std::vector<std::string> sets;

  app.add_option("file", file, "Church source file");
  app.add_option("-e,--eval", inline_source, "Program text to run");
  app.add_option("--fixture", fixture, "Run a named fixture");
  app.add_flag("--list-fixtures", list, "List the fixture registry");
  app.add_flag("--repl", interactive, "Start an interactive session");
  app.add_option("--method", method, "Query backend")->check(CLI::IsMember({"rejection", "mh", "enumerate"}));
  app.add_option("--samples", config.samples, "Number of samples")->check(CLI::PositiveNumber);
  auto* burn = app.add_option("--burn-in", burn_in, "MH steps discarded before sampling (default samples/10)");
  app.add_option("--lag", config.lag, "MH steps between samples")->check(CLI::PositiveNumber);
  app.add_option("--seed", config.seed, "Random seed");
  app.add_option("--max-attempts", config.max_attempts, "Rejection attempts allowed per sample")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-choices", config.limits.max_choices, "Enumeration: choices per path");
  app.add_option("--min-path-prob", config.limits.min_path_prob, "Enumeration: smallest path probability")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"jsonl", "csv", "summary"}));
  app.add_option("--set", sets, "Replace a top-level definition: name=expression");

  CLI11_PARSE(app, argc, argv);

  config.method = *steeple::parse_method(method);
  config.format = *steeple::parse_format(format);
  if (*burn) config.burn_in = burn_in;
  if (config.limits.min_path_prob <= 0.0 || config.limits.min_path_prob >= 1.0) {
    std::cerr << "--min-path-prob must lie strictly between 0 and 1\n";
    return 1;
  }
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "--set expects name=expression, got '" << s << "'\n";
      return 1;
    }
    config.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }

  try {
    if (list) {
      for (const auto& f : steeple::list_fixtures()) {
        std::cout << f.name << '\t' << f.kind << '\t' << f.description << '\n';
      }
      return 0;
    }

    steeple::Interpreter interp;
    if (interactive) {
      steeple::repl(interp, config, std::cin, std::cout, isatty(STDIN_FILENO) != 0);
      return 0;
    }

    std::string source;
    int inputs = (file.empty() ? 0 : 1) + (inline_source.empty() ? 0 : 1) + (fixture.empty() ? 0 : 1);
    if (inputs != 1) {
      std::cerr << "give exactly one of a file, -e or --fixture (or --repl)\n";
      return 1;
    }
    if (!fixture.empty()) {
      source = steeple::get_fixture(fixture).source;
      config.input = "fixture:" + fixture;
    } else if (!file.empty()) {
      std::ifstream in(file, std::ios::binary);
      if (!in) {
        std::cerr << "cannot read " << file << '\n';
        return 1;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      source = buf.str();
      config.input = file;
    } else {
      source = inline_source;
    }
    return steeple::run_script(interp, source, config, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
