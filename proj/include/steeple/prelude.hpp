#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace steeple {

/// Church source of the standard library bound in every global environment.
std::string_view prelude_source();

struct Fixture {
  std::string name;
  std::filesystem::path path;
  std::string kind;  // library, model or query-problem
  bool finite = false;  // every choice finite-discrete, so enumeration applies
  std::string oracle;   // name of the reference computation, if any
  std::string description;
  std::string source;
};

class UnknownFixture : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// $STEEPLE_FIXTURE_DIR if set, else the fixtures directory of the source tree.
std::filesystem::path fixture_dir();

/// Registry entries of `manifest.json`, sorted by name.
std::vector<Fixture> list_fixtures(const std::filesystem::path& dir = fixture_dir());

/// Loads a fixture with its source. Throws UnknownFixture naming the registry.
Fixture get_fixture(const std::string& name, const std::filesystem::path& dir = fixture_dir());

}  // namespace steeple
