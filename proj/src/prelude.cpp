#include "steeple/prelude.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef STEEPLE_DEFAULT_FIXTURE_DIR
#define STEEPLE_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace steeple {

namespace {

constexpr std::string_view kPrelude = R"church(
(define (map f xs)
  (if (null? xs) '() (pair (f (first xs)) (map f (rest xs)))))

(define (fold f init xs)
  (if (null? xs) init (fold f (f (first xs) init) (rest xs))))

(define (length xs)
  (if (null? xs) 0 (+ 1 (length (rest xs)))))

(define (sum xs) (fold + 0 xs))

(define (filter keep? xs)
  (cond ((null? xs) '())
        ((keep? (first xs)) (pair (first xs) (filter keep? (rest xs))))
        (else (filter keep? (rest xs)))))

(define (repeat n thunk)
  (if (= n 0) '() (pair (thunk) (repeat (- n 1) thunk))))

(define (square x) (* x x))

(define (noisy-or a astrength b bstrength baserate)
  (or (and (flip astrength) a)
      (and (flip bstrength) b)
      (flip baserate)))

; Nonterminals are gensyms and symbols with an uppercase initial.
(define (terminal? symbol)
  (not (or (gensym? symbol) (uppercase-symbol? symbol))))

(define (unfold expander symbol)
  (if (terminal? symbol)
      symbol
      (let ((children (expander symbol)))
        (if (list? children)
            (map (lambda (x) (unfold expander x)) children)
            (unfold expander children)))))

(define adapted-unfold
  (DPmem 1.0
         (lambda (expander symbol)
           (if (terminal? symbol)
               symbol
               (let ((children (expander symbol)))
                 (if (list? children)
                     (map (lambda (x) (adapted-unfold expander x)) children)
                     (adapted-unfold expander children)))))))

(define (make-100-sided-die)
  (let ((weights (dirichlet (repeat 100 (lambda () 1.0)))))
    (lambda () (multinomial (iota 100 1) weights))))

; Stick-breaking construction of the Dirichlet process.
(define (pick-a-stick sticks J)
  (if (< (random) (sticks J))
      J
      (pick-a-stick sticks (+ J 1))))

(define (sb-DP alpha proc)
  (let ((sticks (mem (lambda x (beta 1.0 alpha))))
        (atoms (mem (lambda x (proc)))))
    (lambda () (atoms (pick-a-stick sticks 1)))))

(define (sb-DPmem alpha proc)
  (let ((dps (mem (lambda args
                    (sb-DP alpha (lambda () (apply proc args)))))))
    (lambda argsin ((apply dps argsin)))))
)church";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Fixture entry_to_fixture(const std::string& name, const nlohmann::json& entry, const std::filesystem::path& dir) {
  Fixture f;
  f.name = name;
  f.path = dir / entry.at("path").get<std::string>();
  f.kind = entry.value("kind", "model");
  f.finite = entry.value("finite", false);
  f.oracle = entry.value("oracle", "");
  f.description = entry.value("description", "");
  return f;
}

nlohmann::json read_manifest(const std::filesystem::path& dir) {
  return nlohmann::json::parse(read_file(dir / "manifest.json"));
}

}  // namespace

std::string_view prelude_source() { return kPrelude; }

std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("STEEPLE_FIXTURE_DIR"); env != nullptr && *env != '\0') return env;
  return STEEPLE_DEFAULT_FIXTURE_DIR;
}

std::vector<Fixture> list_fixtures(const std::filesystem::path& dir) {
  std::vector<Fixture> out;
  auto manifest = read_manifest(dir);
  for (const auto& [name, entry] : manifest.at("fixtures").items()) out.push_back(entry_to_fixture(name, entry, dir));
  std::sort(out.begin(), out.end(), [](const Fixture& a, const Fixture& b) { return a.name < b.name; });
  return out;
}

Fixture get_fixture(const std::string& name, const std::filesystem::path& dir) {
  auto manifest = read_manifest(dir);
  const auto& fixtures = manifest.at("fixtures");
  if (!fixtures.contains(name)) {
    std::string known;
    for (const auto& [n, entry] : fixtures.items()) known += (known.empty() ? "" : ", ") + n;
    throw UnknownFixture("unknown fixture '" + name + "'; known fixtures: " + known);
  }
  Fixture f = entry_to_fixture(name, fixtures.at(name), dir);
  f.source = read_file(f.path);
  return f;
}

}  // namespace steeple
