// Declarative experiment runner behind the command line tool: sectioned key=value
// configs, grid dispatch to the numerical modules, and CSV/JSON reports.
#pragma once

#include "qdec/channels.hpp"
#include "qdec/qmat.hpp"
#include "qdec/serialize.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdec {

// Config text:
//
//   [run]
//   kind = decouple          # entropy | theta | twirl_check | decouple | protocol | sweep
//   seed = 7
//   samples = 2000
//   dtype = old              # old | sandwiched | both
//   fixture = qubit_random   # builtin name or a JSON file path
//   map = depolarizing(0.5)
//   [grid]
//   alpha = 1.25, 1.5, 2
//   n = 1, 2, 3, 4
//   [protocol]
//   name = schumacher
struct ExperimentConfig {
  std::string kind;
  std::string target;  // what a sweep runs
  std::optional<std::uint64_t> seed;
  Index samples = 2000;
  std::string dtype = "old";
  std::string fixture;
  std::string map = "depolarizing(0.5)";
  std::string output;

  std::vector<double> alphas;
  std::vector<int> ns;
  std::vector<Index> dims;
  std::vector<Index> ms;
  std::vector<std::string> maps;

  std::string protocol;
  double delta1 = 0.1;
  double delta2 = 0.1;
  int witness_tries = 16;
  std::string policy = "best_of";
  Index dim_a0 = 1;
  Index dim_a1 = 1;

  // kind actually executed (target for sweeps)
  std::string effective_kind() const;
  bool operator==(const ExperimentConfig&) const = default;
};

struct ConfigError : std::invalid_argument {
  std::vector<std::string> violations;
  explicit ConfigError(std::vector<std::string> v);
};

// every violation is collected before throwing
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);
// checks the parsed fields as a whole; returns the violations (empty when valid)
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

enum class CellKind { real, integer, text };
struct Cell {
  std::string text;
  CellKind kind = CellKind::text;
};
Cell num(double x);
Cell integer(long long x);
Cell str(std::string s);

struct RunReport {
  std::string config_echo;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
  std::string tool_version;
  double wall_time = 0.0;  // seconds; never written to the report files
  std::size_t failed_rows() const;
};

RunReport run(const ExperimentConfig& cfg);

std::string to_csv(const RunReport& r);
Json to_json(const RunReport& r);
// writes <prefix>.csv and/or <prefix>.json; throws naming the path on failure
std::vector<std::string> emit(const RunReport& r, const std::string& prefix, const std::vector<std::string>& formats);
// inverse of to_csv for the cross-format check
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// the fixed column schemas
const std::vector<std::string>& columns_for(const std::string& kind);

// ---- fixtures ------------------------------------------------------------------

struct Fixture {
  std::string name;
  std::optional<PureState> pure;
  DensityOp rho;
  std::optional<KrausMap> map;
};
// builtin names: qubit_random, qutrit_random, bell, skewed_source, ghz, product_abr,
// random_abc, classical_correlated, mes_ar_b
Fixture load_fixture(const std::string& name_or_path, std::uint64_t seed);
std::vector<std::string> builtin_fixtures();
// identity, trace, depolarizing(p), t_w(k), compressive(k), randomizing(m) on `space`
KrausMap map_from_keyword(const std::string& keyword, const SubsystemSpace& space);

std::string tool_version();

}  // namespace qdec
