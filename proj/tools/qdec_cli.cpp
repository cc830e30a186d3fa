// qdec: command line front end for the experiment runner.
//
//   qdec decouple --alpha 1.25,1.5,2 --n 1,2,3,4 --seed 7 --out results/decouple
//   qdec protocol schumacher --n 1,2,3 --dim 2 --seed 3
//   qdec sweep --config sweep.ini --format csv,json --out runs/s1
//
// Exit codes: 0 all rows ok, 1 usage or config error, 3 some grid points failed.
#include "qdec/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::string alpha, n, dim, m, map;
  std::string dtype, fixture, tmap, target, policy;
  std::optional<long long> samples, tries, dim_a0, dim_a1;
  std::optional<double> delta1, delta2;
  std::string protocol;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trimmed(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

// Flags win over the config file: overridden key lines are dropped from the file text and
// the flag values appended in their sections, so one parser validates the merged result.
std::string merged_config_text(const std::string& kind, const Flags& f) {
  std::string base;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw std::runtime_error("cannot read config " + f.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    base = ss.str();
  }
  std::map<std::string, std::map<std::string, std::string>> over;
  auto put = [&](const char* section, const char* key, const std::string& v) {
    if (!v.empty()) over[section][key] = v;
  };
  put("run", "kind", kind);
  if (f.seed) put("run", "seed", std::to_string(*f.seed));
  if (f.samples) put("run", "samples", std::to_string(*f.samples));
  put("run", "dtype", f.dtype);
  put("run", "fixture", f.fixture);
  put("run", "map", f.tmap);
  put("run", "target", f.target);
  put("grid", "alpha", f.alpha);
  put("grid", "n", f.n);
  put("grid", "dim", f.dim);
  put("grid", "m", f.m);
  put("grid", "map", f.map);
  put("protocol", "name", f.protocol);
  if (f.delta1) put("protocol", "delta1", qdec::format_double(*f.delta1));
  if (f.delta2) put("protocol", "delta2", qdec::format_double(*f.delta2));
  if (f.tries) put("protocol", "witness_tries", std::to_string(*f.tries));
  put("protocol", "policy", f.policy);
  if (f.dim_a0) put("protocol", "dim_a0", std::to_string(*f.dim_a0));
  if (f.dim_a1) put("protocol", "dim_a1", std::to_string(*f.dim_a1));

  std::istringstream in(base);
  std::string line, section, text, file_kind, file_target;
  while (std::getline(in, line)) {
    const std::string t = trimmed(line.substr(0, line.find('#')));
    if (!t.empty() && t.front() == '[' && t.back() == ']') section = trimmed(t.substr(1, t.size() - 2));
    const auto eq = t.find('=');
    if (eq != std::string::npos) {
      const std::string key = trimmed(t.substr(0, eq)), value = trimmed(t.substr(eq + 1));
      if (section == "run" && key == "kind") file_kind = value;
      if (section == "run" && key == "target") file_target = value;
      if (over.count(section) && over[section].count(key)) {
        text += "\n";  // keep line numbers stable for error messages
        continue;
      }
    }
    text += line + "\n";
  }
  const std::string file_effective = file_kind == "sweep" ? file_target : file_kind;
  if (kind != "sweep" && !file_kind.empty() && file_effective != kind)
    throw std::runtime_error("config kind '" + file_kind + "' does not match subcommand '" + kind + "'");
  if (kind != "sweep" && file_kind == "sweep") over["run"]["kind"] = "sweep";  // keep the sweep contract
  for (const auto& [sec, keys] : over) {
    text += "[" + sec + "]\n";
    for (const auto& [k, v] : keys) text += k + " = " + v + "\n";
  }
  return text;
}

int run_kind(const std::string& kind, const Flags& f) {
  qdec::ExperimentConfig cfg = qdec::parse_config(merged_config_text(kind, f));
  if (!f.out.empty()) cfg.output = f.out;
  qdec::RunReport rep = qdec::run(cfg);
  const std::vector<std::string> formats = split(f.format);
  if (cfg.output.empty()) {
    for (const std::string& fmt : formats) {
      if (fmt == "csv") std::cout << qdec::to_csv(rep);
      else if (fmt == "json") std::cout << qdec::to_json(rep).dump(2) << "\n";
      else throw std::runtime_error("unknown output format '" + fmt + "' (csv, json)");
    }
  } else {
    for (const std::string& path : qdec::emit(rep, cfg.output, formats)) std::cerr << "wrote " << path << "\n";
  }
  std::cerr << rep.rows.size() << " rows, " << rep.failed_rows() << " failed, " << rep.wall_time << " s\n";
  return rep.failed_rows() ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdec: decoupling bounds, Renyi entropies and protocol runs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qdec::tool_version());
  Flags f;

  auto common = [&](CLI::App* sc) {
    sc->add_option("--config", f.config_path, "sectioned key=value config file")->check(CLI::ExistingFile);
    sc->add_option("--seed", f.seed, "64-bit master seed");
    sc->add_option("--out", f.out, "output path prefix (stdout when absent)");
    sc->add_option("--format", f.format, "csv, json or csv,json")->capture_default_str();
    sc->add_option("--dtype", f.dtype, "old, sandwiched or both");
    sc->add_option("--fixture", f.fixture, "builtin fixture name or JSON path");
  };

  CLI::App* entropy = app.add_subcommand("entropy", "Renyi conditional entropies over an alpha grid");
  common(entropy);
  entropy->add_option("--alpha", f.alpha, "comma-separated alpha grid");

  CLI::App* theta = app.add_subcommand("theta", "Theta of named maps over a dimension grid");
  common(theta);
  theta->add_option("--map", f.map, "comma-separated map keywords");
  theta->add_option("--dim", f.dim, "comma-separated input dimensions");

  CLI::App* twirl = app.add_subcommand("twirl-check", "Haar second moment against the closed form");
  common(twirl);
  twirl->add_option("--dim", f.dim, "comma-separated dimensions of A");
  twirl->add_option("--samples", f.samples, "Monte Carlo samples");

  CLI::App* decouple = app.add_subcommand("decouple", "decoupling bound and Monte Carlo left side");
  common(decouple);
  decouple->add_option("--alpha", f.alpha, "comma-separated alpha grid");
  decouple->add_option("--n", f.n, "comma-separated copy counts");
  decouple->add_option("--samples", f.samples, "Monte Carlo samples");
  decouple->add_option("--t-map", f.tmap, "map keyword applied to A");

  CLI::App* protocol = app.add_subcommand("protocol", "run schumacher, fqsw, merge or destroy");
  common(protocol);
  protocol->add_option("name", f.protocol, "schumacher | fqsw | merge | destroy");
  protocol->add_option("--alpha", f.alpha, "comma-separated alpha grid");
  protocol->add_option("--n", f.n, "comma-separated copy counts");
  protocol->add_option("--dim", f.dim, "|B| (schumacher, destroy), |A2| (fqsw) or |E| (merge)");
  protocol->add_option("--m", f.m, "number of randomizing unitaries (destroy)");
  protocol->add_option("--dim-a0", f.dim_a0, "|A0| (merge)");
  protocol->add_option("--dim-a1", f.dim_a1, "|A1| (fqsw, merge)");
  protocol->add_option("--delta1", f.delta1, "rate slack delta1");
  protocol->add_option("--delta2", f.delta2, "rate slack delta2");
  protocol->add_option("--witness-tries", f.tries, "unitaries examined by the witness search");
  protocol->add_option("--policy", f.policy, "best_of or first_success");

  CLI::App* sweep = app.add_subcommand("sweep", "run any kind over the full grid product of a config");
  common(sweep);
  sweep->add_option("--target", f.target, "kind the sweep runs");

  CLI11_PARSE(app, argc, argv);

  const std::map<CLI::App*, std::string> kinds = {{entropy, "entropy"}, {theta, "theta"},       {twirl, "twirl_check"},
                                                 {decouple, "decouple"}, {protocol, "protocol"}, {sweep, "sweep"}};
  try {
    for (const auto& [sc, kind] : kinds)
      if (sc->parsed()) return run_kind(kind, f);
  } catch (const qdec::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
