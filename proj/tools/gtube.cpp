// Command-line front end: each subcommand runs one task from a manifest, with
// flags overriding manifest keys of the same name.

#include "gtube/error.hpp"
#include "gtube/runner.hpp"
#include "gtube/version.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

namespace {

struct Flag {
  std::string key;
  std::string help;
};

const std::vector<Flag>& value_flags() {
  static const std::vector<Flag> flags = {
      {"kind", "constant_curvature | flat_torus | warped_product"},
      {"c", "sectional curvature"},
      {"n", "dimension"},
      {"basis", "lattice rows, e.g. 1,0;0,1"},
      {"warp", "warp id, e.g. sin:0.5,1,0,2 or poly:0,1"},
      {"warp_domain", "lo,hi (inf allowed)"},
      {"entire_tube", "true | false"},
      {"point", "start point coordinates"},
      {"direction", "start direction in the tangent basis"},
      {"T", "comma-separated lengths"},
      {"T_range", "start:stop:count"},
      {"quadrature", "product_gauss | monte_carlo"},
      {"order", "quadrature order (or sample count for monte_carlo)"},
      {"samples", "Monte Carlo samples for the torus oracle"},
      {"step", "integration step"},
      {"seed", "random seed (default 0)"},
      {"tau_schedule", "decreasing tau values"},
      {"atom_threshold", "atom detection threshold"},
      {"interval", "lo,hi for Stieltjes inversion"},
      {"function", "f | G"},
      {"K", "largest k for the Gromov check"},
      {"C_grid", "candidate constants"},
      {"threads", "worker threads"},
      {"out", "output directory"},
      {"dump_jacobi", "write Jacobi determinants along the geodesic to this CSV (verify)"},
  };
  return flags;
}

std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  for (char& ch : out) {
    if (ch == '_') ch = '-';
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gtube: geodesic counting, Jacobi fields and matrix Herglotz functions"};
  app.set_version_flag("--version", std::string(gtube::kVersion));
  app.require_subcommand(1);

  const std::map<std::string, std::string> tasks = {
      {"count", "count"},   {"growth", "growth"},   {"herglotz", "herglotz_verify"},
      {"verify", "lemma_suite"}, {"gromov", "gromov"}, {"run", ""},
  };
  const std::map<std::string, std::string> descriptions = {
      {"count", "Berger-Bott totals over T, with oracles where available"},
      {"growth", "count, then classify polynomial vs exponential growth"},
      {"herglotz", "Stieltjes inversion of the closed-form f or G"},
      {"verify", "identity and property checks along one geodesic"},
      {"gromov", "search the constant in the loop-space Betti bound"},
      {"run", "run the task named in the manifest"},
  };

  std::map<std::string, std::string> overrides;
  std::string manifest_path;
  bool quiet = false;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, task] : tasks) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    sub->add_option("--manifest", manifest_path, "INI manifest");
    for (const auto& flag : value_flags()) {
      sub->add_option_function<std::string>(
          flag_name(flag.key), [&overrides, key = flag.key](const std::string& v) { overrides[key] = v; },
          flag.help);
    }
    sub->add_flag("--quiet", quiet, "suppress progress output");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? gtube::kExitSuccess : gtube::kExitValidation;
  }

  gtube::RawManifest manifest;
  try {
    if (!manifest_path.empty()) manifest = gtube::load_manifest(manifest_path);
  } catch (const gtube::Error& e) {
    std::cerr << "error [" << gtube::to_string(e.kind()) << "] in cli.load_manifest: " << e.what() << '\n';
    return gtube::kExitValidation;
  }
  for (const auto& [key, value] : overrides) manifest.set(key, value);
  if (quiet) manifest.set("quiet", "true");
  for (const auto& [name, sub] : subs) {
    if (sub->parsed() && !tasks.at(name).empty()) manifest.set("task", tasks.at(name));
  }
  return gtube::run_manifest(manifest, std::cout, std::cerr);
}
