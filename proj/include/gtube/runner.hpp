#pragma once

#include "gtube/manifolds.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gtube {

/// Flat key/value view of an INI manifest. Keys are unique across the
/// [manifold], [task] and [output] sections; command-line flags use the same
/// names with '-' for '_'.
struct RawManifest {
  std::map<std::string, std::string> values;

  void set(const std::string& key, const std::string& value) { values[key] = value; }
  std::optional<std::string> get(const std::string& key) const;
};

/// Reads an INI manifest. Unknown sections or keys are configuration errors.
RawManifest load_manifest(const std::filesystem::path& path);
RawManifest parse_manifest(std::istream& in);

/// Names accepted in manifests and as flags, with their section.
const std::map<std::string, std::string>& manifest_keys();

enum class Task { count, growth, herglotz_verify, lemma_suite, gromov };
Task parse_task(const std::string& name);
std::string to_string(Task task);

/// Validated experiment with defaults filled in.
struct Experiment {
  Task task = Task::count;
  std::optional<ManifoldSpec> spec;  ///< absent only for gromov, which fixes the round sphere
  std::optional<Eigen::VectorXd> point;
  std::optional<Eigen::VectorXd> direction;  ///< coordinates in the tangent basis
  std::vector<double> T;
  QuadratureScheme scheme = QuadratureScheme::product_gauss;
  int order = 16;
  int samples = 100000;
  double step = 1e-3;
  std::uint64_t seed = 0;
  std::vector<double> tau_schedule = {1e-1, 1e-2, 1e-3};
  double atom_threshold = 0.1;
  double interval_lo = -1.0;
  double interval_hi = 7.0;
  std::string function = "G";
  int K = 50;
  std::vector<double> C_grid = {0.5, 1, 2, 5, 10};
  int threads = 1;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> dump_jacobi;
  bool quiet = false;
  std::string manifest_sha256;  ///< over the canonical parameters, excluding threads/quiet/out
};

/// Throws InputError / ConfigurationError / OutOfCatalogError on invalid input.
Experiment parse_experiment(const RawManifest& manifest);

/// Canonical sorted "key=value" lines hashed by SHA-256 (hex).
std::string manifest_hash(const RawManifest& manifest);

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitVerification = 4;

/// Parses, runs and writes artifacts into experiment.out. Diagnostics go to
/// `err`, progress and summaries to `out` unless quiet.
int run_manifest(const RawManifest& manifest, std::ostream& out, std::ostream& err);

}  // namespace gtube
