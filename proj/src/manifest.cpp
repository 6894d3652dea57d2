#include "gtube/error.hpp"
#include "gtube/runner.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace gtube {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return INFINITY;
  if (t == "-inf") return -INFINITY;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw InputError(fmt::format("{}: '{}' is not a number", key, text));
  }
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw InputError(fmt::format("{}: '{}' is not an integer", key, text));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw InputError(fmt::format("{}: '{}' is not a boolean", key, text));
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real(key, item));
  return out;
}

int positive_int(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < 1 || v > 1'000'000'000) throw InputError(fmt::format("{}={} must be a positive integer", key, v));
  return static_cast<int>(v);
}

double positive_real(const std::string& key, const std::string& text) {
  const double v = parse_real(key, text);
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(fmt::format("{}={} must be positive", key, text));
  return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd parse_basis(const std::string& text) {
  const auto rows = split(text, ';');
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd basis(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = parse_list("basis", rows[i]);
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw InputError(fmt::format("basis: row {} has {} entries, expected {}", i, row.size(), n));
    }
    for (Eigen::Index j = 0; j < n; ++j) basis(i, j) = row[j];
  }
  return basis;
}

ManifoldSpec parse_manifold(const RawManifest& m) {
  const auto kind = m.get("kind");
  if (!kind) throw InputError("kind: missing manifold kind");
  std::optional<bool> entire;
  if (auto e = m.get("entire_tube")) entire = parse_bool("entire_tube", *e);
  auto dimension = [&]() -> int {
    const auto n = m.get("n");
    if (!n) throw InputError("n: missing dimension");
    return static_cast<int>(parse_integer("n", *n));
  };
  if (*kind == "constant_curvature") {
    const auto c = m.get("c");
    if (!c) throw InputError("c: missing curvature");
    return ManifoldSpec::constant_curvature(parse_real("c", *c), dimension(), entire);
  }
  if (*kind == "flat_torus") {
    const auto b = m.get("basis");
    if (!b) throw InputError("basis: missing lattice basis");
    Eigen::MatrixXd basis = parse_basis(*b);
    if (auto n = m.get("n"); n && parse_integer("n", *n) != basis.rows()) {
      throw InputError(fmt::format("n={} does not match the {}x{} basis", *n, basis.rows(), basis.rows()));
    }
    return ManifoldSpec::flat_torus(std::move(basis), entire);
  }
  if (*kind == "warped_product") {
    const auto w = m.get("warp");
    if (!w) throw InputError("warp: missing warp function");
    Interval domain;
    if (auto d = m.get("warp_domain")) {
      const auto ends = parse_list("warp_domain", *d);
      if (ends.size() != 2) throw InputError("warp_domain: expected lo,hi");
      domain = Interval{ends[0], ends[1]};
    }
    return ManifoldSpec::warped_product(WarpFunction::parse(*w, domain), dimension(), entire);
  }
  throw OutOfCatalogError(fmt::format("kind: '{}' is not in the catalog", *kind));
}

std::vector<double> parse_lengths(const RawManifest& m) {
  const auto list = m.get("T");
  const auto range = m.get("T_range");
  if (list && range) throw ConfigurationError("T and T_range are mutually exclusive");
  std::vector<double> out;
  if (list) out = parse_list("T", *list);
  if (range) {
    const auto parts = split(*range, ':');
    if (parts.size() != 3) throw InputError("T_range: expected start:stop:count");
    const double lo = parse_real("T_range", parts[0]), hi = parse_real("T_range", parts[1]);
    const int count = positive_int("T_range", parts[2]);
    if (count == 1) {
      out = {lo};
    } else {
      for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0) || !std::isfinite(out[i])) {
      throw InputError(fmt::format("T: value {} must be positive", out[i]));
    }
    if (i > 0 && !(out[i] > out[i - 1])) {
      throw InputError(fmt::format("T: list must be strictly increasing ({} after {})", out[i], out[i - 1]));
    }
  }
  return out;
}

}  // namespace

std::optional<std::string> RawManifest::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

const std::map<std::string, std::string>& manifest_keys() {
  static const std::map<std::string, std::string> keys = {
      {"kind", "manifold"},        {"c", "manifold"},
      {"n", "manifold"},           {"basis", "manifold"},
      {"warp", "manifold"},        {"warp_domain", "manifold"},
      {"entire_tube", "manifold"}, {"point", "manifold"},
      {"direction", "manifold"},   {"task", "task"},
      {"T", "task"},               {"T_range", "task"},
      {"quadrature", "task"},      {"order", "task"},
      {"samples", "task"},         {"step", "task"},
      {"seed", "task"},            {"tau_schedule", "task"},
      {"atom_threshold", "task"},  {"interval", "task"},
      {"function", "task"},        {"K", "task"},
      {"C_grid", "task"},          {"threads", "task"},
      {"out", "output"},           {"dump_jacobi", "output"},
      {"quiet", "output"},
  };
  return keys;
}

RawManifest parse_manifest(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigurationError(fmt::format("manifest: {}", e.message()));
  }
  RawManifest manifest;
  const auto& keys = manifest_keys();
  for (const auto& [section, body] : tree) {
    if (section != "manifold" && section != "task" && section != "output") {
      throw ConfigurationError(fmt::format("manifest: unknown section [{}]", section));
    }
    if (body.empty() && !body.data().empty()) {
      throw ConfigurationError(fmt::format("manifest: key '{}' outside a section", section));
    }
    for (const auto& [key, value] : body) {
      const auto it = keys.find(key);
      if (it == keys.end()) throw ConfigurationError(fmt::format("manifest: unknown key '{}'", key));
      if (it->second != section) {
        throw ConfigurationError(
            fmt::format("manifest: key '{}' belongs in [{}], found in [{}]", key, it->second, section));
      }
      manifest.set(key, value.data());
    }
  }
  return manifest;
}

RawManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError(fmt::format("manifest: cannot open {}", path.string()));
  return parse_manifest(in);
}

Task parse_task(const std::string& name) {
  if (name == "count") return Task::count;
  if (name == "growth") return Task::growth;
  if (name == "herglotz_verify" || name == "herglotz") return Task::herglotz_verify;
  if (name == "lemma_suite" || name == "verify") return Task::lemma_suite;
  if (name == "gromov") return Task::gromov;
  throw ConfigurationError(fmt::format("task: unknown task '{}'", name));
}

std::string to_string(Task task) {
  switch (task) {
    case Task::count: return "count";
    case Task::growth: return "growth";
    case Task::herglotz_verify: return "herglotz_verify";
    case Task::lemma_suite: return "lemma_suite";
    case Task::gromov: return "gromov";
  }
  return "count";
}

std::string manifest_hash(const RawManifest& manifest) {
  static const std::set<std::string> excluded = {"threads", "quiet", "out", "dump_jacobi"};
  std::string canonical;
  for (const auto& [key, value] : manifest.values) {  // std::map: sorted by key
    if (excluded.count(key)) continue;
    canonical += key + "=" + trim(value) + "\n";
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), canonical.data(), canonical.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw NumericalError("manifest hash: SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

Experiment parse_experiment(const RawManifest& m) {
  Experiment e;
  const auto task = m.get("task");
  if (!task) throw ConfigurationError("task: missing task");
  e.task = parse_task(*task);

  if (m.get("kind")) {
    e.spec = parse_manifold(m);
  } else if (e.task == Task::gromov) {
    if (auto n = m.get("n")) {
      e.spec = ManifoldSpec::constant_curvature(1.0, static_cast<int>(parse_integer("n", *n)));
    } else {
      e.spec = ManifoldSpec::constant_curvature(1.0, 2);
    }
  } else {
    throw InputError("kind: missing manifold kind");
  }
  if (auto p = m.get("point")) {
    e.point = to_vector(parse_list("point", *p));
    if (e.point->size() != e.spec->ambient_dimension()) {
      throw InputError(fmt::format("point: expected {} coordinates, got {}", e.spec->ambient_dimension(),
                                   e.point->size()));
    }
    try {
      e.spec->validate_initial(*e.point, e.spec->tangent_basis(*e.point).col(0));
    } catch (const DomainError& ex) {
      throw InputError(fmt::format("point: {}", ex.what()));
    }
  }
  if (auto d = m.get("direction")) {
    e.direction = to_vector(parse_list("direction", *d));
    if (e.direction->size() != e.spec->dimension() || !(e.direction->norm() > 0.0)) {
      throw InputError(fmt::format("direction: expected {} coordinates, not all zero", e.spec->dimension()));
    }
  }

  e.T = parse_lengths(m);
  if (auto q = m.get("quadrature")) {
    try {
      e.scheme = parse_quadrature_scheme(trim(*q));
    } catch (const Error&) {
      throw ConfigurationError(fmt::format("quadrature: unknown scheme '{}'", *q));
    }
  }
  if (auto v = m.get("order")) e.order = positive_int("order", *v);
  if (auto v = m.get("samples")) e.samples = positive_int("samples", *v);
  e.step = e.task == Task::gromov ? 1e-2 : 1e-3;
  if (auto v = m.get("step")) e.step = positive_real("step", *v);
  if (auto v = m.get("seed")) {
    const long long s = parse_integer("seed", *v);
    if (s < 0) throw InputError("seed: must be nonnegative");
    e.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = m.get("tau_schedule")) {
    e.tau_schedule = parse_list("tau_schedule", *v);
    for (double t : e.tau_schedule) {
      if (!(t > 0.0)) throw InputError("tau_schedule: values must be positive");
    }
  }
  if (auto v = m.get("atom_threshold")) e.atom_threshold = positive_real("atom_threshold", *v);
  if (auto v = m.get("interval")) {
    const auto ends = parse_list("interval", *v);
    if (ends.size() != 2 || !(ends[0] < ends[1])) throw InputError("interval: expected lo,hi with lo < hi");
    e.interval_lo = ends[0];
    e.interval_hi = ends[1];
  }
  if (auto v = m.get("function")) {
    e.function = trim(*v);
    if (e.function != "f" && e.function != "G") throw ConfigurationError("function: expected f or G");
  }
  if (auto v = m.get("K")) e.K = positive_int("K", *v);
  if (auto v = m.get("C_grid")) {
    e.C_grid = parse_list("C_grid", *v);
    for (double c : e.C_grid) {
      if (!(c > 0.0)) throw InputError("C_grid: values must be positive");
    }
  }
  if (auto v = m.get("threads")) e.threads = positive_int("threads", *v);
  if (auto v = m.get("out")) e.out = trim(*v);
  if (auto v = m.get("dump_jacobi")) e.dump_jacobi = trim(*v);
  if (auto v = m.get("quiet")) e.quiet = parse_bool("quiet", *v);

  if ((e.task == Task::count || e.task == Task::growth) && e.T.empty()) {
    throw InputError("T: count and growth tasks need T or T_range");
  }
  e.manifest_sha256 = manifest_hash(m);
  return e;
}

}  // namespace gtube
