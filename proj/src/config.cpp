#include "lmc/harness.hpp"

#define TOML_HEADER_ONLY 1
#include <toml.hpp>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace lmc {

namespace {

json toml_to_json(const toml::node& n, const std::string& path) {
  if (auto t = n.as_table()) {
    json j = json::object();
    for (auto&& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v, path + "." + std::string(k.str()));
    return j;
  }
  if (auto a = n.as_array()) {
    json j = json::array();
    for (std::size_t i = 0; i < a->size(); ++i) j.push_back(toml_to_json(*a->get(i), path + "[" + std::to_string(i) + "]"));
    return j;
  }
  if (auto v = n.as_string()) return v->get();
  if (auto v = n.as_integer()) return v->get();
  if (auto v = n.as_floating_point()) return v->get();
  if (auto v = n.as_boolean()) return v->get();
  throw UsageError("config: " + path.substr(1) + ": dates and times are not supported");
}

void json_to_toml(const json& j, toml::table& out);

toml::array json_array_to_toml(const json& j) {
  toml::array a;
  for (const auto& v : j) {
    if (v.is_array()) a.push_back(json_array_to_toml(v));
    else if (v.is_object()) {
      toml::table t;
      json_to_toml(v, t);
      a.push_back(std::move(t));
    } else if (v.is_boolean()) a.push_back(v.get<bool>());
    else if (v.is_number_integer()) a.push_back(v.get<std::int64_t>());
    else if (v.is_number()) a.push_back(v.get<double>());
    else a.push_back(v.get<std::string>());
  }
  return a;
}

void json_to_toml(const json& j, toml::table& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    const std::string& k = it.key();
    if (v.is_object()) {
      toml::table t;
      json_to_toml(v, t);
      out.insert(k, std::move(t));
    } else if (v.is_array()) out.insert(k, json_array_to_toml(v));
    else if (v.is_boolean()) out.insert(k, v.get<bool>());
    else if (v.is_number_unsigned() && v.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<std::int64_t>::max()))
      out.insert(k, std::to_string(v.get<std::uint64_t>()));  // TOML integers are signed 64-bit
    else if (v.is_number_integer()) out.insert(k, v.get<std::int64_t>());
    else if (v.is_number()) out.insert(k, v.get<double>());
    else if (v.is_string()) out.insert(k, v.get<std::string>());
  }
}

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw UsageError("config: " + path + ": " + what);
}

double get_double(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

std::uint64_t get_uint(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) bad(path, "must be nonnegative");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= 0 && v == std::floor(v) && v < 1.8446744073709552e19) return static_cast<std::uint64_t>(v);
  }
  if (j.is_string()) {  // large seeds in TOML
    const auto& s = j.get_ref<const std::string&>();
    std::size_t pos = 0;
    try {
      if (!s.empty() && s[0] != '-') {
        const auto v = std::stoull(s, &pos);
        if (pos == s.size()) return v;
      }
    } catch (const std::exception&) {
    }
  }
  bad(path, "expected a nonnegative 64-bit integer");
}

std::vector<double> get_vector(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_double(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j{{"name", name}, {"sampler", sampler}, {"potential", potential}, {"epsilon", epsilon},
         {"ensemble", ensemble}, {"seed", seed}};
  if (!x0.empty()) j["x0"] = x0;
  if (!starts.empty()) j["starts"] = starts;
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  if (!reference.empty()) j["reference"] = reference;
  json o = json::object();
  const auto& v = overrides;
  if (v.delta) o["delta"] = *v.delta;
  if (v.n) o["n"] = *v.n;
  if (v.substep) o["substep"] = *v.substep;
  if (v.projections) o["projections"] = *v.projections;
  if (v.practical_scale) o["practical_scale"] = *v.practical_scale;
  if (v.friction_c) o["friction_c"] = *v.friction_c;
  if (v.horizon) o["horizon"] = *v.horizon;
  if (v.checkpoints) o["checkpoints"] = *v.checkpoints;
  if (v.deltas) o["deltas"] = *v.deltas;
  if (v.reference_size) o["reference_size"] = *v.reference_size;
  if (v.max_steps) o["max_steps"] = *v.max_steps;
  if (v.resamples) o["resamples"] = *v.resamples;
  if (!o.empty()) j["overrides"] = o;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config: expected a table at the top level");
  check_keys(j, {"name", "sampler", "potential", "epsilon", "ensemble", "seed", "x0", "starts", "output_dir",
                 "reference", "overrides"},
             "");
  ExperimentConfig c;
  if (j.contains("name")) c.name = get_string(j["name"], "name");
  if (!j.contains("sampler")) bad("sampler", "required");
  c.sampler = get_string(j["sampler"], "sampler");
  if (!j.contains("potential")) bad("potential", "required");
  if (!j["potential"].is_object()) bad("potential", "expected a table");
  c.potential = j["potential"];
  if (j.contains("epsilon")) c.epsilon = get_double(j["epsilon"], "epsilon");
  if (j.contains("ensemble")) c.ensemble = get_uint(j["ensemble"], "ensemble");
  if (j.contains("seed")) c.seed = get_uint(j["seed"], "seed");
  if (j.contains("x0")) c.x0 = get_vector(j["x0"], "x0");
  if (j.contains("starts")) {
    if (!j["starts"].is_array()) bad("starts", "expected an array of vectors");
    for (std::size_t i = 0; i < j["starts"].size(); ++i)
      c.starts.push_back(get_vector(j["starts"][i], "starts[" + std::to_string(i) + "]"));
  }
  if (j.contains("output_dir")) c.output_dir = get_string(j["output_dir"], "output_dir");
  if (j.contains("reference")) c.reference = get_string(j["reference"], "reference");
  if (j.contains("overrides")) {
    const auto& o = j["overrides"];
    if (!o.is_object()) bad("overrides", "expected a table");
    check_keys(o, {"delta", "n", "substep", "projections", "practical_scale", "friction_c", "horizon", "checkpoints",
                   "deltas", "reference_size", "max_steps", "resamples"},
               "overrides");
    auto& v = c.overrides;
    auto dbl = [&](const char* k, std::optional<double>& out) {
      if (o.contains(k)) out = get_double(o[k], std::string("overrides.") + k);
    };
    auto u64 = [&](const char* k, std::optional<std::uint64_t>& out) {
      if (o.contains(k)) out = get_uint(o[k], std::string("overrides.") + k);
    };
    auto i32 = [&](const char* k, std::optional<int>& out) {
      if (!o.contains(k)) return;
      const auto x = get_uint(o[k], std::string("overrides.") + k);
      if (x > 1u << 30) bad(std::string("overrides.") + k, "too large");
      out = static_cast<int>(x);
    };
    dbl("delta", v.delta);
    u64("n", v.n);
    dbl("substep", v.substep);
    i32("projections", v.projections);
    dbl("practical_scale", v.practical_scale);
    dbl("friction_c", v.friction_c);
    dbl("horizon", v.horizon);
    i32("checkpoints", v.checkpoints);
    if (o.contains("deltas")) v.deltas = get_vector(o["deltas"], "overrides.deltas");
    u64("reference_size", v.reference_size);
    u64("max_steps", v.max_steps);
    i32("resamples", v.resamples);
  }
  return c;
}

std::string ExperimentConfig::to_toml() const {
  toml::table t;
  json_to_toml(to_json(), t);
  std::ostringstream os;
  os << toml::toml_formatter(t);
  return os.str();
}

void ExperimentConfig::validate() const {
  if (std::find(kSamplers.begin(), kSamplers.end(), sampler) == kSamplers.end())
    bad("sampler", "unknown value '" + sampler + "'");
  if (name.empty() || name.find('/') != std::string::npos) bad("name", "must be a nonempty file-name stem");
  if (!(epsilon > 0)) bad("epsilon", "must be positive");
  if (ensemble < 1) bad("ensemble", "must be at least 1");
  PotentialPtr U;
  try {
    U = make_potential(potential);
  } catch (const UsageError& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw UsageError(std::string("config: potential: ") + e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: potential: ") + e.what());
  }
  if (!x0.empty() && static_cast<int>(x0.size()) != U->dim())
    bad("x0", "length " + std::to_string(x0.size()) + " does not match potential dim " + std::to_string(U->dim()));
  for (std::size_t i = 0; i < starts.size(); ++i)
    if (static_cast<int>(starts[i].size()) != U->dim()) bad("starts[" + std::to_string(i) + "]", "wrong length");
  if (!reference.empty() && !std::filesystem::exists(reference)) bad("reference", "file not found: " + reference);

  const auto& v = overrides;
  auto positive = [](const std::optional<double>& x, const char* k) {
    if (x && !(*x > 0)) bad(std::string("overrides.") + k, "must be positive");
  };
  positive(v.delta, "delta");
  positive(v.substep, "substep");
  positive(v.friction_c, "friction_c");
  positive(v.horizon, "horizon");
  if (v.practical_scale && !(*v.practical_scale > 0 && *v.practical_scale <= 1))
    bad("overrides.practical_scale", "must lie in (0, 1]");
  if (v.projections && *v.projections < 1) bad("overrides.projections", "must be at least 1");
  if (v.checkpoints && *v.checkpoints < 1) bad("overrides.checkpoints", "must be at least 1");
  if (v.deltas) {
    if (v.deltas->empty()) bad("overrides.deltas", "must not be empty");
    for (std::size_t i = 0; i < v.deltas->size(); ++i) {
      if (!((*v.deltas)[i] > 0)) bad("overrides.deltas[" + std::to_string(i) + "]", "must be positive");
      if (i > 0 && !((*v.deltas)[i] < (*v.deltas)[i - 1])) bad("overrides.deltas", "must be strictly decreasing");
    }
  }
  if ((sampler == "od" || sampler == "ud") && v.delta && *v.delta >= 1.0) bad("overrides.delta", "must be below 1");
  if (sampler == "coupled-ud" && v.delta && v.substep) {
    const double r = *v.delta / *v.substep;
    if (std::abs(r - std::round(r)) > 1e-9 * r || r < 1) bad("overrides.substep", "must divide overrides.delta");
  }
}

ExperimentConfig parse_config_toml(std::string_view text) {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: TOML parse error at line " << e.source().begin.line << ": " << e.description();
    throw UsageError(os.str());
  }
  return ExperimentConfig::from_json(toml_to_json(t, ""));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c;
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("config: JSON parse error: ") + e.what());
    }
    c = ExperimentConfig::from_json(j);
  } else {
    c = parse_config_toml(ss.str());
  }
  if (!c.reference.empty() && std::filesystem::path(c.reference).is_relative())
    c.reference = (path.parent_path() / c.reference).lexically_normal().string();
  c.validate();
  return c;
}

std::filesystem::path default_output_dir() {
  const char* env = std::getenv("LMC_OUTPUT_DIR");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(RngStream::mix(std::hash<std::string>{}(path.string()) ^
                                                 static_cast<std::uint64_t>(::getpid())));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Matrix load_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open sample file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError(path.string() + ": no samples");
  Matrix M(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

}  // namespace lmc
