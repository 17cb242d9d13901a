#include "lqrlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "lqrlab/lower_bound_lab.hpp"
#include "lqrlab/rng.hpp"

namespace lqrlab {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ValidationError("config: " + key + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) bad(where, "must be a table");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) bad(where + "." + it.key(), "unknown key");
  }
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "must be a number");
  return v.get<double>();
}

long get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "must be an integer");
  return v.get<long>();
}

std::uint64_t get_seed(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "must be an integer");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const long s = v.get<long>();
  if (s < 0) bad(key, "must be non-negative");
  return static_cast<std::uint64_t>(s);
}

Mat get_matrix(const json& v, const std::string& key) {
  if (v.is_number()) return Mat::Constant(1, 1, v.get<double>());
  if (!v.is_array() || v.empty()) bad(key, "must be a non-empty array of rows");
  const size_t rows = v.size();
  if (!v[0].is_array() || v[0].empty()) bad(key, "rows must be non-empty arrays");
  const size_t cols = v[0].size();
  Mat M(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) bad(key, "rows must all have the same length");
    for (size_t j = 0; j < cols; ++j) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          get_number(v[i][j], key + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return M;
}

json matrix_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentConfig from_json(const json& root) {
  reject_unknown(root, "<root>", {"instance", "algorithm", "sweep", "output"});
  ExperimentConfig c;

  if (!root.contains("instance")) bad("instance", "missing table");
  const json& ins = root["instance"];
  reject_unknown(ins, "instance",
                 {"kind", "A", "B", "Rx", "Ru", "general_costs", "a", "dx", "du", "spectral_target", "seed"});
  const std::string kind = ins.value("kind", std::string("scaled_identity"));
  if (kind == "inline") {
    c.instance.kind = InstanceKind::inline_matrices;
    if (!ins.contains("A") || !ins.contains("B")) bad("instance", "inline instances need A and B");
    c.instance.A = get_matrix(ins["A"], "instance.A");
    c.instance.B = get_matrix(ins["B"], "instance.B");
    if (ins.contains("Rx")) c.instance.Rx = get_matrix(ins["Rx"], "instance.Rx");
    if (ins.contains("Ru")) c.instance.Ru = get_matrix(ins["Ru"], "instance.Ru");
    if (ins.contains("general_costs")) {
      if (!ins["general_costs"].is_boolean()) bad("instance.general_costs", "must be a boolean");
      c.instance.general_costs = ins["general_costs"].get<bool>();
    }
  } else if (kind == "scaled_identity" || kind == "random_stable") {
    c.instance.kind = kind == "scaled_identity" ? InstanceKind::scaled_identity : InstanceKind::random_stable;
    if (ins.contains("dx")) c.instance.dx = get_int(ins["dx"], "instance.dx");
    if (ins.contains("du")) c.instance.du = get_int(ins["du"], "instance.du");
    if (ins.contains("a")) c.instance.a = get_number(ins["a"], "instance.a");
    if (ins.contains("spectral_target")) {
      c.instance.spectral_target = get_number(ins["spectral_target"], "instance.spectral_target");
    }
    if (ins.contains("seed")) c.instance.instance_seed = get_seed(ins["seed"], "instance.seed");
  } else {
    bad("instance.kind", "expected inline, scaled_identity or random_stable, got '" + kind + "'");
  }

  if (root.contains("algorithm")) {
    const json& alg = root["algorithm"];
    reject_unknown(alg, "algorithm",
                   {"name", "K0", "sigma_u", "delta", "safe_threshold_scale", "process_noise_scale"});
    const std::string name = alg.value("name", std::string("ce"));
    if (name == "ce") c.algorithm = Algorithm::ce;
    else if (name == "fixed_k") c.algorithm = Algorithm::fixed_k;
    else if (name == "warmup_only") c.algorithm = Algorithm::warmup_only;
    else bad("algorithm.name", "expected ce, fixed_k or warmup_only, got '" + name + "'");
    if (alg.contains("K0")) {
      const json& k = alg["K0"];
      if (k.is_string()) {
        const std::string s = k.get<std::string>();
        if (s == "zero") c.gain.kind = GainKind::zero;
        else if (s == "optimal") c.gain.kind = GainKind::optimal;
        else bad("algorithm.K0", "expected zero, optimal or a matrix");
      } else {
        c.gain.kind = GainKind::inline_matrix;
        c.gain.K = get_matrix(k, "algorithm.K0");
      }
    }
    if (alg.contains("sigma_u")) c.sigma_u = get_number(alg["sigma_u"], "algorithm.sigma_u");
    if (alg.contains("delta")) c.delta = get_number(alg["delta"], "algorithm.delta");
    if (alg.contains("safe_threshold_scale")) {
      c.safe_threshold_scale = get_number(alg["safe_threshold_scale"], "algorithm.safe_threshold_scale");
    }
    if (alg.contains("process_noise_scale")) {
      c.process_noise_scale = get_number(alg["process_noise_scale"], "algorithm.process_noise_scale");
    }
  }

  if (!root.contains("sweep")) bad("sweep", "missing table");
  const json& sw = root["sweep"];
  reject_unknown(sw, "sweep", {"T", "seeds", "base_seed", "n_seeds", "threads"});
  if (!sw.contains("T")) bad("sweep.T", "missing");
  if (sw["T"].is_array()) {
    for (const json& t : sw["T"]) c.T_values.push_back(get_int(t, "sweep.T"));
  } else {
    c.T_values.push_back(get_int(sw["T"], "sweep.T"));
  }
  if (sw.contains("seeds")) {
    if (sw.contains("base_seed") || sw.contains("n_seeds")) bad("sweep", "give either seeds or base_seed/n_seeds");
    if (!sw["seeds"].is_array()) bad("sweep.seeds", "must be an array");
    for (const json& s : sw["seeds"]) c.seeds.push_back(get_seed(s, "sweep.seeds"));
  } else {
    const std::uint64_t base = sw.contains("base_seed") ? get_seed(sw["base_seed"], "sweep.base_seed") : 0;
    const long n = sw.contains("n_seeds") ? get_int(sw["n_seeds"], "sweep.n_seeds") : 1;
    if (n < 1) bad("sweep.n_seeds", "must be >= 1");
    for (long i = 0; i < n; ++i) c.seeds.push_back(base + static_cast<std::uint64_t>(i));
  }
  if (sw.contains("threads")) c.threads = static_cast<int>(get_int(sw["threads"], "sweep.threads"));

  if (root.contains("output")) {
    reject_unknown(root["output"], "output", {"dir"});
    if (root["output"].contains("dir")) {
      if (!root["output"]["dir"].is_string()) bad("output.dir", "must be a string");
      c.output_dir = root["output"]["dir"].get<std::string>();
    }
  }
  return c;
}

bool power_of_two(long t) { return t > 0 && (t & (t - 1)) == 0; }

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: JSON parse error: ") + e.what());
  }
  ExperimentConfig c = from_json(root);
  validate_config(c);
  return c;
}

ExperimentConfig parse_config_toml(const std::string& text) {
  std::ostringstream as_json;
  try {
    const toml::table tbl = toml::parse(text);
    as_json << toml::json_formatter{tbl};
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: TOML parse error at line " << e.source().begin.line << ": " << e.description();
    throw ValidationError(os.str());
  }
  return parse_config_json(as_json.str());
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("config: cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return is_json ? parse_config_json(ss.str()) : parse_config_toml(ss.str());
}

void validate_config(const ExperimentConfig& c) {
  if (c.T_values.empty()) bad("sweep.T", "must not be empty");
  long t_max = 0;
  for (long t : c.T_values) {
    if (t < 8 || !power_of_two(t)) bad("sweep.T", "every T must be a power of two >= 8, got " + std::to_string(t));
    t_max = std::max(t_max, t);
  }
  if (c.seeds.empty()) bad("sweep.seeds", "must not be empty");
  if (c.threads < 0) bad("sweep.threads", "must be >= 0");
  if (!(c.sigma_u >= 0.0)) bad("algorithm.sigma_u", "must be >= 0");
  if (!(c.safe_threshold_scale > 0.0)) bad("algorithm.safe_threshold_scale", "must be > 0");
  if (!(c.process_noise_scale >= 0.0)) bad("algorithm.process_noise_scale", "must be >= 0");
  if (c.delta != 0.0) {
    if (!(c.delta > 0.0 && c.delta < 1.0)) bad("algorithm.delta", "must lie in (0, 1)");
    const bool standard = !(c.instance.kind == InstanceKind::inline_matrices && c.instance.general_costs);
    if (standard && c.delta > 1.0 / static_cast<double>(t_max) * (1.0 + 1e-12)) {
      bad("algorithm.delta", "must be <= 1/max(T) in standard normalization");
    }
  }
  const InstanceSpec& s = c.instance;
  if (s.kind != InstanceKind::inline_matrices) {
    if (s.dx < 1 || s.du < 1) bad("instance", "dx and du must be >= 1");
    if (s.kind == InstanceKind::scaled_identity && s.du > s.dx) bad("instance.du", "must be <= dx");
    if (s.kind == InstanceKind::random_stable && !(s.spectral_target >= 0.0 && s.spectral_target < 1.0)) {
      bad("instance.spectral_target", "must lie in [0, 1)");
    }
  }
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  json ins;
  const InstanceSpec& s = c.instance;
  switch (s.kind) {
    case InstanceKind::inline_matrices:
      ins["kind"] = "inline";
      ins["A"] = matrix_json(s.A);
      ins["B"] = matrix_json(s.B);
      if (s.Rx.size()) ins["Rx"] = matrix_json(s.Rx);
      if (s.Ru.size()) ins["Ru"] = matrix_json(s.Ru);
      ins["general_costs"] = s.general_costs;
      break;
    case InstanceKind::scaled_identity:
      ins["kind"] = "scaled_identity";
      ins["a"] = s.a;
      ins["dx"] = s.dx;
      ins["du"] = s.du;
      break;
    case InstanceKind::random_stable:
      ins["kind"] = "random_stable";
      ins["dx"] = s.dx;
      ins["du"] = s.du;
      ins["spectral_target"] = s.spectral_target;
      ins["seed"] = s.instance_seed;
      break;
  }
  j["instance"] = ins;
  json alg;
  alg["name"] = c.algorithm == Algorithm::ce ? "ce" : c.algorithm == Algorithm::fixed_k ? "fixed_k" : "warmup_only";
  switch (c.gain.kind) {
    case GainKind::zero: alg["K0"] = "zero"; break;
    case GainKind::optimal: alg["K0"] = "optimal"; break;
    case GainKind::inline_matrix: alg["K0"] = matrix_json(c.gain.K); break;
  }
  alg["sigma_u"] = c.sigma_u;
  alg["delta"] = c.delta;
  alg["safe_threshold_scale"] = c.safe_threshold_scale;
  alg["process_noise_scale"] = c.process_noise_scale;
  j["algorithm"] = alg;
  j["sweep"]["T"] = c.T_values;
  j["sweep"]["seeds"] = c.seeds;
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LqrInstance random_stable(long dx, long du, double target, std::uint64_t seed) {
  if (dx < 1 || du < 1) throw ValidationError("random_stable: dimensions must be >= 1");
  if (!(target >= 0.0 && target < 1.0)) throw ValidationError("random_stable: target must lie in [0, 1)");
  GaussianRng rng(seed, Stream::instance);
  Mat A = rng.normal_mat(dx, dx);
  const double rho = spectral_radius(A);
  A *= rho > 0.0 ? target / rho : 0.0;
  Mat B = rng.normal_mat(dx, du);
  B /= op_norm(B);
  return LqrInstance::identity_costs(std::move(A), std::move(B));
}

LqrInstance build_instance(const InstanceSpec& s) {
  switch (s.kind) {
    case InstanceKind::inline_matrices: {
      const Eigen::Index dx = s.A.rows();
      const Eigen::Index du = s.B.cols();
      Mat Rx = s.Rx.size() ? s.Rx : Mat::Identity(dx, dx);
      Mat Ru = s.Ru.size() ? s.Ru : Mat::Identity(du, du);
      return LqrInstance(s.A, s.B, std::move(Rx), std::move(Ru),
                         s.general_costs ? CostNormalization::general : CostNormalization::standard);
    }
    case InstanceKind::scaled_identity:
      return scaled_identity_instance(s.a, s.dx, s.du).instance;
    case InstanceKind::random_stable:
      return random_stable(s.dx, s.du, s.spectral_target, s.instance_seed);
  }
  throw ValidationError("config: unknown instance kind");
}

Mat resolve_gain(const GainSpec& spec, const LqrInstance& inst) {
  switch (spec.kind) {
    case GainKind::zero: return Mat::Zero(inst.du(), inst.dx());
    case GainKind::optimal: return solve_dare(inst).K;
    case GainKind::inline_matrix:
      if (spec.K.rows() != inst.du() || spec.K.cols() != inst.dx()) {
        throw ValidationError("config: algorithm.K0 must be d_u x d_x");
      }
      return spec.K;
  }
  throw ValidationError("config: unknown gain kind");
}

}  // namespace lqrlab
