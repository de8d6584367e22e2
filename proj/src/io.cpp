#include "minmarkov/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "minmarkov/errors.hpp"
#include "minmarkov/version.hpp"

namespace minmarkov::io {

namespace {

std::uint64_t pow_u64(std::uint64_t m, int e) {
  std::uint64_t out = 1;
  for (int i = 0; i < e; ++i) out *= m;
  return out;
}

// --- JSON writing ----------------------------------------------------------

template <typename J>
void dump_impl(const J& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        dump_impl(it.value(), out, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_impl(item, out, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::string:
      out += nlohmann::json(j.template get<std::string>()).dump();
      return;
    case nlohmann::json::value_t::boolean:
      out += j.template get<bool>() ? "true" : "false";
      return;
    case nlohmann::json::value_t::number_integer:
      out += std::to_string(j.template get<long long>());
      return;
    case nlohmann::json::value_t::number_unsigned:
      out += std::to_string(j.template get<unsigned long long>());
      return;
    case nlohmann::json::value_t::number_float:
      out += format_double(j.template get<double>());
      return;
    default:
      out += "null";
      return;
  }
}

// --- JSON reading helpers --------------------------------------------------

const nlohmann::json& require_field(const nlohmann::json& j,
                                    const std::string& name) {
  if (!j.is_object()) {
    throw InputError("expected a JSON object around field '" + name + "'");
  }
  const auto it = j.find(name);
  if (it == j.end()) throw InputError("missing field '" + name + "'");
  return *it;
}

double as_number(const nlohmann::json& j, const std::string& name) {
  if (!j.is_number()) throw InputError("field '" + name + "' must be a number");
  return j.get<double>();
}

int as_int(const nlohmann::json& j, const std::string& name) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw InputError("field '" + name + "' must be an integer");
  }
  return j.get<int>();
}

std::string as_string(const nlohmann::json& j, const std::string& name) {
  if (!j.is_string()) throw InputError("field '" + name + "' must be a string");
  return j.get<std::string>();
}

std::vector<double> as_number_array(const nlohmann::json& j,
                                    const std::string& name) {
  if (!j.is_array()) throw InputError("field '" + name + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(as_number(v, name));
  return out;
}

// Flattens a nested array with `levels` levels of size m each into lex
// order; used for dependence tables and kernels-as-row-lists alike.
void flatten_table(const nlohmann::json& j, int m, int levels,
                   const std::string& name, std::vector<double>& out) {
  if (levels == 0) {
    out.push_back(as_number(j, name));
    return;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != m) {
    throw InputError("field '" + name + "' must nest arrays of length " +
                     std::to_string(m) + " (" + std::to_string(levels) +
                     " levels deep at this point)");
  }
  for (const auto& v : j) flatten_table(v, m, levels - 1, name, out);
}

nlohmann::ordered_json nest_table(std::span<const double> flat, int m,
                                  int levels) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  if (levels == 1) {
    for (double v : flat) out.push_back(v);
    return out;
  }
  const std::size_t stride = flat.size() / static_cast<std::size_t>(m);
  for (int i = 0; i < m; ++i) {
    out.push_back(nest_table(flat.subspan(static_cast<std::size_t>(i) * stride,
                                          stride),
                             m, levels - 1));
  }
  return out;
}

StateSpace parse_states(const nlohmann::json& j) {
  const bool has_states = j.is_object() && j.contains("states");
  const bool has_n = j.is_object() && j.contains("N");
  if (has_states == has_n) {
    throw InputError("give exactly one of 'states' (label list) or 'N' "
                     "(integer states 0..N)");
  }
  if (has_n) {
    const int n = as_int(j.at("N"), "N");
    if (n < 1) throw InputError("field 'N' must be at least 1");
    return StateSpace::integer_range(n + 1);
  }
  const auto& arr = j.at("states");
  if (!arr.is_array()) {
    throw InputError("field 'states' must be an array of labels");
  }
  std::vector<std::string> labels;
  labels.reserve(arr.size());
  for (const auto& v : arr) labels.push_back(as_string(v, "states"));
  return StateSpace(std::move(labels));
}

// The statistic x_{t-lag} * x_t evaluated on every window, as a flat table.
std::vector<double> lag_product_table(int m, int d, int lag) {
  if (lag < 1 || lag > d) {
    throw InputError("'lag' must lie in 1.." + std::to_string(d));
  }
  const std::uint64_t size = pow_u64(static_cast<std::uint64_t>(m), d + 1);
  const std::uint64_t step = pow_u64(static_cast<std::uint64_t>(m), lag);
  std::vector<double> h(size);
  for (std::uint64_t e = 0; e < size; ++e) {
    const auto last = static_cast<double>(e % static_cast<std::uint64_t>(m));
    const auto lagged =
        static_cast<double>((e / step) % static_cast<std::uint64_t>(m));
    h[e] = lagged * last;
  }
  return h;
}

std::vector<double> parse_dependence(const nlohmann::json& j, int m, int d,
                                     const std::string& name) {
  const std::string type = as_string(require_field(j, "type"), name + ".type");
  if (type == "table") {
    std::vector<double> flat;
    flat.reserve(pow_u64(static_cast<std::uint64_t>(m), d + 1));
    flatten_table(require_field(j, "values"), m, d + 1, name + ".values",
                  flat);
    return flat;
  }
  if (type == "inar1") {
    if (d != 1) throw InputError("'" + name + "' type inar1 needs order 1");
    return inar1_dependence(m, as_number(require_field(j, "alpha"),
                                         name + ".alpha"));
  }
  if (type == "inar2") {
    if (d != 2) throw InputError("'" + name + "' type inar2 needs order 2");
    const auto alpha = as_number_array(require_field(j, "alpha"),
                                       name + ".alpha");
    if (alpha.size() != 2) {
      throw InputError("'" + name + ".alpha' must have two entries");
    }
    return inar2_dependence(m, alpha[0], alpha[1]);
  }
  throw InputError("field '" + name +
                   ".type' must be one of table, inar1, inar2");
}

std::vector<double> parse_marginal(const nlohmann::json& j, int m) {
  const std::string type = as_string(require_field(j, "type"),
                                     "marginal.type");
  if (type == "table") {
    auto values = as_number_array(require_field(j, "values"),
                                  "marginal.values");
    if (static_cast<int>(values.size()) != m) {
      throw InputError("'marginal.values' must have one entry per state");
    }
    return values;
  }
  if (type == "binomial") {
    const int n = as_int(require_field(j, "N"), "marginal.N");
    const double nu = as_number(require_field(j, "nu"), "marginal.nu");
    if (n + 1 != m) {
      throw InputError("binomial marginal needs N + 1 states, got N = " +
                       std::to_string(n) + " with " + std::to_string(m) +
                       " states");
    }
    return binomial_marginal(n, nu);
  }
  throw InputError("field 'marginal.type' must be table or binomial");
}

std::uint64_t parse_seed(const nlohmann::json& j) {
  if (!j.contains("seed")) return 0;
  const auto& s = j.at("seed");
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer()) {
    const auto v = s.get<long long>();
    if (v < 0) throw InputError("field 'seed' must be nonnegative");
    return static_cast<std::uint64_t>(v);
  }
  throw InputError("field 'seed' must be an integer");
}

nlohmann::json parse_json_text(const std::string& text,
                               const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(what + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) {
    throw InputError("cannot serialize a non-finite number");
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string dump_json(const nlohmann::ordered_json& j) {
  std::string out;
  dump_impl(j, out, 0);
  out += '\n';
  return out;
}

std::string dump_json(const nlohmann::json& j) {
  std::string out;
  dump_impl(j, out, 0);
  out += '\n';
  return out;
}

ConstructRequest parse_problem_spec(const nlohmann::json& j) {
  ConstructRequest req{MinInfoSpec{parse_states(j), 1, {}, {}, 1e-9, 500},
                       0};
  if (j.contains("order")) {
    req.spec.order = as_int(j.at("order"), "order");
  }
  if (req.spec.order < 1) throw InputError("field 'order' must be >= 1");
  const int m = req.spec.base.size();
  req.spec.dependence =
      parse_dependence(require_field(j, "H"), m, req.spec.order, "H");
  req.spec.marginal = parse_marginal(require_field(j, "marginal"), m);
  if (j.contains("tol")) req.spec.tol = as_number(j.at("tol"), "tol");
  if (j.contains("max_iter")) {
    req.spec.max_iter = as_int(j.at("max_iter"), "max_iter");
  }
  req.seed = parse_seed(j);
  return req;
}

ConstructRequest read_problem_spec(const std::string& path) {
  return parse_problem_spec(parse_json_text(read_text(path), path));
}

FitRequest parse_model_spec(const nlohmann::json& j) {
  StateSpace base = parse_states(j);
  const int d = j.contains("order") ? as_int(j.at("order"), "order") : 1;
  if (d < 1) throw InputError("field 'order' must be >= 1");
  const int m = base.size();
  const std::uint64_t table = pow_u64(static_cast<std::uint64_t>(m), d + 1);

  std::vector<double> h0;
  if (j.contains("h0")) {
    h0 = parse_dependence(j.at("h0"), m, d, "h0");
  } else {
    h0.assign(table, 0.0);
  }

  std::vector<std::vector<double>> basis_tables;
  const auto& basis = require_field(j, "basis");
  if (!basis.is_array()) {
    throw InputError("field 'basis' must be an array (possibly empty)");
  }
  for (const auto& entry : basis) {
    const std::string type = as_string(require_field(entry, "type"),
                                       "basis[].type");
    if (type == "table") {
      std::vector<double> flat;
      flatten_table(require_field(entry, "values"), m, d + 1,
                    "basis[].values", flat);
      basis_tables.push_back(std::move(flat));
    } else if (type == "lag_product") {
      const int lag = as_int(require_field(entry, "lag"), "basis[].lag");
      basis_tables.push_back(lag_product_table(m, d, lag));
    } else {
      throw InputError("field 'basis[].type' must be table or lag_product");
    }
  }

  FitRequest req{ParametricModel{std::move(base), d, std::move(h0),
                                 std::move(basis_tables)},
                 FitOptions{}};
  if (j.contains("tol")) req.options.tol = as_number(j.at("tol"), "tol");
  if (j.contains("max_iter")) {
    req.options.max_iter = as_int(j.at("max_iter"), "max_iter");
  }
  if (j.contains("smoothing")) {
    if (!j.at("smoothing").is_boolean()) {
      throw InputError("field 'smoothing' must be a boolean");
    }
    req.options.smoothing = j.at("smoothing").get<bool>();
  }
  return req;
}

FitRequest read_model_spec(const std::string& path) {
  return parse_model_spec(parse_json_text(read_text(path), path));
}

namespace {

// One array per kernel row, i.e. per lifted state, m entries each.
nlohmann::ordered_json kernel_rows(std::span<const double> kernel, int m) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  const std::size_t rows = kernel.size() / static_cast<std::size_t>(m);
  for (std::size_t r = 0; r < rows; ++r) {
    out.push_back(nest_table(
        kernel.subspan(r * static_cast<std::size_t>(m),
                       static_cast<std::size_t>(m)),
        m, 1));
  }
  return out;
}

nlohmann::ordered_json optimizer_to_json(const OptimizerInfo& info) {
  nlohmann::ordered_json o;
  o["iterations"] = info.iterations;
  o["grad_norm"] = info.grad_norm;
  o["objective"] = info.objective;
  o["grad_tol"] = info.grad_tol;
  o["f_reduction_eps"] = info.f_reduction_eps;
  o["max_iter"] = info.max_iter;
  return o;
}

nlohmann::ordered_json result_core_to_json(
    const StateSpace& base, int order, std::span<const double> dependence,
    std::span<const double> marginal, double tol, int max_iter,
    std::uint64_t seed, std::span<const double> kernel,
    std::span<const double> kappa, std::span<const double> delta,
    std::span<const double> theta, double psi,
    std::span<const double> stationary_d, const OptimizerInfo& optimizer) {
  const int m = base.size();
  nlohmann::ordered_json out;
  out["version"] = kVersion;
  out["states"] = base.labels();
  out["order"] = order;

  nlohmann::ordered_json input;
  input["dependence"] = nest_table(dependence, m, order + 1);
  input["marginal"] = nest_table(marginal, m, 1);
  input["tol"] = tol;
  input["max_iter"] = max_iter;
  input["seed"] = seed;
  out["input"] = std::move(input);

  out["kernel"] = kernel_rows(kernel, m);
  out["kappa"] = nest_table(kappa, m, 1);
  out["delta"] = nest_table(delta, m, 1);
  out["theta"] = nest_table(theta, m, 1);
  out["psi"] = psi;
  out["stationary_d"] = nest_table(stationary_d, m, 1);
  out["stationary_1"] =
      nest_table(marginalize(stationary_d, m, order, 1), m, 1);
  out["optimizer"] = optimizer_to_json(optimizer);
  return out;
}

}  // namespace

nlohmann::ordered_json result_to_json(const MinInfoResult& result,
                                      std::uint64_t seed) {
  auto out = result_core_to_json(
      result.base, result.order, result.dependence, result.marginal,
      result.optimizer.grad_tol, result.optimizer.max_iter, seed,
      result.kernel, result.kappa, result.delta, result.theta, result.psi,
      result.stationary_d, result.optimizer);
  out["kind"] = "construction";
  return out;
}

nlohmann::ordered_json fit_to_json(const FitResult& result) {
  const std::vector<double> dependence = result.dependence();
  auto out = result_core_to_json(
      result.model.base, result.model.order, dependence,
      result.window_marginal, result.optimizer.grad_tol,
      result.optimizer.max_iter, 0, result.kernel, result.kappa,
      result.delta, result.theta, result.psi, result.stationary_d,
      result.optimizer);
  out["kind"] = "fit";
  nlohmann::ordered_json fit;
  fit["basis_count"] = static_cast<int>(result.model.basis.size());
  fit["theta_hat"] = nest_table(result.theta, result.model.base.size(), 1);
  fit["moment_targets"] =
      nest_table(result.moment_targets, result.model.base.size(), 1);
  fit["window_marginal"] =
      nest_table(result.window_marginal, result.model.base.size(), 1);
  out["fit"] = std::move(fit);
  return out;
}

StoredResult parse_result(const nlohmann::json& j, std::uint64_t state_cap) {
  const auto& states = require_field(j, "states");
  if (!states.is_array()) {
    throw InputError("field 'states' must be an array of labels");
  }
  std::vector<std::string> labels;
  for (const auto& v : states) labels.push_back(as_string(v, "states"));
  StateSpace base(std::move(labels));
  const int m = base.size();
  const int d = as_int(require_field(j, "order"), "order");
  if (d < 1) throw InputError("field 'order' must be >= 1");

  LiftedSpace lifted = lift(base, d, state_cap);
  const auto lifted_states = static_cast<std::size_t>(lifted.state_count());
  const std::size_t edges = lifted.graph()->edge_count();

  const auto& input = require_field(j, "input");
  std::vector<double> dependence;
  dependence.reserve(edges);
  flatten_table(require_field(input, "dependence"), m, d + 1,
                "input.dependence", dependence);
  std::vector<double> marginal;
  flatten_table(require_field(input, "marginal"), m, 1, "input.marginal",
                marginal);
  const double tol = as_number(require_field(input, "tol"), "input.tol");
  const int max_iter =
      as_int(require_field(input, "max_iter"), "input.max_iter");
  const std::uint64_t seed = parse_seed(input);

  std::vector<double> kernel;
  kernel.reserve(edges);
  {
    const auto& rows = require_field(j, "kernel");
    if (!rows.is_array() || rows.size() != lifted_states) {
      throw InputError("field 'kernel' must hold one row per state tuple");
    }
    for (const auto& row : rows) flatten_table(row, m, 1, "kernel", kernel);
  }
  for (double v : kernel) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InputError("field 'kernel' must be strictly positive");
    }
  }

  std::vector<double> kappa = as_number_array(require_field(j, "kappa"),
                                              "kappa");
  if (kappa.size() != lifted_states) {
    throw InputError("field 'kappa' must have one entry per state tuple");
  }
  std::vector<double> delta = as_number_array(require_field(j, "delta"),
                                              "delta");
  if (static_cast<int>(delta.size()) != m) {
    throw InputError("field 'delta' must have one entry per state");
  }
  std::vector<double> theta = as_number_array(require_field(j, "theta"),
                                              "theta");
  const double psi = as_number(require_field(j, "psi"), "psi");
  std::vector<double> stationary_d =
      as_number_array(require_field(j, "stationary_d"), "stationary_d");
  if (stationary_d.size() != lifted_states) {
    throw InputError("field 'stationary_d' must have one entry per state "
                     "tuple");
  }
  for (double v : stationary_d) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InputError("field 'stationary_d' must be nonnegative");
    }
  }

  OptimizerInfo optimizer;
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    optimizer.iterations = as_int(require_field(o, "iterations"),
                                  "optimizer.iterations");
    optimizer.grad_norm = as_number(require_field(o, "grad_norm"),
                                    "optimizer.grad_norm");
    optimizer.objective = as_number(require_field(o, "objective"),
                                    "optimizer.objective");
    optimizer.grad_tol = as_number(require_field(o, "grad_tol"),
                                   "optimizer.grad_tol");
    optimizer.f_reduction_eps = as_number(
        require_field(o, "f_reduction_eps"), "optimizer.f_reduction_eps");
    optimizer.max_iter = as_int(require_field(o, "max_iter"),
                                "optimizer.max_iter");
  } else {
    optimizer.grad_tol = tol;
    optimizer.max_iter = max_iter;
  }

  MinInfoResult result{std::move(base),
                       d,
                       std::move(lifted),
                       std::move(dependence),
                       std::move(marginal),
                       std::move(kernel),
                       std::move(kappa),
                       std::move(delta),
                       std::move(stationary_d),
                       std::move(theta),
                       psi,
                       optimizer};
  return StoredResult{std::move(result), seed};
}

StoredResult read_result(const std::string& path, std::uint64_t state_cap) {
  return parse_result(parse_json_text(read_text(path), path), state_cap);
}

std::string series_to_csv(std::span<const int> series) {
  std::string out = "t,x\n";
  for (std::size_t t = 0; t < series.size(); ++t) {
    out += std::to_string(t + 1);
    out += ',';
    out += std::to_string(series[t]);
    out += '\n';
  }
  return out;
}

std::vector<int> parse_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("series CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x") {
    throw InputError("series CSV must start with the header 't,x'");
  }
  std::vector<int> series;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InputError("series CSV line " + std::to_string(lineno) +
                       " has no comma");
    }
    const std::string xs = line.substr(comma + 1);
    int x = 0;
    const auto res = std::from_chars(xs.data(), xs.data() + xs.size(), x);
    if (res.ec != std::errc() || res.ptr != xs.data() + xs.size() || x < 0) {
      throw InputError("series CSV line " + std::to_string(lineno) +
                       " has a bad state code '" + xs + "'");
    }
    series.push_back(x);
  }
  return series;
}

std::vector<int> read_series_csv(const std::string& path) {
  return parse_series_csv(read_text(path));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) {
    throw InputError("failed while reading '" + path + "'");
  }
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out.good()) throw InputError("failed while writing '" + path + "'");
}

}  // namespace minmarkov::io
