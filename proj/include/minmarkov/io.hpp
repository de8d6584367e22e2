#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "minmarkov/inference.hpp"
#include "minmarkov/mininfo.hpp"

namespace minmarkov::io {

// One double, 17 significant digits: enough to round-trip exactly, and the
// same bytes on every platform for the same value.
std::string format_double(double v);

// Pretty JSON (2-space indent) with format_double applied to every float.
// Works for both key-ordered and sorted-key documents.
std::string dump_json(const nlohmann::ordered_json& j);
std::string dump_json(const nlohmann::json& j);

// --- problem specs ---------------------------------------------------------

struct ConstructRequest {
  MinInfoSpec spec;
  std::uint64_t seed = 0;
};

// Schema: {"states": [labels] | "N": int, "order": d,
//          "H": {"type":"table","values":nested} |
//               {"type":"inar1","alpha":a} |
//               {"type":"inar2","alpha":[a1,a2]},
//          "marginal": {"type":"table","values":[...]} |
//                      {"type":"binomial","N":int,"nu":real},
//          "tol": real?, "max_iter": int?, "seed": int?}
ConstructRequest parse_problem_spec(const nlohmann::json& j);
ConstructRequest read_problem_spec(const std::string& path);

struct FitRequest {
  ParametricModel model;
  FitOptions options;
};

// Schema: states/N and order as above;
//         "h0": table-or-generator (optional, default all zeros);
//         "basis": [ {"type":"table","values":nested} |
//                    {"type":"lag_product","lag":k} ... ];
//         "tol": real?, "max_iter": int?, "smoothing": bool?
// lag_product k is the statistic x_{t-k} * x_t on each window.
FitRequest parse_model_spec(const nlohmann::json& j);
FitRequest read_model_spec(const std::string& path);

// --- results ---------------------------------------------------------------

nlohmann::ordered_json result_to_json(const MinInfoResult& result,
                                      std::uint64_t seed);
nlohmann::ordered_json fit_to_json(const FitResult& result);

struct StoredResult {
  MinInfoResult result;
  std::uint64_t seed = 0;
};

StoredResult parse_result(const nlohmann::json& j,
                          std::uint64_t state_cap = kDefaultStateCap);
StoredResult read_result(const std::string& path,
                         std::uint64_t state_cap = kDefaultStateCap);

// --- series CSV ------------------------------------------------------------

// Header "t,x", then 1-based index and state code per row.
std::string series_to_csv(std::span<const int> series);
std::vector<int> parse_series_csv(const std::string& text);
std::vector<int> read_series_csv(const std::string& path);

// --- files -----------------------------------------------------------------

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace minmarkov::io
