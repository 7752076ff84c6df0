#pragma once

#include <string>

#include <Eigen/Dense>
#include "json.hpp"

#include "usual/covariance.hpp"
#include "usual/data_model.hpp"
#include "usual/error.hpp"

namespace usual::json_io {

using json = nlohmann::json;

json to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what);

json to_json(const ComponentSpec& spec);
ComponentSpec spec_from_json(const json& j);

json to_json(const DesignFormula& f);
DesignFormula formula_from_json(const json& j);

json to_json(const PatternedCovParams& p);
PatternedCovParams eps_from_json(const json& j, std::size_t J, std::size_t K);

// Typed lookup of a required key, with the key named in the error.
template <class T>
T required(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError("missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("key '" + key + "': " + e.what());
  }
}

template <class T>
T optional(const json& j, const std::string& key, const T& fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("key '" + key + "': " + e.what());
  }
}

json parse(const std::string& text, const std::string& source);

}  // namespace usual::json_io
