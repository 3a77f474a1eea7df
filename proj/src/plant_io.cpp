#include "hinf/plant_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace hinf {

namespace {

[[noreturn]] void parse_error(const std::string& msg) { throw Error(Errc::ParseError, msg); }

double number(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) parse_error(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

Vec<double> vector(const nlohmann::json& j, const char* key, int n) {
  const auto& v = j.at(key);
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    parse_error(std::string("field '") + key + "' must be an array of length n");
  Vec<double> out(n);
  for (int i = 0; i < n; ++i) {
    if (!v[i].is_number()) parse_error(std::string("field '") + key + "' has a non-number");
    out(i) = v[i].get<double>();
  }
  return out;
}

}  // namespace

StateSpacePlant<double> plant_from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{"n", "A", "b1", "b2", "c1", "c2", "d11", "d12", "d21"};
  if (!j.is_object()) parse_error("plant must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (!keys.count(k)) parse_error("unexpected field '" + k + "'");
  for (const auto& k : keys)
    if (!j.contains(k)) parse_error("missing field '" + k + "'");
  if (!j.at("n").is_number_integer() || j.at("n").get<long long>() < 0)
    parse_error("field 'n' must be a nonnegative integer");
  const int n = j.at("n").get<int>();

  StateSpacePlant<double> p;
  p.n = n;
  const auto& a = j.at("A");
  if (!a.is_array() || static_cast<int>(a.size()) != n) parse_error("field 'A' must have n rows");
  p.A.resize(n, n);
  for (int r = 0; r < n; ++r) {
    if (!a[r].is_array() || static_cast<int>(a[r].size()) != n)
      parse_error("field 'A' must have n columns per row");
    for (int c = 0; c < n; ++c) {
      if (!a[r][c].is_number()) parse_error("field 'A' has a non-number");
      p.A(r, c) = a[r][c].get<double>();
    }
  }
  p.b1 = vector(j, "b1", n);
  p.b2 = vector(j, "b2", n);
  p.c1 = vector(j, "c1", n);
  p.c2 = vector(j, "c2", n);
  p.d11 = number(j, "d11");
  p.d12 = number(j, "d12");
  p.d21 = number(j, "d21");
  try {
    p.validate();
  } catch (const Error& e) {
    parse_error(e.what());
  }
  return p;
}

nlohmann::json plant_to_json(const StateSpacePlant<double>& p) {
  auto vec = [](const Vec<double>& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json a = nlohmann::json::array();
  for (int r = 0; r < p.n; ++r) a.push_back(vec(p.A.row(r).transpose()));
  return {{"n", p.n},          {"A", a},           {"b1", vec(p.b1)}, {"b2", vec(p.b2)},
          {"c1", vec(p.c1)},   {"c2", vec(p.c2)},  {"d11", p.d11},    {"d12", p.d12},
          {"d21", p.d21}};
}

StateSpacePlant<double> load_plant(const std::string& path) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    parse_error(std::string("invalid JSON: ") + e.what());
  }
  return plant_from_json(j);
}

}  // namespace hinf
