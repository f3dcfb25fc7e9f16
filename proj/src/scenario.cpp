#include "mavnmpc/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mavnmpc {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Reading helpers. Every error names the offending key path.

void rejectUnknownKeys(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ScenarioError(where + ": unknown key '" + key + "'");
  }
}

const json& requireObject(const json& j, const std::string& where) {
  if (!j.is_object()) throw ScenarioError(where + ": expected an object");
  return j;
}

double readNumber(const json& j, const std::string& where) {
  if (!j.is_number()) throw ScenarioError(where + ": expected a number");
  return j.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> readVector(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw ScenarioError(where + ": expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = readNumber(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

template <class T>
void readOptional(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  const json& j = obj.at(key);
  const std::string path = where + "." + key;
  if constexpr (std::is_same_v<T, double>) {
    out = readNumber(j, path);
  } else if constexpr (std::is_same_v<T, int>) {
    if (!j.is_number_integer()) throw ScenarioError(path + ": expected an integer");
    out = j.get<int>();
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ScenarioError(path + ": expected true or false");
    out = j.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ScenarioError(path + ": expected a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!j.is_number_unsigned()) throw ScenarioError(path + ": expected a non-negative integer");
    out = j.get<std::uint64_t>();
  } else {
    out = readVector<T::RowsAtCompileTime>(j, path);
  }
}

Integrator readIntegrator(const json& obj, const char* key, const std::string& where, Integrator fallback) {
  std::string name;
  readOptional(obj, key, where, name);
  if (name.empty()) return fallback;
  if (name == "euler") return Integrator::kEuler;
  if (name == "rk4") return Integrator::kRk4;
  throw ScenarioError(where + "." + key + ": expected \"euler\" or \"rk4\"");
}

ConstraintFn readConstraint(const json& j, const std::string& where) {
  requireObject(j, where);
  if (!j.contains("type") || !j.at("type").is_string()) throw ScenarioError(where + ": missing \"type\"");
  const std::string type = j.at("type").get<std::string>();
  if (type == "halfspace") {
    rejectUnknownKeys(j, where, {"type", "normal", "offset"});
    Halfspace hs;
    readOptional(j, "normal", where, hs.normal);
    readOptional(j, "offset", where, hs.offset);
    return hs;
  }
  if (type == "ellipsoid") {
    rejectUnknownKeys(j, where, {"type", "center", "center_velocity", "shape"});
    Ellipsoid e;
    readOptional(j, "center", where, e.center);
    readOptional(j, "center_velocity", where, e.center_velocity);
    if (j.contains("shape")) {
      const json& rows = j.at("shape");
      if (!rows.is_array() || rows.size() != 3) throw ScenarioError(where + ".shape: expected 3 rows");
      for (int r = 0; r < 3; ++r) {
        e.shape.row(r) = readVector<3>(rows[r], where + ".shape[" + std::to_string(r) + "]").transpose();
      }
    }
    return e;
  }
  if (type == "cylinder") {
    rejectUnknownKeys(j, where, {"type", "axis", "center", "radius"});
    Cylinder c;
    readOptional(j, "axis", where, c.axis);
    readOptional(j, "center", where, c.center);
    readOptional(j, "radius", where, c.radius);
    return c;
  }
  if (type == "slab") {
    rejectUnknownKeys(j, where, {"type", "axis", "lower", "upper", "lower_fixed", "upper_fixed"});
    AxisSlab s;
    readOptional(j, "axis", where, s.axis);
    readOptional(j, "lower", where, s.lower);
    readOptional(j, "upper", where, s.upper);
    readOptional(j, "lower_fixed", where, s.lower_fixed);
    readOptional(j, "upper_fixed", where, s.upper_fixed);
    return s;
  }
  throw ScenarioError(where + ": unknown constraint type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Writing helpers.

template <class Derived>
json toArray(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json constraintToJson(const ConstraintFn& c) {
  return std::visit(
      [](const auto& prim) -> json {
        using T = std::decay_t<decltype(prim)>;
        if constexpr (std::is_same_v<T, Halfspace>) {
          return {{"type", "halfspace"}, {"normal", toArray(prim.normal)}, {"offset", prim.offset}};
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          json rows = json::array();
          for (int r = 0; r < 3; ++r) rows.push_back(toArray(prim.shape.row(r).transpose()));
          return {{"type", "ellipsoid"},
                  {"center", toArray(prim.center)},
                  {"center_velocity", toArray(prim.center_velocity)},
                  {"shape", rows}};
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          return {{"type", "cylinder"}, {"axis", prim.axis}, {"center", toArray(prim.center)}, {"radius", prim.radius}};
        } else {
          return {{"type", "slab"},         {"axis", prim.axis},
                  {"lower", prim.lower},    {"upper", prim.upper},
                  {"lower_fixed", prim.lower_fixed}, {"upper_fixed", prim.upper_fixed}};
        }
      },
      c);
}

const char* integratorName(Integrator m) { return m == Integrator::kEuler ? "euler" : "rk4"; }

}  // namespace

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw ScenarioError("duration must be positive");
  if (references.positions.empty()) throw ScenarioError("reference schedule must not be empty");
  if (!(references.switch_radius > 0.0)) throw ScenarioError("switch radius must be positive");
  if (plant.substeps < 1) throw ScenarioError("plant substeps must be at least 1");
  if (plant.imu_noise_std < 0.0 || plant.feedback_noise_std < 0.0) {
    throw ScenarioError("noise levels must be non-negative");
  }
  if (!(plant.thrust_constant.start > 0.0) || !(plant.thrust_constant.end > 0.0)) {
    throw ScenarioError("thrust constant must be positive");
  }
  if (!initial_state.allFinite()) throw ScenarioError("initial state must be finite");
  try {
    solver.validate();
    estimator.validate();
    buildOcp(references.positions.front()).validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
}

std::vector<ObstacleSpec> ScenarioConfig::enlargedObstacles() const {
  std::vector<ObstacleSpec> out;
  out.reserve(obstacles.size());
  for (const auto& o : obstacles) out.push_back(enlarge(o, vehicle.enlargement()));
  return out;
}

OcpConfig ScenarioConfig::buildOcp(const Eigen::Vector3d& p_ref) const {
  OcpConfig cfg;
  cfg.horizon = horizon;
  cfg.sampling_period = sampling_period;
  cfg.integrator = prediction_integrator;
  cfg.bounds = bounds;
  cfg.setPositionReference(p_ref);
  cfg.u_ref = hoverInput(model);
  cfg.obstacles = enlargedObstacles();
  cfg.corners = vehicle;
  cfg.weights = weights;
  cfg.params = model;
  return cfg;
}

int ScenarioConfig::tickCount() const {
  return std::max(1, static_cast<int>(std::lround(duration / sampling_period)));
}

ScenarioConfig ScenarioConfig::obstacleTraversal() {
  ScenarioConfig s;
  s.name = "obstacle-traversal";
  ObstacleSpec cylinder;
  cylinder.constraints = {Cylinder{2, Eigen::Vector2d::Zero(), 0.45},
                          AxisSlab{2, 0.0, 2.0, /*lower_fixed=*/true, /*upper_fixed=*/false}};
  cylinder.weight = 10000.0;
  cylinder.terminal_weight = 10000.0;
  s.obstacles = {cylinder};
  s.references.positions = {Eigen::Vector3d(-2.0, 0.0, 1.0), Eigen::Vector3d(2.0, 0.0, 1.5)};
  s.references.switch_radius = 0.3;
  s.initial_state.p = Eigen::Vector3d(-2.0, 0.0, 1.0);
  s.duration = 60.0;
  // Start and both references lie on y = 0, a mirror plane of the obstacle; with
  // noise-free feedback the vehicle parks on the cylinder face instead of going round.
  s.plant.feedback_noise_std = 0.0005;
  s.solver.memory = 100;
  return s;
}

ScenarioConfig ScenarioConfig::hoverBatteryDrain() {
  ScenarioConfig s;
  s.name = "hover-battery-drain";
  s.references.positions = {Eigen::Vector3d(0.0, 0.0, 1.0)};
  s.initial_state.p = Eigen::Vector3d(0.0, 0.0, 1.0);
  s.duration = 120.0;
  s.plant.thrust_constant = {22.0, 18.0};
  return s;
}

ScenarioConfig parseScenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("invalid JSON: ") + e.what());
  }
  requireObject(root, "scenario");
  rejectUnknownKeys(root, "scenario",
                    {"schema_version", "name", "model", "horizon", "sampling_period", "prediction_integrator",
                     "weights", "input_bounds", "vehicle", "obstacles", "references", "initial_state",
                     "duration", "plant", "solver", "estimator", "seed"});
  if (!root.contains("schema_version") || !root.at("schema_version").is_number_integer()) {
    throw ScenarioError("scenario.schema_version: required integer");
  }
  if (root.at("schema_version").get<int>() != kScenarioSchemaVersion) {
    throw ScenarioError("scenario.schema_version: unsupported version " +
                        std::to_string(root.at("schema_version").get<int>()));
  }

  ScenarioConfig s;
  s.obstacles.clear();
  s.references.positions.clear();
  readOptional(root, "name", "scenario", s.name);
  readOptional(root, "horizon", "scenario", s.horizon);
  readOptional(root, "sampling_period", "scenario", s.sampling_period);
  readOptional(root, "duration", "scenario", s.duration);
  readOptional(root, "seed", "scenario", s.seed);
  s.prediction_integrator = readIntegrator(root, "prediction_integrator", "scenario", s.prediction_integrator);

  if (root.contains("model")) {
    const json& m = requireObject(root.at("model"), "scenario.model");
    rejectUnknownKeys(m, "scenario.model", {"drag", "tau_roll", "tau_pitch", "gain_roll", "gain_pitch", "gravity"});
    readOptional(m, "drag", "scenario.model", s.model.drag);
    readOptional(m, "tau_roll", "scenario.model", s.model.tau_roll);
    readOptional(m, "tau_pitch", "scenario.model", s.model.tau_pitch);
    readOptional(m, "gain_roll", "scenario.model", s.model.gain_roll);
    readOptional(m, "gain_pitch", "scenario.model", s.model.gain_pitch);
    readOptional(m, "gravity", "scenario.model", s.model.gravity);
  }
  if (root.contains("weights")) {
    const json& w = requireObject(root.at("weights"), "scenario.weights");
    rejectUnknownKeys(w, "scenario.weights", {"state", "input", "terminal", "input_rate"});
    readOptional(w, "state", "scenario.weights", s.weights.state);
    readOptional(w, "input", "scenario.weights", s.weights.input);
    readOptional(w, "terminal", "scenario.weights", s.weights.terminal);
    readOptional(w, "input_rate", "scenario.weights", s.weights.input_rate);
  }
  if (root.contains("input_bounds")) {
    const json& b = requireObject(root.at("input_bounds"), "scenario.input_bounds");
    rejectUnknownKeys(b, "scenario.input_bounds", {"lower", "upper"});
    readOptional(b, "lower", "scenario.input_bounds", s.bounds.lower);
    readOptional(b, "upper", "scenario.input_bounds", s.bounds.upper);
  }
  if (root.contains("vehicle")) {
    const json& v = requireObject(root.at("vehicle"), "scenario.vehicle");
    rejectUnknownKeys(v, "scenario.vehicle", {"corner_offsets", "ball_radius", "margin"});
    if (v.contains("corner_offsets")) {
      const json& offs = v.at("corner_offsets");
      if (!offs.is_array()) throw ScenarioError("scenario.vehicle.corner_offsets: expected an array");
      s.vehicle.offsets.clear();
      for (std::size_t i = 0; i < offs.size(); ++i) {
        s.vehicle.offsets.push_back(readVector<3>(offs[i], "scenario.vehicle.corner_offsets[" + std::to_string(i) + "]"));
      }
    }
    readOptional(v, "ball_radius", "scenario.vehicle", s.vehicle.ball_radius);
    readOptional(v, "margin", "scenario.vehicle", s.vehicle.margin);
  }
  if (root.contains("obstacles")) {
    const json& list = root.at("obstacles");
    if (!list.is_array()) throw ScenarioError("scenario.obstacles: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "scenario.obstacles[" + std::to_string(i) + "]";
      const json& o = requireObject(list[i], where);
      rejectUnknownKeys(o, where, {"weight", "terminal_weight", "constraints"});
      ObstacleSpec spec;
      readOptional(o, "weight", where, spec.weight);
      readOptional(o, "terminal_weight", where, spec.terminal_weight);
      if (!o.contains("constraints") || !o.at("constraints").is_array()) {
        throw ScenarioError(where + ".constraints: required array");
      }
      const json& cs = o.at("constraints");
      for (std::size_t k = 0; k < cs.size(); ++k) {
        spec.constraints.push_back(readConstraint(cs[k], where + ".constraints[" + std::to_string(k) + "]"));
      }
      s.obstacles.push_back(std::move(spec));
    }
  }
  if (!root.contains("references")) throw ScenarioError("scenario.references: required");
  {
    const json& r = requireObject(root.at("references"), "scenario.references");
    rejectUnknownKeys(r, "scenario.references", {"positions", "switch_radius"});
    if (!r.contains("positions") || !r.at("positions").is_array()) {
      throw ScenarioError("scenario.references.positions: required array");
    }
    const json& ps = r.at("positions");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      s.references.positions.push_back(readVector<3>(ps[i], "scenario.references.positions[" + std::to_string(i) + "]"));
    }
    readOptional(r, "switch_radius", "scenario.references", s.references.switch_radius);
  }
  if (root.contains("initial_state")) {
    const json& x = requireObject(root.at("initial_state"), "scenario.initial_state");
    rejectUnknownKeys(x, "scenario.initial_state", {"position", "velocity", "roll", "pitch"});
    readOptional(x, "position", "scenario.initial_state", s.initial_state.p);
    readOptional(x, "velocity", "scenario.initial_state", s.initial_state.v);
    readOptional(x, "roll", "scenario.initial_state", s.initial_state.roll);
    readOptional(x, "pitch", "scenario.initial_state", s.initial_state.pitch);
  }
  if (root.contains("plant")) {
    const json& p = requireObject(root.at("plant"), "scenario.plant");
    rejectUnknownKeys(p, "scenario.plant", {"integrator", "substeps", "imu_noise_std", "feedback_noise_std", "thrust_constant"});
    s.plant.integrator = readIntegrator(p, "integrator", "scenario.plant", s.plant.integrator);
    readOptional(p, "substeps", "scenario.plant", s.plant.substeps);
    readOptional(p, "imu_noise_std", "scenario.plant", s.plant.imu_noise_std);
    readOptional(p, "feedback_noise_std", "scenario.plant", s.plant.feedback_noise_std);
    if (p.contains("thrust_constant")) {
      const json& c = requireObject(p.at("thrust_constant"), "scenario.plant.thrust_constant");
      rejectUnknownKeys(c, "scenario.plant.thrust_constant", {"start", "end"});
      readOptional(c, "start", "scenario.plant.thrust_constant", s.plant.thrust_constant.start);
      readOptional(c, "end", "scenario.plant.thrust_constant", s.plant.thrust_constant.end);
    }
  }
  if (root.contains("solver")) {
    const json& c = requireObject(root.at("solver"), "scenario.solver");
    rejectUnknownKeys(c, "scenario.solver", {"tolerance", "max_iterations", "memory", "cautious_epsilon"});
    readOptional(c, "tolerance", "scenario.solver", s.solver.tolerance);
    readOptional(c, "max_iterations", "scenario.solver", s.solver.max_iterations);
    readOptional(c, "memory", "scenario.solver", s.solver.memory);
    readOptional(c, "cautious_epsilon", "scenario.solver", s.solver.cautious_epsilon);
  }
  if (root.contains("estimator")) {
    const json& e = requireObject(root.at("estimator"), "scenario.estimator");
    rejectUnknownKeys(e, "scenario.estimator",
                      {"initial_variance", "process_variance", "measurement_variance", "min_signal", "initial_estimate"});
    readOptional(e, "initial_variance", "scenario.estimator", s.estimator.initial_variance);
    readOptional(e, "process_variance", "scenario.estimator", s.estimator.process_variance);
    readOptional(e, "measurement_variance", "scenario.estimator", s.estimator.measurement_variance);
    readOptional(e, "min_signal", "scenario.estimator", s.estimator.min_signal);
    readOptional(e, "initial_estimate", "scenario.estimator", s.estimator.initial_c_hat);
  }
  s.estimator.gravity = s.model.gravity;
  s.validate();
  return s;
}

ScenarioConfig loadScenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parseScenario(buf.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

std::string scenarioToJson(const ScenarioConfig& s) {
  json obstacles = json::array();
  for (const auto& o : s.obstacles) {
    json cs = json::array();
    for (const auto& c : o.constraints) cs.push_back(constraintToJson(c));
    obstacles.push_back({{"weight", o.weight}, {"terminal_weight", o.terminal_weight}, {"constraints", cs}});
  }
  json offsets = json::array();
  for (const auto& off : s.vehicle.offsets) offsets.push_back(toArray(off));
  json refs = json::array();
  for (const auto& p : s.references.positions) refs.push_back(toArray(p));

  json root;
  root["schema_version"] = kScenarioSchemaVersion;
  root["name"] = s.name;
  root["model"] = {{"drag", toArray(s.model.drag)},         {"tau_roll", s.model.tau_roll},
                   {"tau_pitch", s.model.tau_pitch},         {"gain_roll", s.model.gain_roll},
                   {"gain_pitch", s.model.gain_pitch},       {"gravity", s.model.gravity}};
  root["horizon"] = s.horizon;
  root["sampling_period"] = s.sampling_period;
  root["prediction_integrator"] = integratorName(s.prediction_integrator);
  root["weights"] = {{"state", toArray(s.weights.state)},
                     {"input", toArray(s.weights.input)},
                     {"terminal", toArray(s.weights.terminal)},
                     {"input_rate", toArray(s.weights.input_rate)}};
  root["input_bounds"] = {{"lower", toArray(s.bounds.lower)}, {"upper", toArray(s.bounds.upper)}};
  root["vehicle"] = {{"corner_offsets", offsets}, {"ball_radius", s.vehicle.ball_radius}, {"margin", s.vehicle.margin}};
  root["obstacles"] = obstacles;
  root["references"] = {{"positions", refs}, {"switch_radius", s.references.switch_radius}};
  root["initial_state"] = {{"position", toArray(s.initial_state.p)},
                           {"velocity", toArray(s.initial_state.v)},
                           {"roll", s.initial_state.roll},
                           {"pitch", s.initial_state.pitch}};
  root["duration"] = s.duration;
  root["plant"] = {{"integrator", integratorName(s.plant.integrator)},
                   {"substeps", s.plant.substeps},
                   {"imu_noise_std", s.plant.imu_noise_std},
                   {"feedback_noise_std", s.plant.feedback_noise_std},
                   {"thrust_constant", {{"start", s.plant.thrust_constant.start}, {"end", s.plant.thrust_constant.end}}}};
  root["solver"] = {{"tolerance", s.solver.tolerance},
                    {"max_iterations", s.solver.max_iterations},
                    {"memory", s.solver.memory},
                    {"cautious_epsilon", s.solver.cautious_epsilon}};
  root["estimator"] = {{"initial_variance", s.estimator.initial_variance},
                       {"process_variance", s.estimator.process_variance},
                       {"measurement_variance", s.estimator.measurement_variance},
                       {"min_signal", s.estimator.min_signal},
                       {"initial_estimate", s.estimator.initial_c_hat}};
  root["seed"] = s.seed;
  return root.dump(2) + "\n";
}

}  // namespace mavnmpc
