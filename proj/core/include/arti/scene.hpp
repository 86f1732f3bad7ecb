#pragma once

#include <optional>
#include <string>

#include "arti/model.hpp"

namespace arti {

enum class Integrator : uint8_t { explicit_euler, symplectic_euler };

struct SimParams {
  double dt = 0.01;
  int steps = 100;
  Integrator integrator = Integrator::symplectic_euler;
  int pgs_iters = 50;
  double baumgarte = 0.2;     // position stabilization factor over dt
  double margin = 1e-4;       // contact detection margin, m
};

struct ObjectiveConfig {
  std::string kind = "ee_target";  // ee_target | progress | terminal_q
  int link = 0;
  Vec3 point = Vec3::Zero();   // point in link frame (ee_target/progress)
  Vec3 target = Vec3::Zero();
  Vec3 axis_mask = Vec3::Ones();  // which world axes enter the distance
  VecX q_weights;                 // terminal_q only
  double weight = 1.0;
  bool terminal_only = true;
};

struct OptimizeParams {
  double lr = 0.01;
  int iterations = 100;
  double convergence = 1e-8;
};

struct Scene {
  std::string name;
  RobotModel model;
  SystemState x0;
  SimParams sim;
  std::optional<ObjectiveConfig> objective;
  OptimizeParams optimize;
};

// Parses the scene text format documented in the README. Throws ParseError
// with a line number on malformed input and ValidationError when the model
// violates an invariant.
Scene load_scene(const std::string& text);
Scene load_scene_file(const std::string& path);

// Model-only view of a scene document.
RobotModel load_model(const std::string& text);

// Canonical serialization; load_scene(serialize_scene(s)) reproduces s.
std::string serialize_scene(const Scene& scene);

}  // namespace arti
