#include "arti/scene.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace arti {

namespace {

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    Line line;
    line.number = number;
    std::string tok;
    while (ls >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ParseError("scene:" + std::to_string(line) + ": " + msg);
}

double num(const Line& line, size_t idx) {
  if (idx >= line.tokens.size()) fail(line.number, "missing numeric field");
  try {
    size_t pos = 0;
    const double v = std::stod(line.tokens[idx], &pos);
    if (pos != line.tokens[idx].size()) fail(line.number, "bad number '" + line.tokens[idx] + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (...) {
    fail(line.number, "bad number '" + line.tokens[idx] + "'");
  }
}

Vec3 vec3(const Line& line, size_t idx) { return Vec3(num(line, idx), num(line, idx + 1), num(line, idx + 2)); }

Mat3 rpy_to_matrix(const Vec3& rpy) {
  const double cr = std::cos(rpy.x()), sr = std::sin(rpy.x());
  const double cp = std::cos(rpy.y()), sp = std::sin(rpy.y());
  const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
  Mat3 Rx, Ry, Rz;
  Rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  Ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  Rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  return Rz * Ry * Rx;
}

Vec3 matrix_to_rpy(const Mat3& R) {
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(std::cos(pitch)) > 1e-9) {
    roll = std::atan2(R(2, 1), R(2, 2));
    yaw = std::atan2(R(1, 0), R(0, 0));
  } else {
    roll = std::atan2(-R(1, 2), R(1, 1));
    yaw = 0;
  }
  return Vec3(roll, pitch, yaw);
}

struct Parser {
  std::vector<Line> lines;
  size_t pos = 0;

  bool done() const { return pos >= lines.size(); }
  const Line& peek() const { return lines[pos]; }
  const Line& next() { return lines[pos++]; }
};

LinkSpec parse_link(Parser& p) {
  LinkSpec link;
  Vec3 origin = Vec3::Zero(), rpy = Vec3::Zero();
  bool closed = false;
  while (!p.done()) {
    const Line& line = p.next();
    const std::string& key = line.tokens[0];
    if (key == "}") {
      closed = true;
      break;
    } else if (key == "name") {
      if (line.tokens.size() < 2) fail(line.number, "name needs a value");
      link.name = line.tokens[1];
    } else if (key == "parent") {
      link.parent = static_cast<int>(num(line, 1));
    } else if (key == "joint") {
      if (line.tokens.size() < 2) fail(line.number, "joint needs a kind");
      const std::string& kind = line.tokens[1];
      if (kind == "revolute") link.joint.kind = JointKind::revolute;
      else if (kind == "prismatic") link.joint.kind = JointKind::prismatic;
      else if (kind == "fixed") link.joint.kind = JointKind::fixed;
      else if (kind == "floating") link.joint.kind = JointKind::floating_base;
      else fail(line.number, "unknown joint kind '" + kind + "'");
    } else if (key == "axis") {
      link.joint.axis = vec3(line, 1);
    } else if (key == "origin") {
      origin = vec3(line, 1);
    } else if (key == "origin_rpy") {
      rpy = vec3(line, 1);
    } else if (key == "mass") {
      link.mass = num(line, 1);
    } else if (key == "com") {
      link.com = vec3(line, 1);
    } else if (key == "inertia") {
      link.inertia = Vec3(num(line, 1), num(line, 2), num(line, 3)).asDiagonal();
    } else if (key == "inertia_full") {
      const double xx = num(line, 1), xy = num(line, 2), xz = num(line, 3);
      const double yy = num(line, 4), yz = num(line, 5), zz = num(line, 6);
      link.inertia << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    } else if (key == "damping") {
      link.joint.damping = num(line, 1);
    } else if (key == "effort") {
      link.joint.effort_limit = num(line, 1);
    } else if (key == "collision") {
      if (line.tokens.size() < 2) fail(line.number, "collision needs a shape");
      CollisionShape shape;
      if (line.tokens[1] == "sphere") {
        shape.type = CollisionShape::Type::sphere;
        shape.radius = num(line, 2);
        shape.offset = vec3(line, 3);
      } else if (line.tokens[1] == "capsule") {
        shape.type = CollisionShape::Type::capsule;
        shape.radius = num(line, 2);
        shape.half_len = num(line, 3);
        shape.offset = vec3(line, 4);
        shape.axis = vec3(line, 7);
      } else if (line.tokens[1] == "none") {
        continue;
      } else {
        fail(line.number, "unknown collision shape '" + line.tokens[1] + "'");
      }
      link.collision.push_back(shape);
    } else {
      fail(line.number, "unknown key '" + key + "' in link block");
    }
  }
  if (!closed) throw ParseError("scene: unterminated link block");
  link.joint.parent_to_joint = SpatialTransform(rpy_to_matrix(rpy).transpose(), origin);
  return link;
}

}  // namespace

Scene load_scene(const std::string& text) {
  Parser p{tokenize(text)};
  Scene scene;
  std::vector<double> q_vals, qd_vals;
  bool saw_state = false;

  while (!p.done()) {
    const Line& line = p.next();
    const std::string& key = line.tokens[0];
    if (key == "scene") {
      if (line.tokens.size() < 2) fail(line.number, "scene needs a name");
      scene.name = line.tokens[1];
    } else if (key == "gravity") {
      scene.model.gravity = vec3(line, 1);
    } else if (key == "dt") {
      scene.sim.dt = num(line, 1);
      if (!(scene.sim.dt > 0)) fail(line.number, "dt must be positive");
    } else if (key == "steps") {
      scene.sim.steps = static_cast<int>(num(line, 1));
      if (scene.sim.steps < 1) fail(line.number, "steps must be >= 1");
    } else if (key == "integrator") {
      if (line.tokens.size() < 2) fail(line.number, "integrator needs a value");
      if (line.tokens[1] == "explicit") scene.sim.integrator = Integrator::explicit_euler;
      else if (line.tokens[1] == "symplectic") scene.sim.integrator = Integrator::symplectic_euler;
      else fail(line.number, "unknown integrator '" + line.tokens[1] + "'");
    } else if (key == "contact" && line.tokens.size() > 1 && line.tokens[1] == "{") {
      while (!p.done()) {
        const Line& cl = p.next();
        const std::string& ck = cl.tokens[0];
        if (ck == "}") break;
        else if (ck == "mu") scene.model.material.mu = num(cl, 1);
        else if (ck == "restitution") scene.model.material.restitution = num(cl, 1);
        else if (ck == "pgs_iters") scene.sim.pgs_iters = static_cast<int>(num(cl, 1));
        else if (ck == "baumgarte") scene.sim.baumgarte = num(cl, 1);
        else if (ck == "margin") scene.sim.margin = num(cl, 1);
        else fail(cl.number, "unknown key '" + ck + "' in contact block");
      }
    } else if (key == "link" && line.tokens.size() > 1 && line.tokens[1] == "{") {
      scene.model.links.push_back(parse_link(p));
    } else if (key == "state" && line.tokens.size() > 1 && line.tokens[1] == "{") {
      saw_state = true;
      while (!p.done()) {
        const Line& sl = p.next();
        const std::string& sk = sl.tokens[0];
        if (sk == "}") break;
        else if (sk == "q") {
          for (size_t i = 1; i < sl.tokens.size(); ++i) q_vals.push_back(num(sl, i));
        } else if (sk == "qdot") {
          for (size_t i = 1; i < sl.tokens.size(); ++i) qd_vals.push_back(num(sl, i));
        } else {
          fail(sl.number, "unknown key '" + sk + "' in state block");
        }
      }
    } else if (key == "objective" && line.tokens.size() > 1 && line.tokens[1] == "{") {
      ObjectiveConfig obj;
      std::vector<double> weights;
      while (!p.done()) {
        const Line& ol = p.next();
        const std::string& ok = ol.tokens[0];
        if (ok == "}") break;
        else if (ok == "kind") obj.kind = ol.tokens.size() > 1 ? ol.tokens[1] : "";
        else if (ok == "link") obj.link = static_cast<int>(num(ol, 1));
        else if (ok == "point") obj.point = vec3(ol, 1);
        else if (ok == "target") obj.target = vec3(ol, 1);
        else if (ok == "axis_mask") obj.axis_mask = vec3(ol, 1);
        else if (ok == "weight") obj.weight = num(ol, 1);
        else if (ok == "terminal_only") obj.terminal_only = ol.tokens.size() > 1 && ol.tokens[1] == "true";
        else if (ok == "q_weights") {
          for (size_t i = 1; i < ol.tokens.size(); ++i) weights.push_back(num(ol, i));
        } else fail(ol.number, "unknown key '" + ok + "' in objective block");
      }
      if (!weights.empty()) obj.q_weights = Eigen::Map<VecX>(weights.data(), weights.size());
      scene.objective = obj;
    } else if (key == "optimize" && line.tokens.size() > 1 && line.tokens[1] == "{") {
      while (!p.done()) {
        const Line& ol = p.next();
        const std::string& ok = ol.tokens[0];
        if (ok == "}") break;
        else if (ok == "lr") scene.optimize.lr = num(ol, 1);
        else if (ok == "iterations") scene.optimize.iterations = static_cast<int>(num(ol, 1));
        else if (ok == "convergence") scene.optimize.convergence = num(ol, 1);
        else fail(ol.number, "unknown key '" + ok + "' in optimize block");
      }
    } else {
      fail(line.number, "unknown top-level key '" + key + "'");
    }
  }

  scene.model.finalize();
  scene.x0 = default_state(scene.model);
  if (saw_state) {
    if (!q_vals.empty()) {
      if (static_cast<int>(q_vals.size()) != scene.model.n_q)
        throw ParseError("scene: state q has " + std::to_string(q_vals.size()) + " values, model needs " +
                         std::to_string(scene.model.n_q));
      scene.x0.q = Eigen::Map<VecX>(q_vals.data(), q_vals.size());
    }
    if (!qd_vals.empty()) {
      if (static_cast<int>(qd_vals.size()) != scene.model.n_v)
        throw ParseError("scene: state qdot has " + std::to_string(qd_vals.size()) +
                         " values, model needs " + std::to_string(scene.model.n_v));
      scene.x0.qdot = Eigen::Map<VecX>(qd_vals.data(), qd_vals.size());
    }
  }
  validate_state(scene.model, scene.x0);
  return scene;
}

Scene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scene: cannot open file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scene(buf.str());
}

RobotModel load_model(const std::string& text) { return load_scene(text).model; }

namespace {

std::string fmt(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt3(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

}  // namespace

std::string serialize_scene(const Scene& scene) {
  std::ostringstream out;
  out << "scene " << (scene.name.empty() ? "unnamed" : scene.name) << "\n";
  out << "gravity " << fmt3(scene.model.gravity) << "\n";
  out << "dt " << fmt(scene.sim.dt) << "\n";
  out << "steps " << scene.sim.steps << "\n";
  out << "integrator "
      << (scene.sim.integrator == Integrator::explicit_euler ? "explicit" : "symplectic") << "\n";
  out << "contact {\n";
  out << "  mu " << fmt(scene.model.material.mu) << "\n";
  out << "  restitution " << fmt(scene.model.material.restitution) << "\n";
  out << "  pgs_iters " << scene.sim.pgs_iters << "\n";
  out << "  baumgarte " << fmt(scene.sim.baumgarte) << "\n";
  out << "  margin " << fmt(scene.sim.margin) << "\n";
  out << "}\n";
  for (const LinkSpec& link : scene.model.links) {
    out << "link {\n";
    if (!link.name.empty()) out << "  name " << link.name << "\n";
    out << "  parent " << link.parent << "\n";
    switch (link.joint.kind) {
      case JointKind::revolute: out << "  joint revolute\n  axis " << fmt3(link.joint.axis) << "\n"; break;
      case JointKind::prismatic: out << "  joint prismatic\n  axis " << fmt3(link.joint.axis) << "\n"; break;
      case JointKind::fixed: out << "  joint fixed\n"; break;
      case JointKind::floating_base: out << "  joint floating\n"; break;
    }
    out << "  origin " << fmt3(link.joint.parent_to_joint.r) << "\n";
    out << "  origin_rpy " << fmt3(matrix_to_rpy(link.joint.parent_to_joint.E.transpose())) << "\n";
    out << "  mass " << fmt(link.mass) << "\n";
    out << "  com " << fmt3(link.com) << "\n";
    const Mat3& I = link.inertia;
    out << "  inertia_full " << fmt(I(0, 0)) << " " << fmt(I(0, 1)) << " " << fmt(I(0, 2)) << " "
        << fmt(I(1, 1)) << " " << fmt(I(1, 2)) << " " << fmt(I(2, 2)) << "\n";
    if (link.joint.damping != 0) out << "  damping " << fmt(link.joint.damping) << "\n";
    if (std::isfinite(link.joint.effort_limit)) out << "  effort " << fmt(link.joint.effort_limit) << "\n";
    for (const CollisionShape& s : link.collision) {
      if (s.type == CollisionShape::Type::sphere)
        out << "  collision sphere " << fmt(s.radius) << " " << fmt3(s.offset) << "\n";
      else
        out << "  collision capsule " << fmt(s.radius) << " " << fmt(s.half_len) << " "
            << fmt3(s.offset) << " " << fmt3(s.axis) << "\n";
    }
    out << "}\n";
  }
  out << "state {\n  q";
  for (int i = 0; i < scene.x0.q.size(); ++i) out << " " << fmt(scene.x0.q[i]);
  out << "\n  qdot";
  for (int i = 0; i < scene.x0.qdot.size(); ++i) out << " " << fmt(scene.x0.qdot[i]);
  out << "\n}\n";
  if (scene.objective) {
    const ObjectiveConfig& o = *scene.objective;
    out << "objective {\n";
    out << "  kind " << o.kind << "\n";
    out << "  link " << o.link << "\n";
    out << "  point " << fmt3(o.point) << "\n";
    out << "  target " << fmt3(o.target) << "\n";
    out << "  axis_mask " << fmt3(o.axis_mask) << "\n";
    out << "  weight " << fmt(o.weight) << "\n";
    out << "  terminal_only " << (o.terminal_only ? "true" : "false") << "\n";
    if (o.q_weights.size() > 0) {
      out << "  q_weights";
      for (int i = 0; i < o.q_weights.size(); ++i) out << " " << fmt(o.q_weights[i]);
      out << "\n";
    }
    out << "}\n";
  }
  out << "optimize {\n";
  out << "  lr " << fmt(scene.optimize.lr) << "\n";
  out << "  iterations " << scene.optimize.iterations << "\n";
  out << "  convergence " << fmt(scene.optimize.convergence) << "\n";
  out << "}\n";
  return out.str();
}

}  // namespace arti
