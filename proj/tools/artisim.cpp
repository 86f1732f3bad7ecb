// artisim: command line front end for the differentiable articulated-body
// simulator. Subcommands: simulate, grad-check, profile, optimize, estimate.
//
// Exit codes are stable API: 0 ok, 2 input error, 3 numeric failure,
// 4 gradient-check failure, 5 optimizer divergence.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "arti/apps.hpp"
#include "arti/oracle.hpp"
#include "arti/timeline.hpp"

using nlohmann::json;
using namespace arti;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitGradCheck = 4;
constexpr int kExitDivergence = 5;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file '" + path + "'");
  return out;
}

MatX zero_controls(const Scene& scene, int steps) {
  return MatX::Zero(steps, scene.model.n_u);
}

// Reads the u columns of a trajectory CSV back into a control array.
MatX controls_from_csv(const std::string& path, const RobotModel& model) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open controls file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("controls file is empty");
  std::vector<VecX> rows;
  const int skip = 1 + model.n_q + model.n_v;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string cell;
    VecX u(model.n_u);
    for (int i = 0; i < skip; ++i) std::getline(ls, cell, ',');
    for (int i = 0; i < model.n_u; ++i) {
      if (!std::getline(ls, cell, ',')) throw ParseError("controls file: short row");
      u[i] = std::stod(cell);
    }
    rows.push_back(u);
  }
  if (rows.size() > 1) rows.pop_back();  // drop the terminal-state row
  MatX controls(rows.size(), model.n_u);
  for (size_t r = 0; r < rows.size(); ++r) controls.row(r) = rows[r].transpose();
  return controls;
}

json report_to_json(const RobotModel& model, const GradientReport& rep) {
  json j;
  j["phi"] = rep.phi;
  j["dphi_du"] = json::array();
  for (int r = 0; r < rep.dphi_du.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < rep.dphi_du.cols(); ++c) row.push_back(rep.dphi_du(r, c));
    j["dphi_du"].push_back(row);
  }
  j["dphi_dx0"] = std::vector<double>(rep.dphi_dx0.data(), rep.dphi_dx0.data() + rep.dphi_dx0.size());
  j["dphi_dparams"]["mu"] = rep.dphi_dparams.mu;
  j["dphi_dparams"]["mass"] = std::vector<double>(rep.dphi_dparams.mass.data(),
                                                  rep.dphi_dparams.mass.data() + model.links.size());
  j["memory"]["checkpoint_bytes"] = rep.storage.checkpoint_bytes;
  j["memory"]["tape_peak_bytes"] = rep.storage.tape_peak_bytes;
  j["memory"]["tape_total_bytes"] = rep.storage.tape_total_bytes;
  j["memory"]["peak_aux_bytes"] = rep.storage.peak_aux_bytes();
  j["timing"]["forward_ms_per_step"] = rep.forward_ms_per_step;
  j["timing"]["backward_ms_per_step"] = rep.backward_ms_per_step;
  return j;
}

struct CommonArgs {
  std::string scene_path;
  int steps = -1;
  double dt = -1;
  uint64_t seed = 0;
  std::string mode = "checkpoint";
  double budget_gb = 4.0;
  std::string out;
};

Scene load_with_overrides(const CommonArgs& args) {
  Scene scene = load_scene_file(args.scene_path);
  if (args.steps > 0) scene.sim.steps = args.steps;
  if (args.dt > 0) scene.sim.dt = args.dt;
  return scene;
}

RolloutOptions rollout_options(const CommonArgs& args) {
  RolloutOptions opts;
  opts.mode = args.mode == "full_tape" ? StorageMode::full_tape
                                       : StorageMode::checkpoint_every_step;
  opts.tape_budget_bytes = static_cast<size_t>(args.budget_gb * double(size_t(1) << 30));
  return opts;
}

int cmd_simulate(const CommonArgs& args, const std::string& controls_path) {
  const Scene scene = load_with_overrides(args);
  const StepConfig cfg = StepConfig::from(scene.sim);
  MatX controls = controls_path.empty() ? zero_controls(scene, scene.sim.steps)
                                        : controls_from_csv(controls_path, scene.model);
  const Trajectory traj = rollout(scene.model, scene.x0, controls, cfg, rollout_options(args));

  int contact_total = 0, contact_steps = 0;
  for (int c : traj.contact_counts) {
    contact_total += c;
    contact_steps += c > 0 ? 1 : 0;
  }
  std::cout << "scene: " << scene.name << "\n"
            << "steps: " << traj.n_t() << "\n"
            << "wall_ms_per_step: " << traj.forward_ms_total / traj.n_t() << "\n"
            << "steps_with_contact: " << contact_steps << "\n"
            << "total_contacts: " << contact_total << "\n"
            << "peak_aux_bytes: " << traj.storage.peak_aux_bytes() << "\n";
  if (!args.out.empty()) {
    auto out = open_out(args.out);
    write_trajectory_csv(out, scene.model, traj);
    std::cout << "trajectory: " << args.out << "\n";
  }
  return kExitOk;
}

int cmd_grad_check(const CommonArgs& args, int trials, bool corrupt_fixture,
                   const std::string& json_path) {
  const Scene scene = load_with_overrides(args);
  bool all_ok = true;
  std::string worst_name;
  double worst_err = 0;

  // 1. operator dot-product suite
  std::vector<DotTestOp> ops = standard_operator_suite();
  if (corrupt_fixture) {
    DotTestOp bad = ops.front();
    bad.name = "corrupted_fixture";
    auto inner = bad.vjp;
    bad.vjp = [inner](const VecX& t, const VecX& yb) { return VecX(-inner(t, yb)); };
    ops.push_back(bad);
  }
  for (const DotTestOp& op : ops) {
    const OracleResult r = adjoint_dot_test(op, trials, args.seed + 1);
    const bool ok = r.pass(1e-5);
    all_ok &= ok;
    if (r.worst_rel_err > worst_err) {
      worst_err = r.worst_rel_err;
      worst_name = op.name + " (trial " + std::to_string(r.failing_index) + ")";
    }
    std::cout << (ok ? "ok   " : "FAIL ") << "operator " << op.name
              << " worst_rel_err " << r.worst_rel_err << " seed " << r.seed << "\n";
  }

  // 2. ABA vs dense oracle on the scene
  {
    std::mt19937_64 rng(args.seed + 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    AbaTape tape;
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
      SystemState state = scene.x0;
      for (int i = 0; i < state.qdot.size(); ++i) state.qdot[i] = normal(rng);
      for (size_t li = 0; li < scene.model.links.size(); ++li) {
        if (RobotModel::q_dof(scene.model.links[li].joint.kind) == 1)
          state.q[scene.model.q_off[li]] += 0.5 * normal(rng);
      }
      VecX u(scene.model.n_u);
      for (int i = 0; i < u.size(); ++i) u[i] = normal(rng);
      const auto contacts = detect_contacts(scene.model, state);
      if (!contacts.empty()) continue;  // dense oracle covers contact-free states
      const VecX qdd = aba_forward(scene.model, state, ControlInput{u}, tape);
      const VecX dense = dense_forward_dynamics(scene.model, state, ControlInput{u});
      worst = std::max(worst, (qdd - dense).cwiseAbs().maxCoeff());
    }
    const bool ok = worst < 1e-9;
    all_ok &= ok;
    std::cout << (ok ? "ok   " : "FAIL ") << "aba_vs_dense max_abs_err " << worst << "\n";
  }

  // 3. end-to-end backward vs finite differences on the scene objective
  if (scene.objective && scene.model.n_u > 0) {
    const StepConfig cfg = StepConfig::from(scene.sim);
    const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, *scene.objective);
    std::mt19937_64 rng(args.seed + 3);
    std::normal_distribution<double> normal(0.0, 0.3);
    const int n_t = std::min(scene.sim.steps, 100);
    MatX controls(n_t, scene.model.n_u);
    for (int r = 0; r < n_t; ++r)
      for (int c = 0; c < scene.model.n_u; ++c) controls(r, c) = normal(rng);
    const Trajectory traj = rollout(scene.model, scene.x0, controls, cfg);
    const GradientReport rep = backward(scene.model, traj, obj);
    if (!json_path.empty()) {
      auto out = open_out(json_path);
      out << report_to_json(scene.model, rep).dump(2) << "\n";
    }
    double worst = 0;
    const double h = 1e-6;
    for (int probe = 0; probe < 10; ++probe) {
      const int k = static_cast<int>(rng() % n_t);
      const int j = static_cast<int>(rng() % scene.model.n_u);
      MatX up = controls, um = controls;
      up(k, j) += h;
      um(k, j) -= h;
      const double fd = (obj.value(scene.model, rollout(scene.model, scene.x0, up, cfg)) -
                         obj.value(scene.model, rollout(scene.model, scene.x0, um, cfg))) /
                        (2 * h);
      const double rel = std::abs(rep.dphi_du(k, j) - fd) /
                         std::max({std::abs(fd), std::abs(rep.dphi_du(k, j)), 1e-8});
      worst = std::max(worst, rel);
    }
    const bool ok = worst < 1e-4;
    all_ok &= ok;
    std::cout << (ok ? "ok   " : "FAIL ") << "backward_vs_fd worst_rel_err " << worst << "\n";
  }

  if (!all_ok) {
    std::cout << "grad-check: FAILED (worst: " << worst_name << ", rel err " << worst_err << ")\n";
    return kExitGradCheck;
  }
  std::cout << "grad-check: all checks passed\n";
  return kExitOk;
}

int cmd_profile(const CommonArgs& args, const std::vector<int>& steps_list,
                const std::vector<int>& intervals) {
  const Scene scene = load_with_overrides(args);
  const StepConfig cfg = StepConfig::from(scene.sim);
  ObjectiveSpec obj = [&] {
    if (scene.objective) return ObjectiveSpec::from_config(scene.model, *scene.objective);
    ObjectiveConfig oc;
    oc.kind = "ee_target";
    oc.link = static_cast<int>(scene.model.links.size()) - 1;
    return ObjectiveSpec::from_config(scene.model, oc);
  }();

  std::ostringstream csv;
  csv << "scene,mode,steps,peak_aux_bytes,checkpoint_bytes,tape_peak_bytes,fwd_ms_per_step,"
         "bwd_ms_per_step,status\n";
  double t_fwd = 0, t_bwd = 0, m_ckpt = 0, m_sim = 0;
  for (const char* mode : {"checkpoint", "full_tape"}) {
    for (int steps : steps_list) {
      CommonArgs cell = args;
      cell.mode = mode;
      csv << scene.name << ',' << mode << ',' << steps << ',';
      try {
        const Trajectory traj =
            rollout(scene.model, scene.x0, zero_controls(scene, steps), cfg, rollout_options(cell));
        const GradientReport rep = backward(scene.model, traj, obj);
        csv << rep.storage.peak_aux_bytes() << ',' << rep.storage.checkpoint_bytes << ','
            << rep.storage.tape_peak_bytes << ',' << rep.forward_ms_per_step << ','
            << rep.backward_ms_per_step << ",ok\n";
        if (std::string(mode) == "checkpoint") {
          t_fwd = rep.forward_ms_per_step;
          t_bwd = std::max(0.0, rep.backward_ms_per_step - rep.forward_ms_per_step);
          m_ckpt = double(rep.storage.checkpoint_bytes) / steps;
          m_sim = double(rep.storage.tape_peak_bytes);
        }
      } catch (const MemoryBudgetExceeded&) {
        csv << ",,,,,budget_exceeded\n";
      }
    }
  }
  std::cout << csv.str();

  if (!intervals.empty()) {
    const int n = steps_list.empty() ? 1000 : steps_list.back();
    std::cout << "\ninterval_k,predicted_bwd_ms_per_step,predicted_peak_bytes\n";
    for (int k : intervals) {
      const CostPrediction p = predict_cost(k, n, t_fwd, t_bwd, m_ckpt, m_sim);
      std::cout << k << ',' << p.time_per_backward_step << ',' << p.peak_memory << "\n";
    }
  }
  if (!args.out.empty()) {
    auto out = open_out(args.out);
    out << csv.str();
  }
  return kExitOk;
}

int cmd_optimize(const CommonArgs& args, int iterations, double lr, const std::string& baseline) {
  Scene scene = load_with_overrides(args);
  if (!scene.objective) throw ValidationError("optimize: scene has no objective block");
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, *scene.objective);
  OptimizeConfig cfg;
  cfg.max_iterations = iterations > 0 ? iterations : scene.optimize.iterations;
  cfg.learning_rate = lr > 0 ? lr : scene.optimize.lr;
  cfg.convergence_phi = scene.optimize.convergence;
  cfg.seed = args.seed;

  const OptimizeResult res = optimize_controls(scene, obj, cfg);
  std::cout << "iterations: " << res.loss_history.size() << "\n"
            << "initial_phi: " << res.loss_history.front() << "\n"
            << "best_phi: " << res.best_phi << "\n"
            << "converged_at: " << res.iterations_to_convergence << "\n";

  const std::string prefix = args.out.empty() ? scene.name : args.out;
  {
    auto out = open_out(prefix + "_loss.csv");
    out << "iteration,phi\n";
    for (size_t i = 0; i < res.loss_history.size(); ++i) out << i << ',' << res.loss_history[i] << "\n";
  }
  {
    // optimized controls in the trajectory schema, replayable via simulate --controls
    const Trajectory traj = rollout(scene.model, scene.x0, res.controls,
                                    StepConfig::from(scene.sim));
    auto out = open_out(prefix + "_controls.csv");
    write_trajectory_csv(out, scene.model, traj);
  }
  if (baseline == "random-search") {
    const int budget = 2 * static_cast<int>(res.loss_history.size());
    double bound = 1.0;
    for (const LinkSpec& link : scene.model.links)
      if (std::isfinite(link.joint.effort_limit)) bound = std::max(bound, link.joint.effort_limit);
    const OptimizeResult rnd = random_search_controls(scene, obj, budget, bound, args.seed);
    auto out = open_out(prefix + "_baseline_loss.csv");
    out << "evaluation,best_phi\n";
    for (size_t i = 0; i < rnd.loss_history.size(); ++i) out << i << ',' << rnd.loss_history[i] << "\n";
    std::cout << "baseline_best_phi: " << rnd.best_phi << "\n";
  }
  return kExitOk;
}

int cmd_estimate(const CommonArgs& args, int iterations, double lr, const std::string& param) {
  Scene scene = load_with_overrides(args);
  if (!scene.objective) throw ValidationError("estimate: scene has no objective block");
  const ObjectiveSpec obj = ObjectiveSpec::from_config(scene.model, *scene.objective);
  ParamMask mask;
  if (param == "friction") mask.friction = true;
  else if (param == "mass") mask.mass = true;
  else if (param == "damping") mask.damping = true;
  else throw ValidationError("estimate: unknown parameter '" + param + "'");

  OptimizeConfig cfg;
  cfg.max_iterations = iterations > 0 ? iterations : scene.optimize.iterations;
  cfg.learning_rate = lr > 0 ? lr : scene.optimize.lr;
  cfg.convergence_phi = scene.optimize.convergence;

  const EstimateResult res = estimate_parameters(scene, obj, mask, cfg);
  std::cout << "iterations: " << res.iterations << "\n"
            << "final_phi: " << res.final_phi << "\n";
  if (mask.friction) std::cout << "mu: " << res.model.material.mu << "\n";
  if (!args.out.empty()) {
    auto out = open_out(args.out);
    out << "iteration,phi\n";
    for (size_t i = 0; i < res.loss_history.size(); ++i) out << i << ',' << res.loss_history[i] << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable articulated-body simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  int trials = 100;
  int iterations = -1;
  double lr = -1;
  bool corrupt = false;
  std::string controls_path, baseline, param = "friction", json_path, steps_csv = "100,1000",
              intervals_csv;

  auto add_common = [&](CLI::App* cmd, bool needs_scene = true) {
    cmd->add_option("--scene", args.scene_path, "scene file")->required(needs_scene);
    cmd->add_option("--steps", args.steps, "override step count");
    cmd->add_option("--dt", args.dt, "override timestep");
    cmd->add_option("--seed", args.seed, "rng seed");
    cmd->add_option("--mode", args.mode, "checkpoint | full_tape");
    cmd->add_option("--budget-gb", args.budget_gb, "tape accounting budget in GiB");
    cmd->add_option("--out", args.out, "output path (or prefix)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "roll a scene forward and export the trajectory");
  add_common(sim);
  sim->add_option("--controls", controls_path, "replay controls from a trajectory CSV");

  CLI::App* gc = app.add_subcommand("grad-check", "operator dot tests plus backward-vs-fd");
  add_common(gc);
  gc->add_option("--trials", trials, "dot-test trials per operator");
  gc->add_option("--report-json", json_path, "write the gradient report as JSON");
  gc->add_flag("--self-test-corrupt", corrupt, "inject a corrupted adjoint fixture");

  CLI::App* prof = app.add_subcommand("profile", "memory/time table across modes and horizons");
  add_common(prof);
  prof->add_option("--steps-list", steps_csv, "comma-separated step counts");
  prof->add_option("--intervals", intervals_csv, "checkpoint intervals for the cost model");

  CLI::App* opt = app.add_subcommand("optimize", "gradient descent on the control array");
  add_common(opt);
  opt->add_option("--iterations", iterations, "SGD iterations");
  opt->add_option("--lr", lr, "learning rate");
  opt->add_option("--baseline", baseline, "also run 'random-search' under equal budget");

  CLI::App* est = app.add_subcommand("estimate", "estimate physical parameters from the objective");
  add_common(est);
  est->add_option("--iterations", iterations, "SGD iterations");
  est->add_option("--lr", lr, "learning rate");
  est->add_option("--param", param, "friction | mass | damping");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  auto parse_int_list = [](const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
  };

  try {
    if (sim->parsed()) return cmd_simulate(args, controls_path);
    if (gc->parsed()) return cmd_grad_check(args, trials, corrupt, json_path);
    if (prof->parsed()) return cmd_profile(args, parse_int_list(steps_csv), parse_int_list(intervals_csv));
    if (opt->parsed()) return cmd_optimize(args, iterations, lr, baseline);
    if (est->parsed()) return cmd_estimate(args, iterations, lr, param);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DivergenceDetected& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    // NonFiniteState, SingularMassMatrix, MemoryBudgetExceeded, ...
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
