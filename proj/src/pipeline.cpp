#include "hoifit/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "hoifit/errors.hpp"
#include "hoifit/parallel.hpp"
#include "hoifit/rng.hpp"

namespace hoifit {

namespace {

// Pack layout indices (see pack_hand_params).
constexpr int kThetaStart = 3;
constexpr int kBetaStart = 48;
constexpr int kTxIdx = 58;
constexpr int kTyIdx = 59;
constexpr int kLogSIdx = 60;
constexpr int kObjStart = kHandParamDim;  // joint-stage object block
constexpr int kJointDim = kHandParamDim + 7;

// Per-parameter step scales. Rotations step at the configured step size;
// weak-perspective offsets (px) and object translations (mm) need
// proportionally larger moves per iteration to cross image-scale distances
// within the iteration budget.
//
// Object log-scale is handled differently per stage. A single silhouette
// cannot separate object scale from depth: shrinking the object and moving
// it proportionally closer reproduces the same mask, so the mask loss is
// flat along that valley and pixel quantization even biases it away from the
// true pose. The silhouette stage therefore keeps log-scale on a tight trust
// region (the evidence pins apparent size only; the mesh's metric size is
// taken at face value) and leaves the valley direction to the arrangement
// stage, where contact with the metrically anchored hand resolves it; there
// log-scale steps at kJointObjScaleScale. Hand orientation and the hand
// scale stay pinned in the arrangement stage: they are already fixed by the
// keypoint evidence, and the arrangement terms carry no image evidence that
// could re-anchor them.
constexpr double kWpOffsetScale = 100.0;
constexpr double kObjTransScale = 150.0;
constexpr double kObjLogScaleScale = 0.02;
constexpr double kJointObjTransScale = 1000.0;
constexpr double kJointObjScaleScale = 0.3;
constexpr double kJointPinnedScale = 0.02;

ObjectPose anchored_pose(const Eigen::VectorXd& x, const Vec3& anchor) {
  ObjectPose p;
  p.rotation = x.segment<3>(0);
  p.scale = std::exp(x[6]);
  p.translation = Vec3(x.segment<3>(3)) + anchor / p.scale;
  return p;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.hand.step_size = 1e-3;
  cfg.hand.max_iters = 100;
  cfg.object.step_size = 1e-2;
  cfg.object.max_iters = 200;
  cfg.object.num_inits = 1000;
  cfg.object.top_k = 1;
  cfg.joint.step_size = 1e-3;
  cfg.joint.max_iters = 200;
  return cfg;
}

Objective hand_stage_objective(const SceneData& scene, const LossWeights& w) {
  return [&scene, w](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
    const PerspectiveCamera& cam = scene.manifest.camera;
    const HandParams p = unpack_hand_params(x.head<kHandParamDim>());
    const HandForward fwd = hand_forward(scene.hand_model, p, cam.f);
    const KeypointLossGrad kg = keypoint_loss(fwd.joints21, cam, scene.keypoints,
                                              p.beta, w.lambda_beta);
    const HandGrad hg =
        hand_backward(scene.hand_model, p, fwd, cam.f, {}, kg.d_joints);
    grad = hg.pack_log_s(p.wp.s);
    grad.segment<kHandBetas>(kBetaStart) += kg.d_beta;
    return kg.loss;
  };
}

Objective object_stage_objective(const SceneData& scene, const Vec3& anchor,
                                 double sigma) {
  return [&scene, anchor, sigma](const Eigen::VectorXd& x,
                                 Eigen::VectorXd& grad) -> double {
    const PerspectiveCamera& cam = scene.manifest.camera;
    const TriMesh& mesh = scene.object_mesh;
    const ObjectPose pose = anchored_pose(x, anchor);
    const TriMesh posed = apply_object_pose(mesh, pose);
    const SoftMask soft = render_soft_mask(posed, cam, sigma);
    std::vector<double> d_values;
    const double loss = mask_loss_backward(soft, scene.object_mask, d_values);
    const std::vector<Vec3> d_verts =
        soft_mask_backward(posed, cam, sigma, soft, d_values);
    const ObjectPoseGrad pg = apply_object_pose_backward(mesh, pose, d_verts);
    grad.segment<3>(0) = pg.d_rotation;
    grad.segment<3>(3) = pg.d_translation;
    // translation = t_opt + anchor/s: the anchor pulls a -A/s term into
    // the log-scale gradient
    grad[6] =
        pose.scale * pg.d_scale - pg.d_translation.dot(anchor) / pose.scale;
    return loss;
  };
}

Objective joint_stage_objective(const SceneData& scene, const LossWeights& w) {
  return [&scene, w](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
    const PerspectiveCamera& cam = scene.manifest.camera;
    const HandParams hp = unpack_hand_params(x.head<kHandParamDim>());
    ObjectPose pose;
    pose.rotation = x.segment<3>(kObjStart);
    pose.translation = x.segment<3>(kObjStart + 3);
    pose.scale = std::exp(x[kObjStart + 6]);
    const HandForward fwd = hand_forward(scene.hand_model, hp, cam.f);
    const TriMesh posed = apply_object_pose(scene.object_mesh, pose);
    const JointObjectiveGrad jg =
        joint_objective(scene.label_mask, fwd.mesh, posed, cam, w, true);
    const HandGrad hg = hand_backward(scene.hand_model, hp, fwd, cam.f,
                                      jg.d_hand, zero_keypoints());
    grad.head<kHandParamDim>() = hg.pack_log_s(hp.wp.s);
    const ObjectPoseGrad pg =
        apply_object_pose_backward(scene.object_mesh, pose, jg.d_obj);
    grad.segment<3>(kObjStart) = pg.d_rotation;
    grad.segment<3>(kObjStart + 3) = pg.d_translation;
    grad[kObjStart + 6] = pose.scale * pg.d_scale;
    return jg.loss;
  };
}

HandFit fit_hand_stage(const SceneData& scene, const PipelineConfig& cfg) {
  const HandParams init = scene.init_hand_params.value_or(HandParams{});
  const Objective objective = hand_stage_objective(scene, cfg.weights);

  Eigen::VectorXd scales = Eigen::VectorXd::Ones(kHandParamDim);
  scales[kTxIdx] = kWpOffsetScale;
  scales[kTyIdx] = kWpOffsetScale;

  const Hypothesis h =
      minimize(objective, pack_hand_params(init), cfg.hand, &scales);
  HandFit fit;
  fit.params = unpack_hand_params(h.params.head<kHandParamDim>());
  fit.loss = h.final_loss;
  fit.iterations = h.iterations;
  return fit;
}

std::vector<ObjectHypothesis> fit_object_stage(const SceneData& scene,
                                               const HandParams& anchor_hand,
                                               const PipelineConfig& cfg) {
  if (!(cfg.sigma0 > 0.0)) throw ValidationError("sigma0 must be positive");
  const Vec3 anchor = weak_to_perspective_offset(
      WeakPerspective{0.0, 0.0, anchor_hand.wp.s}, scene.manifest.camera.f);

  Eigen::VectorXd scales = Eigen::VectorXd::Ones(7);
  scales.segment<3>(3).setConstant(kObjTransScale);
  scales[6] = kObjLogScaleScale;

  // sigma anneals x0.5 at each third of the per-start budget, and the step
  // size anneals with it: the sharper landscape supports (and needs) finer
  // moves, which also shrinks the terminal oscillation of Adam's sign-scaled
  // steps so the last segment polishes instead of dithering.
  const int budget = cfg.object.max_iters;
  const std::array<int, 3> segs = {budget / 3, budget / 3,
                                   budget - 2 * (budget / 3)};

  StartRunner run_one = [&](const Vec3& rotvec, int) -> Hypothesis {
    Eigen::VectorXd x(7);
    x << rotvec, Vec3::Zero(), 0.0;
    Hypothesis h;
    int iters = 0;
    std::vector<double> trace;
    double sigma = cfg.sigma0;
    for (int s = 0; s < 3; ++s) {
      OptimConfig seg = cfg.object;
      seg.max_iters = segs[static_cast<size_t>(s)];
      seg.step_size = cfg.object.step_size * (sigma / cfg.sigma0);
      h = minimize(object_stage_objective(scene, anchor, sigma), x, seg,
                   &scales);
      x = h.params;
      iters += h.iterations;
      if (cfg.object.record_trace) {
        trace.insert(trace.end(), h.trace.begin(), h.trace.end());
      }
      sigma *= 0.5;
    }
    h.iterations = iters;
    h.trace = std::move(trace);
    return h;
  };

  const std::vector<Hypothesis> hyps = multi_start_fit(run_one, cfg.object);
  std::vector<ObjectHypothesis> out;
  out.reserve(hyps.size());
  for (const Hypothesis& h : hyps) {
    ObjectHypothesis oh;
    oh.pose = anchored_pose(h.params, anchor);
    oh.loss = h.final_loss;
    oh.start_index = h.start_index;
    out.push_back(oh);
  }
  return out;
}

std::vector<JointFit> fit_joint_stage(const SceneData& scene,
                                      const HandParams& hand,
                                      const std::vector<ObjectHypothesis>& hyps,
                                      const PipelineConfig& cfg) {
  if (hyps.empty()) throw ValidationError("fit_joint_stage: no hypotheses");
  const PerspectiveCamera& cam = scene.manifest.camera;
  const HandModel& model = scene.hand_model;
  const TriMesh& mesh = scene.object_mesh;

  Eigen::VectorXd scales = Eigen::VectorXd::Ones(kJointDim);
  scales.segment<3>(0).setConstant(kJointPinnedScale);
  scales.segment(kThetaStart, kHandThetaJoints * 3 + kHandBetas).setZero();
  scales[kTxIdx] = kWpOffsetScale;
  scales[kTyIdx] = kWpOffsetScale;
  scales.segment<3>(kObjStart).setConstant(kJointPinnedScale);
  scales.segment<3>(kObjStart + 3).setConstant(kJointObjTransScale);
  scales[kObjStart + 6] = kJointObjScaleScale;

  const Objective objective = joint_stage_objective(scene, cfg.weights);

  std::vector<JointFit> out(hyps.size());
  parallel_for(static_cast<int>(hyps.size()), cfg.joint.workers, [&](int i) {
    const ObjectHypothesis& oh = hyps[static_cast<size_t>(i)];
    JointFit& jf = out[static_cast<size_t>(i)];
    try {
      Eigen::VectorXd x(kJointDim);
      x.head<kHandParamDim>() = pack_hand_params(hand);
      x.segment<3>(kObjStart) = oh.pose.rotation;
      x.segment<3>(kObjStart + 3) = oh.pose.translation;
      x[kObjStart + 6] = std::log(oh.pose.scale);
      const Hypothesis h = minimize(objective, x, cfg.joint, &scales);

      jf.hand = unpack_hand_params(h.params.head<kHandParamDim>());
      jf.object.rotation = h.params.segment<3>(kObjStart);
      jf.object.translation = h.params.segment<3>(kObjStart + 3);
      jf.object.scale = std::exp(h.params[kObjStart + 6]);
      const HandForward fwd = hand_forward(model, jf.hand, cam.f);
      const TriMesh posed = apply_object_pose(mesh, jf.object);
      const JointObjectiveGrad terms = joint_objective(
          scene.label_mask, fwd.mesh, posed, cam, cfg.weights, false);
      jf.loss = terms.loss;
      jf.depth_term = terms.depth_term;
      jf.interaction_term = terms.interaction_term;
      jf.penetration_term = terms.penetration_term;
    } catch (const Error& e) {
      jf.failed = true;
      jf.error = e.what();
      jf.loss = std::numeric_limits<double>::infinity();
      jf.hand = hand;
      jf.object = oh.pose;
    }
  });
  return out;
}

int best_arrangement(const std::vector<JointFit>& joint) {
  int best = -1;
  for (size_t i = 0; i < joint.size(); ++i) {
    if (joint[i].failed) continue;
    if (best < 0 || joint[i].loss < joint[static_cast<size_t>(best)].loss) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw NoHypothesisError("every arrangement failed");
  return best;
}

HandParams refine_stage(const SceneData& scene, const JointFit& arranged,
                        const PipelineConfig& cfg, double* energy) {
  if (arranged.failed) {
    throw ValidationError("refine_stage: arrangement marked failed");
  }
  const TriMesh posed = apply_object_pose(scene.object_mesh, arranged.object);
  return refine_hand(scene.hand_model, arranged.hand, posed, scene.prior,
                     scene.manifest.camera.f, cfg.refine, energy);
}

PipelineResult run_pipeline(const SceneData& scene, const PipelineConfig& cfg) {
  PipelineResult r;
  r.hand = fit_hand_stage(scene, cfg);
  r.object_hyps = fit_object_stage(scene, r.hand.params, cfg);
  r.joint = fit_joint_stage(scene, r.hand.params, r.object_hyps, cfg);
  r.best_joint = best_arrangement(r.joint);
  const JointFit& best = r.joint[static_cast<size_t>(r.best_joint)];
  r.refined_hand = refine_stage(scene, best, cfg, &r.refine_energy);
  r.final_object = best.object;
  return r;
}

EvalReport evaluate_result(const SceneData& scene, const HandParams& hand,
                           const ObjectPose& object) {
  if (!scene.gt_hand_params || !scene.gt_object_pose) {
    throw ValidationError("scene carries no ground truth to evaluate against");
  }
  const double f = scene.manifest.camera.f;
  const HandForward pred = hand_forward(scene.hand_model, hand, f);
  const HandForward gt = hand_forward(scene.hand_model, *scene.gt_hand_params, f);
  const TriMesh pred_obj = apply_object_pose(scene.object_mesh, object);
  const TriMesh gt_obj =
      apply_object_pose(scene.object_mesh, *scene.gt_object_pose);
  return evaluate(pred.joints21, gt.joints21, pred.mesh, gt.mesh, pred_obj,
                  gt_obj);
}

namespace {

// Config documents override defaults field by field; unknown keys are
// rejected so typos cannot silently fall back to defaults.

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

double num_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw ValidationError(std::string("config key '") + key +
                          "' must be a finite number");
  }
  return v.get<double>();
}

int int_or(const Json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ValidationError(std::string("config key '") + key +
                          "' must be an integer");
  }
  return v.get<int>();
}

void optim_from_json(const Json& j, OptimConfig& cfg, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  check_keys(j,
             {"step_size", "max_iters", "convergence_tol", "convergence_streak",
              "num_inits", "top_k", "seed", "workers", "sampling",
              "record_trace"},
             where);
  cfg.step_size = num_or(j, "step_size", cfg.step_size);
  cfg.max_iters = int_or(j, "max_iters", cfg.max_iters);
  cfg.convergence_tol = num_or(j, "convergence_tol", cfg.convergence_tol);
  cfg.convergence_streak = int_or(j, "convergence_streak", cfg.convergence_streak);
  cfg.num_inits = int_or(j, "num_inits", cfg.num_inits);
  cfg.top_k = int_or(j, "top_k", cfg.top_k);
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  cfg.workers = int_or(j, "workers", cfg.workers);
  if (j.contains("sampling")) {
    const std::string s = j.at("sampling").get<std::string>();
    if (s == "component") {
      cfg.sampling = RotationSampling::kComponentUniform;
    } else if (s == "so3") {
      cfg.sampling = RotationSampling::kUniformSO3;
    } else {
      throw ValidationError(where + ".sampling must be 'component' or 'so3'");
    }
  }
  if (j.contains("record_trace")) {
    cfg.record_trace = j.at("record_trace").get<bool>();
  }
  if (!(cfg.step_size > 0.0)) throw ValidationError(where + ".step_size must be positive");
  if (cfg.max_iters < 1) throw ValidationError(where + ".max_iters must be at least 1");
  if (cfg.top_k < 1 || cfg.num_inits < cfg.top_k) {
    throw ValidationError(where + ": need num_inits >= top_k >= 1");
  }
  if (cfg.workers < 1) throw ValidationError(where + ".workers must be at least 1");
}

Json optim_to_json(const OptimConfig& cfg) {
  return Json{{"step_size", cfg.step_size},
              {"max_iters", cfg.max_iters},
              {"convergence_tol", cfg.convergence_tol},
              {"convergence_streak", cfg.convergence_streak},
              {"num_inits", cfg.num_inits},
              {"top_k", cfg.top_k},
              {"seed", cfg.seed},
              {"workers", cfg.workers},
              {"sampling", cfg.sampling == RotationSampling::kComponentUniform
                               ? "component"
                               : "so3"},
              {"record_trace", cfg.record_trace}};
}

}  // namespace

Json pipeline_config_to_json(const PipelineConfig& cfg) {
  return Json{
      {"hand", optim_to_json(cfg.hand)},
      {"object", optim_to_json(cfg.object)},
      {"joint", optim_to_json(cfg.joint)},
      {"refine",
       Json{{"outer_iters", cfg.refine.outer_iters},
            {"inner_steps", cfg.refine.inner_steps},
            {"step_size", cfg.refine.step_size},
            {"lambda_theta", cfg.refine.lambda_theta},
            {"lambda_pen", cfg.refine.lambda_pen},
            {"max_object_points", cfg.refine.max_object_points},
            {"seed", cfg.refine.seed}}},
      {"weights",
       Json{{"lambda_d", cfg.weights.lambda_d},
            {"lambda_i", cfg.weights.lambda_i},
            {"lambda_p", cfg.weights.lambda_p},
            {"lambda_beta", cfg.weights.lambda_beta}}},
      {"sigma0", cfg.sigma0}};
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("config must be an object");
  check_keys(j, {"hand", "object", "joint", "refine", "weights", "sigma0"},
             "config");
  PipelineConfig cfg = PipelineConfig::defaults();
  if (j.contains("hand")) optim_from_json(j.at("hand"), cfg.hand, "hand");
  if (j.contains("object")) optim_from_json(j.at("object"), cfg.object, "object");
  if (j.contains("joint")) optim_from_json(j.at("joint"), cfg.joint, "joint");
  if (j.contains("refine")) {
    const Json& r = j.at("refine");
    if (!r.is_object()) throw ValidationError("refine must be an object");
    check_keys(r,
               {"outer_iters", "inner_steps", "step_size", "lambda_theta",
                "lambda_pen", "max_object_points", "seed"},
               "refine");
    cfg.refine.outer_iters = int_or(r, "outer_iters", cfg.refine.outer_iters);
    cfg.refine.inner_steps = int_or(r, "inner_steps", cfg.refine.inner_steps);
    cfg.refine.step_size = num_or(r, "step_size", cfg.refine.step_size);
    cfg.refine.lambda_theta = num_or(r, "lambda_theta", cfg.refine.lambda_theta);
    cfg.refine.lambda_pen = num_or(r, "lambda_pen", cfg.refine.lambda_pen);
    cfg.refine.max_object_points =
        int_or(r, "max_object_points", cfg.refine.max_object_points);
    if (r.contains("seed")) cfg.refine.seed = r.at("seed").get<std::uint64_t>();
    if (cfg.refine.outer_iters < 0) {
      throw ValidationError("refine.outer_iters must be non-negative");
    }
    if (!(cfg.refine.step_size > 0.0)) {
      throw ValidationError("refine.step_size must be positive");
    }
  }
  if (j.contains("weights")) {
    const Json& w = j.at("weights");
    if (!w.is_object()) throw ValidationError("weights must be an object");
    check_keys(w, {"lambda_d", "lambda_i", "lambda_p", "lambda_beta"},
               "weights");
    cfg.weights.lambda_d = num_or(w, "lambda_d", cfg.weights.lambda_d);
    cfg.weights.lambda_i = num_or(w, "lambda_i", cfg.weights.lambda_i);
    cfg.weights.lambda_p = num_or(w, "lambda_p", cfg.weights.lambda_p);
    cfg.weights.lambda_beta = num_or(w, "lambda_beta", cfg.weights.lambda_beta);
    for (double v : {cfg.weights.lambda_d, cfg.weights.lambda_i,
                     cfg.weights.lambda_p, cfg.weights.lambda_beta}) {
      if (!(v >= 0.0)) throw ValidationError("loss weights must be non-negative");
    }
  }
  cfg.sigma0 = num_or(j, "sigma0", cfg.sigma0);
  if (!(cfg.sigma0 > 0.0)) throw ValidationError("sigma0 must be positive");
  return cfg;
}

namespace {

std::string pad2(int i) {
  return (i < 10 ? "0" : "") + std::to_string(i);
}

std::string join2(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

}  // namespace

void write_hand_stage(const std::string& out_dir, const SceneData& scene,
                      const HandFit& fit) {
  std::filesystem::create_directories(out_dir);
  save_json_file(join2(out_dir, "hand_params.json"),
                 hand_params_to_json(fit.params));
  const HandForward fwd =
      hand_forward(scene.hand_model, fit.params, scene.manifest.camera.f);
  save_obj(join2(out_dir, "hand_mesh.obj"), fwd.mesh);
}

void write_object_stage(const std::string& out_dir,
                        const std::vector<ObjectHypothesis>& hyps) {
  std::filesystem::create_directories(out_dir);
  for (size_t i = 0; i < hyps.size(); ++i) {
    Json j = object_pose_to_json(hyps[i].pose);
    j["loss"] = hyps[i].loss;
    j["start_index"] = hyps[i].start_index;
    save_json_file(join2(out_dir, "object_pose_" + pad2(static_cast<int>(i)) +
                                      ".json"),
                   j);
  }
}

void write_joint_stage(const std::string& out_dir,
                       const std::vector<JointFit>& joint) {
  std::filesystem::create_directories(out_dir);
  for (size_t i = 0; i < joint.size(); ++i) {
    const JointFit& jf = joint[i];
    Json j{{"hand_params", hand_params_to_json(jf.hand)},
           {"object_pose", object_pose_to_json(jf.object)},
           {"loss", jf.loss},
           {"depth_term", jf.depth_term},
           {"interaction_term", jf.interaction_term},
           {"penetration_term", jf.penetration_term},
           {"failed", jf.failed}};
    if (jf.failed) j["error"] = jf.error;
    save_json_file(
        join2(out_dir, "arranged_" + pad2(static_cast<int>(i)) + ".json"), j);
  }
}

void write_refine_stage(const std::string& out_dir, const SceneData& scene,
                        const PipelineResult& result) {
  std::filesystem::create_directories(out_dir);
  save_json_file(join2(out_dir, "final_hand_params.json"),
                 hand_params_to_json(result.refined_hand));
  save_json_file(join2(out_dir, "refine.json"),
                 Json{{"energy", result.refine_energy},
                      {"source_hypothesis", result.best_joint}});
  const HandForward fwd = hand_forward(scene.hand_model, result.refined_hand,
                                       scene.manifest.camera.f);
  save_obj(join2(out_dir, "final_hand.obj"), fwd.mesh);
  save_obj(join2(out_dir, "final_object.obj"),
           apply_object_pose(scene.object_mesh, result.final_object));
}

HandParams read_hand_stage(const std::string& out_dir) {
  return hand_params_from_json(
      load_json_file(join2(out_dir, "hand_params.json")));
}

std::vector<ObjectHypothesis> read_object_stage(const std::string& out_dir) {
  std::vector<ObjectHypothesis> out;
  for (int i = 0;; ++i) {
    const std::string path =
        join2(out_dir, "object_pose_" + pad2(i) + ".json");
    if (!std::filesystem::exists(path)) break;
    const Json j = load_json_file(path);
    ObjectHypothesis oh;
    oh.pose = object_pose_from_json(j);
    oh.loss = j.value("loss", 0.0);
    oh.start_index = j.value("start_index", 0);
    out.push_back(oh);
  }
  if (out.empty()) {
    throw ValidationError(out_dir + ": no object hypothesis files");
  }
  return out;
}

std::vector<JointFit> read_joint_stage(const std::string& out_dir) {
  std::vector<JointFit> out;
  for (int i = 0;; ++i) {
    const std::string path = join2(out_dir, "arranged_" + pad2(i) + ".json");
    if (!std::filesystem::exists(path)) break;
    const Json j = load_json_file(path);
    JointFit jf;
    jf.hand = hand_params_from_json(j.at("hand_params"));
    jf.object = object_pose_from_json(j.at("object_pose"));
    jf.loss = j.value("loss", 0.0);
    jf.depth_term = j.value("depth_term", 0.0);
    jf.interaction_term = j.value("interaction_term", 0.0);
    jf.penetration_term = j.value("penetration_term", 0.0);
    jf.failed = j.value("failed", false);
    jf.error = j.value("error", std::string());
    out.push_back(jf);
  }
  if (out.empty()) throw ValidationError(out_dir + ": no arranged scene files");
  return out;
}

}  // namespace hoifit
