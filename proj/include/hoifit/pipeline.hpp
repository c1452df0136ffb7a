#pragma once
#include <string>
#include <vector>

#include "hoifit/losses.hpp"
#include "hoifit/metrics.hpp"
#include "hoifit/optim.hpp"
#include "hoifit/refine.hpp"
#include "hoifit/scene_io.hpp"

namespace hoifit {

// Stage budgets and step sizes; the object stage anneals the silhouette
// sigma from sigma0 by x0.5 at each third of its iteration budget.
struct PipelineConfig {
  OptimConfig hand;    // keypoint fit over all 61 hand parameters
  OptimConfig object;  // multi-start silhouette fit, 7 pose parameters
  OptimConfig joint;   // arrangement fit, hand placement + object pose
  RefineConfig refine;
  LossWeights weights;
  double sigma0 = 1.0;  // px

  static PipelineConfig defaults();
};

// Partial documents override defaults field by field.
Json pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const Json& j);

// Stage objectives, exposed so gradients can be probed directly. Parameter
// layouts match the stage optimizers: the hand objective runs over the 61
// packed hand parameters, the object objective over [rotation, translation
// offset from `anchor`/scale, log scale], the joint objective over the hand
// pack followed by [rotation, translation, log scale] of the object. The
// closures keep a reference to the scene; it must outlive them.
Objective hand_stage_objective(const SceneData& scene, const LossWeights& w);
Objective object_stage_objective(const SceneData& scene, const Vec3& anchor,
                                 double sigma);
Objective joint_stage_objective(const SceneData& scene, const LossWeights& w);

struct HandFit {
  HandParams params;
  double loss = 0.0;
  int iterations = 0;
};

// Stage (a): minimize the confidence-weighted reprojection error plus shape
// regularizer from the manifest's initial parameters (or defaults).
HandFit fit_hand_stage(const SceneData& scene, const PipelineConfig& cfg);

struct ObjectHypothesis {
  ObjectPose pose;
  double loss = 0.0;  // silhouette MSE at the final sigma
  int start_index = 0;
};

// Stage (b): multi-start rotation sampling; translation is optimized as an
// offset from an anchor at the hand's weak-perspective depth (0, 0, f/s)
// so the zero-initialized object starts in front of the camera. Returns the
// top_k hypotheses sorted by loss.
std::vector<ObjectHypothesis> fit_object_stage(const SceneData& scene,
                                               const HandParams& anchor_hand,
                                               const PipelineConfig& cfg);

struct JointFit {
  HandParams hand;
  ObjectPose object;
  double loss = 0.0;
  double depth_term = 0.0;
  double interaction_term = 0.0;
  double penetration_term = 0.0;
  bool failed = false;  // this hypothesis diverged or left the frame
  std::string error;
};

// Stage (c): per retained hypothesis, minimize the weighted arrangement
// objective over the object pose and the hand's global placement (finger
// articulation and shape stay fixed). Output order matches the input
// hypothesis order; failed arrangements are kept and flagged.
std::vector<JointFit> fit_joint_stage(const SceneData& scene,
                                      const HandParams& hand,
                                      const std::vector<ObjectHypothesis>& hyps,
                                      const PipelineConfig& cfg);

struct PipelineResult {
  HandFit hand;
  std::vector<ObjectHypothesis> object_hyps;
  std::vector<JointFit> joint;  // parallel to object_hyps
  int best_joint = -1;          // lowest-loss non-failed arrangement
  HandParams refined_hand;
  double refine_energy = 0.0;
  ObjectPose final_object;
};

// Index of the lowest-loss non-failed arrangement; NoHypothesisError if all
// failed.
int best_arrangement(const std::vector<JointFit>& joint);

// Stage (d) on an arranged scene.
HandParams refine_stage(const SceneData& scene, const JointFit& arranged,
                        const PipelineConfig& cfg, double* energy = nullptr);

// (a) -> (b) -> (c) -> (d).
PipelineResult run_pipeline(const SceneData& scene, const PipelineConfig& cfg);

// Metrics against the manifest's ground truth blocks; ValidationError if the
// scene carries none.
EvalReport evaluate_result(const SceneData& scene, const HandParams& hand,
                           const ObjectPose& object);

// Artifact writers shared by the CLI and the end-to-end command; file names
// are stable so later stages can restart from them.
void write_hand_stage(const std::string& out_dir, const SceneData& scene,
                      const HandFit& fit);
void write_object_stage(const std::string& out_dir,
                        const std::vector<ObjectHypothesis>& hyps);
void write_joint_stage(const std::string& out_dir,
                       const std::vector<JointFit>& joint);
void write_refine_stage(const std::string& out_dir, const SceneData& scene,
                        const PipelineResult& result);

// Artifact readers for restarting; ValidationError when absent.
HandParams read_hand_stage(const std::string& out_dir);
std::vector<ObjectHypothesis> read_object_stage(const std::string& out_dir);
std::vector<JointFit> read_joint_stage(const std::string& out_dir);

}  // namespace hoifit
