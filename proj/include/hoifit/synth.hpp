#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "hoifit/pipeline.hpp"
#include "hoifit/rng.hpp"

namespace hoifit {

// Evidence and initialization noise; zero() turns everything off so the
// scene is exactly self-consistent at its ground truth.
struct NoiseSpec {
  double kp_sigma = 2.0;          // px, gaussian on keypoint coordinates
  int mask_morph = 0;             // evidence masks: dilate (>0) / erode (<0)
  double init_theta_sigma = 0.1;  // rad, gaussian on articulation and
                                  // global rotation of the initialization
  double init_offset_sigma = 2.0; // px, gaussian on initial tx/ty
  double init_scale_lo = 0.8;     // initial wp scale multiplier, uniform
  double init_scale_hi = 1.25;

  static NoiseSpec zero();
  void validate() const;
};

enum class ObjectKind { kBox, kCylinder, kBlob, kCycle };  // kCycle: by seed

struct SynthSpec {
  int image_size = 64;
  double focal = 70.0;            // px
  int hand_complexity = 2;
  std::uint64_t hand_seed = 1;    // synthetic hand model seed
  ObjectKind object = ObjectKind::kCycle;
  double max_offset = 150.0;      // mm, object centroid from hand centroid
  double contact_gap = 4.0;       // mm, settled surface clearance
  NoiseSpec noise;

  void validate() const;
};

struct SynthScene {
  HandParams gt_hand;
  ObjectPose gt_object;
  NoiseSpec noise;
  SceneData scene;  // evidence, init and gt blocks, in memory
};

// ~800-face centered primitive; dimensions drawn from the rng.
TriMesh make_object(ObjectKind kind, Rng& rng);

// Deterministic per seed. The object is settled against the hand along a
// random direction to contact_gap clearance, within max_offset of the hand
// centroid; evidence is rendered hard; keypoints are exact projections plus
// gaussian noise, clamped to the frame. Throws GenerationError when no
// visible placement is found in 100 attempts.
SynthScene generate(std::uint64_t seed, const SynthSpec& spec);

// Writes the manifest and every evidence file; load_scene(dir +
// "/manifest.json") reproduces the scene. Repeat writes are byte-identical.
void write_scene(const SynthScene& s, const std::string& dir);

// Zero-noise witness: stage-1 loss at the truth, hard-silhouette
// disagreement of the truth against the evidence (pixels), and the relaxed
// mask loss at the truth (strictly positive: the sigmoid boundary band
// never matches a binary target exactly).
struct ConsistencyReport {
  double stage1_loss = 0.0;
  int mask_disagreement = 0;
  double soft_mask_loss = 0.0;
};
ConsistencyReport self_consistency(const SynthScene& s, double lambda_beta,
                                   double sigma);

enum class ExperimentKind {
  kFull,      // generate, run the pipeline, evaluate
  kTopK,      // one run at max k, best-of-prefix per k
  kAblation,  // loss-term ladder from a disjoint arrangement init
};

struct RecoveryOptions {
  std::vector<std::uint64_t> seeds;
  SynthSpec spec;
  PipelineConfig config;
  ExperimentKind kind = ExperimentKind::kFull;
  std::vector<int> topk = {1, 3, 5, 10};
  double disjoint_offset = 400.0;  // mm, ablation depth displacement
  int workers = 1;
};

struct SceneOutcome {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  EvalReport report;
};

struct RecoveryRow {
  std::string label;  // "full", "k=3", "+interaction", ...
  std::vector<SceneOutcome> scenes;
  int failed = 0;
  EvalReport median;  // over non-failed scenes
  EvalReport mean;
};

using RecoveryTable = std::vector<RecoveryRow>;

// Failed scenes are carried in the rows, never dropped silently; throws
// only on empty seeds or an invalid configuration.
RecoveryTable recovery_experiment(const RecoveryOptions& opt);

Json recovery_table_to_json(const RecoveryTable& table);

}  // namespace hoifit
