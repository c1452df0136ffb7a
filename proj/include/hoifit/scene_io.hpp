#pragma once
#include <optional>
#include <string>

#include <json.hpp>

#include "hoifit/geom.hpp"
#include "hoifit/hand_model.hpp"
#include "hoifit/losses.hpp"
#include "hoifit/metrics.hpp"
#include "hoifit/raster.hpp"
#include "hoifit/refine.hpp"

namespace hoifit {

using Json = nlohmann::json;

// All structured data on disk is JSON; parse failures surface as
// ValidationError with path and line.
Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

// ASCII OBJ, v/f records only; polygons are fan-triangulated on load and
// errors carry the 1-based source line. Coordinates round-trip to 1e-6 mm.
TriMesh load_obj(const std::string& path);
void save_obj(const std::string& path, const TriMesh& mesh);

// PGM P2 or P5. Label masks use values {0, 1, 2} with maxval 2 or 255;
// binary masks use {0, 255}. Violations name the offending pixel.
LabelMask load_label_mask(const std::string& path);
BinaryMask load_binary_mask(const std::string& path);
void save_label_mask(const std::string& path, const LabelMask& mask,
                     bool ascii = false);
void save_binary_mask(const std::string& path, const BinaryMask& mask,
                      bool ascii = false);

Json keypoints_to_json(const Keypoints2D& kp);
Keypoints2D keypoints_from_json(const Json& j);

Json hand_params_to_json(const HandParams& p);
HandParams hand_params_from_json(const Json& j);

Json object_pose_to_json(const ObjectPose& p);
ObjectPose object_pose_from_json(const Json& j);

Json camera_to_json(const PerspectiveCamera& cam);
PerspectiveCamera camera_from_json(const Json& j);

Json contact_prior_to_json(const ContactPrior& p);
ContactPrior contact_prior_from_json(const Json& j);

Json report_to_json(const EvalReport& r);
EvalReport report_from_json(const Json& j);

// Scene manifest: camera intrinsics plus file names (relative to the
// manifest's directory) for every per-image input, with optional ground
// truth and initialization blocks.
struct SceneManifest {
  PerspectiveCamera camera;
  std::string hand_model;
  std::string object_mesh;
  std::string keypoints;
  std::string label_mask;
  std::string object_mask;
  std::string contact_prior;
  std::optional<std::string> init_hand_params;
  std::optional<std::string> gt_hand_params;
  std::optional<std::string> gt_object_pose;
};

Json manifest_to_json(const SceneManifest& m);
SceneManifest manifest_from_json(const Json& j);

// Fully loaded scene; paths resolved against the manifest directory.
struct SceneData {
  SceneManifest manifest;
  std::string dir;
  HandModel hand_model;
  TriMesh object_mesh;
  Keypoints2D keypoints;
  LabelMask label_mask;
  BinaryMask object_mask;
  ContactPrior prior;
  std::optional<HandParams> init_hand_params;
  std::optional<HandParams> gt_hand_params;
  std::optional<ObjectPose> gt_object_pose;
};

SceneData load_scene(const std::string& manifest_path);

}  // namespace hoifit
