#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "hoifit/errors.hpp"
#include "hoifit/rng.hpp"
#include "hoifit/scene_io.hpp"

using namespace hoifit;
namespace fs = std::filesystem;

namespace {

// fresh per-case scratch dir under the build tree
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path("io_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("obj loading: triangles, fans and index forms") {
  const fs::path dir = scratch("obj_basic");

  write_file(dir / "tri.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  const TriMesh tri = load_obj((dir / "tri.obj").string());
  CHECK(tri.vertices.size() == 3);
  REQUIRE(tri.faces.size() == 1);
  CHECK(tri.faces[0] == std::array<int, 3>{0, 1, 2});

  // quads fan around the first index
  write_file(dir / "quad.obj",
             "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  const TriMesh quad = load_obj((dir / "quad.obj").string());
  REQUIRE(quad.faces.size() == 2);
  CHECK(quad.faces[0] == std::array<int, 3>{0, 1, 2});
  CHECK(quad.faces[1] == std::array<int, 3>{0, 2, 3});

  // texture/normal suffixes ignored; comments and junk records skipped;
  // faces may reference vertices defined later in the file
  write_file(dir / "forms.obj",
             "# header\nvn 0 0 1\nf 1/4/2 2//3 3/1\nv 0 0 0\nv 2 0 0\n"
             "v 0 2 0\ns off\n");
  const TriMesh forms = load_obj((dir / "forms.obj").string());
  CHECK(forms.vertices.size() == 3);
  REQUIRE(forms.faces.size() == 1);
  CHECK(forms.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("obj loading rejects malformed input with line numbers") {
  const fs::path dir = scratch("obj_bad");

  write_file(dir / "range.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
  try {
    load_obj((dir / "range.obj").string());
    FAIL("out-of-range index accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(":4:") != std::string::npos);
    CHECK(std::string(e.what()).find("outside 1..3") != std::string::npos);
  }

  write_file(dir / "shortv.obj", "v 0 0\n");
  try {
    load_obj((dir / "shortv.obj").string());
    FAIL("two-coordinate vertex accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }

  write_file(dir / "badf.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 x 3\n");
  CHECK_THROWS_AS(load_obj((dir / "badf.obj").string()), ValidationError);
  write_file(dir / "shortf.obj", "v 0 0 0\nv 1 0 0\nf 1 2\n");
  CHECK_THROWS_AS(load_obj((dir / "shortf.obj").string()), ValidationError);
  CHECK_THROWS_AS(load_obj((dir / "missing.obj").string()), ValidationError);
}

TEST_CASE("obj round-trip preserves geometry") {
  const fs::path dir = scratch("obj_roundtrip");
  Rng rng(2077);
  TriMesh mesh;
  for (int i = 0; i < 40; ++i)
    mesh.vertices.push_back(rng.vec3_uniform(-900.0, 900.0));
  for (int i = 0; i < 60; ++i) {
    const int a = static_cast<int>(rng.uniform(0.0, 40.0));
    mesh.faces.push_back({a % 40, (a + 7) % 40, (a + 13) % 40});
  }

  const std::string path = (dir / "mesh.obj").string();
  save_obj(path, mesh);
  const TriMesh back = load_obj(path);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.faces.size() == mesh.faces.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK((back.vertices[i] - mesh.vertices[i]).norm() <= 1e-6);
  }
  CHECK(back.faces == mesh.faces);
}

TEST_CASE("pgm label masks") {
  const fs::path dir = scratch("pgm_label");

  write_file(dir / "tiny.pgm", "P2\n2 1\n255\n0 2\n");
  const LabelMask tiny = load_label_mask((dir / "tiny.pgm").string());
  CHECK(tiny.width == 2);
  CHECK(tiny.height == 1);
  CHECK(tiny.at(0, 0) == 0);
  CHECK(tiny.at(1, 0) == 2);

  write_file(dir / "bad.pgm", "P2\n# comment survives\n3 2\n255\n0 1 2\n0 7 1\n");
  try {
    load_label_mask((dir / "bad.pgm").string());
    FAIL("pixel value 7 accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(1, 1)") != std::string::npos);
  }

  // the two encodings of one mask load identically
  LabelMask mask;
  mask.width = 5;
  mask.height = 4;
  for (int i = 0; i < 20; ++i) mask.labels.push_back(static_cast<std::uint8_t>(i % 3));
  save_label_mask((dir / "bin.pgm").string(), mask, false);
  save_label_mask((dir / "asc.pgm").string(), mask, true);
  const LabelMask from_bin = load_label_mask((dir / "bin.pgm").string());
  const LabelMask from_asc = load_label_mask((dir / "asc.pgm").string());
  CHECK(from_bin.labels == mask.labels);
  CHECK(from_asc.labels == mask.labels);
  CHECK(from_bin.width == 5);
  CHECK(from_asc.height == 4);

  write_file(dir / "trunc.pgm", "P2\n2 2\n2\n0 1 2\n");
  CHECK_THROWS_AS(load_label_mask((dir / "trunc.pgm").string()), ValidationError);
  write_file(dir / "magic.pgm", "P6\n2 2\n255\n");
  CHECK_THROWS_AS(load_label_mask((dir / "magic.pgm").string()), ValidationError);
}

TEST_CASE("pgm binary masks") {
  const fs::path dir = scratch("pgm_binary");

  write_file(dir / "ok.pgm", "P2\n2 2\n255\n0 255 255 0\n");
  const BinaryMask ok = load_binary_mask((dir / "ok.pgm").string());
  CHECK(ok.at(0, 0) == 0);
  CHECK(ok.at(1, 0) == 1);
  CHECK(ok.at(0, 1) == 1);
  CHECK(ok.at(1, 1) == 0);

  write_file(dir / "grey.pgm", "P2\n2 1\n255\n0 128\n");
  try {
    load_binary_mask((dir / "grey.pgm").string());
    FAIL("grey value accepted in a binary mask");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(1, 0)") != std::string::npos);
  }

  BinaryMask mask;
  mask.width = 3;
  mask.height = 3;
  for (int i = 0; i < 9; ++i) mask.values.push_back(static_cast<std::uint8_t>(i % 2));
  save_binary_mask((dir / "bin.pgm").string(), mask, false);
  save_binary_mask((dir / "asc.pgm").string(), mask, true);
  CHECK(load_binary_mask((dir / "bin.pgm").string()).values == mask.values);
  CHECK(load_binary_mask((dir / "asc.pgm").string()).values == mask.values);
}

TEST_CASE("keypoints json round-trip and validation") {
  Rng rng(4011);
  Keypoints2D kp;
  for (int k = 0; k < kHandKeypoints; ++k) {
    kp.pts[static_cast<size_t>(k)] =
        Vec3(rng.uniform(0.0, 64.0), rng.uniform(0.0, 64.0), rng.uniform());
  }
  const Json j = keypoints_to_json(kp);
  const Keypoints2D back = keypoints_from_json(j);
  for (int k = 0; k < kHandKeypoints; ++k) {
    CHECK(back.pts[static_cast<size_t>(k)] == kp.pts[static_cast<size_t>(k)]);
  }

  Json wrong_arity = j;
  wrong_arity["points"].erase(20);
  CHECK_THROWS_AS(keypoints_from_json(wrong_arity), ValidationError);

  Json bad_conf = j;
  bad_conf["points"][3][2] = 1.5;
  CHECK_THROWS_AS(keypoints_from_json(bad_conf), ValidationError);

  CHECK_THROWS_AS(keypoints_from_json(Json::object()), ValidationError);
}

TEST_CASE("hand params json: bit-equal text round-trip") {
  Rng rng(515);
  HandParams p;
  p.global_rot = rng.vec3_normal(0.3);
  for (auto& t : p.theta) t = rng.vec3_normal(0.2);
  for (int i = 0; i < kHandBetas; ++i) p.beta[i] = rng.normal(0.0, 1.0);
  p.wp.tx = rng.normal(0.0, 10.0);
  p.wp.ty = rng.normal(0.0, 10.0);
  p.wp.s = 3.7;

  const Json j = hand_params_to_json(p);
  const HandParams back = hand_params_from_json(j);
  CHECK(back.global_rot == p.global_rot);
  for (int i = 0; i < kHandThetaJoints; ++i) {
    CHECK(back.theta[static_cast<size_t>(i)] == p.theta[static_cast<size_t>(i)]);
  }
  CHECK(back.beta == p.beta);
  CHECK(back.wp.tx == p.wp.tx);
  CHECK(back.wp.ty == p.wp.ty);
  CHECK(back.wp.s == p.wp.s);
  CHECK(hand_params_to_json(back).dump() == j.dump());

  Json bad_scale = j;
  bad_scale["wp"]["s"] = 0.0;
  CHECK_THROWS_AS(hand_params_from_json(bad_scale), ValidationError);
  Json short_theta = j;
  short_theta["theta"].erase(0);
  CHECK_THROWS_AS(hand_params_from_json(short_theta), ValidationError);
  Json short_beta = j;
  short_beta["beta"].erase(0);
  CHECK_THROWS_AS(hand_params_from_json(short_beta), ValidationError);
  Json no_rot = j;
  no_rot.erase("global_rot");
  CHECK_THROWS_AS(hand_params_from_json(no_rot), ValidationError);
}

TEST_CASE("pose, camera, prior and report json") {
  ObjectPose pose;
  pose.scale = 1.25;
  pose.rotation = Vec3(0.1, -0.2, 0.3);
  pose.translation = Vec3(10, 20, 600);
  const ObjectPose pback = object_pose_from_json(object_pose_to_json(pose));
  CHECK(pback.scale == pose.scale);
  CHECK(pback.rotation == pose.rotation);
  CHECK(pback.translation == pose.translation);
  Json bad_pose = object_pose_to_json(pose);
  bad_pose["scale"] = -1.0;
  CHECK_THROWS_AS(object_pose_from_json(bad_pose), ValidationError);

  PerspectiveCamera cam;
  cam.f = 800.0;
  cam.cx = 32.5;
  cam.cy = 31.5;
  cam.width = 64;
  cam.height = 64;
  const PerspectiveCamera cback = camera_from_json(camera_to_json(cam));
  CHECK(cback.f == cam.f);
  CHECK(cback.cx == cam.cx);
  CHECK(cback.width == cam.width);
  Json bad_cam = camera_to_json(cam);
  bad_cam["f"] = 0.0;
  CHECK_THROWS_AS(camera_from_json(bad_cam), ValidationError);
  bad_cam = camera_to_json(cam);
  bad_cam["width"] = 0;
  CHECK_THROWS_AS(camera_from_json(bad_cam), ValidationError);

  ContactPrior prior;
  prior.weights = {0.0, 0.5, 1.0, 0.25};
  CHECK(contact_prior_from_json(contact_prior_to_json(prior)).weights ==
        prior.weights);
  Json bad_prior = contact_prior_to_json(prior);
  bad_prior["weights"][1] = 1.5;
  CHECK_THROWS_AS(contact_prior_from_json(bad_prior), ValidationError);
  bad_prior["weights"] = Json::array();
  CHECK_THROWS_AS(contact_prior_from_json(bad_prior), ValidationError);

  EvalReport r;
  r.hand_mae = 1.5;
  r.hand_vert_mae = 2.5;
  r.chamfer = 3.25;
  r.f_score_5 = 0.5;
  r.f_score_15 = 0.75;
  r.collision_score = 12.0;
  r.ho_distance = 40.0;
  const EvalReport rback = report_from_json(report_to_json(r));
  CHECK(rback.hand_mae == r.hand_mae);
  CHECK(rback.hand_vert_mae == r.hand_vert_mae);
  CHECK(rback.chamfer == r.chamfer);
  CHECK(rback.f_score_5 == r.f_score_5);
  CHECK(rback.f_score_15 == r.f_score_15);
  CHECK(rback.collision_score == r.collision_score);
  CHECK(rback.ho_distance == r.ho_distance);
}

TEST_CASE("hand model json round-trip and rejection") {
  const fs::path dir = scratch("hand_model");
  const HandModel model = generate_synthetic_model(99);
  const std::string path = (dir / "hand.json").string();
  save_hand_model(path, model);
  const HandModel back = load_hand_model(path);

  REQUIRE(back.num_vertices() == model.num_vertices());
  for (int i = 0; i < model.num_vertices(); ++i) {
    CHECK(back.template_verts[static_cast<size_t>(i)] ==
          model.template_verts[static_cast<size_t>(i)]);
    CHECK(back.shape_basis[static_cast<size_t>(i)] ==
          model.shape_basis[static_cast<size_t>(i)]);
  }
  CHECK(back.joint_regressor == model.joint_regressor);
  CHECK(back.parents == model.parents);
  CHECK(back.skin_weights == model.skin_weights);
  CHECK(back.tip_vertex_ids == model.tip_vertex_ids);
  CHECK(back.faces == model.faces);

  // mutations of a valid document must not load
  Json j = load_json_file(path);
  {
    Json m = j;
    m.erase("parents");
    save_json_file((dir / "m1.json").string(), m);
    CHECK_THROWS_AS(load_hand_model((dir / "m1.json").string()), ValidationError);
  }
  {
    Json m = j;
    m["shape_basis"][0].erase(0);
    save_json_file((dir / "m2.json").string(), m);
    CHECK_THROWS_AS(load_hand_model((dir / "m2.json").string()), ValidationError);
  }
  {
    Json m = j;
    m["faces"][0][1] = 1.5;
    save_json_file((dir / "m3.json").string(), m);
    CHECK_THROWS_AS(load_hand_model((dir / "m3.json").string()), ValidationError);
  }
  {
    // skin weight rows must sum to one; caught by model validation
    Json m = j;
    m["skin_weights"][0][0] = m["skin_weights"][0][0].get<double>() + 0.5;
    save_json_file((dir / "m4.json").string(), m);
    CHECK_THROWS_AS(load_hand_model((dir / "m4.json").string()), ValidationError);
  }
  {
    Json m = j;
    m["faces"][0][2] = model.num_vertices();
    save_json_file((dir / "m5.json").string(), m);
    CHECK_THROWS_AS(load_hand_model((dir / "m5.json").string()), ValidationError);
  }
  write_file(dir / "garbage.json", "{ not json");
  CHECK_THROWS_AS(load_hand_model((dir / "garbage.json").string()),
                  ValidationError);
}

namespace {

// minimal consistent scene on disk; returns the manifest path
std::string write_scene(const fs::path& dir, int width = 48, int height = 40) {
  const HandModel model = generate_synthetic_model(7);
  save_hand_model((dir / "hand.json").string(), model);

  TriMesh object;
  object.vertices = {Vec3(0, 0, 0), Vec3(30, 0, 0), Vec3(0, 30, 0),
                     Vec3(0, 0, 30)};
  object.faces = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  save_obj((dir / "object.obj").string(), object);

  Keypoints2D kp;
  for (int k = 0; k < kHandKeypoints; ++k) {
    kp.pts[static_cast<size_t>(k)] = Vec3(10.0 + k % 5, 8.0 + k / 5, 0.9);
  }
  save_json_file((dir / "keypoints.json").string(), keypoints_to_json(kp));

  LabelMask labels;
  labels.width = width;
  labels.height = height;
  labels.labels.assign(static_cast<size_t>(width) * height, 0);
  labels.labels[5] = 1;
  labels.labels[6] = 2;
  save_label_mask((dir / "labels.pgm").string(), labels);

  BinaryMask omask;
  omask.width = width;
  omask.height = height;
  omask.values.assign(static_cast<size_t>(width) * height, 0);
  omask.values[6] = 1;
  save_binary_mask((dir / "object.pgm").string(), omask);

  ContactPrior prior;
  prior.weights.assign(static_cast<size_t>(model.num_vertices()), 0.0);
  prior.weights[0] = 1.0;
  save_json_file((dir / "prior.json").string(), contact_prior_to_json(prior));

  HandParams init;
  init.wp.s = 2.0;
  save_json_file((dir / "init.json").string(), hand_params_to_json(init));

  SceneManifest m;
  m.camera.f = 100.0;
  m.camera.cx = width / 2.0;
  m.camera.cy = height / 2.0;
  m.camera.width = width;
  m.camera.height = height;
  m.hand_model = "hand.json";
  m.object_mesh = "object.obj";
  m.keypoints = "keypoints.json";
  m.label_mask = "labels.pgm";
  m.object_mask = "object.pgm";
  m.contact_prior = "prior.json";
  m.init_hand_params = "init.json";
  const std::string path = (dir / "scene.json").string();
  save_json_file(path, manifest_to_json(m));
  return path;
}

}  // namespace

TEST_CASE("scene manifest json") {
  const fs::path dir = scratch("manifest");
  const std::string path = write_scene(dir);
  const Json j = load_json_file(path);
  const SceneManifest m = manifest_from_json(j);
  CHECK(m.camera.width == 48);
  CHECK(m.hand_model == "hand.json");
  REQUIRE(m.init_hand_params.has_value());
  CHECK(*m.init_hand_params == "init.json");
  CHECK_FALSE(m.gt_hand_params.has_value());
  CHECK(manifest_to_json(m).dump() == j.dump());

  for (const char* key : {"camera", "hand_model", "object_mesh", "keypoints",
                          "label_mask", "object_mask", "contact_prior"}) {
    Json mut = j;
    mut.erase(key);
    CHECK_THROWS_AS(manifest_from_json(mut), ValidationError);
  }
}

TEST_CASE("load scene assembles and cross-validates") {
  const fs::path dir = scratch("scene_ok");
  const std::string path = write_scene(dir);
  const SceneData scene = load_scene(path);
  CHECK(scene.hand_model.num_vertices() > 0);
  CHECK(scene.object_mesh.vertices.size() == 4);
  CHECK(scene.label_mask.width == 48);
  CHECK(scene.object_mask.height == 40);
  CHECK(scene.prior.weights.size() ==
        static_cast<size_t>(scene.hand_model.num_vertices()));
  REQUIRE(scene.init_hand_params.has_value());
  CHECK(scene.init_hand_params->wp.s == 2.0);
  CHECK_FALSE(scene.gt_hand_params.has_value());

  // referenced file missing
  fs::remove(dir / "prior.json");
  CHECK_THROWS_AS(load_scene(path), ValidationError);
}

TEST_CASE("load scene rejects inconsistent pieces") {
  {
    // mask dimensions disagree with the camera
    const fs::path dir = scratch("scene_dims");
    const std::string path = write_scene(dir);
    LabelMask small;
    small.width = 10;
    small.height = 10;
    small.labels.assign(100, 0);
    save_label_mask((dir / "labels.pgm").string(), small);
    CHECK_THROWS_AS(load_scene(path), ValidationError);
  }
  {
    // prior length disagrees with the hand model
    const fs::path dir = scratch("scene_prior");
    const std::string path = write_scene(dir);
    ContactPrior prior;
    prior.weights = {1.0, 0.5};
    save_json_file((dir / "prior.json").string(), contact_prior_to_json(prior));
    CHECK_THROWS_AS(load_scene(path), ValidationError);
  }
  {
    // keypoint outside the image with positive confidence
    const fs::path dir = scratch("scene_kp");
    const std::string path = write_scene(dir);
    Keypoints2D kp;
    for (int k = 0; k < kHandKeypoints; ++k) {
      kp.pts[static_cast<size_t>(k)] = Vec3(500.0, 8.0, 0.9);
    }
    save_json_file((dir / "keypoints.json").string(), keypoints_to_json(kp));
    CHECK_THROWS_AS(load_scene(path), ValidationError);
  }
}
