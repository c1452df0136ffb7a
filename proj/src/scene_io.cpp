#include "hoifit/scene_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hoifit/errors.hpp"

namespace hoifit {

namespace {

// Serialization helpers. Every structural mistake in a document (missing key,
// wrong type, wrong arity) must surface as ValidationError, so the json
// library's own exceptions are translated at the boundary.

[[noreturn]] void bad(const std::string& what) { throw ValidationError(what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    bad(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

double num(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) bad(std::string("field '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(std::string("field '") + key + "' must be finite");
  return d;
}

int integer(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) {
    bad(std::string("field '") + key + "' must be an integer");
  }
  return v.get<int>();
}

std::string text(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

int int_at(const Json& arr, size_t i, const std::string& what) {
  const Json& e = arr[i];
  if (!e.is_number_integer()) bad(what + " must hold integers");
  return e.get<int>();
}

Vec3 vec3_from(const Json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 3) bad(what + " must be a 3-array");
  for (const Json& e : v) {
    if (!e.is_number() || !std::isfinite(e.get<double>())) {
      bad(what + " must hold finite numbers");
    }
  }
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

Json vec3_to(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw ValidationError(path + ": write failed");
}

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  TriMesh mesh;
  // face indices with their source line; validated after the whole file is
  // read because valid files may reference vertices defined later
  std::vector<std::pair<std::array<int, 3>, int>> pending;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    bad(path + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail("vertex needs three coordinates");
      mesh.vertices.push_back(Vec3(x, y, z));
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // accept i, i/t, i//n, i/t/n; only the vertex index matters
        const size_t slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        size_t used = 0;
        int v = 0;
        try {
          v = std::stoi(head, &used);
        } catch (const std::exception&) {
          fail("face index '" + tok + "' is not a number");
        }
        if (used != head.size()) fail("face index '" + tok + "' is not a number");
        idx.push_back(v);
      }
      if (idx.size() < 3) fail("face needs at least three indices");
      for (size_t i = 1; i + 1 < idx.size(); ++i) {
        pending.push_back({{idx[0], idx[static_cast<size_t>(i)],
                            idx[i + 1]},
                           lineno});
      }
    }
    // all other record types (vn, vt, g, o, s, usemtl, ...) are ignored
  }
  const int n = static_cast<int>(mesh.vertices.size());
  for (const auto& [f, ln] : pending) {
    std::array<int, 3> face;
    for (int c = 0; c < 3; ++c) {
      const int v = f[static_cast<size_t>(c)];
      if (v < 1 || v > n) {
        bad(path + ":" + std::to_string(ln) + ": face index " +
            std::to_string(v) + " outside 1.." + std::to_string(n));
      }
      face[static_cast<size_t>(c)] = v - 1;
    }
    mesh.faces.push_back(face);
  }
  return mesh;
}

void save_obj(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path + ": cannot open for writing");
  out.precision(17);  // shortest text that loses nothing would also do; 17
                      // significant digits round-trip every double exactly
  for (const Vec3& v : mesh.vertices) {
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
  }
  if (!out) throw ValidationError(path + ": write failed");
}

namespace {

struct PgmImage {
  int width = 0, height = 0, maxval = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

PgmImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path + ": cannot open");
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") {
    bad(path + ": expected P2 or P5 graymap, got '" + magic + "'");
  }
  // header tokens may be separated by whitespace and '#' comments
  auto header_int = [&](const char* what) {
    for (;;) {
      const int c = in.peek();
      if (c == '#') {
        std::string comment;
        std::getline(in, comment);
      } else if (c != EOF && std::isspace(static_cast<unsigned char>(c))) {
        in.get();
      } else {
        break;
      }
    }
    long long v = 0;
    if (!(in >> v)) bad(path + ": malformed " + std::string(what));
    return v;
  };
  PgmImage img;
  const long long w = header_int("width");
  const long long h = header_int("height");
  const long long maxval = header_int("maxval");
  if (w < 1 || h < 1 || w > 1 << 16 || h > 1 << 16) {
    bad(path + ": bad dimensions " + std::to_string(w) + "x" + std::to_string(h));
  }
  if (maxval < 1 || maxval > 255) {
    bad(path + ": maxval " + std::to_string(maxval) + " outside 1..255");
  }
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.maxval = static_cast<int>(maxval);
  const size_t count = static_cast<size_t>(w) * static_cast<size_t>(h);
  img.pixels.resize(count);
  if (magic == "P5") {
    in.get();  // the single whitespace byte that terminates the header
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(count));
    if (static_cast<size_t>(in.gcount()) != count) {
      bad(path + ": truncated pixel data");
    }
  } else {
    for (size_t i = 0; i < count; ++i) {
      long long v = 0;
      if (!(in >> v)) bad(path + ": truncated pixel data");
      if (v < 0 || v > maxval) {
        bad(path + ": pixel value " + std::to_string(v) + " above maxval");
      }
      img.pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

void save_pgm(const std::string& path, int width, int height, int maxval,
              const std::vector<std::uint8_t>& pixels, bool ascii) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path + ": cannot open for writing");
  out << (ascii ? "P2" : "P5") << "\n"
      << width << " " << height << "\n"
      << maxval << "\n";
  if (ascii) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        out << static_cast<int>(pixels[static_cast<size_t>(y) * width + x])
            << (x + 1 == width ? "\n" : " ");
      }
    }
  } else {
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
  }
  if (!out) throw ValidationError(path + ": write failed");
}

[[noreturn]] void bad_pixel(const std::string& path, int x, int y, int v) {
  bad(path + ": illegal pixel value " + std::to_string(v) + " at (" +
      std::to_string(x) + ", " + std::to_string(y) + ")");
}

}  // namespace

LabelMask load_label_mask(const std::string& path) {
  const PgmImage img = load_pgm(path);
  LabelMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.labels.resize(img.pixels.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const size_t i = static_cast<size_t>(y) * img.width + x;
      const int v = img.pixels[i];
      if (v != 0 && v != 1 && v != 2) bad_pixel(path, x, y, v);
      mask.labels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return mask;
}

BinaryMask load_binary_mask(const std::string& path) {
  const PgmImage img = load_pgm(path);
  BinaryMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.values.resize(img.pixels.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const size_t i = static_cast<size_t>(y) * img.width + x;
      const int v = img.pixels[i];
      if (v != 0 && v != 255) bad_pixel(path, x, y, v);
      mask.values[i] = v == 255 ? 1 : 0;
    }
  }
  return mask;
}

void save_label_mask(const std::string& path, const LabelMask& mask,
                     bool ascii) {
  save_pgm(path, mask.width, mask.height, 2, mask.labels, ascii);
}

void save_binary_mask(const std::string& path, const BinaryMask& mask,
                      bool ascii) {
  std::vector<std::uint8_t> px(mask.values.size());
  for (size_t i = 0; i < px.size(); ++i) px[i] = mask.values[i] ? 255 : 0;
  save_pgm(path, mask.width, mask.height, 255, px, ascii);
}

Json keypoints_to_json(const Keypoints2D& kp) {
  Json pts = Json::array();
  for (const Vec3& p : kp.pts) pts.push_back(vec3_to(p));
  return Json{{"points", pts}};
}

Keypoints2D keypoints_from_json(const Json& j) {
  const Json& pts = field(j, "points");
  if (!pts.is_array() || pts.size() != kHandKeypoints) {
    bad("'points' must hold exactly " + std::to_string(kHandKeypoints) +
        " [u, v, confidence] triples");
  }
  Keypoints2D kp;
  for (int k = 0; k < kHandKeypoints; ++k) {
    kp.pts[static_cast<size_t>(k)] =
        vec3_from(pts[static_cast<size_t>(k)], "keypoint " + std::to_string(k));
    const double conf = kp.pts[static_cast<size_t>(k)].z();
    if (!(conf >= 0.0 && conf <= 1.0)) {
      bad("keypoint " + std::to_string(k) + ": confidence outside [0, 1]");
    }
  }
  return kp;
}

Json hand_params_to_json(const HandParams& p) {
  Json theta = Json::array();
  for (const Vec3& t : p.theta) theta.push_back(vec3_to(t));
  Json beta = Json::array();
  for (int i = 0; i < kHandBetas; ++i) beta.push_back(p.beta[i]);
  return Json{{"global_rot", vec3_to(p.global_rot)},
              {"theta", theta},
              {"beta", beta},
              {"wp", Json{{"tx", p.wp.tx}, {"ty", p.wp.ty}, {"s", p.wp.s}}}};
}

HandParams hand_params_from_json(const Json& j) {
  HandParams p;
  p.global_rot = vec3_from(field(j, "global_rot"), "'global_rot'");
  const Json& theta = field(j, "theta");
  if (!theta.is_array() || theta.size() != kHandThetaJoints) {
    bad("'theta' must hold " + std::to_string(kHandThetaJoints) + " 3-arrays");
  }
  for (int i = 0; i < kHandThetaJoints; ++i) {
    p.theta[static_cast<size_t>(i)] =
        vec3_from(theta[static_cast<size_t>(i)], "theta " + std::to_string(i));
  }
  const Json& beta = field(j, "beta");
  if (!beta.is_array() || beta.size() != kHandBetas) {
    bad("'beta' must hold " + std::to_string(kHandBetas) + " numbers");
  }
  for (int i = 0; i < kHandBetas; ++i) {
    const Json& b = beta[static_cast<size_t>(i)];
    if (!b.is_number() || !std::isfinite(b.get<double>())) {
      bad("beta " + std::to_string(i) + " must be a finite number");
    }
    p.beta[i] = b.get<double>();
  }
  const Json& wp = field(j, "wp");
  p.wp.tx = num(wp, "tx");
  p.wp.ty = num(wp, "ty");
  p.wp.s = num(wp, "s");
  if (!(p.wp.s > 0.0)) bad("'wp.s' must be positive");
  return p;
}

Json object_pose_to_json(const ObjectPose& p) {
  return Json{{"scale", p.scale},
              {"rotation", vec3_to(p.rotation)},
              {"translation", vec3_to(p.translation)}};
}

ObjectPose object_pose_from_json(const Json& j) {
  ObjectPose p;
  p.scale = num(j, "scale");
  if (!(p.scale > 0.0)) bad("'scale' must be positive");
  p.rotation = vec3_from(field(j, "rotation"), "'rotation'");
  p.translation = vec3_from(field(j, "translation"), "'translation'");
  return p;
}

Json camera_to_json(const PerspectiveCamera& cam) {
  return Json{{"f", cam.f},
              {"cx", cam.cx},
              {"cy", cam.cy},
              {"width", cam.width},
              {"height", cam.height}};
}

PerspectiveCamera camera_from_json(const Json& j) {
  PerspectiveCamera cam;
  cam.f = num(j, "f");
  cam.cx = num(j, "cx");
  cam.cy = num(j, "cy");
  cam.width = integer(j, "width");
  cam.height = integer(j, "height");
  if (!(cam.f > 0.0)) bad("'f' must be positive");
  if (cam.width < 1 || cam.height < 1) {
    bad("'width' and 'height' must be at least 1");
  }
  return cam;
}

Json contact_prior_to_json(const ContactPrior& p) {
  return Json{{"weights", p.weights}};
}

ContactPrior contact_prior_from_json(const Json& j) {
  const Json& w = field(j, "weights");
  if (!w.is_array() || w.empty()) bad("'weights' must be a non-empty array");
  ContactPrior p;
  p.weights.reserve(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    const Json& e = w[i];
    if (!e.is_number()) bad("weight " + std::to_string(i) + " must be a number");
    const double v = e.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      bad("weight " + std::to_string(i) + " outside [0, 1]");
    }
    p.weights.push_back(v);
  }
  // full validation (at least one positive entry, size match) happens against
  // the hand model at scene load
  return p;
}

Json report_to_json(const EvalReport& r) {
  return Json{{"hand_joint_mae_mm", r.hand_mae},
              {"hand_vert_mae_mm", r.hand_vert_mae},
              {"chamfer_mm", r.chamfer},
              {"f1_at", Json{{"5", r.f_score_5}, {"15", r.f_score_15}}},
              {"collision_score", r.collision_score},
              {"ho_distance_mm", r.ho_distance}};
}

EvalReport report_from_json(const Json& j) {
  EvalReport r;
  r.hand_mae = num(j, "hand_joint_mae_mm");
  r.hand_vert_mae = num(j, "hand_vert_mae_mm");
  r.chamfer = num(j, "chamfer_mm");
  const Json& f1 = field(j, "f1_at");
  r.f_score_5 = num(f1, "5");
  r.f_score_15 = num(f1, "15");
  r.collision_score = num(j, "collision_score");
  r.ho_distance = num(j, "ho_distance_mm");
  return r;
}

Json manifest_to_json(const SceneManifest& m) {
  Json j{{"camera", camera_to_json(m.camera)},
         {"hand_model", m.hand_model},
         {"object_mesh", m.object_mesh},
         {"keypoints", m.keypoints},
         {"label_mask", m.label_mask},
         {"object_mask", m.object_mask},
         {"contact_prior", m.contact_prior}};
  if (m.init_hand_params) j["init_hand_params"] = *m.init_hand_params;
  if (m.gt_hand_params) j["gt_hand_params"] = *m.gt_hand_params;
  if (m.gt_object_pose) j["gt_object_pose"] = *m.gt_object_pose;
  return j;
}

SceneManifest manifest_from_json(const Json& j) {
  SceneManifest m;
  m.camera = camera_from_json(field(j, "camera"));
  m.hand_model = text(j, "hand_model");
  m.object_mesh = text(j, "object_mesh");
  m.keypoints = text(j, "keypoints");
  m.label_mask = text(j, "label_mask");
  m.object_mask = text(j, "object_mask");
  m.contact_prior = text(j, "contact_prior");
  if (j.contains("init_hand_params")) m.init_hand_params = text(j, "init_hand_params");
  if (j.contains("gt_hand_params")) m.gt_hand_params = text(j, "gt_hand_params");
  if (j.contains("gt_object_pose")) m.gt_object_pose = text(j, "gt_object_pose");
  return m;
}

namespace {

std::string dir_of(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::string join(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

}  // namespace

HandModel load_hand_model(const std::string& path) {
  const Json j = load_json_file(path);
  HandModel m;
  try {
    const Json& tv = field(j, "template_verts");
    if (!tv.is_array() || tv.empty()) bad("'template_verts' must be a non-empty array");
    const size_t nv = tv.size();
    m.template_verts.reserve(nv);
    for (size_t i = 0; i < nv; ++i) {
      m.template_verts.push_back(vec3_from(tv[i], "template vertex " + std::to_string(i)));
    }

    const Json& sb = field(j, "shape_basis");
    if (!sb.is_array() || sb.size() != nv) {
      bad("'shape_basis' must hold one row per template vertex");
    }
    m.shape_basis.resize(nv);
    for (size_t i = 0; i < nv; ++i) {
      const Json& row = sb[i];
      if (!row.is_array() || row.size() != 3 * kHandBetas) {
        bad("shape basis row " + std::to_string(i) + " must hold " +
            std::to_string(3 * kHandBetas) + " numbers");
      }
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < kHandBetas; ++c)
          m.shape_basis[i](r, c) = row[static_cast<size_t>(r * kHandBetas + c)].get<double>();
    }

    const Json& jr = field(j, "joint_regressor");
    if (!jr.is_array() || jr.size() != kHandJoints) {
      bad("'joint_regressor' must hold " + std::to_string(kHandJoints) + " rows");
    }
    m.joint_regressor.resize(kHandJoints, static_cast<Eigen::Index>(nv));
    for (int r = 0; r < kHandJoints; ++r) {
      const Json& row = jr[static_cast<size_t>(r)];
      if (!row.is_array() || row.size() != nv) {
        bad("joint regressor row " + std::to_string(r) + " has wrong length");
      }
      for (size_t c = 0; c < nv; ++c) {
        m.joint_regressor(r, static_cast<Eigen::Index>(c)) = row[c].get<double>();
      }
    }

    const Json& par = field(j, "parents");
    if (!par.is_array() || par.size() != kHandJoints) {
      bad("'parents' must hold " + std::to_string(kHandJoints) + " entries");
    }
    for (int i = 0; i < kHandJoints; ++i) {
      m.parents[static_cast<size_t>(i)] = int_at(par, static_cast<size_t>(i), "'parents'");
    }

    const Json& sw = field(j, "skin_weights");
    if (!sw.is_array() || sw.size() != nv) {
      bad("'skin_weights' must hold one row per vertex");
    }
    m.skin_weights.resize(static_cast<Eigen::Index>(nv), kHandJoints);
    for (size_t r = 0; r < nv; ++r) {
      const Json& row = sw[r];
      if (!row.is_array() || row.size() != kHandJoints) {
        bad("skin weight row " + std::to_string(r) + " has wrong length");
      }
      for (int c = 0; c < kHandJoints; ++c) {
        m.skin_weights(static_cast<Eigen::Index>(r), c) =
            row[static_cast<size_t>(c)].get<double>();
      }
    }

    const Json& tips = field(j, "tip_vertex_ids");
    if (!tips.is_array() || tips.size() != 5) bad("'tip_vertex_ids' must hold 5 entries");
    for (int i = 0; i < 5; ++i) {
      m.tip_vertex_ids[static_cast<size_t>(i)] =
          int_at(tips, static_cast<size_t>(i), "'tip_vertex_ids'");
    }

    const Json& faces = field(j, "faces");
    if (!faces.is_array() || faces.empty()) bad("'faces' must be a non-empty array");
    m.faces.reserve(faces.size());
    for (size_t i = 0; i < faces.size(); ++i) {
      const Json& f = faces[i];
      if (!f.is_array() || f.size() != 3) {
        bad("face " + std::to_string(i) + " must hold 3 indices");
      }
      const std::string what = "face " + std::to_string(i);
      m.faces.push_back({int_at(f, 0, what), int_at(f, 1, what), int_at(f, 2, what)});
    }
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  m.validate();
  return m;
}

void save_hand_model(const std::string& path, const HandModel& model) {
  Json tv = Json::array();
  for (const Vec3& v : model.template_verts) tv.push_back(vec3_to(v));
  Json sb = Json::array();
  for (const auto& basis : model.shape_basis) {
    Json row = Json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < kHandBetas; ++c) row.push_back(basis(r, c));
    sb.push_back(std::move(row));
  }
  Json jr = Json::array();
  for (int r = 0; r < kHandJoints; ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < model.joint_regressor.cols(); ++c) {
      row.push_back(model.joint_regressor(r, c));
    }
    jr.push_back(std::move(row));
  }
  Json sw = Json::array();
  for (Eigen::Index r = 0; r < model.skin_weights.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < kHandJoints; ++c) row.push_back(model.skin_weights(r, c));
    sw.push_back(std::move(row));
  }
  Json faces = Json::array();
  for (const auto& f : model.faces) faces.push_back(Json::array({f[0], f[1], f[2]}));
  save_json_file(path, Json{{"template_verts", tv},
                            {"shape_basis", sb},
                            {"joint_regressor", jr},
                            {"parents", model.parents},
                            {"tip_vertex_ids", model.tip_vertex_ids},
                            {"skin_weights", sw},
                            {"faces", faces}});
}

SceneData load_scene(const std::string& manifest_path) {
  SceneData scene;
  scene.manifest = manifest_from_json(load_json_file(manifest_path));
  scene.dir = dir_of(manifest_path);
  const SceneManifest& m = scene.manifest;
  const std::string& d = scene.dir;

  scene.hand_model = load_hand_model(join(d, m.hand_model));
  scene.object_mesh = load_obj(join(d, m.object_mesh));
  if (scene.object_mesh.vertices.empty() || scene.object_mesh.faces.empty()) {
    throw ValidationError(m.object_mesh + ": object mesh has no geometry");
  }
  scene.keypoints = keypoints_from_json(load_json_file(join(d, m.keypoints)));
  scene.keypoints.validate(m.camera.width, m.camera.height);
  scene.label_mask = load_label_mask(join(d, m.label_mask));
  scene.object_mask = load_binary_mask(join(d, m.object_mask));
  if (scene.label_mask.width != m.camera.width ||
      scene.label_mask.height != m.camera.height) {
    throw ValidationError(m.label_mask + ": dimensions disagree with the camera");
  }
  if (scene.object_mask.width != m.camera.width ||
      scene.object_mask.height != m.camera.height) {
    throw ValidationError(m.object_mask + ": dimensions disagree with the camera");
  }
  scene.prior = contact_prior_from_json(load_json_file(join(d, m.contact_prior)));
  scene.prior.validate(scene.hand_model.num_vertices());
  if (m.init_hand_params) {
    scene.init_hand_params =
        hand_params_from_json(load_json_file(join(d, *m.init_hand_params)));
  }
  if (m.gt_hand_params) {
    scene.gt_hand_params =
        hand_params_from_json(load_json_file(join(d, *m.gt_hand_params)));
  }
  if (m.gt_object_pose) {
    scene.gt_object_pose =
        object_pose_from_json(load_json_file(join(d, *m.gt_object_pose)));
  }
  return scene;
}

}  // namespace hoifit
