#include "binpick/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "binpick/error.hpp"

namespace binpick {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, path + ": " + what);
}

// One JSON object, either written from a struct or read into it. Reading
// keeps defaults for absent keys and rejects keys nobody asked for.
class Section {
 public:
  static Section writer(json& out, std::string path) { return Section(nullptr, &out, std::move(path)); }
  static Section reader(const json& in, std::string path) {
    if (!in.is_object()) bad(path, "expected an object");
    return Section(&in, nullptr, std::move(path));
  }

  void field(const char* key, double& v) {
    if (out_) {
      (*out_)[key] = v;
    } else if (const json* j = take(key)) {
      if (!j->is_number()) bad(at(key), "expected a number");
      v = j->get<double>();
      if (!std::isfinite(v)) bad(at(key), "expected a finite number");
    }
  }

  void field(const char* key, int& v) {
    if (out_) {
      (*out_)[key] = v;
    } else if (const json* j = take(key)) {
      if (!j->is_number_integer()) bad(at(key), "expected an integer");
      const auto x = j->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) bad(at(key), "out of range");
      v = static_cast<int>(x);
    }
  }

  void field(const char* key, std::uint64_t& v) {
    if (out_) {
      (*out_)[key] = v;
    } else if (const json* j = take(key)) {
      if (!j->is_number_unsigned()) bad(at(key), "expected a non-negative integer");
      v = j->get<std::uint64_t>();
    }
  }

  void field(const char* key, std::vector<int>& v) {
    if (out_) {
      (*out_)[key] = v;
    } else if (const json* j = take(key)) {
      if (!j->is_array()) bad(at(key), "expected an array of integers");
      std::vector<int> r;
      for (const json& e : *j) {
        if (!e.is_number_integer()) bad(at(key), "expected an array of integers");
        r.push_back(e.get<int>());
      }
      v = std::move(r);
    }
  }

  void field(const char* key, Rect& v) {
    Section s = sub(key);
    double mn[2] = {v.min.x, v.min.y}, mx[2] = {v.max.x, v.max.y};
    s.pair("min", mn);
    s.pair("max", mx);
    s.finish();
    v = {{mn[0], mn[1]}, {mx[0], mx[1]}};
  }

  /// Enumerations travel as their string names.
  template <class E, class ToS, class Parse>
  void name(const char* key, E& v, ToS to_s, Parse parse) {
    if (out_) {
      (*out_)[key] = std::string(to_s(v));
    } else if (const json* j = take(key)) {
      if (!j->is_string()) bad(at(key), "expected a string");
      try {
        v = parse(j->get<std::string>());
      } catch (const Error& e) {
        bad(at(key), e.what());
      }
    }
  }

  void names(const char* key, std::vector<SingulationPolicy>& v) {
    if (out_) {
      json arr = json::array();
      for (auto p : v) arr.push_back(std::string(to_string(p)));
      (*out_)[key] = arr;
    } else if (const json* j = take(key)) {
      if (!j->is_array()) bad(at(key), "expected an array of policy names");
      std::vector<SingulationPolicy> r;
      for (const json& e : *j) {
        if (!e.is_string()) bad(at(key), "expected an array of policy names");
        try {
          r.push_back(parse_policy(e.get<std::string>()));
        } catch (const Error& err) {
          bad(at(key), err.what());
        }
      }
      v = std::move(r);
    }
  }

  Section sub(const char* key) {
    if (out_) {
      (*out_)[key] = json::object();
      return writer((*out_)[key], at(key));
    }
    static const json empty = json::object();
    const json* j = take(key);
    return reader(j ? *j : empty, at(key));
  }

  void finish() const {
    if (!in_) return;
    for (const auto& [k, _] : in_->items())
      if (!seen_.count(k)) bad(at(k), "unknown key");
  }

 private:
  Section(const json* in, json* out, std::string path) : in_(in), out_(out), path_(std::move(path)) {}

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = in_->find(key);
    return it == in_->end() ? nullptr : &*it;
  }

  void pair(const char* key, double (&v)[2]) {
    if (out_) {
      (*out_)[key] = {v[0], v[1]};
    } else if (const json* j = take(key)) {
      if (!j->is_array() || j->size() != 2 || !(*j)[0].is_number() || !(*j)[1].is_number())
        bad(at(key), "expected [x, y]");
      v[0] = (*j)[0].get<double>();
      v[1] = (*j)[1].get<double>();
    }
  }

  const json* in_;
  json* out_;
  std::string path_;
  std::set<std::string> seen_;
};

void visit(Section& root, RunConfig& c) {
  {
    Section s = root.sub("workspace");
    s.field("bin", c.workspace.bin);
    s.field("tray", c.workspace.tray);
    s.field("place", c.workspace.place);
    s.finish();
  }
  {
    Section s = root.sub("scales");
    s.field("tray_mm_per_px", c.lab.tray_mm_per_px);
    s.field("bin_mm_per_px", c.lab.bin_mm_per_px);
    s.finish();
  }
  {
    Gripper& g = c.lab.gripper;
    Section s = root.sub("gripper");
    s.field("finger_footprint_radius", g.finger_footprint_radius);
    s.field("max_open_width", g.max_open_width);
    s.field("closed_body_length", g.closed_body_length);
    s.field("closed_body_width", g.closed_body_width);
    s.field("capture_radius", g.capture_radius);
    s.field("blade_width", g.blade_width);
    s.field("rough_open_width", c.lab.rough_open_width);
    s.finish();
  }
  {
    Section s = root.sub("density");
    s.field("kernel_sigma_px", c.lab.density_sigma_px);
    s.finish();
  }
  {
    TrialNoise& n = c.trial.noise;
    Section s = root.sub("noise");
    s.field("tray_jitter_sigma", n.tray_jitter_sigma);
    s.field("bin_jitter_sigma", n.bin_jitter_sigma);
    Section e = s.sub("estimator");
    e.field("dot_jitter_sigma", n.estimator.dot_jitter_sigma);
    e.field("pixel_noise_sigma", n.estimator.pixel_noise_sigma);
    e.field("dropout_prob", n.estimator.dropout_prob);
    e.finish();
    s.finish();
  }
  {
    GraspParams& g = c.lab.grasp;
    Section s = root.sub("grasp");
    s.field("cos_tol", g.cos_tol);
    s.field("directions", g.directions);
    s.field("check_margin_px", g.check_margin_px);
    s.field("standoff_px", g.standoff_px);
    s.finish();
  }
  {
    ClusterParams& k = c.lab.cluster;
    Section s = root.sub("cluster");
    s.field("link_distance_factor", c.lab.link_distance_factor);
    s.field("k_max", k.k_max);
    s.field("max_iterations", k.max_iterations);
    s.field("tolerance", k.tolerance);
    s.finish();
  }
  {
    PlannerParams& p = c.lab.planner;
    Section s = root.sub("planner");
    s.field("approach_distance", p.approach_distance);
    s.field("scan_step", p.scan_step);
    s.field("baseline_radius", p.baseline_radius);
    s.field("baseline_min_distance", p.baseline_min_distance);
    s.field("baseline_max_distance", p.baseline_max_distance);
    s.finish();
  }
  {
    Section s = root.sub("dynamics");
    s.field("max_iterations", c.lab.dynamics.max_iterations);
    s.field("tolerance", c.lab.dynamics.tolerance);
    s.finish();
  }
  {
    PlacementParams& p = c.lab.placement;
    Section s = root.sub("placement");
    s.field("p_contact", p.p_contact);
    s.field("contact_gap_fraction", p.contact_gap_fraction);
    s.field("max_attempts", p.max_attempts);
    s.field("wall_margin", p.wall_margin);
    s.finish();
  }
  {
    Section s = root.sub("scene");
    s.field("size_min", c.scene.size_min);
    s.field("size_max", c.scene.size_max);
    s.field("pile_packing", c.scene.pile_packing);
    s.field("max_attempts", c.scene.max_attempts);
    s.field("wall_margin", c.scene.wall_margin);
    s.finish();
  }
  {
    Section s = root.sub("trial");
    s.field("target_picks", c.trial.target_picks);
    s.name("singulation_policy", c.trial.singulation_policy, [](SingulationPolicy p) { return to_string(p); },
           parse_policy);
    s.field("max_singulations", c.trial.limits.max_singulations);
    s.field("max_rough_attempts", c.trial.limits.max_rough_attempts);
    s.finish();
  }
  {
    Section bench = root.sub("bench");
    Section s = bench.sub("singulation");
    s.field("cluster_sizes", c.singulation.cluster_sizes);
    s.names("policies", c.singulation.policies);
    s.field("trials", c.singulation.trials);
    s.field("max_singulations", c.singulation.max_singulations);
    s.name("shape", c.singulation.shape, [](ShapeKind k) { return to_string(k); }, parse_shape_kind);
    s.finish();
    Section p = bench.sub("pipeline");
    p.field("trials", c.pipeline.trials);
    p.field("objects_min", c.pipeline.objects_min);
    p.field("objects_max", c.pipeline.objects_max);
    p.name("shape", c.pipeline.shape, [](ShapeKind k) { return to_string(k); }, parse_shape_kind);
    p.finish();
    bench.finish();
  }
  root.finish();
}

void sync_benches(RunConfig& c) {
  c.singulation.scene = c.pipeline.scene = c.scene;
  c.singulation.workspace = c.pipeline.workspace = c.workspace;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

}  // namespace

void validate(const RunConfig& c) {
  validate_workspace(c.workspace);
  validate_gripper(c.lab.gripper);
  validate(c.trial);
  const Lab& l = c.lab;
  require(l.tray_mm_per_px > 0.0 && l.bin_mm_per_px > 0.0, "scales must be positive");
  require(l.density_sigma_px > 0.0, "density kernel sigma must be positive");
  require(l.rough_open_width > 0.0 && l.rough_open_width <= l.gripper.max_open_width,
          "rough_open_width must lie in (0, max_open_width]");
  require(l.link_distance_factor > 0.0, "link_distance_factor must be positive");
  require(l.grasp.cos_tol >= 0.0 && l.grasp.cos_tol < 1.0, "cos_tol must lie in [0, 1)");
  require(l.grasp.directions >= 1, "grasp directions must be at least 1");
  require(l.grasp.check_margin_px >= 0.0 && l.grasp.standoff_px >= 0.0, "grasp margins must be non-negative");
  require(l.cluster.k_max >= 1 && l.cluster.max_iterations >= 1 && l.cluster.tolerance >= 0.0,
          "cluster parameters out of range");
  const PlannerParams& p = l.planner;
  require(p.approach_distance > 0.0 && p.scan_step > 0.0 && p.baseline_radius > 0.0, "planner distances must be positive");
  require(p.baseline_min_distance > 0.0 && p.baseline_min_distance <= p.baseline_max_distance,
          "baseline distance range is invalid");
  require(l.dynamics.max_iterations >= 1 && l.dynamics.tolerance >= 0.0, "dynamics parameters out of range");
  const PlacementParams& pl = l.placement;
  require(pl.p_contact >= 0.0 && pl.p_contact <= 1.0, "p_contact must lie in [0, 1]");
  require(pl.contact_gap_fraction >= 0.0 && pl.max_attempts >= 1 && pl.wall_margin >= 0.0,
          "placement parameters out of range");
  const SceneParams& s = c.scene;
  require(s.size_min > 0.0 && s.size_min <= s.size_max, "scene size range is invalid");
  require(s.pile_packing > 0.0 && s.pile_packing < 1.0, "pile_packing must lie in (0, 1)");
  require(s.max_attempts >= 1 && s.wall_margin >= 0.0, "scene placement parameters out of range");
  require(!c.singulation.cluster_sizes.empty() && !c.singulation.policies.empty(), "singulation grid is empty");
  for (int n : c.singulation.cluster_sizes) require(n >= 1, "cluster sizes must be positive");
  require(c.singulation.trials >= 1 && c.singulation.max_singulations >= 0, "singulation bench limits out of range");
  require(c.pipeline.trials >= 1, "pipeline trials must be positive");
  require(c.pipeline.objects_min >= 1 && c.pipeline.objects_min <= c.pipeline.objects_max,
          "pipeline object range is invalid");
}

json config_to_json(const RunConfig& cfg) {
  json out = json::object();
  RunConfig copy = cfg;
  Section root = Section::writer(out, "");
  visit(root, copy);
  return out;
}

RunConfig config_from_json(const json& doc) {
  RunConfig cfg;
  Section root = Section::reader(doc, "");
  visit(root, cfg);
  sync_benches(cfg);
  validate(cfg);
  return cfg;
}

std::string dump_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return explicit_path;
  const char* env = std::getenv(kConfigEnv);
  if (env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

RunConfig load_config_or_default(const std::optional<std::filesystem::path>& explicit_path) {
  const auto path = resolve_config_path(explicit_path);
  if (!path) {
    RunConfig cfg;
    sync_benches(cfg);
    return cfg;
  }
  return load_config(*path);
}

}  // namespace binpick
