#include "support.hpp"

#include <tlsdeform/deform.hpp>
#include <tlsdeform/error.hpp>
#include <tlsdeform/io.hpp>
#include <tlsdeform/refinstr.hpp>
#include <tlsdeform/synth.hpp>
#include <tlsdeform/uncertainty.hpp>
#include <tlsdeform/version.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace tlsdeform;
using tlsdeform::cli::Json;

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

Json base_report(const std::string& command) {
  Json j;
  j["tool"] = "tlsdeform";
  j["version"] = std::string(kVersion);
  j["command"] = command;
  return j;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json summary_json(const DeformationSummary& s) {
  return Json{{"total", s.total},
              {"valid", s.valid},
              {"valid_fraction", s.valid_fraction()},
              {"mean_mm", number_or_null(s.mean * 1000.0)},
              {"min_mm", number_or_null(s.min * 1000.0)},
              {"max_mm", number_or_null(s.max * 1000.0)}};
}

template <typename T>
Json reason_counts(const T& d) {
  std::map<std::string, std::size_t> counts;
  for (auto r : d.reasons) {
    if (r != InvalidReason::None) ++counts[std::string(to_string(r))];
  }
  Json j = Json::object();
  for (const auto& [k, v] : counts) j[k] = v;
  return j;
}

std::vector<Method> resolve_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  auto push = [&](Method m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  for (const auto& name : names) {
    if (name == "all") {
      for (Method m : {Method::C2M, Method::M2M, Method::M3C2, Method::ICP}) push(m);
      continue;
    }
    const auto m = method_from_string(name);
    if (!m) throw InvalidArgumentError("unknown method '" + name + "'");
    push(*m);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

struct RegisterOptions {
  std::string reference;
  std::string query;
  std::string targets;
  std::string mode;
  std::string out_dir = ".";
  double normal_radius_mm = 0.0;
  int max_iterations = 50;
  double rejection_factor = 3.0;
  std::string emphasis_box;
  double emphasis_weight = 1.0;
};

int run_register(const RegisterOptions& o) {
  Stopwatch clock;
  Json report = base_report("register");
  const std::string mode = o.mode.empty() ? (o.targets.empty() ? "icp" : "targets") : o.mode;
  report["config"] = {{"mode", mode}, {"reference", o.reference}, {"query", o.query}, {"targets", o.targets}};
  cli::ensure_dir(o.out_dir);

  std::optional<PointCloud> reference;
  std::optional<PointCloud> query;
  if (!o.reference.empty()) reference = read_cloud(o.reference);
  if (!o.query.empty()) query = read_cloud(o.query);
  Json timings;
  timings["read_s"] = clock.lap();

  RegistrationResult result;
  if (mode == "targets") {
    if (o.targets.empty()) throw InvalidArgumentError("targets mode needs --targets");
    const auto pairs = cli::read_target_pairs(o.targets);
    try {
      result = register_targets(pairs);
    } catch (const DegenerateInputError& e) {
      throw RegistrationError(o.targets + ": degenerate configuration: " + e.what());
    }
  } else if (mode == "icp") {
    if (!reference || !query) throw InvalidArgumentError("icp mode needs --reference and --query");
    const double radius =
        o.normal_radius_mm > 0.0 ? o.normal_radius_mm / 1000.0 : 3.0 * data_spacing(*reference);
    Point3 sensor = Point3::Zero();
    for (const auto& p : *reference) sensor += p;
    sensor /= static_cast<double>(reference->size());
    sensor -= 1000.0 * Vector3::UnitY();
    const NormalField normals = estimate_normals(*reference, radius, sensor);
    IcpParams params;
    params.max_iterations = o.max_iterations;
    params.rejection_factor = o.rejection_factor;
    if (!o.emphasis_box.empty()) {
      const auto b = cli::parse_vector(o.emphasis_box, 6, "--emphasis-box");
      params.emphasis = EmphasisRegion{{Point3(b[0], b[1], b[2]), Point3(b[3], b[4], b[5])}, o.emphasis_weight};
    }
    result = icp_point_to_plane(*query, *reference, normals, params);
    report["config"]["normal_radius_m"] = radius;
  } else {
    throw InvalidArgumentError("--mode must be 'icp' or 'targets'");
  }
  timings["register_s"] = clock.lap();
  report["registration"] = cli::registration_to_json(result);

  if (reference && query) {
    const QcReport qc = registration_qc(*reference, apply_transform(*query, result.transform));
    report["qc"] = {{"mean_mm", qc.mean * 1000.0},
                    {"max_abs_mm", qc.max_abs * 1000.0},
                    {"rms_mm", qc.rms * 1000.0},
                    {"count", qc.count}};
    timings["qc_s"] = clock.lap();
  }
  report["timings"] = timings;

  cli::write_json(fs::path(o.out_dir) / "transform.json", cli::transform_to_json(result.transform));
  cli::write_json(fs::path(o.out_dir) / "report.json", report);
  std::cout << "rmse_mm = " << format_double(result.rmse * 1000.0) << "\niterations = " << result.iterations
            << "\nconverged = " << (result.converged ? "true" : "false") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------------------------

struct DeformOptions {
  std::string reference;
  std::string query;
  std::string transform;
  std::vector<std::string> methods{"all"};
  double cell_size_mm = 20.0;
  double filter_lo_mm = -15.0;
  double filter_hi_mm = 0.0;
  bool no_filter = false;
  std::string frame = "identity";
  std::string pit_direction = "0,-1,0";
  double m3c2_dn_mm = 30.0;
  double m3c2_dd_mm = 30.0;
  double m3c2_h_m = 4.0;
  double core_resolution_mm = 0.0;
  std::string m3c2_output = "y";
  std::string c2m_distance = "plane";
  double icp_normal_radius_mm = 0.0;
  std::string out_dir = ".";
};

int run_deform(const DeformOptions& o) {
  Stopwatch clock;
  Json report = base_report("deform");
  const auto methods = resolve_methods(o.methods);
  const double cell = o.cell_size_mm / 1000.0;
  if (!(cell > 0.0)) throw InvalidArgumentError("--cell-size-mm must be positive");
  const double lo = o.filter_lo_mm / 1000.0;
  const double hi = o.filter_hi_mm / 1000.0;
  if (!o.no_filter && !(lo <= hi)) throw InvalidArgumentError("--filter-lo-mm exceeds --filter-hi-mm");

  Json methods_json = Json::array();
  for (Method m : methods) methods_json.push_back(std::string(to_string(m)));
  report["config"] = {{"reference", o.reference},
                      {"query", o.query},
                      {"transform", o.transform},
                      {"methods", methods_json},
                      {"cell_size_mm", o.cell_size_mm},
                      {"filter_mm", o.no_filter ? Json(nullptr) : Json{o.filter_lo_mm, o.filter_hi_mm}},
                      {"frame", o.frame},
                      {"m3c2", {{"dn_mm", o.m3c2_dn_mm}, {"dd_mm", o.m3c2_dd_mm}, {"h_m", o.m3c2_h_m},
                                {"core_resolution_mm", o.core_resolution_mm}, {"output", o.m3c2_output}}},
                      {"c2m_distance", o.c2m_distance}};
  cli::ensure_dir(o.out_dir);

  PointCloud reference = read_cloud(o.reference);
  PointCloud query = read_cloud(o.query);
  Json timings;
  timings["read_s"] = clock.lap();
  if (!o.transform.empty()) query = apply_transform(query, cli::read_transform(o.transform));
  const WallFrame frame = cli::resolve_frame(o.frame, reference, o.pit_direction);
  reference = to_wall_frame(reference, frame);
  query = to_wall_frame(query, frame);
  const GridLayout layout = GridLayout::covering(reference.span(), cell);

  M3C2Params m3c2_params;
  m3c2_params.normal_diameter = o.m3c2_dn_mm / 1000.0;
  m3c2_params.projection_diameter = o.m3c2_dd_mm / 1000.0;
  m3c2_params.cylinder_height = o.m3c2_h_m;
  m3c2_params.core_resolution = o.core_resolution_mm / 1000.0;
  if (o.m3c2_output == "y") {
    m3c2_params.output = M3C2Output::YEquivalent;
  } else if (o.m3c2_output == "normal") {
    m3c2_params.output = M3C2Output::Normal;
  } else {
    throw InvalidArgumentError("--m3c2-output must be 'y' or 'normal'");
  }
  m3c2_params.validate();
  C2MDistance c2m_mode = C2MDistance::PlaneNormal;
  if (o.c2m_distance == "euclidean") {
    c2m_mode = C2MDistance::Euclidean;
  } else if (o.c2m_distance != "plane") {
    throw InvalidArgumentError("--c2m-distance must be 'plane' or 'euclidean'");
  }

  Json results;
  for (Method m : methods) {
    Json entry;
    DeformationMap map;
    if (m == Method::M2M) {
      map = m2m(reference, query, cell, layout);
      entry["invalid_nodes"] = reason_counts(map);
      if (!o.no_filter) map = filter_range(map, lo, hi);
    } else {
      PointwiseDeformation d;
      if (m == Method::C2M) d = c2m(query, reference, c2m_mode);
      if (m == Method::M3C2) d = m3c2(reference, query, m3c2_params);
      if (m == Method::ICP) {
        IcpDeformParams p;
        p.normal_radius = o.icp_normal_radius_mm / 1000.0;
        d = icp_deform(reference, query, p);
      }
      entry["points"] = summary_json(summarize(d));
      if (!o.no_filter) d = filter_range(d, lo, hi);
      entry["invalid_points"] = reason_counts(d);
      map = rasterize(d, cell, layout);
    }
    entry["map"] = summary_json(summarize(map));
    const fs::path csv = fs::path(o.out_dir) / (std::string(to_string(m)) + "_map.csv");
    write_map_csv(map, csv);
    entry["map_csv"] = csv.filename().string();
    results[std::string(to_string(m))] = entry;
    timings[std::string(to_string(m)) + "_s"] = clock.lap();
  }
  report["results"] = results;
  report["timings"] = timings;
  cli::write_json(fs::path(o.out_dir) / "report.json", report);

  for (Method m : methods) {
    const auto& s = results[std::string(to_string(m))]["map"];
    std::cout << to_string(m) << ": mean_mm = " << s["mean_mm"].dump() << ", valid_cells = " << s["valid"].dump() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------------------------

struct LodOptions {
  std::string reference;
  std::vector<std::string> methods{"all"};
  int levels = 6;
  std::uint64_t seed = 0;
  double cell_size_mm = 20.0;
  std::string frame = "identity";
  std::string pit_direction = "0,-1,0";
  std::string out_dir = ".";
};

int run_lod(const LodOptions& o) {
  Stopwatch clock;
  Json report = base_report("lod");
  LodParams params;
  params.methods = resolve_methods(o.methods);
  params.levels = o.levels;
  params.seed = o.seed;
  params.m2m_cell = o.cell_size_mm / 1000.0;
  params.validate();
  report["config"] = {{"reference", o.reference}, {"levels", o.levels}, {"seed", o.seed},
                      {"cell_size_mm", o.cell_size_mm}, {"frame", o.frame}};
  cli::ensure_dir(o.out_dir);

  PointCloud cloud = read_cloud(o.reference);
  cloud = to_wall_frame(cloud, cli::resolve_frame(o.frame, cloud, o.pit_direction));
  Json timings;
  timings["read_s"] = clock.lap();
  const LodReport lod = lod_sweep(cloud, params);
  timings["sweep_s"] = clock.lap();
  write_lod_csv(lod, fs::path(o.out_dir) / "lod.csv");

  Json rows = Json::array();
  for (const auto& r : lod.rows) {
    rows.push_back({{"level", r.level},
                    {"voxel_size_m", r.voxel_size},
                    {"spacing_m", number_or_null(r.spacing)},
                    {"method", std::string(to_string(r.method))},
                    {"mae_mm", number_or_null(r.mae * 1000.0)},
                    {"count", r.count}});
  }
  report["initial_spacing_m"] = lod.initial_spacing;
  report["step_m"] = lod.step;
  report["rows"] = rows;
  report["timings"] = timings;
  cli::write_json(fs::path(o.out_dir) / "report.json", report);
  std::cout << lod_to_csv(lod);
  return 0;
}

// ---------------------------------------------------------------------------------------------

struct SynthOptions {
  std::string scene;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthOptions& o) {
  SceneSpec spec = read_scene(o.scene);
  if (o.seed) {
    spec.wall.seed = spec.facade.seed = *o.seed;
    spec.query_seed = *o.seed + 1;
  }
  cli::ensure_dir(o.out_dir);
  const Scene scene = generate_scene(spec);
  const fs::path dir(o.out_dir);
  write_cloud(scene.reference, dir / "reference.xyz");
  write_cloud(scene.query, dir / "query.xyz");

  Json report = base_report("synth");
  report["config"] = {{"scene", o.scene}};
  report["kind"] = spec.kind == SceneSpec::Kind::Wall ? "wall" : "facade";
  report["reference_points"] = scene.reference.size();
  report["query_points"] = scene.query.size();
  if (spec.kind == SceneSpec::Kind::Wall && spec.field) {
    write_text_atomic(dir / "field.txt", field_to_text(*spec.field));
    report["field"] = "field.txt";
  }
  if (spec.kind == SceneSpec::Kind::Facade) {
    // The registration that undoes the query motion.
    cli::write_json(dir / "truth_transform.json", cli::transform_to_json(spec.query_motion.inverse()));
    report["truth_transform"] = "truth_transform.json";
  }
  cli::write_json(dir / "report.json", report);
  std::cout << "reference_points = " << scene.reference.size() << "\nquery_points = " << scene.query.size() << "\n";
  return 0;
}

int run_smallangle(double delta_beta_arcsec, double length_m) {
  const double d = small_angle_deformation(delta_beta_arcsec, length_m);
  std::cout << "deformation_mm = " << format_double(d * 1000.0) << "\n";
  return 0;
}

int run_inclinometer(const std::string& trace_path, const std::string& out_dir) {
  const InclinometerTrace trace = read_trace_csv(trace_path);
  const DepthProfile profile = inclinometer_profile(trace);
  cli::ensure_dir(out_dir);
  write_profile_csv(profile, fs::path(out_dir) / "profile.csv");
  std::cout << "readings = " << trace.theta_deg.size() << "\nsurface_deformation_mm = "
            << format_double(profile.deformation.back() * 1000.0) << "\n";
  return 0;
}

int run_compare(const std::string& map_path, const std::string& profile_path, double x, double ground_z,
                const std::string& out_dir) {
  const DeformationMap map = read_map_csv(map_path);
  const DepthProfile profile = read_profile_csv(profile_path);
  const ProfileComparison cmp = compare_profile(map, x, profile, ground_z);
  cli::ensure_dir(out_dir);
  write_text_atomic(fs::path(out_dir) / "differences.csv", comparison_to_csv(cmp));
  if (!cmp.notice.empty()) std::cerr << "tlsdeform: notice: " << cmp.notice << "\n";
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : cmp.rows) {
    if (!r.present) continue;
    sum += std::abs(r.difference_mm);
    ++n;
  }
  std::cout << "depths = " << cmp.rows.size() << "\nmatched = " << n << "\n";
  if (n > 0) std::cout << "mean_abs_difference_mm = " << format_fixed(sum / static_cast<double>(n), 3) << "\n";
  return 0;
}

std::string config_path_unused;

void add_config(CLI::App* sub) {
  sub->add_option("--config", config_path_unused, "key = value file; command-line flags take precedence");
}

// CLI11 only reads config files on the top-level app, so a subcommand's --config file is
// expanded into flags here. Keys already given on the command line are skipped.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
  CLI::App* sub = nullptr;
  std::size_t sub_pos = 0;
  for (; sub_pos < args.size(); ++sub_pos) {
    sub = app.get_subcommand_no_throw(args[sub_pos]);
    if (sub) break;
  }
  if (!sub) return args;

  std::string path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::map<std::string, std::size_t> lines;
  const auto kv = parse_key_values(read_text(path), path, &lines);
  std::vector<std::pair<std::size_t, std::string>> order;
  for (const auto& [key, line] : lines) order.emplace_back(line, key);
  std::sort(order.begin(), order.end());

  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin() + static_cast<std::ptrdiff_t>(sub_pos), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  for (const auto& [line, key] : order) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt || key == "config") throw ParseError(path, line, "unknown key '" + key + "' for " + sub->get_name());
    if (given(flag)) continue;
    const std::string& value = kv.at(key);
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "yes" || value == "on") {
        extra.push_back(flag);
      } else if (!(value == "false" || value == "0" || value == "no" || value == "off")) {
        throw ParseError(path, line, "key '" + key + "' expects true or false");
      }
    } else {
      extra.push_back(flag + "=" + value);
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformation maps from multi-temporal point clouds of retaining walls", "tlsdeform"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RegisterOptions reg;
  auto* reg_cmd = app.add_subcommand("register", "Register the query scan to the reference scan");
  add_config(reg_cmd);
  reg_cmd->add_option("--reference", reg.reference, "Reference cloud (.xyz or .ply)")->check(CLI::ExistingFile);
  reg_cmd->add_option("--query", reg.query, "Query cloud")->check(CLI::ExistingFile);
  reg_cmd->add_option("--targets", reg.targets, "Target pairs CSV ref_x,ref_y,ref_z,qry_x,qry_y,qry_z")
      ->check(CLI::ExistingFile);
  reg_cmd->add_option("--mode", reg.mode, "icp or targets (default: targets when --targets is given)")
      ->check(CLI::IsMember({"icp", "targets"}));
  reg_cmd->add_option("--normal-radius-mm", reg.normal_radius_mm, "Normal estimation radius, 0 = 3x spacing");
  reg_cmd->add_option("--max-iterations", reg.max_iterations, "ICP iteration cap")->capture_default_str();
  reg_cmd->add_option("--rejection-factor", reg.rejection_factor, "Reject residuals above factor x median")
      ->capture_default_str();
  reg_cmd->add_option("--emphasis-box", reg.emphasis_box, "x0,y0,z0,x1,y1,z1 of the weighted region");
  reg_cmd->add_option("--emphasis-weight", reg.emphasis_weight, "Weight inside the emphasis box")
      ->capture_default_str();
  reg_cmd->add_option("--out-dir", reg.out_dir, "Output directory")->capture_default_str();

  DeformOptions def;
  auto* def_cmd = app.add_subcommand("deform", "Estimate deformation maps between two epochs");
  add_config(def_cmd);
  def_cmd->add_option("--reference", def.reference, "Reference cloud")->required()->check(CLI::ExistingFile);
  def_cmd->add_option("--query", def.query, "Query cloud")->required()->check(CLI::ExistingFile);
  def_cmd->add_option("--transform", def.transform, "Transform JSON applied to the query")->check(CLI::ExistingFile);
  def_cmd->add_option("--method", def.methods, "c2m, m2m, m3c2, icp or all")
      ->delimiter(',')
      ->check(CLI::IsMember({"c2m", "m2m", "m3c2", "icp", "all"}))
      ->capture_default_str();
  def_cmd->add_option("--cell-size-mm", def.cell_size_mm, "Map cell size")->capture_default_str();
  def_cmd->add_option("--filter-lo-mm", def.filter_lo_mm, "Lower bound of the kept range")->capture_default_str();
  def_cmd->add_option("--filter-hi-mm", def.filter_hi_mm, "Upper bound of the kept range")->capture_default_str();
  def_cmd->add_flag("--no-filter", def.no_filter, "Keep values outside the filter range");
  def_cmd->add_option("--frame", def.frame, "identity or fit")
      ->check(CLI::IsMember({"identity", "fit"}))
      ->capture_default_str();
  def_cmd->add_option("--pit-direction", def.pit_direction, "Direction toward the pit, for --frame fit")
      ->capture_default_str();
  def_cmd->add_option("--m3c2-dn-mm", def.m3c2_dn_mm, "M3C2 normal diameter")->capture_default_str();
  def_cmd->add_option("--m3c2-dd-mm", def.m3c2_dd_mm, "M3C2 cylinder diameter")->capture_default_str();
  def_cmd->add_option("--m3c2-h-m", def.m3c2_h_m, "M3C2 cylinder height")->capture_default_str();
  def_cmd->add_option("--core-resolution-mm", def.core_resolution_mm, "M3C2 core point spacing, 0 = all")
      ->capture_default_str();
  def_cmd->add_option("--m3c2-output", def.m3c2_output, "y (equivalent y displacement) or normal")
      ->check(CLI::IsMember({"y", "normal"}))
      ->capture_default_str();
  def_cmd->add_option("--c2m-distance", def.c2m_distance, "plane or euclidean")
      ->check(CLI::IsMember({"plane", "euclidean"}))
      ->capture_default_str();
  def_cmd->add_option("--icp-normal-radius-mm", def.icp_normal_radius_mm, "0 = 2x spacing")->capture_default_str();
  def_cmd->add_option("--out-dir", def.out_dir, "Output directory")->capture_default_str();

  LodOptions lod;
  auto* lod_cmd = app.add_subcommand("lod", "Split-half minimum level of detection sweep");
  add_config(lod_cmd);
  lod_cmd->add_option("--reference", lod.reference, "Cloud to split")->required()->check(CLI::ExistingFile);
  lod_cmd->add_option("--method", lod.methods, "c2m, m2m, m3c2, icp or all")
      ->delimiter(',')
      ->check(CLI::IsMember({"c2m", "m2m", "m3c2", "icp", "all"}))
      ->capture_default_str();
  lod_cmd->add_option("--levels", lod.levels, "Number of subsampling levels")->capture_default_str();
  lod_cmd->add_option("--seed", lod.seed, "Random seed")->capture_default_str();
  lod_cmd->add_option("--cell-size-mm", lod.cell_size_mm, "M2M grid cell size")->capture_default_str();
  lod_cmd->add_option("--frame", lod.frame, "identity or fit")
      ->check(CLI::IsMember({"identity", "fit"}))
      ->capture_default_str();
  lod_cmd->add_option("--pit-direction", lod.pit_direction, "Direction toward the pit")->capture_default_str();
  lod_cmd->add_option("--out-dir", lod.out_dir, "Output directory")->capture_default_str();

  SynthOptions syn;
  std::uint64_t synth_seed = 0;
  auto* syn_cmd = app.add_subcommand("synth", "Generate a synthetic two-epoch scene");
  add_config(syn_cmd);
  syn_cmd->add_option("--scene", syn.scene, "Scene file (key = value)")->required()->check(CLI::ExistingFile);
  auto* seed_opt = syn_cmd->add_option("--seed", synth_seed, "Override the scene seed");
  syn_cmd->add_option("--out-dir", syn.out_dir, "Output directory")->capture_default_str();

  double delta_beta = 0.0;
  double length = 0.0;
  auto* sa_cmd = app.add_subcommand("smallangle", "Total-station small-angle deformation");
  add_config(sa_cmd);
  sa_cmd->add_option("--delta-beta-arcsec", delta_beta, "Angle change in arcseconds")->required();
  sa_cmd->add_option("--length-m", length, "Sight length in metres")->required();

  std::string trace_path;
  std::string incl_out = ".";
  auto* inc_cmd = app.add_subcommand("inclinometer", "Depth profile from an inclinometer trace");
  add_config(inc_cmd);
  inc_cmd->add_option("--trace", trace_path, "Trace CSV depth_m,theta_deg")->required()->check(CLI::ExistingFile);
  inc_cmd->add_option("--out-dir", incl_out, "Output directory")->capture_default_str();

  std::string map_path;
  std::string profile_path;
  double cmp_x = 0.0;
  double ground_z = 0.0;
  std::string cmp_out = ".";
  auto* cmp_cmd = app.add_subcommand("compare", "Compare a deformation map column with a depth profile");
  add_config(cmp_cmd);
  cmp_cmd->add_option("--map", map_path, "Map CSV")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--profile", profile_path, "Profile CSV depth_m,deformation_mm")
      ->required()
      ->check(CLI::ExistingFile);
  cmp_cmd->add_option("--x-m", cmp_x, "Wall x of the inclinometer")->required();
  cmp_cmd->add_option("--ground-z-m", ground_z, "Wall z of ground level")->required();
  cmp_cmd->add_option("--out-dir", cmp_out, "Output directory")->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config(app, std::vector<std::string>(argv + 1, argv + argc));
  } catch (const std::exception& e) {
    std::cerr << "tlsdeform: error: " << e.what() << "\n";
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*reg_cmd) return run_register(reg);
    if (*def_cmd) return run_deform(def);
    if (*lod_cmd) return run_lod(lod);
    if (*syn_cmd) {
      if (*seed_opt) syn.seed = synth_seed;
      return run_synth(syn);
    }
    if (*sa_cmd) return run_smallangle(delta_beta, length);
    if (*inc_cmd) return run_inclinometer(trace_path, incl_out);
    if (*cmp_cmd) return run_compare(map_path, profile_path, cmp_x, ground_z, cmp_out);
  } catch (const std::exception& e) {
    std::cerr << "tlsdeform: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
