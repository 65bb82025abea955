#pragma once

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stylectl/color.hpp"
#include "stylectl/error.hpp"
#include "stylectl/image_io.hpp"
#include "stylectl/optimize.hpp"
#include "stylectl/pipelines.hpp"
#include "stylectl/sfw1.hpp"
#include "stylectl/vgg.hpp"

namespace stylectl::cli {

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_input = 2;
inline constexpr int exit_numeric = 3;

inline constexpr const char* model_env = "STYLE_MODEL_PATH";

struct Params {
  // Shared by the pipeline subcommands.
  std::string job;
  std::string model;
  std::string pooling = "average";
  std::string content;
  std::vector<std::string> styles;
  std::string out;
  std::uint64_t seed = 0;
  std::string init = "content";
  int iterations = 500;
  int history = 10;
  double content_weight = 1.0;
  double style_weight = 1e3;
  std::string content_layer = default_content_layer;
  std::vector<std::string> style_layers = default_style_layers();
  std::vector<double> style_layer_weights;
  std::string telemetry;

  // spatial
  std::vector<std::string> regions;
  std::string guidance = "eroded";
  bool global_channel = true;
  double global_weight = 1.0;
  std::string method = "gram";

  // color-preserve
  std::string mode;
  std::string match = "auto";
  std::string root = "eigen";

  // mix-style
  std::string fine;
  std::string coarse;
  std::vector<std::string> fine_layers = default_fine_layers();

  // highres
  double budget = 500.0 * 500.0;
  double ratio = 2.5;
  int levels = 1;
  std::optional<int> refine_iterations;

  // inspect-weights
  std::string weights;
  bool verify = true;
};

/// Bad flag values detected after parsing; reported as usage errors.
struct UsageError : Error {
  using Error::Error;
};

namespace detail {

inline std::vector<std::string> conv_names() {
  std::vector<std::string> out;
  for (const auto& l : vgg19_architecture()) {
    if (l.kind == LayerKind::conv) out.push_back(l.name);
  }
  return out;
}

inline std::vector<std::string> layer_names() {
  std::vector<std::string> out;
  for (const auto& l : vgg19_architecture()) out.push_back(l.name);
  return out;
}

// Keys of a job file whose values are file paths, resolved against the job file's directory.
inline bool is_path_key(const std::string& key) {
  static const std::set<std::string> keys = {"model", "content", "style", "out", "telemetry", "fine", "coarse"};
  return keys.count(key) > 0;
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string join(const std::vector<std::string>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

// Region spec: id:content_mask:style_mask[:style_index[:weight]]
inline std::string region_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  if (j.is_string()) {
    auto parts = split(j.get<std::string>(), ':');
    if (parts.size() >= 3) {
      parts[1] = resolve(base, parts[1]);
      parts[2] = resolve(base, parts[2]);
    }
    return join(parts, ":");
  }
  if (!j.is_object()) throw UsageError("job: 'region' entries must be strings or objects");
  static const std::set<std::string> allowed = {"id", "content_mask", "style_mask", "style", "weight"};
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw UsageError("job: unknown key 'region." + k + "'");
  }
  std::string s = j.at("id").get<std::string>() + ":" + resolve(base, j.at("content_mask").get<std::string>()) +
                  ":" + resolve(base, j.at("style_mask").get<std::string>());
  s += ":" + std::to_string(j.value("style", 0));
  if (j.contains("weight")) {
    std::ostringstream w;
    w << std::setprecision(17) << j.at("weight").get<double>();
    s += ":" + w.str();
  }
  return s;
}

inline std::string scalar_string(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    std::ostringstream o;
    o << std::setprecision(17) << v.get<double>();
    return o.str();
  }
  throw UsageError("job: key '" + key + "' has an unsupported value " + v.dump());
}

/// Applies a JSON job file to an already-parsed subcommand. Keys are the
/// long flag names without dashes; unknown keys are rejected and values
/// given on the command line are replaced, with a warning.
inline void apply_job(CLI::App& sub, const std::string& job_path, std::ostream& err) {
  std::ifstream in(job_path);
  if (!in) throw IoError("cannot open job file '" + job_path + "'");
  nlohmann::json job;
  try {
    job = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("job file '" + job_path + "': " + e.what());
  }
  if (!job.is_object()) throw UsageError("job file '" + job_path + "' must hold a JSON object");
  const auto base = std::filesystem::absolute(job_path).parent_path();
  for (const auto& [key, value] : job.items()) {
    CLI::Option* opt = key == "job" || key == "help" ? nullptr : sub.get_option_no_throw("--" + key);
    if (!opt) throw UsageError("job file: unknown key '" + key + "' for '" + sub.get_name() + "'");
    std::vector<std::string> values;
    if (key == "region") {
      if (!value.is_array()) throw UsageError("job: 'region' must be an array");
      for (const auto& r : value) values.push_back(region_from_json(r, base));
    } else if (value.is_array()) {
      for (const auto& v : value) values.push_back(scalar_string(v, key));
    } else {
      values.push_back(scalar_string(value, key));
    }
    if (is_path_key(key)) {
      for (auto& v : values) v = resolve(base, v);
    }
    if (opt->count() > 0) {
      const auto given = opt->results();
      if (given != values) {
        err << "warning: job file sets '" << key << "' = " << join(values)
            << ", overriding --" << key << " " << join(given) << "\n";
      }
    }
    opt->clear();
    opt->add_result(values);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("job file: key '" + key + "': " + e.what());
    }
  }
}

inline void add_common(CLI::App& sub, Params& p) {
  sub.add_option("--job", p.job, "JSON job file; keys mirror the flags and win over them")
      ->check(CLI::ExistingFile);
  sub.add_option("--model", p.model, std::string("SFW1 weight file (default: $") + model_env + ")");
  sub.add_option("--pooling", p.pooling, "pooling layers")->check(CLI::IsMember({"average", "max"}))
      ->capture_default_str();
  sub.add_option("--out", p.out, "output PNG");
  sub.add_option("--seed", p.seed, "seed for noise initialisation")->capture_default_str();
  sub.add_option("--init", p.init, "initial image")->check(CLI::IsMember({"content", "noise"}))
      ->capture_default_str();
  sub.add_option("--iterations", p.iterations, "L-BFGS iterations")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub.add_option("--history", p.history, "L-BFGS history size")->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub.add_option("--style-weight", p.style_weight, "style loss weight")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub.add_option("--style-layers", p.style_layers, "style layers")->delimiter(',')
      ->check(CLI::IsMember(conv_names()))->capture_default_str();
  sub.add_option("--style-layer-weights", p.style_layer_weights, "per-layer style weights (default uniform)")
      ->delimiter(',')->check(CLI::NonNegativeNumber)->capture_default_str();
  sub.add_option("--telemetry", p.telemetry, "write per-iteration JSON lines to this file");
}

inline void add_content(CLI::App& sub, Params& p) {
  sub.add_option("--content", p.content, "content PNG");
  sub.add_option("--style", p.styles, "style PNG (repeatable for spatial)");
  sub.add_option("--content-weight", p.content_weight, "content loss weight")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub.add_option("--content-layer", p.content_layer, "content layer")->check(CLI::IsMember(conv_names()))
      ->capture_default_str();
}

inline std::string option_value(const CLI::Option& opt) {
  if (opt.count() > 0) return join(opt.results());
  const auto d = opt.get_default_str();
  return d.empty() ? "(unset)" : d;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

inline std::string resolve_model(const Params& p) {
  if (!p.model.empty()) return p.model;
  if (const char* env = std::getenv(model_env); env && *env) return env;
  throw UsageError(std::string("no weight file: pass --model or set ") + model_env);
}

inline PoolKind pool_kind(const std::string& s) { return s == "max" ? PoolKind::max : PoolKind::average; }

class Telemetry {
 public:
  explicit Telemetry(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw IoError("cannot open telemetry file '" + path + "'");
  }
  void attach(OptimizerConfig& cfg) {
    if (!file_.is_open()) return;
    cfg.on_iteration = [this](const IterationRecord& r) { file_ << telemetry_line(r) << "\n" << std::flush; };
  }

 private:
  std::ofstream file_;
};

inline OptimizerConfig optimizer_config(const Params& p) {
  OptimizerConfig cfg;
  cfg.max_iterations = p.iterations;
  cfg.history = p.history;
  cfg.init.kind = p.init == "noise" ? InitKind::noise : InitKind::content;
  cfg.init.seed = p.seed;
  return cfg;
}

inline TransferJob base_job(const Params& p) {
  TransferJob job;
  job.content_layer = p.content_layer;
  job.style_layers = p.style_layers;
  job.style_layer_weights = p.style_layer_weights;
  require(job.style_layer_weights.empty() || job.style_layer_weights.size() == job.style_layers.size(),
          "--style-layer-weights needs one value per style layer");
  require(!job.style_layers.empty(), "--style-layers must not be empty");
  job.content_weight = p.content_weight;
  job.style_weight = p.style_weight;
  job.optimizer = optimizer_config(p);
  return job;
}

inline void load_content_and_styles(const Params& p, TransferJob& job) {
  require(!p.content.empty(), "--content is required");
  require(!p.styles.empty(), "--style is required");
  job.content = read_png(p.content);
  for (const auto& s : p.styles) job.styles.push_back(read_png(s));
}

inline Region parse_region(const std::string& spec) {
  const auto parts = split(spec, ':');
  require(parts.size() >= 3 && parts.size() <= 5 && !parts[0].empty(),
          "--region '" + spec + "': expected id:content_mask:style_mask[:style_index[:weight]]");
  Region r;
  r.id = parts[0];
  try {
    if (parts.size() >= 4) {
      std::size_t used = 0;
      const long idx = std::stol(parts[3], &used);
      require(used == parts[3].size() && idx >= 0, "--region '" + spec + "': bad style index");
      r.style_index = static_cast<std::size_t>(idx);
    }
    if (parts.size() == 5) {
      std::size_t used = 0;
      r.weight = std::stod(parts[4], &used);
      require(used == parts[4].size() && std::isfinite(r.weight) && r.weight >= 0.0,
              "--region '" + spec + "': bad weight");
    }
  } catch (const std::logic_error&) {
    throw UsageError("--region '" + spec + "': malformed number");
  }
  r.content_mask = read_mask(parts[1]);
  r.style_mask = read_mask(parts[2]);
  return r;
}

inline void print_report(std::ostream& out, const std::string& label, const RunReport& r) {
  out << "[" << label << "] iterations=" << r.iterations << "/" << r.max_iterations
      << " evaluations=" << r.evaluations << " termination=" << to_string(r.termination) << std::setprecision(9)
      << " initial_loss=" << r.initial_total() << " final_loss=" << r.final_total()
      << " wall_seconds=" << std::setprecision(4) << r.wall_seconds << "\n";
  out << std::setprecision(9);
  for (const auto& [name, v] : r.history.back().terms) out << "  " << name << " = " << v << "\n";
}

inline void print_header(std::ostream& out, const CLI::App& sub, const std::string& model_path) {
  out << "# stylectl " << sub.get_name() << "\n";
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front().rfind("help", 0) == 0) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "model") continue;
    out << "#   " << name << " = " << option_value(*opt) << "\n";
  }
  if (!model_path.empty()) out << "#   model = " << model_path << "\n";
}

// Subcommand handlers ------------------------------------------------------

inline int cmd_transfer(const Params& p, const NetworkModel& model, std::ostream& out) {
  require(!p.out.empty(), "--out is required");
  TransferJob job = base_job(p);
  load_content_and_styles(p, job);
  require(job.styles.size() == 1, "transfer takes exactly one --style");
  Telemetry tel(p.telemetry);
  tel.attach(job.optimizer);
  const auto res = transfer(model, job);
  write_png(p.out, res.image);
  print_report(out, "transfer", res.report);
  return exit_ok;
}

inline int cmd_spatial(const Params& p, const NetworkModel& model, std::ostream& out) {
  require(!p.out.empty(), "--out is required");
  TransferJob job = base_job(p);
  load_content_and_styles(p, job);
  for (const auto& spec : p.regions) job.regions.push_back(parse_region(spec));
  job.guidance = p.guidance == "simple" ? GuidanceMode::simple : GuidanceMode::eroded;
  job.global_channel = p.global_channel;
  job.global_weight = p.global_weight;
  job.spatial_method = p.method == "sum" ? SpatialMethod::guided_sum : SpatialMethod::guided_gram;
  Telemetry tel(p.telemetry);
  tel.attach(job.optimizer);
  const auto res = transfer_spatial(model, job);
  write_png(p.out, res.image);
  print_report(out, "spatial", res.report);
  return exit_ok;
}

inline int cmd_color(const Params& p, const NetworkModel& model, std::ostream& out) {
  require(!p.out.empty(), "--out is required");
  require(!p.mode.empty(), "--mode is required (luminance or histogram)");
  TransferJob job = base_job(p);
  load_content_and_styles(p, job);
  require(job.styles.size() == 1, "color-preserve takes exactly one --style");
  Telemetry tel(p.telemetry);
  tel.attach(job.optimizer);
  if (p.mode == "luminance") {
    const auto match = p.match == "always" ? LuminanceMatch::always
                       : p.match == "never" ? LuminanceMatch::never
                                            : LuminanceMatch::automatic;
    const auto res = transfer_luminance_preserving(model, job, match);
    write_png(p.out, res.image);
    out << "luminance pre-match: " << (res.matched ? "applied" : "skipped") << "\n";
    print_report(out, "color-preserve/luminance", res.report);
  } else {
    const auto root = p.root == "cholesky" ? MatrixRoot::cholesky : MatrixRoot::eigen;
    const auto res = transfer_color_matched(model, job, std::nullopt, root);
    write_png(p.out, res.transfer.image);
    out << std::setprecision(9) << "colour transform A = [";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << res.transform.a(r, c) << (r == 2 && c == 2 ? "" : ", ");
    }
    out << "] b = [" << res.transform.b[0] << ", " << res.transform.b[1] << ", " << res.transform.b[2] << "]\n";
    print_report(out, "color-preserve/histogram", res.transfer.report);
  }
  return exit_ok;
}

inline int cmd_mix(const Params& p, const NetworkModel& model, std::ostream& out) {
  require(!p.out.empty(), "--out is required");
  require(!p.fine.empty() && !p.coarse.empty(), "--fine and --coarse are required");
  require(!p.fine_layers.empty(), "--fine-layers must not be empty");
  OptimizerConfig cfg = optimizer_config(p);
  Telemetry tel(p.telemetry);
  tel.attach(cfg);
  const auto res = make_mixed_style(model, read_png(p.fine), read_png(p.coarse), p.fine_layers, cfg, p.style_weight);
  write_png(p.out, res.image);
  print_report(out, "mix-style", res.report);
  return exit_ok;
}

inline int cmd_highres(const Params& p, const NetworkModel& model, std::ostream& out) {
  require(!p.out.empty(), "--out is required");
  TransferJob job = base_job(p);
  load_content_and_styles(p, job);
  require(job.styles.size() == 1, "highres takes exactly one --style");
  HighResConfig cfg;
  cfg.pixel_budget = p.budget;
  cfg.iteration_ratio = p.ratio;
  cfg.levels = p.levels;
  cfg.refinement_iterations = p.refine_iterations;
  Telemetry tel(p.telemetry);
  tel.attach(job.optimizer);
  const auto res = transfer_highres(model, job, cfg);
  write_png(p.out, res.image);
  out << "highres factor k = " << res.plan.factor << "\n";
  for (std::size_t i = 0; i < res.stages.size(); ++i) {
    const auto& s = res.stages[i];
    out << "stage " << i + 1 << ": " << s.level.width << "x" << s.level.height << ", " << s.level.iterations
        << " iterations\n";
    print_report(out, "highres/stage" + std::to_string(i + 1), s.report);
  }
  return exit_ok;
}

inline int cmd_inspect(const Params& p, std::ostream& out) {
  const auto file = read_sfw1(p.weights, false);
  out << "file: " << p.weights << "\n";
  out << "version: " << file.version << "\n";
  out << "channel order: " << (file.preprocessing.order == ChannelOrder::bgr ? "bgr" : "rgb") << "\n";
  out << std::setprecision(6) << "mean: " << file.preprocessing.mean[0] << " " << file.preprocessing.mean[1] << " "
      << file.preprocessing.mean[2] << "\n";
  out << "layers: " << file.entries.size() << "\n";
  std::size_t params = 0;
  for (const auto& e : file.entries) {
    std::string dims;
    for (std::size_t i = 0; i < e.dims.size(); ++i) dims += (i ? "x" : "") + std::to_string(e.dims[i]);
    out << "  " << std::left << std::setw(10) << e.name << std::setw(18) << dims << "bias " << e.bias.size()
        << "\n";
    params += e.weights.size() + e.bias.size();
  }
  out << std::right << "parameters: " << params << "\n";
  std::ostringstream crc;
  crc << std::hex << std::setw(8) << std::setfill('0') << file.stored_crc;
  out << "checksum: " << crc.str() << " " << (file.checksum_ok() ? "ok" : "MISMATCH") << "\n";
  if (p.verify) {
    if (!file.checksum_ok()) throw FormatError(FormatError::Kind::checksum, "checksum mismatch in '" + p.weights + "'");
    model_from_weight_file(file, PoolKind::average);
    out << "architecture: ok\n";
  }
  return exit_ok;
}

}  // namespace detail

/// Entry point of the command-line tool. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  Params p;
  CLI::App app{"Controlled neural style transfer"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  auto* transfer_cmd = app.add_subcommand("transfer", "plain style transfer");
  add_common(*transfer_cmd, p);
  add_content(*transfer_cmd, p);

  auto* spatial_cmd = app.add_subcommand("spatial", "spatially guided transfer");
  add_common(*spatial_cmd, p);
  add_content(*spatial_cmd, p);
  spatial_cmd->add_option("--region", p.regions,
                          "region id:content_mask:style_mask[:style_index[:weight]] (repeatable)");
  spatial_cmd->add_option("--guidance", p.guidance, "guidance channel propagation")
      ->check(CLI::IsMember({"simple", "eroded"}))->capture_default_str();
  spatial_cmd->add_option("--global-channel", p.global_channel, "add a region covering the whole image")
      ->capture_default_str();
  spatial_cmd->add_option("--global-weight", p.global_weight, "weight of the global region")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  spatial_cmd->add_option("--method", p.method, "guided Gram matrices or guided sums")
      ->check(CLI::IsMember({"gram", "sum"}))->capture_default_str();

  auto* color_cmd = app.add_subcommand("color-preserve", "transfer that keeps the content's colours");
  add_common(*color_cmd, p);
  add_content(*color_cmd, p);
  color_cmd->add_option("--mode", p.mode, "luminance-only transfer or colour histogram matching")
      ->check(CLI::IsMember({"luminance", "histogram"}));
  color_cmd->add_option("--match", p.match, "luminance pre-matching (luminance mode)")
      ->check(CLI::IsMember({"auto", "always", "never"}))->capture_default_str();
  color_cmd->add_option("--root", p.root, "covariance square root (histogram mode)")
      ->check(CLI::IsMember({"eigen", "cholesky"}))->capture_default_str();

  auto* mix_cmd = app.add_subcommand("mix-style", "fine-scale texture of one style on the coarse layout of another");
  add_common(*mix_cmd, p);
  mix_cmd->add_option("--fine", p.fine, "style PNG providing fine-scale statistics");
  mix_cmd->add_option("--coarse", p.coarse, "style PNG providing coarse structure and the initial image");
  mix_cmd->add_option("--fine-layers", p.fine_layers, "layers matched to the fine style")->delimiter(',')
      ->check(CLI::IsMember(conv_names()))->capture_default_str();

  auto* highres_cmd = app.add_subcommand("highres", "coarse-to-fine transfer for large images");
  add_common(*highres_cmd, p);
  add_content(*highres_cmd, p);
  highres_cmd->add_option("--budget", p.budget, "pixel budget (H*W) of the low-resolution pass")
      ->check(CLI::PositiveNumber)->capture_default_str();
  highres_cmd->add_option("--ratio", p.ratio, "low-resolution / refinement iteration ratio")
      ->check(CLI::PositiveNumber)->capture_default_str();
  highres_cmd->add_option("--levels", p.levels, "refinement passes")->check(CLI::PositiveNumber)
      ->capture_default_str();
  highres_cmd->add_option("--refine-iterations", p.refine_iterations,
                          "iterations per refinement pass (default: --iterations / --ratio)")
      ->check(CLI::NonNegativeNumber);

  auto* inspect_cmd = app.add_subcommand("inspect-weights", "print the layer table of an SFW1 file");
  inspect_cmd->add_option("weights", p.weights, "SFW1 file")->required();
  inspect_cmd->add_option("--verify", p.verify, "fail on checksum or architecture mismatch")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == inspect_cmd) return cmd_inspect(p, out);
    if (!p.job.empty()) apply_job(*sub, p.job, err);
    require(std::isfinite(p.content_weight) && std::isfinite(p.style_weight) && std::isfinite(p.global_weight),
            "weights must be finite");
    const auto model_path = resolve_model(p);
    print_header(out, *sub, model_path);
    const NetworkModel model = load_model(model_path, pool_kind(p.pooling));
    if (sub == transfer_cmd) return cmd_transfer(p, model, out);
    if (sub == spatial_cmd) return cmd_spatial(p, model, out);
    if (sub == color_cmd) return cmd_color(p, model, out);
    if (sub == mix_cmd) return cmd_mix(p, model, out);
    return cmd_highres(p, model, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what();
    if (e.iteration()) err << " (iteration " << *e.iteration() << ")";
    err << "\n";
    return exit_numeric;
  } catch (const Error& e) {
    err << "input error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return exit_input;
  }
}

}  // namespace stylectl::cli
