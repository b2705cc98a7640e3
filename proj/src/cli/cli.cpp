#include "shtnet/cli.hpp"

#include <atomic>
#include <exception>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "shtnet/error.hpp"
#include "shtnet/geometry.hpp"
#include "shtnet/harmonics.hpp"
#include "shtnet/profile.hpp"
#include "shtnet/sht_frontend.hpp"
#include "shtnet/simulate.hpp"
#include "shtnet/ssafn.hpp"
#include "shtnet/tensor_io.hpp"
#include "shtnet/wav.hpp"

namespace shtnet::cli {

namespace {

using nlohmann::json;

// Precedence: CLI flag > manifest > built-in default.
class ArgResolver {
 public:
  ArgResolver(json defaults, const std::string& manifest, const std::string& command) : args_(std::move(defaults)) {
    if (!manifest.empty()) {
      const json loaded = load_manifest_args(manifest, command);
      for (const auto& [k, v] : loaded.items()) args_[k] = v;
    }
  }

  template <typename T>
  void override_with(const CLI::Option* opt, const std::string& name, const T& value) {
    if (opt->count() > 0) args_[name] = value;
  }

  const json& args() const noexcept { return args_; }

  template <typename T>
  T get(const std::string& name) const {
    try {
      return args_.at(name).get<T>();
    } catch (const json::exception&) {
      throw Error(Errc::config, "missing or invalid argument '" + name + "'");
    }
  }

 private:
  json args_;
};

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(Errc::config, "bad index '" + item + "' in subset list");
    }
  }
  return out;
}

std::vector<double> parse_seconds(const std::string& text) {
  std::vector<double> out;
  try {
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
      const int lo = std::stoi(text.substr(0, dots));
      const int hi = std::stoi(text.substr(dots + 2));
      if (lo < 1 || hi < lo) throw std::invalid_argument(text);
      for (int s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    }
  } catch (const std::exception&) {
    throw Error(Errc::config, "bad --seconds value '" + text + "' (use A..B or a comma list)");
  }
  for (double s : out) {
    if (!(s > 0.0)) throw Error(Errc::config, "durations must be positive");
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> io_pairs(const json& files) {
  const auto list = files.get<std::vector<std::string>>();
  if (list.empty() || list.size() % 2 != 0) {
    throw Error(Errc::config, "expected INPUT OUTPUT pairs, got " + std::to_string(list.size()) + " paths");
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < list.size(); i += 2) out.emplace_back(list[i], list[i + 1]);
  return out;
}

void write_manifest(const std::filesystem::path& output, const std::string& command, const json& args) {
  write_file(manifest_path(output), make_manifest(command, args).dump(2) + "\n");
}

StftConfig stft_from_args(const json& a) {
  StftConfig cfg;
  cfg.fft_size = a.at("fft_size").get<std::size_t>();
  cfg.frame_len = a.at("frame_len").get<std::size_t>();
  cfg.hop = a.at("hop").get<std::size_t>();
  cfg.validate();
  return cfg;
}

// --- simulate ------------------------------------------------------------

void add_simulate(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("simulate", "Render a plane-wave scene to a multichannel WAV");
  auto scene = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto manifest = std::make_shared<std::string>();
  auto seed = std::make_shared<std::uint64_t>(0);
  auto format = std::make_shared<std::string>("f32");
  auto* o_scene = cmd->add_option("scene", *scene, "Scene JSON");
  auto* o_out = cmd->add_option("output", *output, "Output WAV");
  auto* o_seed = cmd->add_option("--seed", *seed, "Noise seed (overrides the scene's seed)");
  auto* o_fmt = cmd->add_option("--format", *format, "Output sample format")->check(CLI::IsMember({"f32", "pcm16"}));
  cmd->add_option("--manifest", *manifest, "Re-run from a manifest");
  cmd->callback([=, &action, &out] {
    action = [=, &out] {
      ArgResolver r(json{{"format", "f32"}}, *manifest, "simulate");
      r.override_with(o_scene, "scene", *scene);
      r.override_with(o_out, "output", *output);
      r.override_with(o_seed, "seed", *seed);
      r.override_with(o_fmt, "format", *format);
      const auto scene_path = r.get<std::string>("scene");
      const auto out_path = r.get<std::string>("output");

      Scene s = load_scene(scene_path);
      if (r.args().contains("seed")) s.seed = r.get<std::uint64_t>("seed");
      WavData wav;
      wav.sample_rate = static_cast<std::uint32_t>(std::llround(s.fs));
      wav.format = r.get<std::string>("format") == "pcm16" ? SampleFormat::pcm16 : SampleFormat::float32;
      wav.signal = render_scene(s);
      write_wav(out_path, wav);
      write_manifest(out_path, "simulate", r.args());
      out << "wrote " << out_path << " (" << wav.signal.channels() << " channels, " << wav.signal.samples()
          << " samples)\n";
    };
  });
}

// --- transform -----------------------------------------------------------

void add_transform(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("transform", "WAV -> SH-domain magnitude tensor (SHT1)");
  auto files = std::make_shared<std::vector<std::string>>();
  auto geometry = std::make_shared<std::string>();
  auto order = std::make_shared<int>(4);
  auto subset = std::make_shared<std::string>();
  auto fft = std::make_shared<std::size_t>(512);
  auto frame = std::make_shared<std::size_t>(400);
  auto hop = std::make_shared<std::size_t>(160);
  auto jobs = std::make_shared<std::size_t>(1);
  auto manifest = std::make_shared<std::string>();
  auto* o_files = cmd->add_option("files", *files, "INPUT.wav OUTPUT.sht1 pairs");
  auto* o_geom = cmd->add_option("--geometry,-g", *geometry, "Geometry JSON");
  auto* o_order = cmd->add_option("--order,-N", *order, "SHT order N")->check(CLI::Range(0, 30));
  auto* o_subset = cmd->add_option("--subset", *subset, "Comma-separated mic indices (Rand-SHT inference path)");
  auto* o_fft = cmd->add_option("--fft-size", *fft);
  auto* o_frame = cmd->add_option("--frame-len", *frame);
  auto* o_hop = cmd->add_option("--hop", *hop);
  cmd->add_option("--jobs,-j", *jobs, "Parallel files")->check(CLI::PositiveNumber);
  cmd->add_option("--manifest", *manifest, "Re-run from a manifest");
  cmd->callback([=, &action, &out] {
    action = [=, &out] {
      ArgResolver r(json{{"order", 4}, {"fft_size", 512}, {"frame_len", 400}, {"hop", 160}}, *manifest, "transform");
      r.override_with(o_files, "files", *files);
      r.override_with(o_geom, "geometry", *geometry);
      r.override_with(o_order, "order", *order);
      r.override_with(o_subset, "subset", *subset);
      r.override_with(o_fft, "fft_size", *fft);
      r.override_with(o_frame, "frame_len", *frame);
      r.override_with(o_hop, "hop", *hop);
      const json args = r.args();
      const auto pairs = io_pairs(args.at("files"));
      ArrayGeometry g = load_geometry(r.get<std::string>("geometry"));
      std::vector<std::size_t> indices;
      if (args.contains("subset") && !args["subset"].get<std::string>().empty()) {
        indices = parse_index_list(args["subset"].get<std::string>());
        g = subset_geometry(g, indices);
      }
      const ShtPlan plan = build_plan(g, r.get<int>("order"));
      StftConfig cfg = stft_from_args(args);

      std::vector<std::function<void()>> tasks;
      std::mutex out_mutex;
      for (const auto& [in, dst] : pairs) {
        tasks.push_back([&, in = in, dst = dst] {
          const WavData wav = read_wav(in);
          MultichannelSignal sig = indices.empty() ? wav.signal : select_channels(wav.signal, indices);
          if (sig.channels() != plan.mics()) {
            throw Error(Errc::shape, in + " has " + std::to_string(sig.channels()) + " channels but the geometry has " +
                                         std::to_string(plan.mics()) + " microphones");
          }
          StftConfig c = cfg;
          c.sample_rate = wav.sample_rate;
          const MagnitudeTensor a = frontend(sig, plan, c);
          write_sht1(dst, a.tensor());
          json single = args;
          single["files"] = {in, dst};
          write_manifest(dst, "transform", single);
          std::lock_guard lock(out_mutex);
          out << "wrote " << dst << " " << shape_string(a.tensor().shape()) << "\n";
        });
      }
      run_batch(std::move(tasks), *jobs);
    };
  });
}

// --- enhance -------------------------------------------------------------

void add_enhance(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("enhance", "Run the SSAFN forward pass: C x T x F -> T x F");
  auto files = std::make_shared<std::vector<std::string>>();
  auto weights = std::make_shared<std::string>();
  auto jobs = std::make_shared<std::size_t>(1);
  auto manifest = std::make_shared<std::string>();
  auto* o_files = cmd->add_option("files", *files, "INPUT.sht1 OUTPUT.sht1 pairs");
  auto* o_w = cmd->add_option("--weights,-w", *weights, "SSAF weight file");
  cmd->add_option("--jobs,-j", *jobs, "Parallel files")->check(CLI::PositiveNumber);
  cmd->add_option("--manifest", *manifest, "Re-run from a manifest");
  cmd->callback([=, &action, &out] {
    action = [=, &out] {
      ArgResolver r(json::object(), *manifest, "enhance");
      r.override_with(o_files, "files", *files);
      r.override_with(o_w, "weights", *weights);
      const json args = r.args();
      const auto pairs = io_pairs(args.at("files"));
      const ssafn::Weights w = ssafn::load_weights(r.get<std::string>("weights"));

      std::vector<std::function<void()>> tasks;
      std::mutex out_mutex;
      for (const auto& [in, dst] : pairs) {
        tasks.push_back([&, in = in, dst = dst] {
          const Tensor a = read_sht1(in);
          const Tensor y = ssafn::ssafn_forward(a, w);
          write_sht1(dst, y);
          json single = args;
          single["files"] = {in, dst};
          write_manifest(dst, "enhance", single);
          std::lock_guard lock(out_mutex);
          out << "wrote " << dst << " " << shape_string(y.shape()) << "\n";
        });
      }
      run_batch(std::move(tasks), *jobs);
    };
  });
}

// --- weights -------------------------------------------------------------

void add_weights(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("weights", "Create or inspect SSAF weight files");
  cmd->require_subcommand(1);

  auto* init = cmd->add_subcommand("init", "Write seeded random weights");
  auto output = std::make_shared<std::string>();
  auto seed = std::make_shared<std::uint64_t>(0);
  auto order = std::make_shared<int>(4);
  auto fft = std::make_shared<std::size_t>(512);
  auto flags = std::make_shared<std::array<bool, 3>>(std::array<bool, 3>{false, false, false});
  init->add_option("output", *output, "Output .ssaf")->required();
  init->add_option("--seed", *seed);
  init->add_option("--order,-N", *order)->check(CLI::Range(0, 30));
  init->add_option("--fft-size", *fft);
  init->add_flag("--no-joint-attention", (*flags)[0]);
  init->add_flag("--no-rsacc", (*flags)[1]);
  init->add_flag("--no-mhsa", (*flags)[2]);
  init->callback([=, &action, &out] {
    action = [=, &out] {
      ssafn::Config cfg;
      cfg.channels = static_cast<std::size_t>(sh_channel_count(*order));
      cfg.bins = *fft / 2 + 1;
      cfg.joint_attention = !(*flags)[0];
      cfg.rsacc = !(*flags)[1];
      cfg.mhsa = !(*flags)[2];
      const ssafn::Weights w = ssafn::init_weights(cfg, *seed);
      ssafn::save_weights(*output, w);
      write_manifest(*output, "weights init",
                     json{{"output", *output}, {"seed", *seed}, {"config", ssafn::to_json(cfg)}});
      out << "wrote " << *output << " (" << ssafn::param_count(w) << " parameters)\n";
    };
  });

  auto* info = cmd->add_subcommand("info", "Print config and parameter count");
  auto path = std::make_shared<std::string>();
  info->add_option("weights", *path)->required();
  info->callback([=, &action, &out] {
    action = [=, &out] {
      const ssafn::Weights w = ssafn::load_weights(*path);
      json j{{"config", ssafn::to_json(w.config())}, {"params", ssafn::param_count(w)}};
      out << j.dump(2) << "\n";
    };
  });
}

// --- profile -------------------------------------------------------------

void add_profile(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("profile", "Analytic FLOP curves for SHTNet and the BLSTM baseline");
  auto seconds = std::make_shared<std::string>("1..10");
  auto models = std::make_shared<std::string>("shtnet,blstm");
  auto output = std::make_shared<std::string>();
  auto as_json = std::make_shared<bool>(false);
  auto mics = std::make_shared<std::size_t>(8);
  auto order = std::make_shared<int>(4);
  auto manifest = std::make_shared<std::string>();
  auto* o_sec = cmd->add_option("--seconds", *seconds, "Durations: A..B or a comma list");
  auto* o_models = cmd->add_option("--models", *models, "Comma list of shtnet, blstm");
  auto* o_out = cmd->add_option("output", *output, "Output file (stdout if omitted)");
  auto* o_json = cmd->add_flag("--json", *as_json, "Emit JSON instead of CSV");
  auto* o_mics = cmd->add_option("--mics", *mics)->check(CLI::PositiveNumber);
  auto* o_order = cmd->add_option("--order,-N", *order)->check(CLI::Range(0, 30));
  cmd->add_option("--manifest", *manifest, "Re-run from a manifest");
  cmd->callback([=, &action, &out] {
    action = [=, &out] {
      ArgResolver r(json{{"seconds", "1..10"}, {"models", "shtnet,blstm"}, {"json", false}, {"mics", 8}, {"order", 4}},
                    *manifest, "profile");
      r.override_with(o_sec, "seconds", *seconds);
      r.override_with(o_models, "models", *models);
      r.override_with(o_out, "output", *output);
      r.override_with(o_json, "json", *as_json);
      r.override_with(o_mics, "mics", *mics);
      r.override_with(o_order, "order", *order);

      profile::PipelineConfig sht;
      sht.mics = r.get<std::size_t>("mics");
      sht.order = r.get<int>("order");
      sht.ssafn.channels = static_cast<std::size_t>(sh_channel_count(sht.order));
      profile::BlstmConfig blstm;
      blstm.mics = sht.mics;
      const auto secs = parse_seconds(r.get<std::string>("seconds"));
      const auto names = split_csv(r.get<std::string>("models"));
      const auto rows = profile::emit_cost_curve(secs, names, sht, blstm);
      const std::string text = r.get<bool>("json") ? profile::to_json(rows).dump(2) + "\n" : profile::to_csv(rows);
      const std::string dst = r.args().value("output", std::string());
      if (dst.empty()) {
        out << text;
      } else {
        write_file(dst, text);
        write_manifest(dst, "profile", r.args());
      }
      const double longest = *std::max_element(secs.begin(), secs.end());
      std::ostream& report = dst.empty() ? std::cerr : out;
      report << "convention: " << profile::kConvention << "\n";
      report << "reduction vs BLSTM at " << longest << " s: " << profile::reduction_percent(longest, sht, blstm)
             << "%\n";
    };
  });
}

// --- geometry ------------------------------------------------------------

void add_geometry(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("geometry", "Geometry utilities");
  cmd->require_subcommand(1);
  auto* validate = cmd->add_subcommand("validate", "Load, centroid-reference and summarise a geometry file");
  auto path = std::make_shared<std::string>();
  auto fmax = std::make_shared<double>(8000.0);
  auto c = std::make_shared<double>(343.0);
  validate->add_option("geometry", *path)->required();
  validate->add_option("--f-max", *fmax)->check(CLI::PositiveNumber);
  validate->add_option("--speed-of-sound", *c)->check(CLI::PositiveNumber);
  validate->callback([=, &action, &out] {
    action = [=, &out] {
      const ArrayGeometry g = load_geometry(*path);
      bool planar = true;
      for (const auto& p : g.positions()) planar = planar && p.z == 0.0;
      json mics = json::array();
      for (const auto& m : g.mics()) mics.push_back({{"r", m.r}, {"theta", m.theta}, {"phi", m.phi}});
      json j{{"name", g.name()},
             {"mics", g.size()},
             {"max_radius_m", g.max_radius()},
             {"planar", planar},
             {"far_field_min_distance_m", far_field_min_distance(g, *fmax, *c)},
             {"spherical", mics}};
      out << j.dump(2) << "\n";
    };
  });
}

}  // namespace

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& args) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"args", args}};
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p += ".manifest.json";
  return p;
}

nlohmann::json load_manifest_args(const std::filesystem::path& path, const std::string& command) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(Errc::config, "malformed manifest " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("command", std::string()) != command || !j.contains("args") || !j["args"].is_object()) {
    throw Error(Errc::config, "manifest " + path.string() + " is not a '" + command + "' manifest");
  }
  return j["args"];
}

void run_batch(std::vector<std::function<void()>> tasks, std::size_t jobs) {
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SH-domain multichannel frontend: simulate, transform, enhance, profile", kToolName};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  std::function<void()> action;
  add_simulate(app, action, out);
  add_transform(app, action, out);
  add_enhance(app, action, out);
  add_weights(app, action, out);
  add_profile(app, action, out);
  add_geometry(app, action, out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }
  if (!action) return kUserError;
  try {
    action();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::io ? kIoError : kUserError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  }
  return kOk;
}

}  // namespace shtnet::cli
