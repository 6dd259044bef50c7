// bmi: command-line front end for the training simulator.

#include "bmi/calibration.hpp"
#include "bmi/error.hpp"
#include "bmi/hash.hpp"
#include "bmi/json_io.hpp"
#include "bmi/learner.hpp"
#include "bmi/recording.hpp"
#include "bmi/session.hpp"
#include "bmi/transport.hpp"
#include "bmi/util.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace bmi;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

SessionConfig load_config(const Globals& g) {
  SessionConfig c;
  if (!g.config.empty()) c = load_session_config(g.config);
  if (g.seed_set) c.seed = g.seed;
  return c;
}

TimeWindow parse_window(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw UsageError("window must be t0:t1");
  try {
    return {parse_double(parts[0]), parse_double(parts[1])};
  } catch (const FormatError&) {
    throw UsageError("window bounds must be numbers, got '" + text + "'");
  }
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else write_file_atomic(out, text);
}

World world_for(const std::string& path, const SessionConfig& cfg) {
  if (!path.empty()) return read_world(path);
  return resolve(cfg).world;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Body-machine-interface wheelchair training simulator"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "session configuration (JSON)");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "override the session seed");

  // synth
  std::string synth_script, synth_out, synth_save;
  double synth_uninstructed = 0.0;
  auto* synth = app.add_subcommand("synth", "synthesise a .bsr recording from a gesture script");
  synth->add_option("--script", synth_script, "gesture script (.bgs)");
  synth->add_option("--uninstructed", synth_uninstructed, "random calibration movement of this many seconds");
  synth->add_option("--out", synth_out, "output .bsr (default stdout)");
  synth->add_option("--save-script", synth_save, "also write the gesture script used (.bgs)");

  // world
  std::string world_builtin = "corridor", world_out;
  auto* world_cmd = app.add_subcommand("world", "export a built-in world as a .bworld file");
  world_cmd->add_option("name", world_builtin, "built-in world name")->check(CLI::IsMember({"corridor"}));
  world_cmd->add_option("--out", world_out, "output .bworld (default stdout)");

  // calibrate
  std::string cal_in, cal_out, cal_window;
  auto* cal = app.add_subcommand("calibrate", "fit a per-group PCA calibration to a recording");
  cal->add_option("recording", cal_in, "input .bsr")->required();
  cal->add_option("--window", cal_window, "t0:t1 (default whole recording)");
  cal->add_option("--out", cal_out, "output .bcal (default stdout)");

  // replay
  std::string rep_in, rep_out, rep_id;
  auto* rep = app.add_subcommand("replay", "drive a trial from a recording");
  rep->add_option("recording", rep_in, "input .bsr")->required();
  rep->add_option("--trial-id", rep_id, "trial id (default: recording file name)");
  rep->add_option("--out", rep_out, "output .btrial (default stdout)");

  // score
  std::string score_in, score_world, score_plot, score_out;
  auto* score = app.add_subcommand("score", "recompute Dist and E_diff for a trial");
  score->add_option("trial", score_in, "input .btrial")->required();
  score->add_option("--world", score_world, "world file (default: the configured world)");
  score->add_option("--plot", score_plot, "write plot data (JSON) here");
  score->add_option("--out", score_out, "write the report here (default stdout)");

  // curve
  std::vector<std::string> curve_in;
  std::string curve_out;
  auto* curve = app.add_subcommand("curve", "per-trial Dist and E_diff, in the given order");
  curve->add_option("trials", curve_in, "input .btrial files");
  curve->add_option("--out", curve_out, "output CSV (default stdout)");

  // learn
  std::vector<double> learn_sigmas{1.0, 0.5, 0.25, 0.1};
  std::string learn_out;
  auto* learn = app.add_subcommand("learn", "run the scripted-learner suite and write one .btrial per trial");
  learn->add_option("--sigmas", learn_sigmas, "timing-noise schedule, one value per trial");
  learn->add_option("--out", learn_out, "output directory")->required();

  // serve
  std::string listen = "127.0.0.1:7878", serve_out;
  std::size_t max_trials = 0;
  auto* serve = app.add_subcommand("serve", "host a session over TCP");
  serve->add_option("--listen", listen, "host:port (port 0 picks a free port)");
  serve->add_option("--out", serve_out, "directory for completed trials (overrides the config)");
  serve->add_option("--max-trials", max_trials, "exit after this many trials (0 = run until interrupted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCategory::Usage);
  }

  try {
    const SessionConfig cfg = load_config(g);

    if (*synth) {
      if (synth_script.empty() == (synth_uninstructed <= 0.0))
        throw UsageError("give exactly one of --script or --uninstructed");
      const GestureScript script = synth_script.empty() ? uninstructed_movement_script(synth_uninstructed, cfg.seed)
                                                        : read_gesture_script(synth_script);
      Recording rec;
      rec.layout = cfg.layout;
      rec.sample_rate = cfg.signal.sample_rate;
      rec.params_hash = content_hash(to_json(cfg.signal).dump());
      rec.frames = synthesize(script, cfg.signal, cfg.seed, script.duration());
      if (!synth_save.empty()) write_gesture_script(synth_save, script);
      emit(synth_out, format_recording(rec));
    } else if (*world_cmd) {
      emit(world_out, format_world(corridor_world()));
    } else if (*cal) {
      const Recording rec = read_recording(cal_in);
      if (rec.frames.empty()) throw CalibrationError("recording has no frames");
      const TimeWindow w = cal_window.empty() ? TimeWindow{rec.frames.front().t, rec.frames.back().t}
                                              : parse_window(cal_window);
      const CalibrationModel model = fit_calibration(rec.frames, rec.layout, w);
      for (const auto& gc : model.groups)
        std::fprintf(stderr, "%s: explained variance %.4f%s\n", std::string(to_string(gc.group)).c_str(),
                     gc.explained_variance_ratio, gc.unstable ? " (unstable axis)" : "");
      emit(cal_out, format_calibration(model));
    } else if (*rep) {
      const SessionContext ctx = resolve(cfg);
      const Recording rec = read_recording(rep_in);
      if (rec.layout != ctx.calibration.layout) throw ValidationError("recording layout differs from the calibration");
      FrameReplayDriver driver(rec.frames, ctx.calibration, ctx.pipeline);
      TrialRecord trial = run_trial(ctx.world, cfg.vehicle, driver, cfg.trial);
      trial.trial_id = rep_id.empty() ? stem(rep_in) : rep_id;
      trial.config = snapshot(ctx);
      emit(rep_out, format_trial(trial));
    } else if (*score) {
      const TrialRecord trial = read_trial(score_in);
      const World world = world_for(score_world, cfg);
      if (world.id != trial.world_id)
        std::fprintf(stderr, "warning: trial was recorded in world '%s', scoring against '%s'\n",
                     trial.world_id.c_str(), world.id.c_str());
      const MetricReport report = score_trial(trial, world);
      emit(score_out, format_metric_report(report));
      if (!score_plot.empty())
        write_file_atomic(score_plot, format_plot_data(report, world.prescribed_path, trial.path()));
    } else if (*curve) {
      std::vector<TrialRecord> trials;
      for (const auto& p : curve_in) trials.push_back(read_trial(p));
      std::ostringstream os;
      os << "trial_id,dist,e_diff\n";
      for (const auto& pt : learning_curve(trials))
        os << pt.trial_id << ',' << format_double(pt.dist) << ',' << format_double(pt.e_diff) << '\n';
      emit(curve_out, os.str());
    } else if (*learn) {
      const SessionContext ctx = resolve(cfg);
      LearningSuiteSettings s;
      s.sigmas = learn_sigmas;
      s.trial = cfg.trial;
      auto trials =
          run_learning_suite(ctx.world, cfg.vehicle, ctx.calibration, ctx.pipeline, cfg.signal, s, cfg.seed);
      for (auto& t : trials) {
        t.config = snapshot(ctx);
        write_trial((fs::path(learn_out) / (t.trial_id + ".btrial")).string(), t);
        std::printf("%s,%s,%s\n", t.trial_id.c_str(), format_double(t.metrics.dist).c_str(),
                    format_double(t.metrics.e_diff).c_str());
      }
    } else if (*serve) {
      SessionConfig sc = cfg;
      sc.mode = SessionMode::Live;
      if (!serve_out.empty()) sc.out_dir = serve_out;
      ServerOptions opts;
      opts.listen = parse_endpoint(listen);
      SessionServer server(resolve(sc), opts);
      server.on_trial([](const TrialRecord& r) {
        std::printf("trial %s: %s, dist %.6g, e_diff %.6g\n", r.trial_id.c_str(), r.stop_reason.c_str(),
                    r.metrics.dist, r.metrics.e_diff);
        std::fflush(stdout);
      });
      server.start();
      std::printf("listening on %s:%u\n", opts.listen.host.c_str(), static_cast<unsigned>(server.port()));
      std::fflush(stdout);
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      while (!g_stop && (max_trials == 0 || server.trials_persisted() < max_trials))
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      server.stop();
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "bmi: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bmi: %s\n", e.what());
    return 1;
  }
  return 0;
}
