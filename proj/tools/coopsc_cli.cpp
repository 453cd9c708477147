// coopsc: command-line front end for the semantic HAR pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coopsc/codec.hpp"
#include "coopsc/data_io.hpp"
#include "coopsc/error.hpp"
#include "coopsc/forest.hpp"
#include "coopsc/gradcheck.hpp"
#include "coopsc/overhead.hpp"
#include "coopsc/sim.hpp"
#include "coopsc/synth.hpp"

namespace fs = std::filesystem;
using namespace coopsc;

namespace {

std::vector<LabeledClip> load_clips(const fs::path& frames_path, const fs::path& labels_path) {
  const auto file = read_frames_file(frames_path);
  if (file.height != kFrameSide || file.width != kFrameSide) {
    throw Error(ErrorKind::kShape, "frames file is " + std::to_string(file.height) + "x" +
                                       std::to_string(file.width) + ", codec expects 112x112");
  }
  std::ifstream in(labels_path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open labels file: " + labels_path.string());
  std::vector<Activity> labels;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const auto a = parse_activity(comma == std::string::npos ? line : line.substr(comma + 1));
    if (!a) throw Error(ErrorKind::kFormat, "bad label row: " + line);
    labels.push_back(*a);
  }
  if (file.frames.size() != labels.size() * kSegmentFrames) {
    throw Error(ErrorKind::kShape, std::to_string(labels.size()) + " labels need " +
                                       std::to_string(labels.size() * kSegmentFrames) + " frames, file has " +
                                       std::to_string(file.frames.size()));
  }
  std::vector<LabeledClip> clips(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    clips[i].label = labels[i];
    clips[i].rgb.reserve(kSegmentFrames * kFrameBytes);
    for (std::size_t f = 0; f < kSegmentFrames; ++f) {
      const auto& fr = file.frames[i * kSegmentFrames + f];
      clips[i].rgb.insert(clips[i].rgb.end(), fr.begin(), fr.end());
    }
  }
  return clips;
}

void write_clips(const fs::path& dir, const std::vector<LabeledClip>& clips) {
  FramesFile file;
  for (const auto& c : clips) {
    for (std::size_t f = 0; f < kSegmentFrames; ++f) {
      const auto* p = c.rgb.data() + f * kFrameBytes;
      file.frames.emplace_back(p, p + kFrameBytes);
    }
  }
  write_frames_file(dir / "clips.semf", file);
  std::ofstream labels(dir / "clips_labels.csv");
  labels << "clip,activity\n";
  for (std::size_t i = 0; i < clips.size(); ++i) labels << i << ',' << to_string(clips[i].label) << '\n';
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-oriented semantic communication for home activity recognition"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic accelerometer trace and labelled video clips");
  fs::path gen_out = "data";
  std::size_t gen_clips = 200;
  std::uint64_t gen_seed = 7;
  fs::path gen_config;
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--clips", gen_clips, "Number of 16-frame clips");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--config", gen_config, "Simulation config whose scenario drives the accelerometer trace");

  // train-codec
  auto* tc = app.add_subcommand("train-codec", "Train the video codec end to end through an AWGN link");
  TrainConfig tcfg;
  std::size_t tc_clips = 200;
  std::uint64_t tc_data_seed = 7;
  fs::path tc_frames, tc_labels, tc_out = "codec.semw";
  tc->add_option("--epochs", tcfg.epochs, "Training epochs");
  tc->add_option("--batch", tcfg.batch_size, "Minibatch size");
  tc->add_option("--lr", tcfg.lr.initial, "Initial learning rate");
  tc->add_option("--snr-train", tcfg.snr_train_db, "Training SNR in dB");
  tc->add_option("--momentum", tcfg.momentum, "Heavy-ball momentum (0 for plain SGD)");
  tc->add_option("--seed", tcfg.seed, "Initialisation and shuffling seed");
  tc->add_option("--clips", tc_clips, "Synthetic clips to generate when no frames file is given");
  tc->add_option("--data-seed", tc_data_seed, "Synthetic data seed");
  tc->add_option("--frames", tc_frames, "SEMF file of clips (16 frames each)");
  tc->add_option("--labels", tc_labels, "CSV of clip labels matching --frames");
  tc->add_option("--out", tc_out, "Output model file");

  // train-forest
  auto* tf = app.add_subcommand("train-forest", "Train the posture random forest on synthetic windows");
  ForestConfig fcfg;
  std::size_t tf_per_class = 200;
  std::uint64_t tf_data_seed = 11;
  fs::path tf_out = "forest.semw";
  tf->add_option("--trees", fcfg.n_trees, "Number of trees");
  tf->add_option("--depth", fcfg.max_depth, "Maximum tree depth");
  tf->add_option("--seed", fcfg.seed, "Bootstrap seed");
  tf->add_option("--per-class", tf_per_class, "Training windows per posture");
  tf->add_option("--data-seed", tf_data_seed, "Synthetic data seed");
  tf->add_option("--out", tf_out, "Output forest file");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients on a tiny network");
  std::uint64_t gc_seed = 7;
  gc->add_option("--seed", gc_seed, "Network and input seed");

  // overhead
  auto* oh = app.add_subcommand("overhead", "Communication overhead table");
  bool oh_paper = false, oh_json = false;
  OverheadLedger oh_ledger{kSymbolsPerFeature, 0, 0, kReferenceVideoBits, 0};
  std::vector<double> oh_grid(std::begin(kReferenceSnrGrid), std::end(kReferenceSnrGrid));
  oh->add_flag("--paper", oh_paper, "Use the published accounting (L=4840, N_f=1852, N_t=36, 110 MiB)");
  oh->add_option("--symbols", oh_ledger.symbols_per_frame, "Symbols per feature frame (L)");
  oh->add_option("--frames", oh_ledger.frames_available, "Feature frames available (N_f)");
  oh->add_option("--uploads", oh_ledger.frames_uploaded, "Feature frames uploaded (N_t)");
  oh->add_option("--bits", oh_ledger.video_bits, "MPEG-4 stream size in bits (N_b)");
  oh->add_option("--snr", oh_grid, "SNR grid in dB");
  oh->add_flag("--json", oh_json, "Emit JSON instead of text");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the closed-loop simulation described by a config file");
  fs::path sim_config;
  sim->add_option("--config", sim_config, "Config file")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Accuracy versus test SNR, as CSV");
  fs::path ev_model;
  std::vector<double> ev_snrs{1, 4, 7, 10, 13, 16, 19, 22, 25};
  std::size_t ev_seeds = 5, ev_clips = 200;
  std::uint64_t ev_data_seed = 1007;
  fs::path ev_out;
  ev->add_option("--model", ev_model, "Codec model file")->required();
  ev->add_option("--snr", ev_snrs, "Test SNR grid in dB");
  ev->add_option("--seeds", ev_seeds, "Noise seeds per SNR");
  ev->add_option("--clips", ev_clips, "Held-out synthetic clips");
  ev->add_option("--data-seed", ev_data_seed, "Held-out data seed");
  ev->add_option("--out", ev_out, "CSV output (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) {
      fs::create_directories(gen_out);
      Scenario scenario = gen_config.empty() ? transition_scenario(6, gen_seed) : load_config(gen_config).scenario;
      const auto trace = gen_accel_trace(scenario);
      write_accel_csv(gen_out / "accel.csv", trace.samples);
      std::ofstream labels(gen_out / "accel_labels.csv");
      labels << "second,posture,activity\n";
      for (std::size_t t = 0; t < trace.posture_per_second.size(); ++t) {
        labels << t << ',' << to_string(trace.posture_per_second[t]) << ',' << to_string(scenario.activity_at(t))
               << '\n';
      }
      write_clips(gen_out, make_clip_dataset(gen_clips, VideoNoise{}, gen_seed));
      std::cout << "wrote " << trace.samples.size() << " accelerometer samples and " << gen_clips << " clips to "
                << gen_out.string() << '\n';
    } else if (*tc) {
      std::vector<LabeledClip> data;
      if (!tc_frames.empty()) {
        if (tc_labels.empty()) throw Error(ErrorKind::kConfig, "--frames needs --labels");
        data = load_clips(tc_frames, tc_labels);
      } else {
        data = make_clip_dataset(tc_clips, VideoNoise{}, tc_data_seed);
      }
      const auto result = train(data, tcfg);
      for (const auto& h : result.history) {
        std::cout << "epoch " << h.epoch << " lr " << h.lr << " loss " << fmt("%.4f", h.mean_loss) << " acc "
                  << fmt("%.3f", h.accuracy) << '\n';
      }
      save_model(result.model, tc_out);
      std::cout << "saved " << tc_out.string() << '\n';
    } else if (*tf) {
      const auto data = make_posture_dataset(tf_per_class, AccelNoise{}, tf_data_seed);
      const auto forest = train_forest(data, fcfg);
      std::size_t correct = 0;
      for (const auto& s : data) correct += classify_posture(forest, s.u) == s.label;
      save_forest(forest, tf_out);
      std::cout << "train accuracy " << fmt("%.4f", static_cast<double>(correct) / data.size()) << ", saved "
                << tf_out.string() << '\n';
    } else if (*gc) {
      const auto run = seeded_grad_check(gc_seed);
      std::cout << "max relative error " << fmt("%.3e", run.max_rel_error) << " over " << run.parameters
                << " parameters\n";
      return run.max_rel_error < 1e-4 ? 0 : 1;
    } else if (*oh) {
      const auto ledger = oh_paper ? OverheadLedger::reference() : oh_ledger;
      const auto table = report(ledger, oh_grid, oh_paper ? "reference" : "custom");
      std::cout << (oh_json ? to_json(table).dump(2) + "\n" : to_text(table));
    } else if (*sim) {
      const auto config = load_config(sim_config);
      const auto rep = run_simulation(config);
      std::cout << to_text(rep.overhead);
      std::cout << "posture accuracy " << fmt("%.4f", rep.posture_accuracy()) << " over " << rep.posture_scored
                << " windows\n";
      std::cout << "events " << rep.events.size() << ", uploads " << rep.overhead.ledger.frames_uploaded << '\n';
      for (std::size_t a = 0; a < kNumActivities; ++a) {
        for (std::size_t r = 0; r < kNumRooms; ++r) {
          const auto& c = rep.table[a][r];
          if (c.detections == 0) continue;
          std::cout << to_string(static_cast<Activity>(a)) << " @ " << to_string(static_cast<Room>(r)) << ": "
                    << c.correct << "/" << c.detections << '\n';
        }
      }
    } else if (*ev) {
      const auto model = load_model(ev_model);
      const auto data = make_clip_dataset(ev_clips, VideoNoise{}, ev_data_seed);
      std::vector<std::uint64_t> seeds(ev_seeds);
      for (std::size_t i = 0; i < ev_seeds; ++i) seeds[i] = i + 1;
      const auto grid = evaluate_grid(model, data, ev_snrs, seeds);
      std::ofstream file;
      if (!ev_out.empty()) {
        file.open(ev_out);
        if (!file) throw Error(ErrorKind::kIo, "cannot write " + ev_out.string());
      }
      std::ostream& out = ev_out.empty() ? std::cout : file;
      out << "snr_train_db,snr_test_db,accuracy\n";
      for (std::size_t s = 0; s < ev_snrs.size(); ++s) {
        double mean = 0.0;
        for (double a : grid[s]) mean += a;
        mean /= static_cast<double>(grid[s].size());
        out << model.snr_train_db << ',' << ev_snrs[s] << ',' << fmt("%.4f", mean) << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
