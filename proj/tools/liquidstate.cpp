// liquidstate: command-line front end for data generation, encoding,
// reservoir construction, readout training, evaluation and rendering.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "liquidstate/config.hpp"
#include "liquidstate/error.hpp"
#include "liquidstate/eval.hpp"
#include "liquidstate/pipeline.hpp"
#include "liquidstate/synthgen.hpp"
#include "pgm.hpp"

namespace fs = std::filesystem;
using namespace liquidstate;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Globals {
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string config_path;
  int threads = 1;

  RunConfig config() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed_given || config_path.empty()) {
      cfg.generator.seed = seed;
      cfg.topology.seed = seed;
      cfg.train.seed = seed;
    }
    return cfg;
  }
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("liquidstate");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("LIQUIDSTATE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour it when asked for.
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
    else spdlog::warn("LIQUIDSTATE_LOG={} is not a log level", env);
  }
}

PressureFrame frame_at(const std::vector<PressureFrame>& frames, std::size_t index,
                       const std::string& source) {
  if (index >= frames.size()) {
    throw DataError(source + ": frame index " + std::to_string(index) + " out of range (" +
                    std::to_string(frames.size()) + " frames)");
  }
  return frames[index];
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

struct GenOptions {
  int subjects = 0;
  int per_posture = 0;
  std::optional<double> noise;
  std::optional<int> kyphosis_subject;
  std::string templates;
};

int cmd_gen(const Globals& g, const GenOptions& opt, const std::string& out) {
  auto cfg = g.config().generator;
  if (opt.subjects > 0) cfg.n_subjects = opt.subjects;
  if (opt.per_posture > 0) cfg.frames_per_posture = opt.per_posture;
  if (opt.noise) cfg.noise_sd = *opt.noise;
  if (opt.kyphosis_subject) cfg.kyphosis_subject = *opt.kyphosis_subject;
  else if (cfg.kyphosis_subject > cfg.n_subjects) cfg.kyphosis_subject = 0;
  TemplateSet templates = default_templates();
  if (!opt.templates.empty()) {
    std::ifstream in(opt.templates);
    if (!in) throw DataError("cannot open " + opt.templates);
    try {
      templates = templates_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(opt.templates + ": " + e.what());
    }
  }
  const auto ds = generate_dataset(cfg, templates);
  write_dataset(ds, out);
  std::cout << "wrote " << ds.frames.size() << " frames (" << cfg.n_subjects << " subjects) to "
            << (fs::path(out) / "frames.csv").string() << "\n";
  return 0;
}

int cmd_encode(const Globals& g, const std::string& frames_path, std::size_t index,
               int coding_number, const std::string& out, int scale) {
  auto cfg = g.config();
  if (coding_number > 0) cfg.encoding.coding_number = coding_number;
  const auto frames = load_frames(frames_path);
  const auto frame = frame_at(frames, index, frames_path);
  const auto spikes = encode(normalize_to_phase(frame, cfg.normalization), cfg.encoding);
  std::cout << spikes.rows() << "x" << spikes.bins() << " spike matrix, " << spikes.spike_count()
            << " spikes, label " << frame.label.name() << "\n";
  if (!out.empty()) tools::write_pgm(tools::spike_image(spikes, scale), out);
  return 0;
}

int cmd_build_reservoir(const Globals& g, const std::string& pipeline, int coding_number,
                        const std::string& frames_path, const std::string& out) {
  const auto cfg = g.config();
  PipelineSpec spec{pipeline_kind_from_string(pipeline), std::max(coding_number, 1)};
  if (!spec.uses_reservoir()) throw DataError("pipeline " + pipeline + " has no reservoir");
  std::optional<ReservoirTopology> topology;
  if (!frames_path.empty()) {
    const auto frames = load_frames(frames_path);
    std::vector<PressureFrame> batch;
    const std::size_t n = std::min<std::size_t>(std::size_t(cfg.calibration.batch_size),
                                                frames.size());
    for (std::size_t k = 0; k < n; ++k) batch.push_back(frames[k * frames.size() / n]);
    auto prepared = prepare_reservoir(cfg, spec, batch);
    std::cout << "calibrated gamma scale " << prepared.calibration.gamma_scale << " ("
              << prepared.calibration.rate_hz << " Hz)\n";
    topology = std::move(prepared.topology);
  } else {
    TopologyConfig topo = cfg.topology;
    topo.input_width = spec.reservoir_input_width();
    topology = build_topology(topo);
  }
  save_topology(*topology, out);
  std::cout << topology->size() << " neurons, " << topology->synapses().size()
            << " recurrent and " << topology->input_synapses().size()
            << " input synapses -> " << out << "\n";
  return 0;
}

std::optional<ReservoirTopology> maybe_topology(const PipelineSpec& spec,
                                                const std::string& path) {
  if (!spec.uses_reservoir()) return std::nullopt;
  if (path.empty()) {
    throw DataError("pipeline " + std::string(to_string(spec.kind)) +
                    " needs --topology (see build-reservoir)");
  }
  return load_topology(path);
}

int cmd_train(const Globals& g, const std::string& pipeline, int coding_number,
              const std::string& frames_path, const std::string& topology_path,
              const std::string& out) {
  const auto cfg = g.config();
  PipelineSpec spec{pipeline_kind_from_string(pipeline), std::max(coding_number, 1)};
  const FeatureExtractor extractor(spec, cfg, maybe_topology(spec, topology_path));
  const auto frames = load_frames(frames_path);
  std::vector<PostureLabel> labels;
  for (const auto& f : frames) labels.push_back(f.label);
  auto model = train_readout(extractor.features(frames, g.threads), labels, cfg.train,
                             spec.feature_kind());
  model.pipeline = extractor.describe();
  save_model(model, out);
  std::cout << "trained on " << frames.size() << " frames, " << model.loss_history.size()
            << " epochs, final loss " << model.loss_history.back() << " -> " << out << "\n";
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& topology_path,
                 const std::string& frames_path) {
  auto model = load_model(model_path);
  std::optional<ReservoirTopology> topology;
  if (!topology_path.empty()) topology = load_topology(topology_path);
  const PostureClassifier classifier(std::move(model), std::move(topology));
  const auto frames = load_frames(frames_path);
  const auto start = std::chrono::steady_clock::now();
  for (const auto& frame : frames) {
    const auto p = classifier.classify(frame);
    std::cout << p.label.name();
    for (double q : p.probabilities) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "\t%.6f", q);
      std::cout << buf;
    }
    std::cout << "\n";
  }
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start).count();
  spdlog::info("classified {} frames, {:.3f} ms/frame", frames.size(),
               frames.empty() ? 0.0 : ms / double(frames.size()));
  return 0;
}

int cmd_eval(const Globals& g, const std::string& plan_path, const std::string& dataset,
             const std::string& out) {
  auto plan = load_plan(plan_path);
  if (!g.config_path.empty()) plan.config = load_run_config(g.config_path);
  if (g.seed_given) plan.seed = g.seed;
  if (!dataset.empty()) plan.dataset = dataset;
  std::vector<PressureFrame> frames;
  if (!plan.trials.empty()) {
    if (plan.dataset.empty()) throw DataError(plan_path + ": plan names no dataset");
    frames = load_frames(plan.dataset);
  }
  const auto report = run_experiment(frames, plan, g.threads);
  const auto markdown = render_markdown(report);
  std::cout << markdown;
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "report.md", markdown);
    write_text(fs::path(out) / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(fs::path(out) / "timing.json", timing_to_json(report).dump(2) + "\n");
  }
  return 0;
}

int cmd_render(const Globals& g, const std::string& kind, const std::string& frames_path,
               std::size_t index, int coding_number, const std::string& topology_path,
               const std::string& out, int scale) {
  auto cfg = g.config();
  if (coding_number > 0) cfg.encoding.coding_number = coding_number;
  const auto frames = load_frames(frames_path);
  const auto frame = frame_at(frames, index, frames_path);
  if (kind == "heatmap") {
    tools::write_pgm(tools::frame_heatmap(frame, scale > 0 ? scale : 16), out);
    return 0;
  }
  const auto spikes = encode(normalize_to_phase(frame, cfg.normalization), cfg.encoding);
  if (kind == "encoded") {
    tools::write_pgm(tools::spike_image(spikes, scale > 0 ? scale : 4), out);
    return 0;
  }
  if (topology_path.empty()) throw DataError("render raster needs --topology");
  const auto topology = load_topology(topology_path);
  SpikeRaster raster;
  const auto state = simulate(topology, cfg.neuron, spikes, cfg.window_ms, &raster);
  tools::write_pgm(tools::raster_image(raster, scale > 0 ? scale : 2), out);
  std::cout << state.total() << " reservoir spikes\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Sitting-posture recognition with a liquid state machine"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every random stream")
                       ->capture_default_str();
  app.add_option("--config", g.config_path, "RunConfig JSON; flags override it")
      ->check(CLI::ExistingFile);
  app.add_option("--threads", g.threads, "Worker threads for feature extraction")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  std::string frames_path, out, topology_path, model_path, plan_path, dataset, kind = "heatmap";
  std::string pipeline = "snn-lr-encoded";
  GenOptions gen_opt;
  int coding_number = 0, scale = 0, encode_scale = 4;
  std::size_t index = 0;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic pressure-frame dataset");
  gen->add_option("--subjects", gen_opt.subjects, "Number of subjects");
  gen->add_option("--per-posture", gen_opt.per_posture, "Frames per subject and posture");
  gen->add_option("--noise", gen_opt.noise, "Sensor noise sd in ADC counts");
  gen->add_option("--kyphosis-subject", gen_opt.kyphosis_subject,
                  "Subject with a rounded upper back (0 for none)");
  gen->add_option("--templates", gen_opt.templates, "Posture template JSON")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();

  auto* enc = app.add_subcommand("encode", "Encode one frame into a spike matrix");
  enc->add_option("--frames", frames_path, "Frame CSV")->required()->check(CLI::ExistingFile);
  enc->add_option("--index", index, "Frame index in the file");
  enc->add_option("--coding-number", coding_number, "Phase channels per cell");
  enc->add_option("--out", out, "Write the spike matrix as PGM");
  enc->add_option("--scale", encode_scale, "Pixels per bin")->capture_default_str();

  const auto add_pipeline = [&](CLI::App* cmd) {
    cmd->add_option("--pipeline", pipeline, "lr-raw, lr-encoded, snn-lr-raw or snn-lr-encoded")
        ->capture_default_str();
    cmd->add_option("--coding-number", coding_number, "Phase channels per cell (default 1)");
  };

  auto* build = app.add_subcommand("build-reservoir", "Build (and calibrate) a reservoir");
  add_pipeline(build);
  build->add_option("--frames", frames_path, "Calibrate the weight scale on these frames")
      ->check(CLI::ExistingFile);
  build->add_option("--out", out, "Topology JSON")->required();

  auto* train = app.add_subcommand("train", "Train a readout");
  add_pipeline(train);
  train->add_option("--frames", frames_path, "Training frames")->required()
      ->check(CLI::ExistingFile);
  train->add_option("--topology", topology_path, "Reservoir topology JSON")
      ->check(CLI::ExistingFile);
  train->add_option("--out", out, "Model JSON")->required();

  auto* eval = app.add_subcommand("eval", "Run an experiment plan");
  eval->add_option("--plan", plan_path, "Plan JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", dataset, "Override the plan's dataset");
  eval->add_option("--out", out, "Directory for report.md, report.json and timing.json");

  auto* classify = app.add_subcommand("classify", "Classify every frame in a file");
  classify->add_option("--model", model_path, "Model JSON")->required()
      ->check(CLI::ExistingFile);
  classify->add_option("--topology", topology_path, "Reservoir topology JSON")
      ->check(CLI::ExistingFile);
  classify->add_option("--frames", frames_path, "Frame CSV")->required()
      ->check(CLI::ExistingFile);

  auto* render = app.add_subcommand("render", "Write a frame, encoding or raster as PGM");
  render->add_option("--kind", kind, "heatmap, encoded or raster")
      ->capture_default_str()
      ->check(CLI::IsMember({"heatmap", "encoded", "raster"}));
  render->add_option("--frames", frames_path, "Frame CSV")->required()
      ->check(CLI::ExistingFile);
  render->add_option("--index", index, "Frame index in the file");
  render->add_option("--coding-number", coding_number, "Phase channels per cell");
  render->add_option("--topology", topology_path, "Reservoir topology JSON (raster)")
      ->check(CLI::ExistingFile);
  render->add_option("--out", out, "Output PGM")->required();
  render->add_option("--scale", scale, "Pixels per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*gen) return cmd_gen(g, gen_opt, out);
    if (*enc) return cmd_encode(g, frames_path, index, coding_number, out, encode_scale);
    if (*build) return cmd_build_reservoir(g, pipeline, coding_number, frames_path, out);
    if (*train) return cmd_train(g, pipeline, coding_number, frames_path, topology_path, out);
    if (*eval) return cmd_eval(g, plan_path, dataset, out);
    if (*classify) return cmd_classify(model_path, topology_path, frames_path);
    if (*render) {
      return cmd_render(g, kind, frames_path, index, coding_number, topology_path, out, scale);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
