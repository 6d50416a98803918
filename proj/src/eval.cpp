#include "liquidstate/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "liquidstate/error.hpp"

namespace liquidstate {
namespace {

using Clock = std::chrono::steady_clock;

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> keys,
                    std::string_view where) {
  if (!j.is_object()) throw DataError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw DataError(std::string(where) + ": unknown key '" + k + "'");
    }
  }
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<int> subjects_of(std::span<const PressureFrame> frames) {
  std::set<int> s;
  for (const auto& f : frames) s.insert(f.subject_id);
  return {s.begin(), s.end()};
}

// Evenly spaced picks from the training indices.
std::vector<PressureFrame> calibration_subset(std::span<const PressureFrame> frames,
                                              const std::vector<std::size_t>& train,
                                              int count) {
  std::vector<PressureFrame> out;
  const std::size_t n = std::min<std::size_t>(std::size_t(count), train.size());
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(frames[train[k * train.size() / n]]);
  return out;
}

}  // namespace

std::string_view to_string(SplitKind kind) {
  return kind == SplitKind::kRandomShuffle ? "random_shuffle" : "by_subject";
}

SplitKind split_kind_from_string(std::string_view s) {
  if (s == "random_shuffle") return SplitKind::kRandomShuffle;
  if (s == "by_subject") return SplitKind::kBySubject;
  throw DataError("unknown split kind '" + std::string(s) +
                  "' (expected random_shuffle or by_subject)");
}

Split split_random(std::span<const PressureFrame> frames, double test_fraction,
                   std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test fraction must be in (0, 1), got " + std::to_string(test_fraction));
  }
  if (frames.empty()) throw DataError("cannot split an empty dataset");
  const auto n_test = std::size_t(std::llround(test_fraction * double(frames.size())));
  if (n_test == 0 || n_test >= frames.size()) {
    throw DataError("test fraction " + std::to_string(test_fraction) + " of " +
                    std::to_string(frames.size()) + " frames leaves an empty side");
  }
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Split split;
  split.kind = SplitKind::kRandomShuffle;
  split.seed = seed;
  split.test.assign(order.begin(), order.begin() + std::ptrdiff_t(n_test));
  split.train.assign(order.begin() + std::ptrdiff_t(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

Split split_by_subject(std::span<const PressureFrame> frames,
                       const std::vector<int>& train_subjects,
                       const std::optional<std::vector<int>>& test_subjects) {
  const auto present = subjects_of(frames);
  const auto known = [&](int s) { return std::binary_search(present.begin(), present.end(), s); };
  std::set<int> train(train_subjects.begin(), train_subjects.end());
  if (train.empty()) throw DataError("no training subjects given");
  for (int s : train) {
    if (!known(s)) throw DataError("training subject " + std::to_string(s) + " not in dataset");
  }
  std::set<int> test;
  if (test_subjects) {
    for (int s : *test_subjects) {
      if (!known(s)) throw DataError("test subject " + std::to_string(s) + " not in dataset");
      if (train.count(s)) {
        throw DataError("subject " + std::to_string(s) + " is in both train and test");
      }
      test.insert(s);
    }
  } else {
    for (int s : present) {
      if (!train.count(s)) test.insert(s);
    }
  }
  if (test.empty()) throw DataError("subject split leaves an empty test set");

  Split split;
  split.kind = SplitKind::kBySubject;
  split.train_subjects.assign(train.begin(), train.end());
  split.test_subjects.assign(test.begin(), test.end());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (train.count(frames[i].subject_id)) split.train.push_back(i);
    else if (test.count(frames[i].subject_id)) split.test.push_back(i);
  }
  return split;
}

Metrics compute_metrics(std::span<const PostureLabel> predictions,
                        std::span<const PostureLabel> truths) {
  if (predictions.size() != truths.size()) {
    throw DataError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(truths.size()) + " truths");
  }
  if (truths.empty()) throw DataError("metrics: no samples");
  Metrics m;
  m.samples = truths.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++m.confusion[std::size_t(truths[i].id())][std::size_t(predictions[i].id())];
    correct += truths[i] == predictions[i];
  }
  m.accuracy = double(correct) / double(m.samples);

  for (std::size_t c = 0; c < kNumPostures; ++c) {
    auto& s = m.per_class[c];
    const int tp = m.confusion[c][c];
    for (std::size_t k = 0; k < kNumPostures; ++k) {
      s.support += m.confusion[c][k];
      s.predicted += m.confusion[k][c];
    }
    s.precision = s.predicted > 0 ? double(tp) / s.predicted : 0.0;
    s.recall = s.support > 0 ? double(tp) / s.support : 0.0;
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
    if (m.present(int(c))) {
      ++m.classes_present;
      m.macro_precision += s.precision;
      m.macro_recall += s.recall;
      m.macro_f1 += s.f1;
    }
  }
  m.macro_precision /= m.classes_present;
  m.macro_recall /= m.classes_present;
  m.macro_f1 /= m.classes_present;
  return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json per_class = nlohmann::json::array();
  for (int c = 0; c < kNumPostures; ++c) {
    const auto& s = m.per_class[std::size_t(c)];
    per_class.push_back({{"label", std::string(PostureLabel(c).name())},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"support", s.support},
                         {"predicted", s.predicted}});
  }
  return {{"samples", m.samples},
          {"accuracy", m.accuracy},
          {"classes_present", m.classes_present},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"per_class", per_class},
          {"confusion", m.confusion}};
}

Plan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc, {"dataset", "split", "trials", "seed", "config"}, "plan");
  Plan plan;
  try {
    if (doc.contains("dataset")) {
      std::filesystem::path p = doc.at("dataset").get<std::string>();
      plan.dataset = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (doc.contains("seed")) plan.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      reject_unknown(s, {"kind", "test_fraction", "train_subjects", "test_subjects"}, "plan.split");
      plan.split.kind = split_kind_from_string(s.value("kind", std::string("random_shuffle")));
      plan.split.test_fraction = s.value("test_fraction", plan.split.test_fraction);
      if (s.contains("train_subjects")) {
        plan.split.train_subjects = s.at("train_subjects").get<std::vector<int>>();
      }
      if (s.contains("test_subjects")) {
        plan.split.test_subjects = s.at("test_subjects").get<std::vector<int>>();
      }
    }
    if (plan.split.kind == SplitKind::kBySubject && plan.split.train_subjects.empty()) {
      throw DataError("plan.split: by_subject needs train_subjects");
    }
    if (doc.contains("trials")) {
      for (const auto& t : doc.at("trials")) {
        reject_unknown(t, {"pipeline", "coding_number", "name"}, "plan.trials[]");
        TrialSpec trial;
        trial.pipeline.kind = pipeline_kind_from_string(t.at("pipeline").get<std::string>());
        trial.pipeline.coding_number = t.value("coding_number", 1);
        if (trial.pipeline.coding_number < 1) {
          throw DataError("plan.trials[]: coding_number must be >= 1");
        }
        trial.name = t.value("name", std::string(to_string(trial.pipeline.kind)));
        plan.trials.push_back(std::move(trial));
      }
    }
    if (doc.contains("config")) plan.config = run_config_from_json(doc.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("plan: ") + e.what());
  }
  return plan;
}

Plan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open plan " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return plan_from_json(doc, path.parent_path());
}

nlohmann::json plan_to_json(const Plan& plan) {
  nlohmann::json split = {{"kind", std::string(to_string(plan.split.kind))}};
  if (plan.split.kind == SplitKind::kRandomShuffle) {
    split["test_fraction"] = plan.split.test_fraction;
  } else {
    split["train_subjects"] = plan.split.train_subjects;
    if (plan.split.test_subjects) split["test_subjects"] = *plan.split.test_subjects;
  }
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : plan.trials) {
    trials.push_back({{"pipeline", std::string(to_string(t.pipeline.kind))},
                      {"coding_number", t.pipeline.coding_number},
                      {"name", t.name}});
  }
  // Only the file name: the same plan run from another directory must
  // render the same report.
  return {{"dataset", plan.dataset.filename().string()},
          {"split", split},
          {"trials", trials},
          {"seed", plan.seed},
          {"config", plan.config}};
}

Report run_experiment(std::span<const PressureFrame> frames, const Plan& plan, int threads) {
  Report report;
  report.plan = plan;
  if (plan.trials.empty()) return report;
  plan.config.validate();

  report.split = plan.split.kind == SplitKind::kRandomShuffle
                     ? split_random(frames, plan.split.test_fraction, plan.seed)
                     : split_by_subject(frames, plan.split.train_subjects, plan.split.test_subjects);
  const auto& split = report.split;
  std::vector<PressureFrame> train_frames, test_frames;
  std::vector<PostureLabel> train_labels, test_labels;
  for (auto i : split.train) {
    train_frames.push_back(frames[i]);
    train_labels.push_back(frames[i].label);
  }
  for (auto i : split.test) {
    test_frames.push_back(frames[i]);
    test_labels.push_back(frames[i].label);
  }
  spdlog::info("split {}: {} train / {} test frames", to_string(split.kind),
               train_frames.size(), test_frames.size());

  RunConfig config = plan.config;
  config.topology.seed = plan.seed;
  config.train.seed = plan.seed;
  const auto calibration_frames =
      calibration_subset(frames, split.train, config.calibration.batch_size);

  // Reservoirs are keyed by input width, so the binarized-raw trial and
  // the n=1 encoded trial share one.
  std::map<int, PreparedReservoir> reservoirs;

  int index = 0;
  for (const auto& trial : plan.trials) {
    const auto start = Clock::now();
    TrialResult result;
    result.index = ++index;
    result.spec = trial;
    result.train_seed = config.train.seed;

    std::optional<ReservoirTopology> topology;
    if (trial.pipeline.uses_reservoir()) {
      const int width = trial.pipeline.reservoir_input_width();
      auto it = reservoirs.find(width);
      if (it == reservoirs.end()) {
        it = reservoirs.emplace(width, prepare_reservoir(config, trial.pipeline, calibration_frames))
                 .first;
        spdlog::info("reservoir width {}: gamma scale {:.5g}, {:.2f} Hz", width,
                     it->second.calibration.gamma_scale, it->second.calibration.rate_hz);
      }
      topology = it->second.topology;
      result.calibration = it->second.calibration;
      result.topology_seed = config.topology.seed;
    }
    const FeatureExtractor extractor(trial.pipeline, config, std::move(topology));

    const auto train_x = extractor.features(train_frames, threads);
    auto model = train_readout(train_x, train_labels, config.train, trial.pipeline.feature_kind());
    result.epochs = int(model.loss_history.size());
    result.final_loss = model.loss_history.empty() ? 0.0 : model.loss_history.back();

    const auto infer_start = Clock::now();
    const auto test_x = extractor.features(test_frames, threads);
    std::vector<PostureLabel> predicted;
    predicted.reserve(test_frames.size());
    for (std::size_t i = 0; i < test_x.rows(); ++i) {
      predicted.push_back(predict(model, test_x.row(i)).label);
    }
    const auto end = Clock::now();

    result.metrics = compute_metrics(predicted, test_labels);
    result.wall_seconds = std::chrono::duration<double>(end - start).count();
    result.ms_per_frame = std::chrono::duration<double, std::milli>(end - infer_start).count() /
                          double(test_frames.size());
    spdlog::info("trial {} ({}): macro P {:.4f} R {:.4f} F1 {:.4f} in {:.1f} s", result.index,
                 trial.name, result.metrics.macro_precision, result.metrics.macro_recall,
                 result.metrics.macro_f1, result.wall_seconds);
    report.trials.push_back(std::move(result));
  }
  return report;
}

std::string render_markdown(const Report& report) {
  std::ostringstream out;
  out << "# Posture classification report\n\n";
  out << "Scores are macro averages: the unweighted mean over the posture classes that "
         "occur in the test truths or predictions. A class that is never predicted has "
         "precision 0.\n\n";
  out << "Non-encoded SNN trials feed the raw frame as one spike in bin 0 for every cell "
         "with a nonzero reading.\n\n";
  if (report.trials.empty()) {
    out << "No trials.\n";
    return out.str();
  }
  const auto& split = report.split;
  out << "- dataset: " << report.plan.dataset.filename().string() << "\n";
  out << "- split: " << to_string(split.kind);
  if (split.kind == SplitKind::kRandomShuffle) {
    out << " (test fraction " << report.plan.split.test_fraction << ", seed " << split.seed
        << ")";
  } else {
    const auto join = [](const std::vector<int>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    out << " (train subjects " << join(split.train_subjects) << "; test subjects "
        << join(split.test_subjects) << ")";
  }
  out << "\n- frames: " << split.train.size() << " train, " << split.test.size() << " test\n";
  out << "- seed: " << report.plan.seed << "\n\n";

  out << "| Trial | Encoding | Model | Precision | Recall | F1 score |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& t : report.trials) {
    out << "| " << t.index << " | " << encoding_label(t.spec.pipeline) << " | "
        << model_label(t.spec.pipeline) << " | " << fixed4(t.metrics.macro_precision) << " | "
        << fixed4(t.metrics.macro_recall) << " | " << fixed4(t.metrics.macro_f1) << " |\n";
  }
  out << "\n| Trial | Name | Accuracy | Classes | Epochs | Final loss | Reservoir |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& t : report.trials) {
    out << "| " << t.index << " | " << t.spec.name << " | " << fixed4(t.metrics.accuracy)
        << " | " << t.metrics.classes_present << " | " << t.epochs << " | "
        << fixed4(t.final_loss) << " | ";
    if (t.calibration) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "seed %llu, gamma scale %.5g, %.2f Hz",
                    static_cast<unsigned long long>(t.topology_seed), t.calibration->gamma_scale,
                    t.calibration->rate_hz);
      out << buf;
    } else {
      out << "-";
    }
    out << " |\n";
  }
  return out.str();
}

nlohmann::json report_to_json(const Report& report) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : report.trials) {
    nlohmann::json j = {{"trial", t.index},
                        {"name", t.spec.name},
                        {"pipeline", std::string(to_string(t.spec.pipeline.kind))},
                        {"coding_number", t.spec.pipeline.coding_number},
                        {"encoding", encoding_label(t.spec.pipeline)},
                        {"model", model_label(t.spec.pipeline)},
                        {"train_seed", t.train_seed},
                        {"epochs", t.epochs},
                        {"final_loss", t.final_loss},
                        {"metrics", metrics_to_json(t.metrics)}};
    if (t.calibration) {
      j["reservoir"] = {{"seed", t.topology_seed},
                        {"gamma_scale", t.calibration->gamma_scale},
                        {"rate_hz", t.calibration->rate_hz}};
    }
    trials.push_back(std::move(j));
  }
  nlohmann::json split = nullptr;
  if (!report.trials.empty()) {
    split = {{"kind", std::string(to_string(report.split.kind))},
             {"train_frames", report.split.train.size()},
             {"test_frames", report.split.test.size()}};
    if (report.split.kind == SplitKind::kRandomShuffle) {
      split["seed"] = report.split.seed;
    } else {
      split["train_subjects"] = report.split.train_subjects;
      split["test_subjects"] = report.split.test_subjects;
    }
  }
  return {{"format", "liquidstate-report"},
          {"version", 1},
          {"averaging", "macro over classes present in truths or predictions"},
          {"plan", plan_to_json(report.plan)},
          {"split", split},
          {"trials", trials}};
}

nlohmann::json timing_to_json(const Report& report) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : report.trials) {
    trials.push_back({{"trial", t.index},
                      {"name", t.spec.name},
                      {"wall_seconds", t.wall_seconds},
                      {"ms_per_frame", t.ms_per_frame}});
  }
  return {{"trials", trials}};
}

}  // namespace liquidstate
