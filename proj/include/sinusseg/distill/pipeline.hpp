#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sinusseg/distill/config.hpp"
#include "sinusseg/distill/dataset.hpp"
#include "sinusseg/metrics/metrics.hpp"
#include "sinusseg/nets/checkpoint.hpp"
#include "sinusseg/nets/models.hpp"
#include "sinusseg/refiner/refiner.hpp"

namespace sinusseg::distill {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;  // mean optimized loss over the epoch's steps
  double val_dice = 0;
};

/// A trained segmentation network holding its best-validation parameters.
struct TrainedModel {
  std::unique_ptr<nets::SegmentationModel> model;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double best_val_dice = 0;
  std::vector<EpochRecord> history;
  std::string checkpoint_id;  // set by save / load

  nets::CheckpointMeta save(const std::filesystem::path& blob, const std::string& kind,
                            const std::string& config_hash);
  static TrainedModel load(const std::filesystem::path& blob);
};

/// Labeled training data only, supervised loss. The returned model is frozen.
TrainedModel train_teacher(const Dataset& data, const RunConfig& config);

void freeze(nets::SegmentationModel& model);

/// Logits [N,1,H,W] for the given images, computed without gradients.
nets::Tensor predict_logits(const nets::SegmentationModel& model, const std::vector<const GrayImage*>& images);
std::vector<BinaryMask> predict_masks(const nets::SegmentationModel& model, const std::vector<Sample>& samples,
                                      double threshold);

metrics::MetricReport evaluate_model(const nets::SegmentationModel& model, const std::vector<Sample>& samples,
                                     double threshold, const metrics::Provenance& provenance = {});

// --- pseudo labels -----------------------------------------------------------------

struct PseudoLabel {
  BinaryMask initial;
  std::optional<BinaryMask> refined;
};

struct PseudoLabelSet {
  std::map<std::string, PseudoLabel> entries;
  std::string teacher_checkpoint_id;

  /// True when every entry carries a refined mask.
  bool fully_refined() const;
};

/// binarize(sigmoid(teacher(image)), threshold) for every unlabeled sample.
PseudoLabelSet generate_pseudo_labels(const nets::SegmentationModel& teacher, const std::vector<Sample>& unlabeled,
                                      double threshold, const std::string& teacher_checkpoint_id = "");

/// initial masks go to `initial_dir`, refined ones (if any) to `refined_dir`,
/// each with a manifest.json.
void save_pseudo_labels(const PseudoLabelSet& set, const std::filesystem::path& initial_dir,
                        const std::filesystem::path& refined_dir);
PseudoLabelSet load_pseudo_labels(const std::filesystem::path& initial_dir,
                                  const std::optional<std::filesystem::path>& refined_dir = std::nullopt);

/// Domain A: teacher predictions on the labeled training images; domain B:
/// their ground truth. Both resized to the refiner resolution.
refiner::RefinerDataset build_refiner_dataset(const nets::SegmentationModel& teacher,
                                              const std::vector<Sample>& labeled, int resolution, double threshold);

/// Fills `refined` for every entry: resize to the refiner resolution, refine,
/// resize back.
void apply_refiner(const refiner::RefinerModel& model, PseudoLabelSet& set, double threshold);

// --- student -------------------------------------------------------------------------

struct StepRecord {
  long step = 0;
  double sup = 0;
  double wkd = 0;
  double unsup = 0;
  double total = 0;
  double mean_w = 0;
};

std::uint64_t teacher_seed(const RunConfig& config);
/// Independent of the teacher seed; same architecture and init scheme.
std::uint64_t student_seed(const RunConfig& config);

/// Per-sample HD95 between binarized teacher and student predictions turned
/// into KD weights; all ones when weighting is off.
std::vector<double> kd_sample_weights(const std::vector<BinaryMask>& teacher_masks,
                                      const std::vector<BinaryMask>& student_masks, bool use_weighting, double tau,
                                      std::vector<double>* hd95_out = nullptr);

/// Per-step internals exposed to observers (labeled batch only).
struct StepTensors {
  std::span<const float> teacher_logits;
  std::span<const float> student_logits;
  std::vector<double> hd95;
  std::vector<double> weights;
  std::size_t batch = 0;
};

using StepObserver = std::function<void(const StepRecord&, const StepTensors&)>;

struct StudentRun {
  TrainedModel student;
  std::vector<StepRecord> steps;
};

/// Per step: one labeled and one unlabeled batch; minimizes
/// alpha * L_sup + beta * L_wkd + (1 - alpha) * L_unsup, with disabled
/// components fixed at 0. KD uses the labeled batch, plus the unlabeled batch
/// when kd_on_unlabeled is set. The teacher is not modified.
StudentRun train_student(const Dataset& data, const PseudoLabelSet* pseudo, const nets::SegmentationModel& teacher,
                         const RunConfig& config, const StepObserver& observer = {});

void write_step_csv(const std::vector<StepRecord>& steps, const std::filesystem::path& path);
std::vector<StepRecord> read_step_csv(const std::filesystem::path& path);

// --- experiments -------------------------------------------------------------------

/// Phase artifacts shared by every cell of a study; each is built on first use.
class Experiment {
 public:
  Experiment(const Dataset& data, RunConfig base);

  const RunConfig& base() const { return base_; }
  const Dataset& data() const { return data_; }
  TrainedModel& teacher();
  const PseudoLabelSet& initial_pseudo();
  /// Pseudo labels refined by a refiner with or without CBAM.
  const PseudoLabelSet& refined_pseudo(bool use_cbam);
  refiner::RefinerModel& refiner(bool use_cbam);

  void set_teacher(TrainedModel teacher) { teacher_ = std::move(teacher); }
  void set_initial_pseudo(PseudoLabelSet set) { initial_ = std::move(set); }
  void set_refiner(bool use_cbam, refiner::RefinerModel model);

  /// Pseudo labels the flags call for (nullptr when unlabeled data is off).
  const PseudoLabelSet* pseudo_for(const PhaseFlags& flags);
  StudentRun run_student(const RunConfig& config, const StepObserver& observer = {});

 private:
  const Dataset& data_;
  RunConfig base_;
  std::optional<TrainedModel> teacher_;
  std::optional<PseudoLabelSet> initial_;
  std::map<bool, std::unique_ptr<refiner::RefinerModel>> refiners_;
  std::map<bool, PseudoLabelSet> refined_;
};

struct AblationCell {
  std::string name;
  PhaseFlags flags;
  double alpha = 0.5;
};

/// The seven flag rows of the component study.
std::vector<AblationCell> table2_grid();
/// The full method at alpha in {0.1, 0.3, 0.5, 0.7, 0.9}.
std::vector<AblationCell> table3_grid();
std::vector<AblationCell> suite_grid(const std::string& suite);

struct AblationResult {
  AblationCell cell;
  metrics::MetricReport report;
};

/// Runs every cell on the experiment's dataset and scores the student on the
/// test split. `on_cell` sees each result as soon as it exists.
std::vector<AblationResult> ablate(Experiment& experiment, const std::vector<AblationCell>& cells,
                                   const std::function<void(const AblationResult&)>& on_cell = {});

/// Markdown table of aggregate metrics per cell.
std::string comparison_table(const std::vector<AblationResult>& results);

}  // namespace sinusseg::distill
