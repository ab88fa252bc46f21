#include "sinusseg/distill/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sinusseg/core/error.hpp"
#include "sinusseg/data/image_io.hpp"
#include "sinusseg/losses/losses.hpp"
#include "sinusseg/nets/convert.hpp"
#include "sinusseg/nets/optim.hpp"

namespace sinusseg::distill {

using nets::Tensor;

namespace {

constexpr std::size_t kInferenceChunk = 8;

std::uint64_t derived_seed(std::uint64_t seed, const std::string& tag) { return nets::make_rng(seed, tag)(); }

nets::AdamWConfig adamw(const OptimizerSettings& s) {
  nets::AdamWConfig c;
  c.learning_rate = float(s.learning_rate);
  c.weight_decay = float(s.weight_decay);
  return c;
}

void require_size(const std::vector<Sample>& samples, int size, const char* what) {
  for (const auto& s : samples)
    if (s.image.width() != size || s.image.height() != size)
      raise(ErrorKind::Shape, std::string(what) + " image '" + s.id + "' is " + std::to_string(s.image.width()) + "x" +
                                  std::to_string(s.image.height()) + ", the backbone expects " +
                                  std::to_string(size));
}

std::vector<double> values_of(const Tensor& t) { return nets::to_double(t.data()); }

std::string parameter_digest(const nets::ParamStore& store) {
  std::uint64_t h = 1469598103934665603ull;
  for (float v : store.snapshot()) {
    unsigned char bytes[sizeof v];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double mean_val_dice(const nets::SegmentationModel& model, const std::vector<Sample>& val, double threshold) {
  const auto pred = predict_masks(model, val, threshold);
  double sum = 0;
  for (std::size_t i = 0; i < val.size(); ++i)
    sum += metrics::overlap_metrics(metrics::confusion(pred[i], *val[i].mask)).dice;
  return sum / double(val.size());
}

/// Tracks the best-validation parameters across epochs.
class BestKeeper {
 public:
  void offer(int epoch, double val_dice, const nets::ParamStore& params) {
    if (epoch_ == 0 || val_dice > dice_) {
      epoch_ = epoch;
      dice_ = val_dice;
      values_ = params.snapshot();
    }
  }
  void apply(TrainedModel& out) const {
    out.model->params().restore(values_);
    out.best_epoch = epoch_;
    out.best_val_dice = dice_;
  }

 private:
  int epoch_ = 0;
  double dice_ = 0;
  std::vector<float> values_;
};

void check_finite(double v, const char* what, int epoch) {
  if (!std::isfinite(v))
    raise(ErrorKind::Divergence, std::string(what) + " loss became non-finite in epoch " + std::to_string(epoch));
}

}  // namespace

// --- checkpoints ---------------------------------------------------------------

nets::CheckpointMeta TrainedModel::save(const std::filesystem::path& blob, const std::string& kind,
                                        const std::string& config_hash) {
  nets::CheckpointMeta meta;
  meta.kind = kind;
  meta.spec = model->spec();
  meta.seed = seed;
  meta.epoch = best_epoch;
  meta.config_hash = config_hash;
  meta.extra["best_val_dice"] = best_val_dice;
  auto& h = meta.extra["history"] = nlohmann::json::array();
  for (const auto& e : history) h.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_dice", e.val_dice}});
  auto written = nets::save_checkpoint(blob, {{"model", &model->params()}}, meta);
  checkpoint_id = written.checkpoint_id;
  return written;
}

TrainedModel TrainedModel::load(const std::filesystem::path& blob) {
  const auto meta = nets::read_checkpoint_meta(blob);
  TrainedModel out;
  out.model = nets::build_backbone(meta.spec.get<nets::BackboneSpec>(), meta.seed);
  nets::load_checkpoint(blob, {{"model", &out.model->params()}});
  out.seed = meta.seed;
  out.best_epoch = meta.epoch;
  out.best_val_dice = meta.extra.value("best_val_dice", 0.0);
  if (meta.extra.contains("history"))
    for (const auto& e : meta.extra.at("history"))
      out.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_dice").get<double>()});
  out.checkpoint_id = meta.checkpoint_id;
  return out;
}

// --- inference ------------------------------------------------------------------

void freeze(nets::SegmentationModel& model) { model.params().set_requires_grad(false); }

Tensor predict_logits(const nets::SegmentationModel& model, const std::vector<const GrayImage*>& images) {
  if (images.empty()) raise(ErrorKind::Data, "no images to predict");
  nets::NoGradGuard guard;
  std::vector<float> all;
  Tensor last;
  for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
    const std::vector<const GrayImage*> chunk(images.begin() + std::ptrdiff_t(start),
                                              images.begin() + std::ptrdiff_t(std::min(images.size(), start + kInferenceChunk)));
    last = model.forward(nets::stack_images(chunk));
    all.insert(all.end(), last.data().begin(), last.data().end());
  }
  const auto s = last.shape();
  return Tensor::from({int(images.size()), s.c, s.h, s.w}, std::move(all));
}

std::vector<BinaryMask> predict_masks(const nets::SegmentationModel& model, const std::vector<Sample>& samples,
                                      double threshold) {
  if (samples.empty()) return {};
  std::vector<const GrayImage*> images;
  for (const auto& s : samples) images.push_back(&s.image);
  return nets::logits_to_masks(predict_logits(model, images), threshold);
}

metrics::MetricReport evaluate_model(const nets::SegmentationModel& model, const std::vector<Sample>& samples,
                                     double threshold, const metrics::Provenance& provenance) {
  std::vector<Sample> scored;
  for (const auto& s : samples)
    if (s.mask) scored.push_back(s);
  if (scored.empty()) raise(ErrorKind::Data, "no annotated samples to evaluate");
  const auto pred = predict_masks(model, scored, threshold);
  metrics::MetricReport report;
  for (std::size_t i = 0; i < scored.size(); ++i) report.per_image[scored[i].id] = metrics::evaluate_pair(pred[i], *scored[i].mask);
  report.provenance = provenance;
  report.finalize();
  return report;
}

// --- teacher --------------------------------------------------------------------

TrainedModel train_teacher(const Dataset& data, const RunConfig& config) {
  config.validate();
  if (data.labeled.empty()) raise(ErrorKind::Data, "no labeled training samples for the teacher");
  require_size(data.labeled, config.backbone.input_size, "labeled");
  require_size(data.val, config.backbone.input_size, "validation");

  TrainedModel out;
  out.seed = teacher_seed(config);
  out.model = nets::build_backbone(config.backbone, out.seed);
  nets::AdamW opt(out.model->params().tensors(), adamw(config.optimizer));
  auto rng = nets::make_rng(config.seed, "teacher.batches");
  BestKeeper best;

  std::vector<std::size_t> order(data.labeled.size());
  const std::size_t bs = std::size_t(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<const GrayImage*> xs;
      std::vector<const BinaryMask*> ys;
      for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) {
        xs.push_back(&data.labeled[order[k]].image);
        ys.push_back(&*data.labeled[order[k]].mask);
      }
      opt.zero_grad();
      const Tensor logits = out.model->forward(nets::stack_images(xs));
      const auto sup = losses::supervised_loss_grad(values_of(logits), values_of(nets::stack_masks(ys)), xs.size(),
                                                    config.loss.dice_eps);
      check_finite(sup.value, "teacher", epoch);
      nets::backward({{logits, nets::to_float(sup.grad)}});
      opt.step();
      loss_sum += sup.value;
      ++steps;
    }
    const double train_loss = loss_sum / double(steps);
    const double val_dice = data.val.empty() ? -train_loss : mean_val_dice(*out.model, data.val, config.loss.threshold);
    out.history.push_back({epoch, train_loss, val_dice});
    best.offer(epoch, val_dice, out.model->params());
    spdlog::info("teacher epoch {}/{}: loss {:.4f} val dice {:.4f}", epoch, config.epochs, train_loss, val_dice);
  }
  best.apply(out);
  freeze(*out.model);
  return out;
}

// --- pseudo labels --------------------------------------------------------------

bool PseudoLabelSet::fully_refined() const {
  return !entries.empty() &&
         std::all_of(entries.begin(), entries.end(), [](const auto& kv) { return kv.second.refined.has_value(); });
}

PseudoLabelSet generate_pseudo_labels(const nets::SegmentationModel& teacher, const std::vector<Sample>& unlabeled,
                                      double threshold, const std::string& teacher_checkpoint_id) {
  if (unlabeled.empty()) raise(ErrorKind::Data, "no unlabeled samples to pseudo-label");
  const auto masks = predict_masks(teacher, unlabeled, threshold);
  PseudoLabelSet set;
  set.teacher_checkpoint_id = teacher_checkpoint_id;
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    if (!set.entries.emplace(unlabeled[i].id, PseudoLabel{masks[i], std::nullopt}).second)
      raise(ErrorKind::Data, "duplicate unlabeled id '" + unlabeled[i].id + "'");
  }
  return set;
}

void save_pseudo_labels(const PseudoLabelSet& set, const std::filesystem::path& initial_dir,
                        const std::filesystem::path& refined_dir) {
  std::vector<refiner::IdMask> initial, refined;
  for (const auto& [id, label] : set.entries) {
    initial.push_back({id, label.initial});
    if (label.refined) refined.push_back({id, *label.refined});
  }
  refiner::write_refined_labels(initial_dir, initial);
  std::ofstream(initial_dir / "source.json") << nlohmann::json{{"teacher_checkpoint_id", set.teacher_checkpoint_id}}.dump(2)
                                             << '\n';
  if (!refined.empty()) refiner::write_refined_labels(refined_dir, refined);
}

PseudoLabelSet load_pseudo_labels(const std::filesystem::path& initial_dir,
                                  const std::optional<std::filesystem::path>& refined_dir) {
  PseudoLabelSet set;
  for (const auto& [id, path] : refiner::read_label_manifest(initial_dir))
    set.entries[id] = PseudoLabel{data::load_mask(path), std::nullopt};
  std::ifstream source(initial_dir / "source.json");
  if (source) {
    nlohmann::json j;
    source >> j;
    set.teacher_checkpoint_id = j.value("teacher_checkpoint_id", "");
  }
  if (refined_dir) {
    for (const auto& [id, path] : refiner::read_label_manifest(*refined_dir)) {
      auto it = set.entries.find(id);
      if (it == set.entries.end()) raise(ErrorKind::Pairing, "refined label '" + id + "' has no initial pseudo label");
      it->second.refined = data::load_mask(path);
    }
  }
  return set;
}

refiner::RefinerDataset build_refiner_dataset(const nets::SegmentationModel& teacher,
                                              const std::vector<Sample>& labeled, int resolution, double threshold) {
  if (labeled.empty()) raise(ErrorKind::Data, "refiner needs labeled samples");
  const auto pred = predict_masks(teacher, labeled, threshold);
  refiner::RefinerDataset d;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    d.domain_a.push_back({labeled[i].id, resize_nearest(pred[i], resolution, resolution)});
    d.domain_b.push_back({labeled[i].id, resize_nearest(*labeled[i].mask, resolution, resolution)});
  }
  return d;
}

void apply_refiner(const refiner::RefinerModel& model, PseudoLabelSet& set, double threshold) {
  const int res = model.config().resolution;
  std::vector<BinaryMask> inputs;
  for (const auto& [id, label] : set.entries) inputs.push_back(resize_nearest(label.initial, res, res));
  const auto refined = refiner::refine_pseudo_labels(model, inputs, threshold);
  std::size_t i = 0;
  for (auto& [id, label] : set.entries)
    label.refined = resize_nearest(refined[i++], label.initial.width(), label.initial.height());
}

// --- student --------------------------------------------------------------------

std::uint64_t teacher_seed(const RunConfig& config) { return derived_seed(config.seed, "teacher"); }
std::uint64_t student_seed(const RunConfig& config) { return derived_seed(config.seed, "student"); }

std::vector<double> kd_sample_weights(const std::vector<BinaryMask>& teacher_masks,
                                      const std::vector<BinaryMask>& student_masks, bool use_weighting, double tau,
                                      std::vector<double>* hd95_out) {
  if (teacher_masks.size() != student_masks.size())
    raise(ErrorKind::Shape, "kd_sample_weights: teacher and student batches differ in size");
  std::vector<double> hd(teacher_masks.size());
  for (std::size_t i = 0; i < hd.size(); ++i) hd[i] = metrics::hd95_masks(teacher_masks[i], student_masks[i]);
  auto w = use_weighting ? losses::kd_weights(hd, tau) : std::vector<double>(hd.size(), 1.0);
  if (hd95_out) *hd95_out = std::move(hd);
  return w;
}

StudentRun train_student(const Dataset& data, const PseudoLabelSet* pseudo, const nets::SegmentationModel& teacher,
                         const RunConfig& config, const StepObserver& observer) {
  config.validate();
  const auto& flags = config.flags;
  if (data.labeled.empty()) raise(ErrorKind::Data, "no labeled training samples for the student");
  require_size(data.labeled, config.backbone.input_size, "labeled");
  std::vector<const BinaryMask*> targets_u;
  if (flags.use_unlabeled) {
    if (data.unlabeled.empty()) raise(ErrorKind::Data, "use_unlabeled is set but there are no unlabeled samples");
    require_size(data.unlabeled, config.backbone.input_size, "unlabeled");
    if (!pseudo) raise(ErrorKind::Config, "use_unlabeled requires pseudo labels; none were provided");
    if (flags.use_refiner && !pseudo->fully_refined())
      raise(ErrorKind::Config, "use_refiner requires refined pseudo labels for every unlabeled image");
    for (const auto& s : data.unlabeled) {
      auto it = pseudo->entries.find(s.id);
      if (it == pseudo->entries.end()) raise(ErrorKind::Config, "no pseudo label for unlabeled image '" + s.id + "'");
      targets_u.push_back(flags.use_refiner ? &*it->second.refined : &it->second.initial);
    }
  } else if (flags.use_refiner) {
    spdlog::warn("use_refiner has no effect without use_unlabeled");
  }

  StudentRun run;
  auto& out = run.student;
  out.seed = student_seed(config);
  out.model = nets::build_backbone(config.backbone, out.seed);
  nets::AdamW opt(out.model->params().tensors(), adamw(config.optimizer));
  auto rng = nets::make_rng(config.seed, "student.batches");
  BestKeeper best;
  const auto& loss = config.loss;
  const double tau = loss.tau_for(config.backbone.input_size, config.backbone.input_size);
  const std::size_t bs = std::size_t(config.batch_size);

  std::vector<std::size_t> order(data.labeled.size()), order_u(data.unlabeled.size());
  std::size_t cursor_u = order_u.size();  // forces a shuffle on first use
  long step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(order.size(), start + bs) - start;
      std::vector<const GrayImage*> xs;
      std::vector<const BinaryMask*> ys;
      for (std::size_t k = start; k < start + n; ++k) {
        xs.push_back(&data.labeled[order[k]].image);
        ys.push_back(&*data.labeled[order[k]].mask);
      }
      opt.zero_grad();
      const Tensor x_l = nets::stack_images(xs);
      const Tensor s_l = out.model->forward(x_l);
      const auto s_vals = values_of(s_l);
      const auto sup = losses::supervised_loss_grad(s_vals, values_of(nets::stack_masks(ys)), n, loss.dice_eps);

      StepRecord rec{++step, sup.value, 0.0, 0.0, 0.0, 0.0};
      StepTensors tensors;
      tensors.batch = n;
      tensors.student_logits = s_l.data();
      std::vector<double> grad_l(sup.grad.size());
      for (std::size_t i = 0; i < grad_l.size(); ++i) grad_l[i] = loss.alpha * sup.grad[i];

      Tensor t_l;
      losses::Graded wkd_l;
      if (flags.use_kd) {
        {
          nets::NoGradGuard guard;
          t_l = teacher.forward(x_l);
        }
        tensors.teacher_logits = t_l.data();
        const auto t_vals = values_of(t_l);
        tensors.weights = kd_sample_weights(nets::logits_to_masks(t_l, loss.threshold),
                                            nets::logits_to_masks(s_l, loss.threshold), flags.use_weighting, tau,
                                            &tensors.hd95);
        wkd_l = losses::weighted_kd_loss_grad(t_vals, s_vals, tensors.weights, loss.temperature);
        rec.wkd = wkd_l.value;
        rec.mean_w = std::accumulate(tensors.weights.begin(), tensors.weights.end(), 0.0) / double(n);
      }
      const bool kd_u = flags.use_kd && flags.use_unlabeled && flags.kd_on_unlabeled;
      // With KD on both batches, L_wkd is the sample-weighted mean of the two
      // batch terms, i.e. one KD over the concatenated batch.
      const double share_l = kd_u ? double(n) / double(n + bs) : 1.0;
      if (flags.use_kd)
        for (std::size_t i = 0; i < grad_l.size(); ++i) grad_l[i] += loss.beta * share_l * wkd_l.grad[i];
      std::vector<std::pair<Tensor, std::vector<float>>> seeds{{s_l, nets::to_float(grad_l)}};

      if (flags.use_unlabeled) {
        std::vector<const GrayImage*> xu;
        std::vector<const BinaryMask*> yu;
        for (std::size_t k = 0; k < bs; ++k) {
          if (cursor_u == order_u.size()) {
            std::iota(order_u.begin(), order_u.end(), 0);
            std::shuffle(order_u.begin(), order_u.end(), rng);
            cursor_u = 0;
          }
          const std::size_t idx = order_u[cursor_u++];
          xu.push_back(&data.unlabeled[idx].image);
          yu.push_back(targets_u[idx]);
        }
        const Tensor x_u = nets::stack_images(xu);
        const Tensor s_u = out.model->forward(x_u);
        const auto su_vals = values_of(s_u);
        const auto unsup = losses::unsup_loss_grad(su_vals, values_of(nets::stack_masks(yu)));
        rec.unsup = unsup.value;
        auto grad_u = unsup.grad;
        for (auto& g : grad_u) g *= 1.0 - loss.alpha;
        if (kd_u) {
          Tensor t_u;
          {
            nets::NoGradGuard guard;
            t_u = teacher.forward(x_u);
          }
          const auto w_u = kd_sample_weights(nets::logits_to_masks(t_u, loss.threshold),
                                             nets::logits_to_masks(s_u, loss.threshold), flags.use_weighting, tau);
          const auto wkd_u = losses::weighted_kd_loss_grad(values_of(t_u), su_vals, w_u, loss.temperature);
          const double share_u = 1.0 - share_l;
          rec.wkd = share_l * wkd_l.value + share_u * wkd_u.value;
          rec.mean_w = (rec.mean_w * double(n) + std::accumulate(w_u.begin(), w_u.end(), 0.0)) / double(n + bs);
          for (std::size_t i = 0; i < grad_u.size(); ++i) grad_u[i] += loss.beta * share_u * wkd_u.grad[i];
        }
        seeds.push_back({s_u, nets::to_float(grad_u)});
      }

      rec.total = losses::total_loss(rec.sup, rec.wkd, rec.unsup, loss);
      check_finite(rec.total, "student", epoch);
      nets::backward(seeds);
      opt.step();
      if (observer) observer(rec, tensors);
      run.steps.push_back(rec);
      loss_sum += rec.total;
      ++steps;
    }
    const double train_loss = loss_sum / double(steps);
    const double val_dice = data.val.empty() ? -train_loss : mean_val_dice(*out.model, data.val, loss.threshold);
    out.history.push_back({epoch, train_loss, val_dice});
    best.offer(epoch, val_dice, out.model->params());
    spdlog::info("student epoch {}/{}: loss {:.4f} val dice {:.4f}", epoch, config.epochs, train_loss, val_dice);
  }
  best.apply(out);
  freeze(*out.model);
  out.checkpoint_id = parameter_digest(out.model->params());
  return run;
}

void write_step_csv(const std::vector<StepRecord>& steps, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  out << "step,L_sup,L_wkd,L_unsup,L_total,mean_w\n";
  for (const auto& s : steps)
    out << s.step << ',' << s.sup << ',' << s.wkd << ',' << s.unsup << ',' << s.total << ',' << s.mean_w << '\n';
}

std::vector<StepRecord> read_step_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<StepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream s(line);
    StepRecord r;
    if (!(s >> r.step >> r.sup >> r.wkd >> r.unsup >> r.total >> r.mean_w))
      raise(ErrorKind::Format, "malformed step row in " + path.string());
    out.push_back(r);
  }
  return out;
}

// --- experiments ----------------------------------------------------------------

Experiment::Experiment(const Dataset& data, RunConfig base) : data_(data), base_(std::move(base)) { base_.validate(); }

TrainedModel& Experiment::teacher() {
  if (!teacher_) teacher_ = train_teacher(data_, base_);
  return *teacher_;
}

const PseudoLabelSet& Experiment::initial_pseudo() {
  if (!initial_) {
    auto& t = teacher();
    initial_ = generate_pseudo_labels(*t.model, data_.unlabeled, base_.loss.threshold,
                                      t.checkpoint_id.empty() ? parameter_digest(t.model->params()) : t.checkpoint_id);
  }
  return *initial_;
}

refiner::RefinerModel& Experiment::refiner(bool use_cbam) {
  auto& slot = refiners_[use_cbam];
  if (!slot) {
    RunConfig c = base_;
    c.flags.use_cbam = use_cbam;
    const auto rc = c.refiner_config();
    slot = std::make_unique<refiner::RefinerModel>(
        refiner::train_refiner(build_refiner_dataset(*teacher().model, data_.labeled, rc.resolution, base_.loss.threshold), rc));
  }
  return *slot;
}

void Experiment::set_refiner(bool use_cbam, refiner::RefinerModel model) {
  refiners_[use_cbam] = std::make_unique<refiner::RefinerModel>(std::move(model));
  refined_.erase(use_cbam);
}

const PseudoLabelSet& Experiment::refined_pseudo(bool use_cbam) {
  auto it = refined_.find(use_cbam);
  if (it == refined_.end()) {
    PseudoLabelSet set = initial_pseudo();
    apply_refiner(refiner(use_cbam), set, base_.loss.threshold);
    it = refined_.emplace(use_cbam, std::move(set)).first;
  }
  return it->second;
}

const PseudoLabelSet* Experiment::pseudo_for(const PhaseFlags& flags) {
  if (!flags.use_unlabeled) return nullptr;
  return flags.use_refiner ? &refined_pseudo(flags.use_cbam) : &initial_pseudo();
}

StudentRun Experiment::run_student(const RunConfig& config, const StepObserver& observer) {
  return train_student(data_, pseudo_for(config.flags), *teacher().model, config, observer);
}

std::vector<AblationCell> table2_grid() {
  //        unlabeled kd     weighting refiner cbam
  return {{"labeled_only", {false, false, false, false, true}, 0.5},
          {"kd_unweighted", {false, true, false, false, true}, 0.5},
          {"unlabeled_kd_unweighted", {true, true, false, false, true}, 0.5},
          {"refiner_without_cbam", {true, false, false, true, false}, 0.5},
          {"refiner_with_cbam", {true, false, false, true, true}, 0.5},
          {"weighted_kd", {true, true, true, false, true}, 0.5},
          {"full", {true, true, true, true, true}, 0.5}};
}

std::vector<AblationCell> table3_grid() {
  std::vector<AblationCell> out;
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    char name[32];
    std::snprintf(name, sizeof name, "alpha_%.1f", a);
    out.push_back({name, PhaseFlags{}, a});
  }
  return out;
}

std::vector<AblationCell> suite_grid(const std::string& suite) {
  if (suite == "table2") return table2_grid();
  if (suite == "table3") return table3_grid();
  raise(ErrorKind::Config, "unknown ablation suite '" + suite + "' (expected table2 or table3)");
}

std::vector<AblationResult> ablate(Experiment& experiment, const std::vector<AblationCell>& cells,
                                   const std::function<void(const AblationResult&)>& on_cell) {
  std::vector<AblationResult> out;
  for (const auto& cell : cells) {
    RunConfig c = experiment.base();
    c.flags = cell.flags;
    c.loss.alpha = cell.alpha;
    spdlog::info("ablation cell {}", cell.name);
    auto run = experiment.run_student(c);
    metrics::Provenance prov{config_hash(c), c.seed, run.student.checkpoint_id};
    out.push_back({cell, evaluate_model(*run.student.model, experiment.data().test, c.loss.threshold, prov)});
    if (on_cell) on_cell(out.back());
  }
  return out;
}

std::string comparison_table(const std::vector<AblationResult>& results) {
  std::ostringstream s;
  auto mark = [](bool b) { return b ? "yes" : "-"; };
  s << "| cell | unlabeled | kd | weighting | refiner | cbam | alpha | Dice | Recall | Precision | HD95 (px) | HD95 (norm) |\n";
  s << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& r : results) {
    const auto& f = r.cell.flags;
    const auto& a = r.report.aggregate;
    std::snprintf(buf, sizeof buf, "| %s | %s | %s | %s | %s | %s | %.1f | %.4f | %.4f | %.4f | %.2f | %.4f |\n",
                  r.cell.name.c_str(), mark(f.use_unlabeled), mark(f.use_kd), mark(f.use_kd && f.use_weighting),
                  mark(f.use_refiner), mark(f.use_refiner && f.use_cbam), r.cell.alpha, a.dice, a.recall, a.precision,
                  a.hd95, a.hd95_normalized);
    s << buf;
  }
  return s.str();
}

}  // namespace sinusseg::distill
