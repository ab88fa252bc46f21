#include "sinusseg/cli/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sinusseg/cli/overlay.hpp"
#include "sinusseg/cli/run_dir.hpp"
#include "sinusseg/core/error.hpp"
#include "sinusseg/data/image_io.hpp"
#include "sinusseg/data/phantom.hpp"
#include "sinusseg/data/rasterize.hpp"
#include "sinusseg/data/split.hpp"
#include "sinusseg/data/via_csv.hpp"
#include "sinusseg/distill/pipeline.hpp"
#include "sinusseg/metrics/metrics.hpp"

namespace sinusseg::cli {

namespace fs = std::filesystem;
using distill::RunConfig;

namespace {

struct Options {
  std::string config;
  std::string run_dir;
  bool force = false;

  // make-phantoms
  std::string out;
  std::optional<std::size_t> count;
  std::optional<int> size;
  std::optional<std::uint64_t> seed;
  // ingest-via
  std::string csv;
  std::string images;
  // split
  std::string source;
  // evaluate
  std::string pred;
  std::string gt;
  std::string model = "student";
  std::string split = "test";
  std::string mode = "foreground";
  // ablate
  std::string suite;
  // report
  bool overlays = false;
};

void log_to_run_dir(const RunDirectory& rd, const std::string& command) {
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>((rd.logs() / "cli.log").string());
  auto logger = std::make_shared<spdlog::logger>("sinusseg", spdlog::sinks_init_list{console, file});
  logger->set_level(spdlog::get_level());
  spdlog::set_default_logger(logger);
  spdlog::info("== {} in {}", command, rd.root().string());
}

/// Resolves the run config: --config is bound into the run directory (write
/// or verify), otherwise the existing snapshot is used.
RunConfig resolve_config(const Options& o, const RunDirectory& rd) {
  if (!o.config.empty()) {
    const auto cfg = distill::load_run_config(o.config);
    rd.bind_config(cfg, o.force);
    return cfg;
  }
  return rd.load_config();
}

RunDirectory open_run_dir(const Options& o, const std::string& command) {
  if (o.run_dir.empty()) raise(ErrorKind::Argument, command + " needs --run-dir");
  RunDirectory rd(o.run_dir);
  rd.create_layout();
  log_to_run_dir(rd, command);
  return rd;
}

bool skip_if_done(const RunDirectory& rd, const std::string& phase, const std::string& hash, bool force) {
  if (force || !rd.is_stamped(phase, hash)) return false;
  spdlog::info("{} is up to date for config {}; pass --force to recompute", phase, hash);
  return true;
}

data::SplitManifest load_split(const RunDirectory& rd) {
  RunDirectory::require(rd.split_path(), "split manifest", "sinusseg split");
  return data::load_manifest(rd.split_path());
}

distill::Dataset load_data(const RunDirectory& rd, const RunConfig& cfg) {
  return distill::load_dataset(load_split(rd), rd.root(), cfg.backbone.input_size);
}

fs::path teacher_path(const RunDirectory& rd) { return rd.checkpoints() / "teacher.bin"; }
fs::path student_path(const RunDirectory& rd) { return rd.checkpoints() / "student.bin"; }
fs::path refiner_path(const RunDirectory& rd, bool cbam) {
  return rd.checkpoints() / (cbam ? "refiner.bin" : "refiner_no_cbam.bin");
}

distill::TrainedModel load_teacher(const RunDirectory& rd) {
  RunDirectory::require(teacher_path(rd), "teacher checkpoint", "sinusseg train-teacher");
  auto t = distill::TrainedModel::load(teacher_path(rd));
  distill::freeze(*t.model);
  return t;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

// --- subcommands -------------------------------------------------------------------

int cmd_make_phantoms(const Options& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = distill::load_run_config(o.config);
  const std::size_t n = o.count.value_or(cfg.data.phantom_count);
  const int size = o.size.value_or(cfg.data.image_size);
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  const fs::path out = fs::absolute(o.out);
  if (fs::exists(out / "manifest.json") && !o.force)
    raise(ErrorKind::Config, out.string() + " already holds a dataset; pass --force to overwrite");
  auto manifest = data::generate_phantom_dataset(n, size, seed, out);
  data::save_manifest(manifest, out / "manifest.json");
  spdlog::info("wrote {} phantoms ({}x{}, seed {}) to {}", n, size, size, seed, out.string());
  return kExitOk;
}

int cmd_ingest_via(const Options& o) {
  const fs::path out = fs::absolute(o.out), images = fs::absolute(o.images);
  if (fs::exists(out / "manifest.json") && !o.force)
    raise(ErrorKind::Config, out.string() + " already holds a dataset; pass --force to overwrite");
  const auto parsed = data::parse_via_csv(o.csv);
  for (const auto& w : parsed.warnings) spdlog::warn("{}", w);

  std::map<std::string, std::vector<data::PolygonAnnotation>> by_image;
  for (const auto& p : parsed.polygons) by_image[p.image_id].push_back(p);

  std::error_code ec;
  fs::create_directories(out / "masks", ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + (out / "masks").string() + ": " + ec.message());

  data::SplitManifest manifest;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.path().extension() != ".png") continue;
    data::SampleRecord rec;
    rec.image_id = entry.path().stem().string();
    rec.image_path = entry.path();
    if (auto it = parsed.metadata.find(rec.image_id); it != parsed.metadata.end()) rec.metadata = it->second;
    if (auto it = by_image.find(rec.image_id); it != by_image.end()) {
      const auto [w, h] = data::png_dimensions(entry.path());
      const auto raster = data::rasterize_polygons(it->second, w, h);
      for (const auto& warn : raster.warnings) spdlog::warn("{}: {}", rec.image_id, warn);
      rec.mask_path = out / "masks" / (rec.image_id + ".png");
      data::save_mask(raster.mask, *rec.mask_path);
      rec.labeled = true;
      by_image.erase(it);
    }
    manifest.records.push_back(std::move(rec));
  }
  for (const auto& [id, polys] : by_image) spdlog::warn("annotation for {} has no image in {}", id, images.string());
  std::sort(manifest.records.begin(), manifest.records.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  manifest.counts = data::SplitManifest::tally(manifest.records);
  data::save_manifest(manifest, out / "manifest.json");
  spdlog::info("ingested {} images ({} annotated) into {}", manifest.records.size(), manifest.counts.train_labeled,
               out.string());
  return kExitOk;
}

int cmd_split(const Options& o) {
  auto rd = open_run_dir(o, "split");
  const auto cfg = resolve_config(o, rd);
  const auto hash = distill::config_hash(cfg);
  if (skip_if_done(rd, "split", hash, o.force)) return kExitOk;
  if (o.source.empty()) raise(ErrorKind::Argument, "split needs --source (a dataset directory with manifest.json)");
  const fs::path source = fs::absolute(o.source);
  RunDirectory::require(source / "manifest.json", "dataset manifest", "sinusseg make-phantoms or ingest-via");
  auto records = data::load_manifest(source / "manifest.json").records;
  for (auto& r : records) {
    if (r.image_path.is_relative()) r.image_path = source / r.image_path;
    if (r.mask_path && r.mask_path->is_relative()) r.mask_path = source / *r.mask_path;
  }
  const std::size_t held_out = cfg.data.val + cfg.data.test;
  if (records.size() <= held_out)
    raise(ErrorKind::Count, "dataset has " + std::to_string(records.size()) + " records; " +
                                std::to_string(held_out) + " are needed for validation and test alone");
  const double fraction = double(cfg.data.labeled) / double(records.size() - held_out);
  const auto manifest = data::build_split_manifest(records, {std::min(1.0, fraction), cfg.data.val, cfg.data.test}, cfg.seed);
  data::save_manifest(manifest, rd.split_path());
  rd.stamp("split", hash);
  spdlog::info("split: {} labeled, {} unlabeled, {} val, {} test", manifest.counts.train_labeled,
               manifest.counts.train_unlabeled, manifest.counts.val, manifest.counts.test);
  return kExitOk;
}

int cmd_train_teacher(const Options& o) {
  auto rd = open_run_dir(o, "train-teacher");
  const auto cfg = resolve_config(o, rd);
  const auto hash = distill::config_hash(cfg);
  if (skip_if_done(rd, "train-teacher", hash, o.force)) return kExitOk;
  const auto data = load_data(rd, cfg);
  auto teacher = distill::train_teacher(data, cfg);
  const auto meta = teacher.save(teacher_path(rd), "teacher", hash);
  std::ofstream log(rd.logs() / "teacher_epochs.csv");
  log << "epoch,train_loss,val_dice\n";
  log.precision(17);
  for (const auto& e : teacher.history) log << e.epoch << ',' << e.train_loss << ',' << e.val_dice << '\n';
  rd.stamp("train-teacher", hash);
  spdlog::info("teacher {} saved (best epoch {}, val dice {:.4f})", meta.checkpoint_id, teacher.best_epoch,
               teacher.best_val_dice);
  return kExitOk;
}

int cmd_gen_pseudo(const Options& o) {
  auto rd = open_run_dir(o, "gen-pseudo");
  const auto cfg = resolve_config(o, rd);
  const auto hash = distill::config_hash(cfg);
  if (skip_if_done(rd, "gen-pseudo", hash, o.force)) return kExitOk;
  const auto teacher = load_teacher(rd);
  const auto data = load_data(rd, cfg);
  const auto set = distill::generate_pseudo_labels(*teacher.model, data.unlabeled, cfg.loss.threshold,
                                                   teacher.checkpoint_id);
  distill::save_pseudo_labels(set, rd.pseudo_labels(), rd.refined_labels());
  rd.stamp("gen-pseudo", hash);
  spdlog::info("wrote {} pseudo labels", set.entries.size());
  return kExitOk;
}

int cmd_train_refiner(const Options& o) {
  auto rd = open_run_dir(o, "train-refiner");
  const auto cfg = resolve_config(o, rd);
  const auto hash = distill::config_hash(cfg);
  if (skip_if_done(rd, "train-refiner", hash, o.force)) return kExitOk;
  const auto teacher = load_teacher(rd);
  const auto data = load_data(rd, cfg);
  const auto rc = cfg.refiner_config();
  refiner::RefinerHooks hooks;
  hooks.diagnostic_checkpoint = rd.checkpoints() / "refiner_diverged.bin";
  auto model = refiner::train_refiner(
      distill::build_refiner_dataset(*teacher.model, data.labeled, rc.resolution, cfg.loss.threshold), rc, hooks);
  model.save(refiner_path(rd, cfg.flags.use_cbam), hash);
  refiner::write_loss_csv(model.history, rd.logs() / (cfg.flags.use_cbam ? "refiner_losses.csv" : "refiner_no_cbam_losses.csv"));
  rd.stamp("train-refiner", hash);
  return kExitOk;
}

int cmd_refine(const Options& o) {
  auto rd = open_run_dir(o, "refine");
  const auto cfg = resolve_config(o, rd);
  const auto hash = distill::config_hash(cfg);
  if (skip_if_done(rd, "refine", hash, o.force)) return kExitOk;
  RunDirectory::require(rd.pseudo_labels() / "manifest.json", "pseudo-label manifest", "sinusseg gen-pseudo");
  RunDirectory::require(refiner_path(rd, cfg.flags.use_cbam), "refiner checkpoint", "sinusseg train-refiner");
  auto set = distill::load_pseudo_labels(rd.pseudo_labels());
  const auto model = refiner::RefinerModel::load(refiner_path(rd, cfg.flags.use_cbam));
  distill::apply_refiner(model, set, cfg.loss.threshold);
  std::vector<refiner::IdMask> refined;
  for (const auto& [id, label] : set.entries) refined.push_back({id, *label.refined});
  refiner::write_refined_labels(rd.refined_labels(), refined);
  rd.stamp("refine", hash);
  spdlog::info("refined {} pseudo labels", refined.size());
  return kExitOk;
}

int cmd_train_student(const Options& o) {
  auto rd = open_run_dir(o, "train-student");
  const auto cfg = resolve_config(o, rd);
  const auto hash = distill::config_hash(cfg);
  if (skip_if_done(rd, "train-student", hash, o.force)) return kExitOk;
  std::optional<distill::PseudoLabelSet> pseudo;
  if (cfg.flags.use_unlabeled) {
    RunDirectory::require(rd.pseudo_labels() / "manifest.json", "pseudo-label manifest", "sinusseg gen-pseudo");
    std::optional<fs::path> refined;
    if (cfg.flags.use_refiner) {
      RunDirectory::require(rd.refined_labels() / "manifest.json", "refined-label manifest", "sinusseg refine");
      refined = rd.refined_labels();
    }
    pseudo = distill::load_pseudo_labels(rd.pseudo_labels(), refined);
  }
  const auto teacher = load_teacher(rd);
  const auto data = load_data(rd, cfg);
  auto run = distill::train_student(data, pseudo ? &*pseudo : nullptr, *teacher.model, cfg);
  const auto meta = run.student.save(student_path(rd), "student", hash);
  distill::write_step_csv(run.steps, rd.logs() / "student_steps.csv");
  rd.stamp("train-student", hash);
  spdlog::info("student {} saved (best epoch {}, val dice {:.4f})", meta.checkpoint_id, run.student.best_epoch,
               run.student.best_val_dice);
  return kExitOk;
}

metrics::PointMode point_mode(const std::string& mode) {
  if (mode == "foreground") return metrics::PointMode::Foreground;
  if (mode == "boundary") return metrics::PointMode::Boundary;
  raise(ErrorKind::Argument, "unknown --mode '" + mode + "' (foreground or boundary)");
}

int cmd_evaluate(const Options& o) {
  if (!o.pred.empty() || !o.gt.empty()) {
    if (o.pred.empty() || o.gt.empty() || o.out.empty())
      raise(ErrorKind::Argument, "directory evaluation needs --pred, --gt and --out");
    const auto report = metrics::evaluate_dataset(o.pred, o.gt, point_mode(o.mode));
    metrics::save_report(report, o.out);
    spdlog::info("dice {:.4f} recall {:.4f} precision {:.4f} hd95 {:.3f} px over {} images", report.aggregate.dice,
                 report.aggregate.recall, report.aggregate.precision, report.aggregate.hd95, report.per_image.size());
    return kExitOk;
  }
  auto rd = open_run_dir(o, "evaluate");
  const auto cfg = resolve_config(o, rd);
  if (o.model != "teacher" && o.model != "student") raise(ErrorKind::Argument, "--model must be teacher or student");
  const auto path = o.model == "teacher" ? teacher_path(rd) : student_path(rd);
  RunDirectory::require(path, o.model + " checkpoint", "sinusseg train-" + o.model);
  const auto model = distill::TrainedModel::load(path);
  const auto data = load_data(rd, cfg);
  const auto& samples = o.split == "val" ? data.val : data.test;
  if (o.split != "val" && o.split != "test") raise(ErrorKind::Argument, "--split must be val or test");
  const auto report = distill::evaluate_model(*model.model, samples, cfg.loss.threshold,
                                              {distill::config_hash(cfg), cfg.seed, model.checkpoint_id});
  const auto out = o.out.empty() ? rd.reports() / (o.model + "_" + o.split + ".json") : fs::path(o.out);
  metrics::save_report(report, out);
  spdlog::info("{} on {}: dice {:.4f} hd95 {:.3f} px -> {}", o.model, o.split, report.aggregate.dice,
               report.aggregate.hd95, out.string());
  return kExitOk;
}

int cmd_ablate(const Options& o) {
  auto rd = open_run_dir(o, "ablate");
  const auto cfg = resolve_config(o, rd);
  const auto cells = distill::suite_grid(o.suite);
  const auto data = load_data(rd, cfg);
  distill::Experiment ex(data, cfg);
  if (fs::exists(teacher_path(rd))) ex.set_teacher(load_teacher(rd));
  if (fs::exists(rd.pseudo_labels() / "manifest.json")) ex.set_initial_pseudo(distill::load_pseudo_labels(rd.pseudo_labels()));
  for (bool cbam : {true, false})
    if (fs::exists(refiner_path(rd, cbam))) ex.set_refiner(cbam, refiner::RefinerModel::load(refiner_path(rd, cbam)));

  const fs::path out = rd.reports() / "ablation" / o.suite;
  fs::create_directories(out);
  const auto results = distill::ablate(ex, cells, [&](const distill::AblationResult& r) {
    metrics::save_report(r.report, out / (r.cell.name + ".json"));
    spdlog::info("{}: dice {:.4f} hd95 {:.3f} px", r.cell.name, r.report.aggregate.dice, r.report.aggregate.hd95);
  });
  write_text(out / "comparison.md", distill::comparison_table(results));
  nlohmann::json index = {{"suite", o.suite}, {"split_manifest", rd.split_path().string()}, {"cells", nlohmann::json::array()}};
  for (const auto& r : results)
    index["cells"].push_back({{"name", r.cell.name},
                              {"alpha", r.cell.alpha},
                              {"use_unlabeled", r.cell.flags.use_unlabeled},
                              {"use_kd", r.cell.flags.use_kd},
                              {"use_weighting", r.cell.flags.use_weighting},
                              {"use_refiner", r.cell.flags.use_refiner},
                              {"use_cbam", r.cell.flags.use_cbam},
                              {"report", r.cell.name + ".json"}});
  write_json(out / "index.json", index);
  return kExitOk;
}

int cmd_report(const Options& o) {
  auto rd = open_run_dir(o, "report");
  const auto cfg = resolve_config(o, rd);
  std::ostringstream md;
  md << "# Run " << rd.root().filename().string() << "\n\nconfig_hash: " << distill::config_hash(cfg) << "\n\n";
  md << "| report | images | Dice | Recall | Precision | HD95 (px) | HD95 (norm) |\n|---|---|---|---|---|---|---|\n";
  std::vector<fs::path> reports;
  for (const auto& e : fs::recursive_directory_iterator(rd.reports()))
    if (e.path().extension() == ".json" && e.path().filename() != "index.json") reports.push_back(e.path());
  std::sort(reports.begin(), reports.end());
  char buf[256];
  for (const auto& p : reports) {
    const auto r = metrics::load_report(p);
    const auto& a = r.aggregate;
    std::snprintf(buf, sizeof buf, "| %s | %zu | %.4f | %.4f | %.4f | %.2f | %.4f |\n",
                  fs::relative(p, rd.reports()).string().c_str(), r.per_image.size(), a.dice, a.recall, a.precision,
                  a.hd95, a.hd95_normalized);
    md << buf;
  }
  write_text(rd.reports() / "summary.md", md.str());

  if (o.overlays) {
    const auto path = o.model == "teacher" ? teacher_path(rd) : student_path(rd);
    RunDirectory::require(path, o.model + " checkpoint", "sinusseg train-" + o.model);
    const auto model = distill::TrainedModel::load(path);
    const auto data = load_data(rd, cfg);
    const auto pred = distill::predict_masks(*model.model, data.test, cfg.loss.threshold);
    std::map<std::string, GrayImage> images;
    std::map<std::string, BinaryMask> preds, gts;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      images[data.test[i].id] = data.test[i].image;
      preds[data.test[i].id] = pred[i];
      gts[data.test[i].id] = *data.test[i].mask;
    }
    const auto paths = render_overlays(images, preds, gts, rd.reports() / "overlays" / o.model);
    spdlog::info("rendered {} overlays", paths.size());
  }
  spdlog::info("summary of {} reports -> {}", reports.size(), (rd.reports() / "summary.md").string());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Semi-supervised maxillary sinus segmentation with pseudo-label refinement"};
  app.name(args.empty() ? "sinusseg" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  Options o;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto with_run = [&](CLI::App* sub, bool config_required = false) {
    auto* c = sub->add_option("--config", o.config, "YAML run config (bound into the run directory)");
    if (config_required) c->required();
    sub->add_option("--run-dir", o.run_dir, "Run directory")->required();
    sub->add_flag("--force", o.force, "Recompute or replace existing outputs");
  };

  auto* mk = app.add_subcommand("make-phantoms", "Generate the synthetic phantom dataset");
  mk->add_option("--out", o.out, "Output dataset directory")->required();
  mk->add_option("--config", o.config, "YAML config supplying data.* defaults");
  mk->add_option("--count", o.count, "Number of phantoms");
  mk->add_option("--size", o.size, "Image side in pixels (>= 64)");
  mk->add_option("--seed", o.seed, "Generator seed");
  mk->add_flag("--force", o.force, "Overwrite an existing dataset");

  auto* via = app.add_subcommand("ingest-via", "Rasterize VIA polygon annotations into masks");
  via->add_option("--csv", o.csv, "VIA CSV export")->required()->check(CLI::ExistingFile);
  via->add_option("--images", o.images, "Directory of <id>.png images")->required()->check(CLI::ExistingDirectory);
  via->add_option("--out", o.out, "Output dataset directory")->required();
  via->add_flag("--force", o.force, "Overwrite an existing dataset");

  auto* sp = app.add_subcommand("split", "Build the train/val/test and labeled/unlabeled split");
  with_run(sp);
  sp->add_option("--source", o.source, "Dataset directory with manifest.json");

  auto* tt = app.add_subcommand("train-teacher", "Train the teacher on labeled data");
  with_run(tt);
  auto* gp = app.add_subcommand("gen-pseudo", "Pseudo-label the unlabeled images with the teacher");
  with_run(gp);
  auto* tr = app.add_subcommand("train-refiner", "Train the pseudo-label refiner");
  with_run(tr);
  auto* rf = app.add_subcommand("refine", "Refine pseudo labels with the trained refiner");
  with_run(rf);
  auto* ts = app.add_subcommand("train-student", "Train the student with the combined objective");
  with_run(ts);

  auto* ev = app.add_subcommand("evaluate", "Score predictions (directories or a run's model)");
  ev->add_option("--pred", o.pred, "Prediction mask directory");
  ev->add_option("--gt", o.gt, "Ground-truth mask directory");
  ev->add_option("--out", o.out, "Report JSON path");
  ev->add_option("--run-dir", o.run_dir, "Run directory (model evaluation)");
  ev->add_option("--config", o.config, "YAML run config");
  ev->add_option("--model", o.model, "teacher or student")->check(CLI::IsMember({"teacher", "student"}));
  ev->add_option("--split", o.split, "val or test")->check(CLI::IsMember({"val", "test"}));
  ev->add_option("--mode", o.mode, "HD95 point set: foreground or boundary")
      ->check(CLI::IsMember({"foreground", "boundary"}));
  ev->add_flag("--force", o.force, "Replace a different config snapshot");

  auto* ab = app.add_subcommand("ablate", "Run an ablation suite");
  with_run(ab);
  ab->add_option("--suite", o.suite, "table2 (component study) or table3 (alpha sweep)")
      ->required()
      ->check(CLI::IsMember({"table2", "table3"}));

  auto* rp = app.add_subcommand("report", "Summarize reports and optionally render overlays");
  with_run(rp);
  rp->add_flag("--overlays", o.overlays, "Render test-set contour overlays");
  rp->add_option("--model", o.model, "Model for overlays: teacher or student")
      ->check(CLI::IsMember({"teacher", "student"}));

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*mk) return cmd_make_phantoms(o);
    if (*via) return cmd_ingest_via(o);
    if (*sp) return cmd_split(o);
    if (*tt) return cmd_train_teacher(o);
    if (*gp) return cmd_gen_pseudo(o);
    if (*tr) return cmd_train_refiner(o);
    if (*rf) return cmd_refine(o);
    if (*ts) return cmd_train_student(o);
    if (*ev) return cmd_evaluate(o);
    if (*ab) return cmd_ablate(o);
    if (*rp) return cmd_report(o);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.kind() == ErrorKind::Config) return kExitConfig;
    if (e.kind() == ErrorKind::Argument) return kExitUsage;
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sinusseg::cli
