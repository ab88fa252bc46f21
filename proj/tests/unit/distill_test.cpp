#include <gtest/gtest.h>

#include <cmath>

#include "sinusseg/core/error.hpp"
#include "sinusseg/core/mask_ops.hpp"
#include "sinusseg/data/phantom.hpp"
#include "sinusseg/distill/config.hpp"
#include "sinusseg/distill/pipeline.hpp"
#include "sinusseg/losses/losses.hpp"
#include "sinusseg/nets/convert.hpp"
#include "test_util.hpp"

namespace sinusseg::distill {
namespace {

Dataset phantom_data(std::size_t labeled, std::size_t unlabeled, std::size_t val, std::uint64_t seed) {
  Dataset d;
  std::size_t index = 0;
  auto take = [&](std::vector<Sample>& into, std::size_t n, bool keep_mask) {
    for (std::size_t i = 0; i < n; ++i, ++index) {
      auto p = data::make_phantom(64, seed, index);
      into.push_back({data::phantom_id(index), std::move(p.image),
                      keep_mask ? std::optional<BinaryMask>(std::move(p.mask)) : std::nullopt});
    }
  };
  take(d.labeled, labeled, true);
  take(d.unlabeled, unlabeled, false);
  take(d.val, val, true);
  take(d.test, val, true);
  return d;
}

RunConfig tiny_config(std::uint64_t seed = 0) {
  RunConfig c;
  c.seed = seed;
  c.backbone = {"unet", 64, 4, 2};
  c.optimizer.learning_rate = 1e-3;
  c.epochs = 2;
  c.batch_size = 4;
  c.refiner.resolution = 64;
  c.refiner.epochs = 1;
  c.refiner.batch_size = 4;
  c.refiner.generator = {4, 1};
  c.refiner.discriminator = {4};
  c.refiner.correction.base_channels = 4;
  return c;
}

TEST(RunConfig, DefaultsMatchPublishedSettings) {
  const RunConfig c;
  EXPECT_DOUBLE_EQ(c.optimizer.learning_rate, 1e-5);
  EXPECT_EQ(c.optimizer.name, "adamw");
  EXPECT_EQ(c.epochs, 10);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_DOUBLE_EQ(c.loss.alpha, 0.5);
  EXPECT_DOUBLE_EQ(c.loss.beta, 1e-6);
  EXPECT_DOUBLE_EQ(c.loss.lambda_cycle, 10.0);
  EXPECT_DOUBLE_EQ(c.loss.temperature, 2.0);
  EXPECT_EQ(c.refiner.epochs, 100);
  EXPECT_EQ(c.refiner.batch_size, 10);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, YamlRoundTripAndHash) {
  auto c = tiny_config(7);
  c.loss.alpha = 0.3;
  c.flags.use_cbam = false;
  const auto text = dump_run_config(c);
  const auto back = parse_run_config(text);
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  c.loss.alpha = 0.7;
  EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(RunConfig, PartialYamlKeepsDefaults) {
  const auto c = parse_run_config("seed: 3\nloss:\n  alpha: 0.7\nflags:\n  use_kd: false\n");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_DOUBLE_EQ(c.loss.alpha, 0.7);
  EXPECT_FALSE(c.flags.use_kd);
  EXPECT_TRUE(c.flags.use_refiner);
  EXPECT_EQ(c.batch_size, 8);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {"lossy:\n  alpha: 0.5\n", "loss:\n  alpah: 0.5\n", "loss:\n  alpha: 1.5\n",
                           "training:\n  epochs: 0\n", "optimizer:\n  name: sgd\n", "loss:\n  alpha: high\n",
                           "model: [1, 2\n"}) {
    try {
      parse_run_config(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config) << text;
    }
  }
}

TEST(RunConfig, CbamFlagControlsRefinerAttention) {
  auto c = tiny_config();
  EXPECT_EQ(c.refiner_config().correction.cbam_stages, (std::set<int>{1, 2, 3}));
  c.flags.use_cbam = false;
  EXPECT_TRUE(c.refiner_config().correction.cbam_stages.empty());
  EXPECT_EQ(c.refiner_config().lambda_cycle, c.loss.lambda_cycle);
}

TEST(Teacher, DeterministicAndFrozen) {
  const auto d = phantom_data(6, 0, 2, 1);
  const auto a = train_teacher(d, tiny_config(3));
  const auto b = train_teacher(d, tiny_config(3));
  EXPECT_EQ(a.model->params().snapshot(), b.model->params().snapshot());
  EXPECT_EQ(a.history.size(), 2u);
  EXPECT_GE(a.best_epoch, 1);
  for (const auto& t : a.model->params().tensors()) EXPECT_FALSE(t.requires_grad());
}

TEST(Teacher, NoLabeledDataIsDataError) {
  Dataset d = phantom_data(0, 2, 2, 1);
  try {
    train_teacher(d, tiny_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(Teacher, TrainingLossFallsOverTenEpochs) {
  int falls = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = tiny_config(seed);
    c.epochs = 10;
    Dataset d = phantom_data(8, 0, 0, 50 + seed);
    const auto t = train_teacher(d, c);
    if (t.history.back().train_loss < t.history.front().train_loss) ++falls;
  }
  EXPECT_GE(falls, 9);
}

TEST(Teacher, CheckpointRoundTrip) {
  testing::TempDir dir;
  const auto d = phantom_data(4, 0, 2, 2);
  auto t = train_teacher(d, tiny_config());
  const auto meta = t.save(dir / "teacher.bin", "teacher", "hash");
  EXPECT_EQ(meta.kind, "teacher");
  const auto back = TrainedModel::load(dir / "teacher.bin");
  EXPECT_EQ(back.model->params().snapshot(), t.model->params().snapshot());
  EXPECT_EQ(back.checkpoint_id, meta.checkpoint_id);
  EXPECT_EQ(back.history.size(), t.history.size());
}

TEST(PseudoLabels, OnePerUnlabeledImageAndDefinitional) {
  const auto d = phantom_data(4, 5, 2, 3);
  const auto t = train_teacher(d, tiny_config());
  const auto set = generate_pseudo_labels(*t.model, d.unlabeled, 0.5, "tid");
  ASSERT_EQ(set.entries.size(), d.unlabeled.size());
  const auto logits = predict_logits(*t.model, {&d.unlabeled[2].image});
  EXPECT_EQ(set.entries.at(d.unlabeled[2].id).initial, binarize_logits(nets::unstack(logits, 0), 0.5));
  const auto again = generate_pseudo_labels(*t.model, d.unlabeled, 0.5, "tid");
  for (const auto& [id, label] : set.entries) EXPECT_EQ(again.entries.at(id).initial, label.initial);
  EXPECT_FALSE(set.fully_refined());

  testing::TempDir dir;
  auto refined = set;
  for (auto& [id, label] : refined.entries) label.refined = dilate(label.initial, 1);
  save_pseudo_labels(refined, dir / "pseudo", dir / "refined");
  const auto back = load_pseudo_labels(dir / "pseudo", dir / "refined");
  EXPECT_EQ(back.teacher_checkpoint_id, "tid");
  ASSERT_TRUE(back.fully_refined());
  for (const auto& [id, label] : refined.entries) {
    EXPECT_EQ(back.entries.at(id).initial, label.initial);
    EXPECT_EQ(*back.entries.at(id).refined, *label.refined);
  }
}

TEST(Weights, DilatedTeacherMasksGetStrictlySmallerWeights) {
  // Half of the batch gets teacher masks dilated by 10 px.
  std::vector<BinaryMask> teacher, student;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto m = data::make_phantom(128, 9, i).mask;
    student.push_back(m);
    teacher.push_back(i % 2 ? dilate(m, 10) : m);
  }
  const double tau = losses::LossParams{}.tau_for(128, 128);
  std::vector<double> hd;
  const auto w = kd_sample_weights(teacher, student, true, tau, &hd);
  for (std::size_t c = 1; c < 8; c += 2)
    for (std::size_t k = 0; k < 8; k += 2) EXPECT_LT(w[c], w[k]);
  EXPECT_EQ(kd_sample_weights(teacher, student, false, tau), std::vector<double>(8, 1.0));
}

TEST(Student, TeacherStaysBitIdenticalAndTotalsAreExact) {
  const auto d = phantom_data(6, 6, 2, 4);
  auto cfg = tiny_config(1);
  const auto t = train_teacher(d, cfg);
  auto pseudo = generate_pseudo_labels(*t.model, d.unlabeled, 0.5);
  for (auto& [id, label] : pseudo.entries) label.refined = label.initial;
  const auto before = t.model->params().snapshot();
  cfg.loss.beta = 0.3;  // make the KD term visible in the total
  const auto run = train_student(d, &pseudo, *t.model, cfg);
  EXPECT_EQ(t.model->params().snapshot(), before);
  ASSERT_EQ(run.steps.size(), 4u);  // 2 epochs x ceil(6 / 4)
  for (const auto& s : run.steps) {
    EXPECT_EQ(s.total, cfg.loss.alpha * s.sup + cfg.loss.beta * s.wkd + (1 - cfg.loss.alpha) * s.unsup);
    EXPECT_GT(s.unsup, 0.0);
  }
  testing::TempDir dir;
  write_step_csv(run.steps, dir / "steps.csv");
  const auto back = read_step_csv(dir / "steps.csv");
  ASSERT_EQ(back.size(), run.steps.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].total, run.steps[i].total);
}

TEST(Student, UnweightedKdMatchesOfflineRecomputation) {
  const auto d = phantom_data(6, 0, 2, 5);
  auto cfg = tiny_config(2);
  cfg.flags = {false, true, false, false, true};
  const auto t = train_teacher(d, cfg);
  int checked = 0;
  train_student(d, nullptr, *t.model, cfg, [&](const StepRecord& rec, const StepTensors& x) {
    EXPECT_EQ(x.weights, std::vector<double>(x.batch, 1.0));
    const std::size_t per = x.teacher_logits.size() / x.batch;
    double sum = 0;
    for (std::size_t i = 0; i < x.batch; ++i) {
      double kl = 0;
      for (std::size_t p = 0; p < per; ++p)
        kl += losses::pixel_kl(x.teacher_logits[i * per + p], x.student_logits[i * per + p], cfg.loss.temperature);
      sum += kl / double(per);
    }
    const double offline = cfg.loss.temperature * cfg.loss.temperature * sum / double(x.batch);
    EXPECT_NEAR(rec.wkd, offline, 1e-12 * std::max(1.0, offline));
    EXPECT_EQ(rec.mean_w, 1.0);
    ++checked;
  });
  EXPECT_EQ(checked, 4);
}

TEST(Student, IdenticalTeacherAndStudentGiveUnitWeights) {
  const auto d = phantom_data(4, 0, 0, 6);
  auto cfg = tiny_config(3);
  cfg.flags = {false, true, true, false, true};
  cfg.epochs = 1;
  // A teacher built exactly like the student's initialization.
  auto twin = nets::build_backbone(cfg.backbone, student_seed(cfg));
  freeze(*twin);
  bool first = true;
  train_student(d, nullptr, *twin, cfg, [&](const StepRecord&, const StepTensors& x) {
    if (!first) return;
    first = false;
    for (double h : x.hd95) EXPECT_EQ(h, 0.0);
    EXPECT_EQ(x.weights, std::vector<double>(x.batch, 1.0));
  });
  EXPECT_FALSE(first);
}

TEST(Student, KdOnUnlabeledBatchesIsOptIn) {
  const auto d = phantom_data(4, 4, 0, 8);
  auto cfg = tiny_config(4);
  cfg.epochs = 1;
  const auto t = train_teacher(d, cfg);
  auto pseudo = generate_pseudo_labels(*t.model, d.unlabeled, 0.5);
  for (auto& [id, label] : pseudo.entries) label.refined = label.initial;
  const auto labeled_only = train_student(d, &pseudo, *t.model, cfg).steps;
  cfg.flags.kd_on_unlabeled = true;
  const auto both = train_student(d, &pseudo, *t.model, cfg).steps;
  ASSERT_EQ(both.size(), labeled_only.size());
  // Same initial state, so the first step differs only in the KD term.
  EXPECT_EQ(both[0].sup, labeled_only[0].sup);
  EXPECT_EQ(both[0].unsup, labeled_only[0].unsup);
  EXPECT_NE(both[0].wkd, labeled_only[0].wkd);
  EXPECT_EQ(parse_run_config(dump_run_config(cfg)).flags, cfg.flags);

  // Without unlabeled data the flag changes nothing.
  cfg.flags = {false, true, true, false, true, true};
  const auto a = train_student(d, nullptr, *t.model, cfg).steps;
  cfg.flags.kd_on_unlabeled = false;
  const auto b = train_student(d, nullptr, *t.model, cfg).steps;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].total, b[i].total);
}

TEST(Student, MissingArtifactsAreConfigErrors) {
  const auto d = phantom_data(4, 4, 0, 7);
  const auto cfg = tiny_config();
  const auto t = train_teacher(d, cfg);
  auto expect_config = [&](const PseudoLabelSet* p) {
    try {
      train_student(d, p, *t.model, cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
  };
  expect_config(nullptr);
  const auto initial_only = generate_pseudo_labels(*t.model, d.unlabeled, 0.5);
  expect_config(&initial_only);  // use_refiner without refined labels
}

TEST(Ablation, GridsMatchPublishedRows) {
  const auto t2 = table2_grid();
  ASSERT_EQ(t2.size(), 7u);
  const std::vector<PhaseFlags> expected{{false, false, false, false, true}, {false, true, false, false, true},
                                         {true, true, false, false, true},   {true, false, false, true, false},
                                         {true, false, false, true, true},   {true, true, true, false, true},
                                         {true, true, true, true, true}};
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(t2[i].flags, expected[i]) << t2[i].name;
    EXPECT_EQ(t2[i].alpha, 0.5);
  }
  const auto t3 = table3_grid();
  ASSERT_EQ(t3.size(), 5u);
  const double alphas[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(t3[i].alpha, alphas[i]);
    EXPECT_EQ(t3[i].flags, PhaseFlags{});
  }
  EXPECT_THROW(suite_grid("table4"), Error);
}

TEST(Ablation, CellsShareOneExperiment) {
  const auto d = phantom_data(4, 4, 2, 8);
  auto cfg = tiny_config(4);
  cfg.epochs = 1;
  Experiment ex(d, cfg);
  const auto cells = suite_grid("table2");
  const auto results = ablate(ex, {cells[0], cells[3], cells[6]});
  ASSERT_EQ(results.size(), 3u);
  for (const auto& r : results) {
    EXPECT_EQ(r.report.per_image.size(), d.test.size());
    EXPECT_EQ(r.report.provenance.seed, cfg.seed);
  }
  EXPECT_NE(results[0].report.provenance.config_hash, results[1].report.provenance.config_hash);
  const auto table = comparison_table(results);
  EXPECT_NE(table.find("refiner_without_cbam"), std::string::npos);
}

}  // namespace
}  // namespace sinusseg::distill
