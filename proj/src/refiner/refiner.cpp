#include "sinusseg/refiner/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sinusseg/core/error.hpp"
#include "sinusseg/data/image_io.hpp"
#include "sinusseg/losses/losses.hpp"
#include "sinusseg/nets/convert.hpp"
#include "sinusseg/nets/ops.hpp"

namespace sinusseg::refiner {

namespace {
using nets::Tensor;

std::uint64_t derived_seed(std::uint64_t seed, const std::string& tag) { return nets::make_rng(seed, tag)(); }

std::vector<float> concat_snapshots(const std::vector<const nets::ParamStore*>& stores) {
  std::vector<float> out;
  for (const auto* s : stores) {
    const auto v = s->snapshot();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<Tensor> all_tensors(const std::vector<nets::ParamStore*>& stores) {
  std::vector<Tensor> out;
  for (auto* s : stores) {
    const auto t = s->tensors();
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

std::vector<double> values_of(const Tensor& t) { return nets::to_double(t.data()); }

void seed_backward(std::vector<std::pair<Tensor, std::vector<float>>> seeds) { nets::backward(seeds); }
}  // namespace

// --- config --------------------------------------------------------------------

void RefinerConfig::validate() const {
  if (resolution < 16 || resolution % 16 != 0)
    raise(ErrorKind::Config, "refiner resolution must be a positive multiple of 16, got " + std::to_string(resolution));
  if (epochs < 1) raise(ErrorKind::Config, "refiner epochs must be >= 1");
  if (batch_size < 1) raise(ErrorKind::Config, "refiner batch_size must be >= 1");
  if (!(lambda_cycle >= 0)) raise(ErrorKind::Config, "lambda_cycle must be >= 0");
  if (!(optimizer.learning_rate > 0)) raise(ErrorKind::Config, "refiner learning rate must be > 0");
  if (generator.filters < 1 || generator.residual_blocks < 0 || discriminator.filters < 1)
    raise(ErrorKind::Config, "invalid generator/discriminator width");
  correction_spec().validate();
}

nets::CorrectionNetSpec RefinerConfig::correction_spec() const {
  auto s = correction;
  s.input_size = resolution;
  return s;
}

void to_json(nlohmann::json& j, const RefinerConfig& c) {
  j = {{"resolution", c.resolution},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"lambda_cycle", c.lambda_cycle},
       {"learning_rate", c.optimizer.learning_rate},
       {"weight_decay", c.optimizer.weight_decay},
       {"generator", c.generator},
       {"discriminator", c.discriminator},
       {"correction", c.correction_spec()},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, RefinerConfig& c) {
  c = RefinerConfig{};
  c.resolution = j.value("resolution", c.resolution);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lambda_cycle = j.value("lambda_cycle", c.lambda_cycle);
  c.optimizer.learning_rate = j.value("learning_rate", c.optimizer.learning_rate);
  c.optimizer.weight_decay = j.value("weight_decay", c.optimizer.weight_decay);
  if (j.contains("generator")) c.generator = j.at("generator").get<nets::GeneratorSpec>();
  if (j.contains("discriminator")) c.discriminator = j.at("discriminator").get<nets::DiscriminatorSpec>();
  if (j.contains("correction")) c.correction = j.at("correction").get<nets::CorrectionNetSpec>();
  c.seed = j.value("seed", c.seed);
}

// --- dataset -------------------------------------------------------------------

void RefinerDataset::validate(int resolution) const {
  if (domain_a.empty()) raise(ErrorKind::Data, "refiner domain A (noisy pseudo labels) is empty");
  if (domain_b.empty()) raise(ErrorKind::Data, "refiner domain B (ground truth masks) is empty");
  for (const auto* domain : {&domain_a, &domain_b}) {
    std::set<std::string> ids;
    for (const auto& m : *domain) {
      if (m.mask.width() != resolution || m.mask.height() != resolution)
        raise(ErrorKind::Shape, "mask '" + m.id + "' is " + std::to_string(m.mask.width()) + "x" +
                                    std::to_string(m.mask.height()) + ", refiner works at " +
                                    std::to_string(resolution));
      if (!m.id.empty() && !ids.insert(m.id).second) raise(ErrorKind::Pairing, "duplicate mask id '" + m.id + "'");
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> RefinerDataset::pairs() const {
  std::map<std::string, std::size_t> b_index;
  for (std::size_t j = 0; j < domain_b.size(); ++j)
    if (!domain_b[j].id.empty()) b_index[domain_b[j].id] = j;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < domain_a.size(); ++i) {
    auto it = b_index.find(domain_a[i].id);
    if (it != b_index.end()) out.emplace_back(i, it->second);
  }
  return out;
}

// --- model ---------------------------------------------------------------------

RefinerModel::RefinerModel(const RefinerConfig& config) : config_(config) {
  config_.validate();
  gan_ = nets::build_cyclegan_pair(config_.generator, config_.discriminator, config_.resolution, config_.seed);
  c_a_ = std::make_unique<nets::CorrectionNet>(config_.correction_spec(), derived_seed(config_.seed, "c_a"));
  c_b_ = std::make_unique<nets::CorrectionNet>(config_.correction_spec(), derived_seed(config_.seed, "c_b"));
}

nets::NamedStores RefinerModel::stores() {
  return {{"g_ab", &g_ab().params()}, {"g_ba", &g_ba().params()}, {"d_a", &d_a().params()},
          {"d_b", &d_b().params()},   {"c_a", &c_a().params()},   {"c_b", &c_b().params()}};
}

std::vector<float> RefinerModel::snapshot() const {
  return concat_snapshots({&gan_.g_ab->params(), &gan_.g_ba->params(), &gan_.d_a->params(), &gan_.d_b->params(),
                           &c_a_->params(), &c_b_->params()});
}

nets::CheckpointMeta RefinerModel::save(const std::filesystem::path& blob, const std::string& config_hash) {
  nets::CheckpointMeta meta;
  meta.kind = "refiner";
  meta.spec = config_;
  meta.seed = config_.seed;
  meta.epoch = epoch;
  meta.config_hash = config_hash;
  auto& losses = meta.extra["losses"] = nlohmann::json::array();
  for (const auto& e : history)
    losses.push_back({{"epoch", e.epoch},
                      {"L_adv_AB", e.adv_ab},
                      {"L_adv_BA", e.adv_ba},
                      {"L_cycle", e.cycle},
                      {"L_corr", e.correction},
                      {"L_total", e.total}});
  return nets::save_checkpoint(blob, stores(), meta);
}

RefinerModel RefinerModel::load(const std::filesystem::path& blob) {
  const auto meta = nets::read_checkpoint_meta(blob);
  if (meta.kind != "refiner") raise(ErrorKind::Format, blob.string() + " is a '" + meta.kind + "' checkpoint, not a refiner");
  RefinerModel model(meta.spec.get<RefinerConfig>());
  nets::load_checkpoint(blob, model.stores());
  model.epoch = meta.epoch;
  if (meta.extra.contains("losses"))
    for (const auto& e : meta.extra.at("losses"))
      model.history.push_back({e.at("epoch").get<int>(), e.at("L_adv_AB").get<double>(), e.at("L_adv_BA").get<double>(),
                               e.at("L_cycle").get<double>(), e.at("L_corr").get<double>(),
                               e.at("L_total").get<double>()});
  return model;
}

// --- training ------------------------------------------------------------------

namespace {

struct BatchLosses {
  double adv_ab, adv_ba, cycle, correction;
};

class Trainer {
 public:
  Trainer(RefinerModel& m)
      : m_(m),
        opt_d_(all_tensors({&m.d_a().params(), &m.d_b().params()}), m.config().optimizer),
        opt_g_(all_tensors({&m.g_ab().params(), &m.g_ba().params()}), m.config().optimizer),
        opt_c_(all_tensors({&m.c_a().params(), &m.c_b().params()}), m.config().optimizer) {}

  // a: domain A batch; b: independently sampled domain B batch; b_pair: the
  // ground truth paired with each element of a.
  BatchLosses step(const Tensor& a, const Tensor& b, const Tensor& b_pair) {
    BatchLosses out{};
    const double lambda = m_.config().lambda_cycle;

    const Tensor fake_b = m_.g_ab().forward(a);
    const Tensor fake_a = m_.g_ba().forward(b);

    // (1) discriminators on detached fakes.
    opt_d_.zero_grad();
    {
      const Tensor real_b_score = m_.d_b().forward(b), fake_b_score = m_.d_b().forward(fake_b.detach());
      const Tensor real_a_score = m_.d_a().forward(a), fake_a_score = m_.d_a().forward(fake_a.detach());
      const auto lb = losses::lsgan_discriminator_loss_grad(values_of(real_b_score), values_of(fake_b_score));
      const auto la = losses::lsgan_discriminator_loss_grad(values_of(real_a_score), values_of(fake_a_score));
      out.adv_ab = lb.value;
      out.adv_ba = la.value;
      seed_backward({{real_b_score, nets::to_float(lb.grad_real)},
                     {fake_b_score, nets::to_float(lb.grad_fake)},
                     {real_a_score, nets::to_float(la.grad_real)},
                     {fake_a_score, nets::to_float(la.grad_fake)}});
      check_finite(out.adv_ab + out.adv_ba, "discriminator");
      opt_d_.step();
    }

    // (2) generators: fool the updated discriminators and close both cycles.
    opt_g_.zero_grad();
    {
      const Tensor score_b = m_.d_b().forward(fake_b), score_a = m_.d_a().forward(fake_a);
      const Tensor rec_a = m_.g_ba().forward(fake_b), rec_b = m_.g_ab().forward(fake_a);
      const auto gb = losses::lsgan_generator_loss_grad(values_of(score_b));
      const auto ga = losses::lsgan_generator_loss_grad(values_of(score_a));
      const auto cyc = losses::cycle_loss_grad(values_of(rec_a), values_of(a), values_of(rec_b), values_of(b));
      out.cycle = cyc.value;
      seed_backward({{score_b, nets::to_float(gb.grad)},
                     {score_a, nets::to_float(ga.grad)},
                     {rec_a, nets::to_float(cyc.grad_a, lambda)},
                     {rec_b, nets::to_float(cyc.grad_b, lambda)}});
      check_finite(gb.value + ga.value + cyc.value, "generator");
      opt_g_.step();
    }

    // (3) correction networks on detached generator outputs against the
    // paired targets.
    opt_c_.zero_grad();
    {
      Tensor fake_a_pair;
      {
        nets::NoGradGuard guard;
        fake_a_pair = m_.g_ba().forward(b_pair);
      }
      const Tensor cb = m_.c_b().forward(fake_b.detach()), ca = m_.c_a().forward(fake_a_pair);
      const auto lb = losses::bce_loss_grad(values_of(cb), values_of(b_pair));
      const auto la = losses::bce_loss_grad(values_of(ca), values_of(a));
      out.correction = lb.value + la.value;
      seed_backward({{cb, nets::to_float(lb.grad)}, {ca, nets::to_float(la.grad)}});
      check_finite(out.correction, "correction");
      opt_c_.step();
    }
    return out;
  }

  std::string diverged_stage;

 private:
  void check_finite(double v, const char* stage) {
    if (!std::isfinite(v) && diverged_stage.empty()) diverged_stage = stage;
  }

  RefinerModel& m_;
  nets::AdamW opt_d_, opt_g_, opt_c_;
};

Tensor gather(const std::vector<IdMask>& domain, const std::vector<std::size_t>& idx) {
  std::vector<const BinaryMask*> ptrs;
  for (auto i : idx) ptrs.push_back(&domain[i].mask);
  return nets::stack_masks(ptrs);
}

}  // namespace

RefinerModel train_refiner(const RefinerDataset& data, const RefinerConfig& config, const RefinerHooks& hooks) {
  config.validate();
  data.validate(config.resolution);
  const auto pairs = data.pairs();
  if (pairs.empty())
    raise(ErrorKind::Pairing, "no image id is shared by domains A and B; the correction loss needs paired samples");

  RefinerModel model(config);
  Trainer trainer(model);
  auto rng = nets::make_rng(config.seed, "refiner.batches");
  const std::size_t bs = std::size_t(config.batch_size);

  std::vector<std::size_t> pair_order(pairs.size()), b_order(data.domain_b.size());
  for (int e = 1; e <= config.epochs; ++e) {
    std::iota(pair_order.begin(), pair_order.end(), 0);
    std::iota(b_order.begin(), b_order.end(), 0);
    std::shuffle(pair_order.begin(), pair_order.end(), rng);
    std::shuffle(b_order.begin(), b_order.end(), rng);

    EpochLosses sum{};
    std::size_t batches = 0, b_cursor = 0;
    for (std::size_t start = 0; start < pair_order.size(); start += bs) {
      const std::size_t n = std::min(bs, pair_order.size() - start);
      std::vector<std::size_t> ia, ib_pair, ib;
      for (std::size_t k = 0; k < n; ++k) {
        ia.push_back(pairs[pair_order[start + k]].first);
        ib_pair.push_back(pairs[pair_order[start + k]].second);
        ib.push_back(b_order[b_cursor++ % b_order.size()]);
      }
      const auto l = trainer.step(gather(data.domain_a, ia), gather(data.domain_b, ib), gather(data.domain_b, ib_pair));
      if (!trainer.diverged_stage.empty()) {
        model.epoch = e;
        std::string where;
        if (hooks.diagnostic_checkpoint) {
          model.save(*hooks.diagnostic_checkpoint);
          where = "; diagnostic checkpoint at " + hooks.diagnostic_checkpoint->string();
        }
        raise(ErrorKind::Divergence, "refiner " + trainer.diverged_stage + " loss became non-finite in epoch " +
                                         std::to_string(e) + where);
      }
      sum.adv_ab += l.adv_ab;
      sum.adv_ba += l.adv_ba;
      sum.cycle += l.cycle;
      sum.correction += l.correction;
      ++batches;
    }
    EpochLosses rec{e, sum.adv_ab / double(batches), sum.adv_ba / double(batches), sum.cycle / double(batches),
                    sum.correction / double(batches), 0.0};
    rec.total = losses::refiner_total_loss(rec.adv_ab, rec.adv_ba, rec.cycle, rec.correction, config.lambda_cycle);
    model.history.push_back(rec);
    model.epoch = e;
    spdlog::info("refiner epoch {}/{}: adv_AB {:.4f} adv_BA {:.4f} cycle {:.4f} corr {:.4f} total {:.4f}", e,
                 config.epochs, rec.adv_ab, rec.adv_ba, rec.cycle, rec.correction, rec.total);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  return model;
}

// --- inference -----------------------------------------------------------------

std::vector<BinaryMask> refine_pseudo_labels(const RefinerModel& model, const std::vector<BinaryMask>& noisy,
                                             double threshold) {
  const int res = model.config().resolution;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (noisy[i].width() != res || noisy[i].height() != res)
      raise(ErrorKind::Shape, "pseudo label " + std::to_string(i) + " is " + std::to_string(noisy[i].width()) + "x" +
                                  std::to_string(noisy[i].height()) + "; resize to " + std::to_string(res) + "x" +
                                  std::to_string(res) + " first");
    if (foreground_count(noisy[i]) == 0) spdlog::warn("pseudo label {} is all background", i);
  }
  nets::NoGradGuard guard;
  std::vector<BinaryMask> out;
  out.reserve(noisy.size());
  constexpr std::size_t kChunk = 8;
  for (std::size_t start = 0; start < noisy.size(); start += kChunk) {
    std::vector<const BinaryMask*> ptrs;
    for (std::size_t i = start; i < std::min(noisy.size(), start + kChunk); ++i) ptrs.push_back(&noisy[i]);
    const Tensor logits = model.c_b().forward(model.g_ab().forward(nets::stack_masks(ptrs)));
    for (auto& m : nets::logits_to_masks(logits, threshold)) out.push_back(std::move(m));
  }
  return out;
}

// --- files ---------------------------------------------------------------------

void write_loss_csv(const std::vector<EpochLosses>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  out << "epoch,L_adv_AB,L_adv_BA,L_cycle,L_corr,L_total\n";
  for (const auto& e : history)
    out << e.epoch << ',' << e.adv_ab << ',' << e.adv_ba << ',' << e.cycle << ',' << e.correction << ',' << e.total
        << '\n';
}

std::vector<EpochLosses> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<EpochLosses> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream s(line);
    EpochLosses e;
    if (!(s >> e.epoch >> e.adv_ab >> e.adv_ba >> e.cycle >> e.correction >> e.total))
      raise(ErrorKind::Format, "malformed loss row in " + path.string() + ": " + line);
    out.push_back(e);
  }
  return out;
}

void write_refined_labels(const std::filesystem::path& dir, const std::vector<IdMask>& masks) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json manifest = nlohmann::json::object();
  for (const auto& m : masks) {
    const auto file = m.id + ".png";
    data::save_mask(m.mask, dir / file);
    manifest[m.id] = file;
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) raise(ErrorKind::Io, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

std::map<std::string, std::filesystem::path> read_label_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) raise(ErrorKind::Io, "missing label manifest " + (dir / "manifest.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Format, "bad label manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  std::map<std::string, std::filesystem::path> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = dir / it.value().get<std::string>();
  return out;
}

}  // namespace sinusseg::refiner
