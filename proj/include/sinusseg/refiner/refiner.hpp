#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sinusseg/core/grid.hpp"
#include "sinusseg/nets/checkpoint.hpp"
#include "sinusseg/nets/models.hpp"
#include "sinusseg/nets/optim.hpp"

namespace sinusseg::refiner {

struct RefinerConfig {
  int resolution = 256;
  int epochs = 100;
  int batch_size = 10;
  double lambda_cycle = 10.0;
  nets::AdamWConfig optimizer{};  // shared by all six networks
  nets::GeneratorSpec generator{};
  nets::DiscriminatorSpec discriminator{};
  nets::CorrectionNetSpec correction{};  // input_size follows `resolution`
  std::uint64_t seed = 0;

  void validate() const;
  nets::CorrectionNetSpec correction_spec() const;
};

void to_json(nlohmann::json& j, const RefinerConfig& c);
void from_json(const nlohmann::json& j, RefinerConfig& c);

struct IdMask {
  std::string id;
  BinaryMask mask;
};

/// Domain A holds noisy teacher predictions, domain B ground truth. Entries
/// with the same id in both domains form the pairs used by the correction
/// loss; adversarial and cycle terms sample each domain independently.
struct RefinerDataset {
  std::vector<IdMask> domain_a;
  std::vector<IdMask> domain_b;

  /// Empty domain -> Data error; wrong size -> Shape error; duplicate id ->
  /// Pairing error.
  void validate(int resolution) const;
  /// (index in A, index in B) for every shared id, in domain A order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
};

struct EpochLosses {
  int epoch = 0;
  double adv_ab = 0;  // discriminator objective of D_B against G_AB
  double adv_ba = 0;  // discriminator objective of D_A against G_BA
  double cycle = 0;
  double correction = 0;
  double total = 0;   // adv_ab + adv_ba + lambda * cycle + correction
};

/// All six networks plus the training record.
class RefinerModel {
 public:
  explicit RefinerModel(const RefinerConfig& config);

  const RefinerConfig& config() const { return config_; }
  nets::Generator& g_ab() { return *gan_.g_ab; }
  nets::Generator& g_ba() { return *gan_.g_ba; }
  nets::Discriminator& d_a() { return *gan_.d_a; }
  nets::Discriminator& d_b() { return *gan_.d_b; }
  nets::CorrectionNet& c_a() { return *c_a_; }
  nets::CorrectionNet& c_b() { return *c_b_; }
  const nets::Generator& g_ab() const { return *gan_.g_ab; }
  const nets::CorrectionNet& c_b() const { return *c_b_; }

  nets::NamedStores stores();
  /// Concatenated parameter values of all networks.
  std::vector<float> snapshot() const;

  int epoch = 0;
  std::vector<EpochLosses> history;

  nets::CheckpointMeta save(const std::filesystem::path& blob, const std::string& config_hash = "") ;
  static RefinerModel load(const std::filesystem::path& blob);

 private:
  RefinerConfig config_;
  nets::CycleGanPair gan_;
  std::unique_ptr<nets::CorrectionNet> c_a_, c_b_;
};

struct RefinerHooks {
  std::function<void(const EpochLosses&)> on_epoch;
  /// Where a diverged model is written before the Divergence error.
  std::optional<std::filesystem::path> diagnostic_checkpoint;
};

RefinerModel train_refiner(const RefinerDataset& data, const RefinerConfig& config, const RefinerHooks& hooks = {});

/// binarize(sigmoid(C_B(G_AB(x))), threshold) per mask. Masks must match the
/// refiner resolution.
std::vector<BinaryMask> refine_pseudo_labels(const RefinerModel& model, const std::vector<BinaryMask>& noisy,
                                             double threshold = 0.5);

/// CSV with columns epoch,L_adv_AB,L_adv_BA,L_cycle,L_corr,L_total.
void write_loss_csv(const std::vector<EpochLosses>& history, const std::filesystem::path& path);
std::vector<EpochLosses> read_loss_csv(const std::filesystem::path& path);

/// Writes <dir>/<id>.png per mask and <dir>/manifest.json mapping id -> path.
void write_refined_labels(const std::filesystem::path& dir, const std::vector<IdMask>& masks);
std::map<std::string, std::filesystem::path> read_label_manifest(const std::filesystem::path& dir);

}  // namespace sinusseg::refiner
