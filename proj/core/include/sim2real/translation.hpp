#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "sim2real/miloss.hpp"
#include "sim2real/networks.hpp"
#include "sim2real/rng.hpp"
#include "sim2real/types.hpp"

namespace sim2real {

enum class GanVariant { CrossEntropy, LeastSquares };
std::string_view to_string(GanVariant v);
GanVariant gan_variant_from_string(std::string_view s);

struct TranslationTrainConfig {
  LossWeights weights;
  int epochs = 30;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 4;
  GanVariant gan_variant = GanVariant::CrossEntropy;
  std::uint64_t seed = 0;
  GeneratorOptions generator;
  DiscriminatorOptions discriminator;
  HistogramSpec histogram;
  // Off unless configured: identity-mapping loss weight, fake-image history
  // size for discriminator updates, linear LR decay over the second half.
  double identity_weight = 0.0;
  int pool_size = 0;
  bool linear_decay = false;

  void validate() const;
};

nlohmann::json to_json(const TranslationTrainConfig& c);
TranslationTrainConfig translation_config_from_json(const nlohmann::json& j);

inline constexpr double kScoreEpsilon = 1e-7;

struct GanTerms {
  torch::Tensor disc_objective;  // minimised by the discriminator
  torch::Tensor gen_objective;   // minimised by the generator (non-saturating)
  torch::Tensor value;           // E[log D(real)] + E[log(1 - D(fake))] (or -disc_objective for LS)
};

// Scores are probabilities for CrossEntropy (clamped to [eps, 1-eps]) and raw
// outputs for LeastSquares.
GanTerms gan_loss_from_scores(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                              GanVariant variant);
// Runs the discriminator on both batches.
GanTerms gan_loss(Discriminator& disc, const torch::Tensor& real_batch,
                  const torch::Tensor& fake_batch, GanVariant variant);
torch::Tensor discriminator_scores(Discriminator& disc, const torch::Tensor& images, GanVariant variant);

// mean|recon_a - a| + mean|recon_b - b|
torch::Tensor cycle_loss_from(const torch::Tensor& recon_a, const torch::Tensor& a,
                              const torch::Tensor& recon_b, const torch::Tensor& b);
torch::Tensor cycle_loss(Generator& g, Generator& f, const torch::Tensor& batch_a,
                         const torch::Tensor& batch_b);

struct TranslationModels {
  Generator g{nullptr};  // A -> B
  Generator f{nullptr};  // B -> A
  Discriminator d_a{nullptr};
  Discriminator d_b{nullptr};

  static TranslationModels create(const TranslationTrainConfig& config);
  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;
};

struct TranslationBatch {
  torch::Tensor images_a;    // [B,3,H,W]
  torch::Tensor depth_bins;  // [B,H,W] int64
  torch::Tensor valid;       // [B,H,W] bool
  torch::Tensor images_b;    // [B',3,H,W]
};

// Unweighted terms plus the weighted total. identity is zero unless enabled.
struct ObjectiveBreakdown {
  torch::Tensor gan_g;
  torch::Tensor gan_f;
  torch::Tensor cyc;
  torch::Tensor mi;
  torch::Tensor identity;
  torch::Tensor total;
  torch::Tensor fake_b;  // G(a)
  torch::Tensor fake_a;  // F(b)
};

// Generator-side CycleGAN objective without the MI term:
//   lambda_gan (gan_g + gan_f) + lambda_cyc cyc [+ identity_weight identity]
ObjectiveBreakdown vanilla_objective(TranslationModels& m, const TranslationBatch& batch,
                                     const TranslationTrainConfig& config);
// vanilla_objective plus lambda_mi * mi_loss(depth_a, G(a)). With lambda_mi = 0
// the MI term is skipped entirely and the result equals vanilla_objective.
ObjectiveBreakdown total_objective(TranslationModels& m, const TranslationBatch& batch,
                                   const TranslationTrainConfig& config);

struct LossRecord {
  int epoch = 0;
  int step = 0;
  double gan_g = 0.0;
  double gan_f = 0.0;
  double cyc = 0.0;
  double mi = 0.0;
  double total = 0.0;
};

void write_translation_curve_csv(const std::filesystem::path& path, std::span<const LossRecord> curve);

// Holds the four networks, their optimizers and the data tensors for one run.
class TranslationTrainer {
 public:
  TranslationTrainer(const TranslationTrainConfig& config, std::span<const PairedSample> domain_a,
                     std::span<const UnpairedSample> domain_b);

  // One generator update followed by one discriminator update.
  LossRecord train_step(const TranslationBatch& batch);
  ObjectiveBreakdown generator_step(const TranslationBatch& batch);
  // Returns (D_A objective, D_B objective).
  std::pair<double, double> discriminator_step(const TranslationBatch& batch,
                                               const torch::Tensor& fake_a,
                                               const torch::Tensor& fake_b);

  // Runs one full epoch (1-based index) and returns its per-step records.
  std::vector<LossRecord> run_epoch(int epoch);

  TranslationBatch batch(std::span<const int64_t> a_indices, std::span<const int64_t> b_indices) const;

  TranslationModels& models() { return models_; }
  const TranslationTrainConfig& config() const { return config_; }

 private:
  torch::Tensor pool_query(std::vector<torch::Tensor>& pool, const torch::Tensor& fakes);
  void apply_lr(int epoch);

  TranslationTrainConfig config_;
  TranslationModels models_;
  std::unique_ptr<torch::optim::Adam> opt_g_;
  std::unique_ptr<torch::optim::Adam> opt_d_;
  torch::Tensor images_a_, bins_a_, valid_a_, images_b_;
  Rng rng_;
  std::vector<torch::Tensor> pool_a_, pool_b_;
};

struct TranslationResult {
  TranslationModels models;
  std::vector<LossRecord> curve;
};

// Called after each epoch with the 1-based epoch index.
using EpochCallback = std::function<void(int epoch, TranslationModels&, std::span<const LossRecord>)>;

// Alternating generator/discriminator training. Deterministic for a fixed
// seed on one device. Throws NonFiniteLoss if any loss term goes NaN/Inf.
TranslationResult train_translation(const TranslationTrainConfig& config,
                                    std::span<const PairedSample> domain_a,
                                    std::span<const UnpairedSample> domain_b,
                                    const EpochCallback& on_epoch = {});

Image translate(Generator& g, const Image& image);
std::vector<Image> translate(Generator& g, std::span<const Image> images);

// Generator checkpoints record their direction and the training config.
void save_generator(const std::filesystem::path& path, const Generator& g,
                    const TranslationTrainConfig& config, int epoch);
void save_discriminator(const std::filesystem::path& path, const Discriminator& d,
                        const TranslationTrainConfig& config, int epoch);
Generator load_generator(const std::filesystem::path& path);
Discriminator load_discriminator(const std::filesystem::path& path);

}  // namespace sim2real
