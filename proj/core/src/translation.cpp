#include "sim2real/translation.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>

#include "sim2real/checkpoint.hpp"
#include "sim2real/error.hpp"
#include "sim2real/fs_util.hpp"
#include "sim2real/tensor_convert.hpp"

namespace sim2real {

using nlohmann::json;

std::string_view to_string(GanVariant v) {
  return v == GanVariant::CrossEntropy ? "cross_entropy" : "least_squares";
}

GanVariant gan_variant_from_string(std::string_view s) {
  if (s == "cross_entropy") return GanVariant::CrossEntropy;
  if (s == "least_squares") return GanVariant::LeastSquares;
  throw InputError(fmt::format("unknown gan_variant '{}' (cross_entropy|least_squares)", s));
}

void TranslationTrainConfig::validate() const {
  weights.validate();
  histogram.validate();
  if (epochs < 1) throw RangeError(fmt::format("epochs must be >= 1, got {}", epochs));
  if (!(learning_rate > 0.0)) throw RangeError("learning_rate must be > 0");
  if (batch_size < 1) throw RangeError(fmt::format("batch_size must be >= 1, got {}", batch_size));
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw RangeError("Adam betas must lie in [0, 1)");
  }
  if (identity_weight < 0.0 || pool_size < 0) throw RangeError("identity_weight and pool_size must be >= 0");
}

json to_json(const TranslationTrainConfig& c) {
  return json{{"lambda_gan", c.weights.lambda_gan},
              {"lambda_cyc", c.weights.lambda_cyc},
              {"lambda_mi", c.weights.lambda_mi},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"batch_size", c.batch_size},
              {"gan_variant", std::string(to_string(c.gan_variant))},
              {"seed", c.seed},
              {"generator_width", c.generator.base_width},
              {"generator_blocks", c.generator.n_res_blocks},
              {"discriminator_width", c.discriminator.base_width},
              {"n_bins", c.histogram.n_bins},
              {"depth_min", c.histogram.depth_min},
              {"depth_max", c.histogram.depth_max},
              {"soft_bandwidth", c.histogram.soft_bandwidth},
              {"identity_weight", c.identity_weight},
              {"pool_size", c.pool_size},
              {"linear_decay", c.linear_decay}};
}

TranslationTrainConfig translation_config_from_json(const json& j) {
  TranslationTrainConfig c;
  c.weights.lambda_gan = j.value("lambda_gan", c.weights.lambda_gan);
  c.weights.lambda_cyc = j.value("lambda_cyc", c.weights.lambda_cyc);
  c.weights.lambda_mi = j.value("lambda_mi", c.weights.lambda_mi);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.gan_variant = gan_variant_from_string(j.value("gan_variant", std::string("cross_entropy")));
  c.seed = j.value("seed", c.seed);
  c.generator.base_width = j.value("generator_width", c.generator.base_width);
  c.generator.n_res_blocks = j.value("generator_blocks", c.generator.n_res_blocks);
  c.discriminator.base_width = j.value("discriminator_width", c.discriminator.base_width);
  c.histogram.n_bins = j.value("n_bins", c.histogram.n_bins);
  c.histogram.depth_min = j.value("depth_min", c.histogram.depth_min);
  c.histogram.depth_max = j.value("depth_max", c.histogram.depth_max);
  c.histogram.soft_bandwidth = j.value("soft_bandwidth", c.histogram.soft_bandwidth);
  c.identity_weight = j.value("identity_weight", c.identity_weight);
  c.pool_size = j.value("pool_size", c.pool_size);
  c.linear_decay = j.value("linear_decay", c.linear_decay);
  return c;
}

namespace {

torch::Tensor generator_adversarial(const torch::Tensor& fake_scores, GanVariant variant) {
  if (variant == GanVariant::CrossEntropy) {
    return -torch::log(fake_scores.clamp(kScoreEpsilon, 1.0 - kScoreEpsilon)).mean();
  }
  return 0.5 * (fake_scores - 1.0).pow(2).mean();
}

}  // namespace

GanTerms gan_loss_from_scores(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                              GanVariant variant) {
  if (real_scores.numel() == 0 || fake_scores.numel() == 0) {
    throw InputError("gan_loss needs non-empty real and fake batches");
  }
  GanTerms t;
  if (variant == GanVariant::CrossEntropy) {
    const auto real = real_scores.clamp(kScoreEpsilon, 1.0 - kScoreEpsilon);
    const auto fake = fake_scores.clamp(kScoreEpsilon, 1.0 - kScoreEpsilon);
    t.value = torch::log(real).mean() + torch::log(1.0 - fake).mean();
    t.disc_objective = -t.value;
    t.gen_objective = generator_adversarial(fake_scores, variant);
  } else {
    t.disc_objective = 0.5 * (real_scores - 1.0).pow(2).mean() + 0.5 * fake_scores.pow(2).mean();
    t.gen_objective = generator_adversarial(fake_scores, variant);
    t.value = -t.disc_objective;
  }
  return t;
}

torch::Tensor discriminator_scores(Discriminator& disc, const torch::Tensor& images, GanVariant variant) {
  auto out = disc->forward(images);
  return variant == GanVariant::CrossEntropy ? torch::sigmoid(out) : out;
}

GanTerms gan_loss(Discriminator& disc, const torch::Tensor& real_batch,
                  const torch::Tensor& fake_batch, GanVariant variant) {
  if (real_batch.size(0) == 0 || fake_batch.size(0) == 0) {
    throw InputError("gan_loss needs non-empty real and fake batches");
  }
  return gan_loss_from_scores(discriminator_scores(disc, real_batch, variant),
                              discriminator_scores(disc, fake_batch, variant), variant);
}

torch::Tensor cycle_loss_from(const torch::Tensor& recon_a, const torch::Tensor& a,
                              const torch::Tensor& recon_b, const torch::Tensor& b) {
  if (a.numel() == 0 || b.numel() == 0) throw InputError("cycle_loss needs non-empty batches");
  return (recon_a - a).abs().mean() + (recon_b - b).abs().mean();
}

torch::Tensor cycle_loss(Generator& g, Generator& f, const torch::Tensor& batch_a,
                         const torch::Tensor& batch_b) {
  if (batch_a.size(0) == 0 || batch_b.size(0) == 0) throw InputError("cycle_loss needs non-empty batches");
  return cycle_loss_from(f->forward(g->forward(batch_a)), batch_a, g->forward(f->forward(batch_b)), batch_b);
}

TranslationModels TranslationModels::create(const TranslationTrainConfig& config) {
  TranslationModels m;
  m.g = Generator(Direction::AtoB, config.generator);
  m.f = Generator(Direction::BtoA, config.generator);
  m.d_a = Discriminator('A', config.discriminator);
  m.d_b = Discriminator('B', config.discriminator);
  return m;
}

std::vector<torch::Tensor> TranslationModels::generator_parameters() const {
  auto p = g->parameters();
  auto q = f->parameters();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

std::vector<torch::Tensor> TranslationModels::discriminator_parameters() const {
  auto p = d_a->parameters();
  auto q = d_b->parameters();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

ObjectiveBreakdown vanilla_objective(TranslationModels& m, const TranslationBatch& batch,
                                     const TranslationTrainConfig& config) {
  const auto& w = config.weights;
  ObjectiveBreakdown o;
  o.fake_b = m.g->forward(batch.images_a);
  o.fake_a = m.f->forward(batch.images_b);
  const auto recon_a = m.f->forward(o.fake_b);
  const auto recon_b = m.g->forward(o.fake_a);
  o.gan_g = generator_adversarial(discriminator_scores(m.d_b, o.fake_b, config.gan_variant),
                                  config.gan_variant);
  o.gan_f = generator_adversarial(discriminator_scores(m.d_a, o.fake_a, config.gan_variant),
                                  config.gan_variant);
  o.cyc = cycle_loss_from(recon_a, batch.images_a, recon_b, batch.images_b);
  o.total = w.lambda_gan * o.gan_g + w.lambda_gan * o.gan_f + w.lambda_cyc * o.cyc;
  o.identity = torch::zeros({}, o.total.options());
  if (config.identity_weight > 0.0) {
    o.identity = (m.g->forward(batch.images_b) - batch.images_b).abs().mean() +
                 (m.f->forward(batch.images_a) - batch.images_a).abs().mean();
    o.total = o.total + config.identity_weight * o.identity;
  }
  o.mi = torch::zeros({}, o.total.options());
  return o;
}

ObjectiveBreakdown total_objective(TranslationModels& m, const TranslationBatch& batch,
                                   const TranslationTrainConfig& config) {
  ObjectiveBreakdown o = vanilla_objective(m, batch, config);
  if (config.weights.lambda_mi > 0.0) {
    // A -> B path only.
    o.mi = mi_loss_tensor(batch.depth_bins, batch.valid, o.fake_b, config.histogram);
    o.total = o.total + config.weights.lambda_mi * o.mi;
  }
  return o;
}

void write_translation_curve_csv(const std::filesystem::path& path, std::span<const LossRecord> curve) {
  std::string out = "epoch,step,gan_G,gan_F,cyc,mi,total\n";
  for (const auto& r : curve) {
    out += fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.epoch, r.step, r.gan_g,
                       r.gan_f, r.cyc, r.mi, r.total);
  }
  write_text_atomic(path, out);
}

TranslationTrainer::TranslationTrainer(const TranslationTrainConfig& config,
                                       std::span<const PairedSample> domain_a,
                                       std::span<const UnpairedSample> domain_b)
    : config_(config), rng_(config.seed) {
  config_.validate();
  if (domain_a.empty() || domain_b.empty()) {
    throw InputError("translation training needs non-empty domain A and domain B sets");
  }
  std::vector<Image> imgs_a, imgs_b;
  std::vector<DepthMap> depths;
  for (const auto& s : domain_a) {
    validate_pair(s);
    imgs_a.push_back(s.image);
    depths.push_back(s.depth);
  }
  for (const auto& s : domain_b) imgs_b.push_back(s.image);
  images_a_ = images_to_tensor(imgs_a);
  images_b_ = images_to_tensor(imgs_b);
  bins_a_ = depth_bins_tensor(depths_to_tensor(depths), config_.histogram);
  valid_a_ = valid_to_tensor(depths);

  torch::manual_seed(config_.seed);
  models_ = TranslationModels::create(config_);
  const auto adam = torch::optim::AdamOptions(config_.learning_rate)
                        .betas(std::make_tuple(config_.beta1, config_.beta2));
  opt_g_ = std::make_unique<torch::optim::Adam>(models_.generator_parameters(), adam);
  opt_d_ = std::make_unique<torch::optim::Adam>(models_.discriminator_parameters(), adam);
}

TranslationBatch TranslationTrainer::batch(std::span<const int64_t> a_indices,
                                           std::span<const int64_t> b_indices) const {
  const auto ia = torch::tensor(std::vector<int64_t>(a_indices.begin(), a_indices.end()), torch::kInt64);
  const auto ib = torch::tensor(std::vector<int64_t>(b_indices.begin(), b_indices.end()), torch::kInt64);
  return {images_a_.index_select(0, ia), bins_a_.index_select(0, ia), valid_a_.index_select(0, ia),
          images_b_.index_select(0, ib)};
}

namespace {

void set_requires_grad(const std::vector<torch::Tensor>& params, bool on) {
  for (auto p : params) p.set_requires_grad(on);
}

void check_finite(const char* what, const torch::Tensor& t) {
  const double v = t.item<double>();
  if (!std::isfinite(v)) throw NonFiniteLoss(fmt::format("{} became non-finite ({})", what, v));
}

}  // namespace

ObjectiveBreakdown TranslationTrainer::generator_step(const TranslationBatch& batch) {
  const auto d_params = models_.discriminator_parameters();
  set_requires_grad(d_params, false);
  opt_g_->zero_grad();
  ObjectiveBreakdown o = total_objective(models_, batch, config_);
  check_finite("gan_G", o.gan_g);
  check_finite("gan_F", o.gan_f);
  check_finite("cyc", o.cyc);
  check_finite("mi", o.mi);
  check_finite("total", o.total);
  o.total.backward();
  opt_g_->step();
  set_requires_grad(d_params, true);
  return o;
}

torch::Tensor TranslationTrainer::pool_query(std::vector<torch::Tensor>& pool, const torch::Tensor& fakes) {
  if (config_.pool_size == 0) return fakes;
  std::vector<torch::Tensor> out;
  for (int64_t i = 0; i < fakes.size(0); ++i) {
    auto img = fakes[i].unsqueeze(0);
    if (static_cast<int>(pool.size()) < config_.pool_size) {
      pool.push_back(img);
      out.push_back(img);
    } else if (rng_.coin()) {
      const auto k = static_cast<std::size_t>(rng_.below(pool.size()));
      out.push_back(pool[k]);
      pool[k] = img;
    } else {
      out.push_back(img);
    }
  }
  return torch::cat(out, 0);
}

std::pair<double, double> TranslationTrainer::discriminator_step(const TranslationBatch& batch,
                                                                 const torch::Tensor& fake_a,
                                                                 const torch::Tensor& fake_b) {
  opt_d_->zero_grad();
  const auto fa = pool_query(pool_a_, fake_a.detach());
  const auto fb = pool_query(pool_b_, fake_b.detach());
  const auto la = gan_loss(models_.d_a, batch.images_a, fa, config_.gan_variant).disc_objective;
  const auto lb = gan_loss(models_.d_b, batch.images_b, fb, config_.gan_variant).disc_objective;
  check_finite("D_A objective", la);
  check_finite("D_B objective", lb);
  (la + lb).backward();
  opt_d_->step();
  return {la.item<double>(), lb.item<double>()};
}

LossRecord TranslationTrainer::train_step(const TranslationBatch& batch) {
  ObjectiveBreakdown o = generator_step(batch);
  discriminator_step(batch, o.fake_a, o.fake_b);
  LossRecord r;
  r.gan_g = o.gan_g.item<double>();
  r.gan_f = o.gan_f.item<double>();
  r.cyc = o.cyc.item<double>();
  r.mi = o.mi.item<double>();
  r.total = o.total.item<double>();
  return r;
}

void TranslationTrainer::apply_lr(int epoch) {
  double lr = config_.learning_rate;
  if (config_.linear_decay) {
    const int start = config_.epochs / 2;
    if (epoch > start) lr *= 1.0 - static_cast<double>(epoch - start) / (config_.epochs - start + 1);
  }
  for (auto* opt : {opt_g_.get(), opt_d_.get()}) {
    for (auto& group : opt->param_groups()) group.options().set_lr(lr);
  }
}

std::vector<LossRecord> TranslationTrainer::run_epoch(int epoch) {
  apply_lr(epoch);
  const int64_t n_a = images_a_.size(0), n_b = images_b_.size(0);
  std::vector<int64_t> order_a(static_cast<std::size_t>(n_a)), order_b(static_cast<std::size_t>(n_b));
  for (int64_t i = 0; i < n_a; ++i) order_a[static_cast<std::size_t>(i)] = i;
  for (int64_t i = 0; i < n_b; ++i) order_b[static_cast<std::size_t>(i)] = i;
  rng_.shuffle(order_a);
  rng_.shuffle(order_b);

  std::vector<LossRecord> records;
  const auto bs = static_cast<std::size_t>(config_.batch_size);
  std::size_t b_cursor = 0;
  int step = 0;
  for (std::size_t start = 0; start < order_a.size(); start += bs) {
    const std::size_t end = std::min(order_a.size(), start + bs);
    std::vector<int64_t> ia(order_a.begin() + static_cast<std::ptrdiff_t>(start),
                            order_a.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<int64_t> ib;
    for (std::size_t k = 0; k < ia.size(); ++k) {
      ib.push_back(order_b[b_cursor % order_b.size()]);
      ++b_cursor;
    }
    LossRecord r;
    try {
      r = train_step(batch(ia, ib));
    } catch (const NonFiniteLoss& e) {
      throw NonFiniteLoss(fmt::format("epoch {} step {}: {}", epoch, step, e.what()));
    }
    r.epoch = epoch;
    r.step = step++;
    records.push_back(r);
  }
  return records;
}

TranslationResult train_translation(const TranslationTrainConfig& config,
                                    std::span<const PairedSample> domain_a,
                                    std::span<const UnpairedSample> domain_b,
                                    const EpochCallback& on_epoch) {
  TranslationTrainer trainer(config, domain_a, domain_b);
  TranslationResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto records = trainer.run_epoch(epoch);
    result.curve.insert(result.curve.end(), records.begin(), records.end());
    if (on_epoch) on_epoch(epoch, trainer.models(), result.curve);
  }
  result.models = trainer.models();
  return result;
}

Image translate(Generator& g, const Image& image) {
  torch::NoGradGuard no_grad;
  return tensor_to_image(g->forward(image_to_tensor(image))[0]);
}

std::vector<Image> translate(Generator& g, std::span<const Image> images) {
  std::vector<Image> out;
  out.reserve(images.size());
  for (const auto& im : images) out.push_back(translate(g, im));
  return out;
}

void save_generator(const std::filesystem::path& path, const Generator& g,
                    const TranslationTrainConfig& config, int epoch) {
  Checkpoint ck;
  ck.kind = "generator";
  ck.meta = {{"direction", std::string(to_string(g->direction()))},
             {"epoch", epoch},
             {"config", to_json(config)}};
  add_module_state(ck, *g);
  save_checkpoint(ck, path);
}

void save_discriminator(const std::filesystem::path& path, const Discriminator& d,
                        const TranslationTrainConfig& config, int epoch) {
  Checkpoint ck;
  ck.kind = "discriminator";
  ck.meta = {{"domain", std::string(1, d->domain())}, {"epoch", epoch}, {"config", to_json(config)}};
  add_module_state(ck, *d);
  save_checkpoint(ck, path);
}

Generator load_generator(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.kind != "generator") {
    throw InputError(fmt::format("'{}' holds a {} checkpoint, not a generator", path.string(), ck.kind));
  }
  const auto config = translation_config_from_json(ck.meta.at("config"));
  Generator g(direction_from_string(ck.meta.at("direction").get<std::string>()), config.generator);
  load_module_state(*g, ck);
  return g;
}

Discriminator load_discriminator(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.kind != "discriminator") {
    throw InputError(fmt::format("'{}' holds a {} checkpoint, not a discriminator", path.string(), ck.kind));
  }
  const auto config = translation_config_from_json(ck.meta.at("config"));
  Discriminator d(ck.meta.at("domain").get<std::string>().at(0), config.discriminator);
  load_module_state(*d, ck);
  return d;
}

}  // namespace sim2real
