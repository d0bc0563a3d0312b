#include "support/doctest_torch.hpp"

#include <cmath>


#include "sim2real/checkpoint.hpp"
#include "sim2real/error.hpp"
#include "sim2real/tensor_convert.hpp"
#include "sim2real/toy_data.hpp"
#include "sim2real/translation.hpp"
#include "support/samples.hpp"
#include "support/tempdir.hpp"

using namespace sim2real;

namespace {

TranslationTrainConfig small_config() {
  TranslationTrainConfig c;
  c.epochs = 2;
  c.batch_size = 4;
  c.generator.base_width = 8;
  c.generator.n_res_blocks = 2;
  c.discriminator.base_width = 8;
  c.histogram.n_bins = 32;
  c.seed = 3;
  return c;
}

const ToyDataset& toy() {
  static const ToyDataset ds = generate_toy_dataset(8, 32, 17);
  return ds;
}

std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

bool all_equal(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!torch::equal(a[i], b[i])) return false;
  return true;
}

bool any_changed(const std::vector<torch::Tensor>& before, const std::vector<torch::Tensor>& after) {
  for (std::size_t i = 0; i < before.size(); ++i)
    if (!torch::equal(before[i], after[i])) return true;
  return false;
}

double value(const torch::Tensor& t) { return t.item<double>(); }

}  // namespace

TEST_CASE("cross-entropy GAN value at D = 0.5 is -2 log 2") {
  const auto half = torch::full({2, 1, 3, 3}, 0.5);
  const auto t = gan_loss_from_scores(half, half, GanVariant::CrossEntropy);
  CHECK(value(t.value) == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-6));
  CHECK(value(t.disc_objective) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-6));
  CHECK(value(t.gen_objective) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("a perfect discriminator reaches the maximum of the GAN value") {
  const auto t = gan_loss_from_scores(torch::ones({3, 1, 2, 2}), torch::zeros({3, 1, 2, 2}), GanVariant::CrossEntropy);
  CHECK(std::abs(value(t.value)) < 1e-5);
  CHECK(std::isfinite(value(t.gen_objective)));
  CHECK(value(t.gen_objective) > 10.0);
}

TEST_CASE("least-squares discriminator loss vanishes at the ideal scores") {
  const auto t = gan_loss_from_scores(torch::ones({2, 1, 4, 4}), torch::zeros({2, 1, 4, 4}), GanVariant::LeastSquares);
  CHECK(value(t.disc_objective) == 0.0);
  const auto u = gan_loss_from_scores(torch::full({1, 1, 1, 1}, 0.5), torch::full({1, 1, 1, 1}, 0.5),
                                      GanVariant::LeastSquares);
  CHECK(value(u.disc_objective) == doctest::Approx(0.5 * 0.25 + 0.5 * 0.25).epsilon(1e-6));
}

TEST_CASE("empty batches are rejected") {
  const auto empty = torch::zeros({0, 1, 2, 2});
  CHECK_THROWS_AS(gan_loss_from_scores(empty, torch::ones({1, 1, 2, 2}), GanVariant::CrossEntropy), InputError);
  CHECK_THROWS_AS(cycle_loss_from(torch::zeros({0, 3, 1, 1}), torch::zeros({0, 3, 1, 1}), torch::zeros({1, 3, 1, 1}),
                                  torch::zeros({1, 3, 1, 1})),
                  InputError);
}

TEST_CASE("cycle loss of a single hand-computed pixel") {
  const auto a = torch::tensor({0.5, 0.5, 0.5}).reshape({1, 3, 1, 1});
  const auto ra = torch::tensor({0.6, 0.5, 0.4}).reshape({1, 3, 1, 1});
  const auto b = torch::tensor({0.1, 0.2, 0.3}).reshape({1, 3, 1, 1});
  const double v = value(cycle_loss_from(ra, a, b, b));
  CHECK(v == doctest::Approx(0.2 / 3.0).epsilon(1e-6));
  CHECK(value(cycle_loss_from(a, a, b, b)) == 0.0);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) CHECK(value(cycle_loss_from(torch::rand({2, 3, 4, 4}), a.expand({2, 3, 4, 4}),
                                                           torch::rand({2, 3, 4, 4}), b.expand({2, 3, 4, 4}))) > 0.0);
}

TEST_CASE("objective algebra on a toy batch") {
  auto cfg = small_config();
  TranslationTrainer trainer(cfg, toy().domain_a, toy().domain_b);
  const std::vector<int64_t> ia = {0, 1, 2, 3}, ib = {4, 5, 6, 7};
  const auto batch = trainer.batch(ia, ib);
  auto& m = trainer.models();

  SUBCASE("zero weights give zero") {
    auto z = cfg;
    z.weights = {0.0, 0.0, 0.0};
    CHECK(value(total_objective(m, batch, z).total) == 0.0);
  }
  SUBCASE("lambda_mi = 0 is exactly the vanilla objective") {
    auto c = cfg;
    c.weights.lambda_mi = 0.0;
    const auto a = total_objective(m, batch, c);
    const auto v = vanilla_objective(m, batch, c);
    CHECK(torch::equal(a.total, v.total));
    CHECK(torch::equal(a.fake_b, v.fake_b));
  }
  SUBCASE("weighted breakdown sums to the total") {
    auto c = cfg;
    c.weights = {2.5, 0.7, 1.3};
    const auto o = total_objective(m, batch, c);
    const double expect = 2.5 * (value(o.gan_g) + value(o.gan_f)) + 0.7 * value(o.cyc) + 1.3 * value(o.mi);
    CHECK(std::abs(value(o.total) - expect) < 1e-6 * std::max(1.0, std::abs(expect)));
    CHECK(value(o.mi) <= 0.0);
  }
}

TEST_CASE("generator updates leave discriminators untouched and vice versa") {
  TranslationTrainer trainer(small_config(), toy().domain_a, toy().domain_b);
  const std::vector<int64_t> ia = {0, 1, 2, 3}, ib = {0, 1, 2, 3};
  const auto batch = trainer.batch(ia, ib);
  auto& m = trainer.models();

  auto g0 = snapshot(m.generator_parameters());
  auto d0 = snapshot(m.discriminator_parameters());
  const auto o = trainer.generator_step(batch);
  CHECK(any_changed(g0, snapshot(m.generator_parameters())));
  CHECK(all_equal(d0, snapshot(m.discriminator_parameters())));

  g0 = snapshot(m.generator_parameters());
  trainer.discriminator_step(batch, o.fake_a, o.fake_b);
  CHECK(all_equal(g0, snapshot(m.generator_parameters())));
  CHECK(any_changed(d0, snapshot(m.discriminator_parameters())));
}

TEST_CASE("MI loss gradient reaches G only") {
  auto cfg = small_config();
  TranslationTrainer trainer(cfg, toy().domain_a, toy().domain_b);
  const std::vector<int64_t> idx = {0, 1};
  const auto batch = trainer.batch(idx, idx);
  auto& m = trainer.models();
  for (auto p : m.generator_parameters()) p.mutable_grad() = torch::Tensor();
  for (auto p : m.discriminator_parameters()) p.mutable_grad() = torch::Tensor();
  mi_loss_tensor(batch.depth_bins, batch.valid, m.g->forward(batch.images_a), cfg.histogram).backward();
  bool g_grad = false;
  for (const auto& p : m.g->parameters())
    if (p.grad().defined() && p.grad().abs().sum().item<double>() > 0) g_grad = true;
  CHECK(g_grad);
  for (const auto& p : m.f->parameters()) CHECK(!p.grad().defined());
  for (const auto& p : m.discriminator_parameters()) CHECK(!p.grad().defined());
}

TEST_CASE("networks stay finite through 100 training steps") {
  TranslationTrainer trainer(small_config(), toy().domain_a, toy().domain_b);
  Rng rng(9);
  for (int step = 0; step < 100; ++step) {
    std::vector<int64_t> ia, ib;
    for (int k = 0; k < 4; ++k) {
      ia.push_back(static_cast<int64_t>(rng.below(8)));
      ib.push_back(static_cast<int64_t>(rng.below(8)));
    }
    const auto r = trainer.train_step(trainer.batch(ia, ib));
    REQUIRE(std::isfinite(r.total));
  }
  auto& m = trainer.models();
  torch::NoGradGuard ng;
  const auto x = trainer.batch(std::vector<int64_t>{0, 1}, std::vector<int64_t>{0, 1});
  CHECK(torch::isfinite(m.g->forward(x.images_a)).all().item<bool>());
  CHECK(torch::isfinite(m.f->forward(x.images_b)).all().item<bool>());
  CHECK(torch::isfinite(m.d_a->forward(x.images_a)).all().item<bool>());
  CHECK(torch::isfinite(m.d_b->forward(x.images_b)).all().item<bool>());
}

TEST_CASE("fixed seed gives identical loss curves") {
  const auto cfg = small_config();
  const auto r1 = train_translation(cfg, toy().domain_a, toy().domain_b);
  const auto r2 = train_translation(cfg, toy().domain_a, toy().domain_b);
  REQUIRE(r1.curve.size() == r2.curve.size());
  REQUIRE(r1.curve.size() == 4);
  for (std::size_t i = 0; i < r1.curve.size(); ++i) {
    CHECK(r1.curve[i].total == r2.curve[i].total);
    CHECK(r1.curve[i].cyc == r2.curve[i].cyc);
    CHECK(r1.curve[i].mi == r2.curve[i].mi);
  }
}

TEST_CASE("translate keeps shape, range and order") {
  torch::manual_seed(0);
  Generator g(Direction::AtoB, GeneratorOptions{8, 2});
  Rng rng(1);
  std::vector<Image> imgs = {testing_support::random_image(30, 22, rng), testing_support::random_image(32, 32, rng),
                             testing_support::random_image(9, 13, rng)};
  const auto out = translate(g, imgs);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out[i].height() == imgs[i].height());
    CHECK(out[i].width() == imgs[i].width());
    for (double v : out[i].pixels()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const auto single = translate(g, imgs[i]);
    CHECK(std::equal(single.pixels().begin(), single.pixels().end(), out[i].pixels().begin()));
  }
}

TEST_CASE("generator and discriminator checkpoints round trip") {
  testing_support::TempDir tmp("translation_ckpt");
  const auto cfg = small_config();
  torch::manual_seed(5);
  auto m = TranslationModels::create(cfg);
  save_generator(tmp.path / "F.ckpt", m.f, cfg, 7);
  save_discriminator(tmp.path / "D_A.ckpt", m.d_a, cfg, 7);
  auto f = load_generator(tmp.path / "F.ckpt");
  auto d = load_discriminator(tmp.path / "D_A.ckpt");
  CHECK(f->direction() == Direction::BtoA);
  CHECK(d->domain() == 'A');
  const auto x = torch::rand({1, 3, 32, 32});
  torch::NoGradGuard ng;
  CHECK(torch::equal(f->forward(x), m.f->forward(x)));
  CHECK(torch::equal(d->forward(x), m.d_a->forward(x)));
  const auto header = read_checkpoint_header(tmp.path / "F.ckpt");
  CHECK(header.at("meta").at("epoch") == 7);
  CHECK(translation_config_from_json(header.at("meta").at("config")).generator.base_width == 8);
  CHECK_THROWS(load_generator(tmp.path / "D_A.ckpt"));
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.epochs = 0;
  CHECK_THROWS(c.validate());
  c = small_config();
  c.learning_rate = 0.0;
  CHECK_THROWS(c.validate());
  c = small_config();
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
  c = small_config();
  c.weights.lambda_mi = -1.0;
  CHECK_THROWS(c.validate());
  CHECK(gan_variant_from_string(to_string(GanVariant::LeastSquares)) == GanVariant::LeastSquares);
  CHECK_THROWS(gan_variant_from_string("wasserstein"));
  CHECK_THROWS_AS(TranslationTrainer(small_config(), {}, toy().domain_b), InputError);
}
