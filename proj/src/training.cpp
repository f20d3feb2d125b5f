#include "ldvae/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ldvae/parallel.hpp"
#include "ldvae/rng.hpp"

namespace ldvae {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw ConfigError("config: learning_rate must be positive");
  if (!(prior_alpha > 0.0))
    throw ConfigError("config: prior_alpha must be positive");
  if (mc_samples < 1) throw ConfigError("config: mc_samples must be >= 1");
  if (!(omega >= 0.0)) throw ConfigError("config: omega must be >= 0");
}

Mlp init_mlp(const std::vector<LayerSpec>& layers, std::uint64_t seed,
             std::uint64_t stream) {
  Mlp net;
  net.layers = layers;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    const double limit =
        std::sqrt(6.0 / static_cast<double>(spec.input_dim + spec.output_dim));
    KeyedRng rng(seed, {KeyedRng::kInit, stream, i});
    Tensor2 w(spec.input_dim, spec.output_dim);
    for (std::size_t j = 0; j < w.size(); ++j)
      w[j] = (2.0 * rng.next_u01() - 1.0) * limit;
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(1, spec.output_dim);
  }
  net.validate();
  return net;
}

namespace {

std::vector<LayerSpec> build_layer_specs(std::size_t input,
                                         const std::vector<std::size_t>& hidden,
                                         std::size_t output,
                                         Activation head) {
  std::vector<LayerSpec> specs;
  std::size_t prev = input;
  for (std::size_t dim : hidden) {
    specs.push_back({prev, dim, Activation::relu});
    prev = dim;
  }
  specs.push_back({prev, output, head});
  return specs;
}

LdvaeModel build_model(const HsiCube& cube, const TrainConfig& config,
                       std::size_t n) {
  LdvaeModel model;
  model.n_endmembers = n;
  model.n_bands = cube.bands;
  model.encoder = init_mlp(
      build_layer_specs(cube.bands, config.encoder_hidden, n,
                        Activation::softplus),
      config.seed, 0);
  model.decoder = init_mlp(
      build_layer_specs(n, config.decoder_hidden, 2 * cube.bands,
                        Activation::identity),
      config.seed, 1);
  model.prior = DirichletParams::symmetric(n, config.prior_alpha);
  model.omega = config.omega;
  model.kl_mode = config.kl_mode;
  model.endmember_names = cube.endmember_names;
  model.wavelengths = cube.wavelengths;
  model.validate();
  return model;
}

struct FlatParams {
  std::vector<Tensor2*> tensors; // encoder W,b..., decoder W,b...
};

FlatParams flatten_params(LdvaeModel& model) {
  FlatParams flat;
  for (Mlp* net : {&model.encoder, &model.decoder}) {
    for (std::size_t i = 0; i < net->layers.size(); ++i) {
      flat.tensors.push_back(&net->weights[i]);
      flat.tensors.push_back(&net->biases[i]);
    }
  }
  return flat;
}

} // namespace

std::pair<LdvaeModel, TrainReport> train(const HsiCube& cube,
                                         const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  cube.validate();

  const bool labeled = cube.has_ground_truth();
  if (config.omega > 0.0 && !labeled)
    throw ConfigError(
        "config: omega > 0 requires a cube with ground-truth abundances "
        "(set omega to 0 for unlabeled training)");

  std::size_t n = config.n_endmembers;
  if (n == 0) n = cube.n_endmembers;
  if (n < 2)
    throw ConfigError(
        "config: endmember count unknown; provide n_endmembers or a labeled cube");
  if (labeled && cube.n_endmembers != n)
    throw ConfigError("config: n_endmembers disagrees with the cube labels");
  if (!config.class_loss_weights.empty()) {
    if (!labeled)
      throw ConfigError("config: class_loss_weights require a labeled cube");
    if (config.class_loss_weights.size() != n)
      throw ConfigError("config: class_loss_weights length must equal n");
    for (double w : config.class_loss_weights)
      if (!(w >= 0.0)) throw ConfigError("config: class weights must be >= 0");
  }

  LdvaeModel model = build_model(cube, config, n);
  FlatParams flat = flatten_params(model);
  std::vector<Tensor2> params_snapshot; // only for Adam state shapes
  for (Tensor2* t : flat.tensors) params_snapshot.push_back(*t);
  AdamState adam = AdamState::create(params_snapshot, config.learning_rate);

  const std::size_t pixel_count = cube.pixel_count();
  std::vector<std::size_t> order(pixel_count);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  report.epoch_mean_loss.reserve(config.epochs);
  const double inv_mc = 1.0 / static_cast<double>(config.mc_samples);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      KeyedRng rng(config.seed, {KeyedRng::kShuffle, epoch});
      for (std::size_t i = pixel_count - 1; i > 0; --i) {
        const std::size_t j = rng.next_u64() % (i + 1);
        std::swap(order[i], order[j]);
      }
    }

    LossBreakdown epoch_sum;
    const std::size_t batch_count =
        (pixel_count + config.batch_size - 1) / config.batch_size;

    for (std::size_t batch = 0; batch < batch_count; ++batch) {
      const std::size_t begin = batch * config.batch_size;
      const std::size_t end =
          std::min(pixel_count, begin + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);

      std::vector<Tensor2> grad_sum;
      for (Tensor2* t : flat.tensors) grad_sum.emplace_back(t->rows(), t->cols());

      for (std::size_t slot = begin; slot < end; ++slot) {
        const std::size_t pixel = order[slot];
        std::span<const double> x = cube.pixel(pixel);

        std::optional<AbundanceVector> z_true;
        double weight = 1.0;
        if (labeled) {
          std::span<const double> gt = cube.abundance(pixel);
          z_true = AbundanceVector({gt.begin(), gt.end()});
          if (!config.class_loss_weights.empty()) {
            const std::size_t dominant = static_cast<std::size_t>(
                std::max_element(gt.begin(), gt.end()) - gt.begin());
            weight = config.class_loss_weights[dominant];
          }
        }

        KeyedRng rng(config.seed, {KeyedRng::kUniform, epoch, batch, pixel});
        for (std::size_t sample = 0; sample < config.mc_samples; ++sample) {
          std::vector<double> uniforms(n);
          for (double& u : uniforms) u = rng.next_u01();

          ForwardPass pass;
          LossBreakdown lb;
          try {
            pass = forward(model, x, uniforms);
            lb = loss(model, x, pass, z_true);
          } catch (const DomainError&) {
            // Inputs were validated up front, so a domain failure here means
            // the parameters left the representable range: the run diverged.
            throw DivergenceError(epoch, batch);
          }
          if (!std::isfinite(lb.total)) throw DivergenceError(epoch, batch);

          epoch_sum.total += lb.total * inv_mc;
          epoch_sum.negative_log_likelihood +=
              lb.negative_log_likelihood * inv_mc;
          epoch_sum.kl += lb.kl * inv_mc;
          epoch_sum.abundance_mse += lb.abundance_mse * inv_mc;

          const double upstream = weight * inv_mc * inv_batch;
          std::vector<Tensor2> grads =
              pass.tape.backward(pass.total_id, Tensor2(1, 1, {upstream}));
          for (std::size_t i = 0; i < grads.size(); ++i)
            add_in_place(grad_sum[i], grads[i]);
        }
      }

      adam_step(flat.tensors, grad_sum, adam);
    }

    const double inv_pixels = 1.0 / static_cast<double>(pixel_count);
    LossBreakdown mean;
    mean.total = epoch_sum.total * inv_pixels;
    mean.negative_log_likelihood =
        epoch_sum.negative_log_likelihood * inv_pixels;
    mean.kl = epoch_sum.kl * inv_pixels;
    mean.abundance_mse = epoch_sum.abundance_mse * inv_pixels;
    report.epoch_mean_loss.push_back(mean);
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return {std::move(model), std::move(report)};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t count, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw ConfigError("split_indices: fraction must lie in [0,1]");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  KeyedRng rng(seed, {KeyedRng::kSplit});
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = rng.next_u64() % i;
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t cut = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(count)));
  std::vector<std::size_t> train(order.begin(), order.begin() + cut);
  std::vector<std::size_t> eval(order.begin() + cut, order.end());
  return {std::move(train), std::move(eval)};
}

HsiCube take_pixels(const HsiCube& cube,
                    const std::vector<std::size_t>& indices) {
  cube.validate();
  if (indices.empty()) throw DataError("take_pixels: no indices");
  HsiCube out;
  out.height = 1;
  out.width = indices.size();
  out.bands = cube.bands;
  out.n_endmembers = cube.n_endmembers;
  out.endmember_names = cube.endmember_names;
  out.wavelengths = cube.wavelengths;
  out.pixels.resize(indices.size() * cube.bands);
  if (cube.has_ground_truth())
    out.ground_truth.resize(indices.size() * cube.n_endmembers);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= cube.pixel_count())
      throw DataError("take_pixels: index out of range");
    std::span<const double> p = cube.pixel(indices[i]);
    std::copy(p.begin(), p.end(), out.pixels.begin() + i * cube.bands);
    if (cube.has_ground_truth()) {
      std::span<const double> a = cube.abundance(indices[i]);
      std::copy(a.begin(), a.end(),
                out.ground_truth.begin() + i * cube.n_endmembers);
    }
  }
  return out;
}

std::vector<double> unmix_cube(const LdvaeModel& model, const HsiCube& cube) {
  if (cube.bands != model.n_bands)
    throw ShapeError("unmix: cube bands do not match the model");
  const std::size_t n = model.n_endmembers;
  std::vector<double> abundances(cube.pixel_count() * n);
  parallel_for(cube.pixel_count(), thread_budget(), [&](std::size_t p) {
    const AbundanceVector z = estimate_abundances(model, cube.pixel(p));
    std::copy(z.z.begin(), z.z.end(), abundances.begin() + p * n);
  });
  return abundances;
}

std::vector<double> reconstruct_cube(const LdvaeModel& model,
                                     const HsiCube& cube) {
  if (cube.bands != model.n_bands)
    throw ShapeError("reconstruct: cube bands do not match the model");
  std::vector<double> result(cube.pixel_count() * cube.bands);
  parallel_for(cube.pixel_count(), thread_budget(), [&](std::size_t p) {
    const std::vector<double> x_hat = reconstruct(model, cube.pixel(p));
    std::copy(x_hat.begin(), x_hat.end(), result.begin() + p * cube.bands);
  });
  return result;
}

EvaluationReport evaluate(const LdvaeModel& model, const HsiCube& cube,
                          const EndmemberSet* library) {
  if (cube.bands != model.n_bands)
    throw ShapeError("evaluate: cube bands do not match the model");
  cube.validate();
  const std::size_t n = model.n_endmembers;
  const std::size_t pixels = cube.pixel_count();

  EvaluationReport report;

  std::vector<double> abundances = unmix_cube(model, cube);
  std::vector<double> reconstructions(pixels * cube.bands);
  std::vector<double> pixel_sad(pixels);
  std::vector<double> pixel_mse(pixels);
  parallel_for(pixels, thread_budget(), [&](std::size_t p) {
    std::span<const double> x = cube.pixel(p);
    const DiagGaussian g = decode(
        model, AbundanceVector({abundances.begin() + p * n,
                                abundances.begin() + (p + 1) * n}));
    std::copy(g.mu.begin(), g.mu.end(), reconstructions.begin() + p * cube.bands);
    pixel_sad[p] = sad(x, g.mu);
    pixel_mse[p] = mse(x, g.mu, cube.bands);
  });
  report.reconstruction_sad = summarize(pixel_sad);
  report.reconstruction_mse = summarize(pixel_mse);

  // Latent index -> reference index; identity unless a library realigns it.
  std::vector<std::size_t> alignment(n);
  std::iota(alignment.begin(), alignment.end(), 0);

  if (library != nullptr) {
    library->validate();
    if (library->count() != n)
      throw ShapeError("evaluate: library endmember count mismatch");
    if (library->bands() != model.n_bands)
      throw ShapeError("evaluate: library band count mismatch");

    EndmemberSet extracted;
    const std::vector<std::vector<double>> spectra =
        extract_endmember_spectra(model);
    for (std::size_t j = 0; j < n; ++j) {
      extracted.names.push_back("extracted_" + std::to_string(j));
      Spectrum s;
      s.values = spectra[j];
      extracted.spectra.push_back(std::move(s));
    }
    const MatchResult match = match_endmembers(extracted, *library);
    alignment = match.permutation;

    report.has_extraction = true;
    report.reference_names = library->names;
    report.per_endmember_sad.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      report.per_endmember_sad[match.permutation[i]] = match.per_pair_sad[i];
    report.mean_endmember_sad = match.mean_sad();
  }

  if (cube.has_ground_truth()) {
    if (cube.n_endmembers != n)
      throw ShapeError("evaluate: ground-truth endmember count mismatch");
    std::vector<double> aligned(pixels * n);
    for (std::size_t p = 0; p < pixels; ++p)
      for (std::size_t i = 0; i < n; ++i)
        aligned[p * n + alignment[i]] = abundances[p * n + i];

    report.has_abundance = true;
    report.class_names = cube.endmember_names;
    if (report.class_names.empty())
      for (std::size_t j = 0; j < n; ++j)
        report.class_names.push_back("class_" + std::to_string(j));
    report.per_class_rmse.resize(n);
    for (std::size_t j = 0; j < n; ++j)
      report.per_class_rmse[j] =
          rmse_component(cube.ground_truth, aligned, n, j);
    report.mean_class_rmse =
        std::accumulate(report.per_class_rmse.begin(),
                        report.per_class_rmse.end(), 0.0) /
        static_cast<double>(n);
    report.overall_rmse = rmse(cube.ground_truth, aligned, n);
  }

  return report;
}

} // namespace ldvae
