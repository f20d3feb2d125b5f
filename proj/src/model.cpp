#include "ldvae/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace ldvae {

namespace {

using nlohmann::json;

Tensor2 mlp_forward_plain(const Mlp& net, const Tensor2& input) {
  Tensor2 current = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Tensor2 pre = matmul(current, net.weights[i]);
    for (std::size_t r = 0; r < pre.rows(); ++r)
      for (std::size_t c = 0; c < pre.cols(); ++c)
        pre.at(r, c) += net.biases[i].at(0, c);
    current = apply_activation(pre, net.layers[i].activation);
  }
  return current;
}

GradientTape::ValueId mlp_forward_on_tape(
    GradientTape& tape, const Mlp& net, GradientTape::ValueId input,
    std::vector<GradientTape::ValueId>& parameter_ids) {
  GradientTape::ValueId current = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const GradientTape::ValueId w = tape.parameter(net.weights[i]);
    const GradientTape::ValueId b = tape.parameter(net.biases[i]);
    parameter_ids.push_back(w);
    parameter_ids.push_back(b);
    current = tape.activation(tape.affine(current, w, b),
                              net.layers[i].activation);
  }
  return current;
}

void check_band_count(const LdvaeModel& model, std::size_t got) {
  if (got != model.n_bands)
    throw ShapeError("spectrum length " + std::to_string(got) +
                     " does not match model bands " +
                     std::to_string(model.n_bands));
}

} // namespace

void Mlp::validate() const {
  if (layers.empty()) throw ConfigError("Mlp: no layers");
  if (weights.size() != layers.size() || biases.size() != layers.size())
    throw ConfigError("Mlp: parameter count does not match layer count");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    if (spec.input_dim < 1 || spec.output_dim < 1)
      throw ConfigError("Mlp: layer dims must be >= 1");
    if (i > 0 && layers[i - 1].output_dim != spec.input_dim)
      throw ConfigError("Mlp: layer " + std::to_string(i) +
                        " input does not match previous output");
    if (weights[i].rows() != spec.input_dim ||
        weights[i].cols() != spec.output_dim)
      throw ConfigError("Mlp: weight shape mismatch at layer " +
                        std::to_string(i));
    if (biases[i].rows() != 1 || biases[i].cols() != spec.output_dim)
      throw ConfigError("Mlp: bias shape mismatch at layer " +
                        std::to_string(i));
  }
}

void LdvaeModel::validate() const {
  encoder.validate();
  decoder.validate();
  if (n_endmembers < 2) throw ConfigError("model: need at least 2 endmembers");
  if (n_bands < 2) throw ConfigError("model: need at least 2 bands");
  if (encoder.input_dim() != n_bands)
    throw ConfigError("model: encoder input must equal band count");
  if (encoder.output_dim() != n_endmembers)
    throw ConfigError("model: encoder output must equal endmember count");
  const Activation head = encoder.layers.back().activation;
  if (head != Activation::softplus && head != Activation::exp)
    throw ConfigError("model: encoder head activation must be positive");
  if (decoder.input_dim() != n_endmembers)
    throw ConfigError("model: decoder input must equal endmember count");
  if (decoder.output_dim() != 2 * n_bands)
    throw ConfigError("model: decoder output must equal 2x band count");
  if (prior.size() != n_endmembers)
    throw ConfigError("model: prior length must equal endmember count");
  prior.validate();
}

DirichletParams encode(const LdvaeModel& model, std::span<const double> x) {
  check_band_count(model, x.size());
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("encode: non-finite input");
  Tensor2 out = mlp_forward_plain(
      model.encoder, Tensor2(1, x.size(), {x.begin(), x.end()}));
  std::vector<double> alpha(out.data());
  for (double& a : alpha) a += kAlphaFloor;
  return DirichletParams(std::move(alpha));
}

DiagGaussian decode(const LdvaeModel& model, const AbundanceVector& z) {
  if (z.size() != model.n_endmembers)
    throw ShapeError("decode: abundance length mismatch");
  if (!z.on_simplex(1e-4))
    throw DomainError("decode: abundance vector is not on the simplex");
  Tensor2 out = mlp_forward_plain(model.decoder,
                                  Tensor2(1, z.size(), std::vector<double>(z.z)));
  const std::size_t k = model.n_bands;
  std::vector<double> mu(out.data().begin(), out.data().begin() + k);
  std::vector<double> lv(out.data().begin() + k, out.data().end());
  return DiagGaussian(std::move(mu), std::move(lv));
}

ForwardPass forward(const LdvaeModel& model, std::span<const double> x,
                    std::span<const double> uniforms) {
  check_band_count(model, x.size());
  if (uniforms.size() != model.n_endmembers)
    throw ShapeError("forward: need one uniform per endmember");

  ForwardPass pass;
  GradientTape& tape = pass.tape;
  const GradientTape::ValueId input =
      tape.constant(Tensor2(1, x.size(), {x.begin(), x.end()}));

  GradientTape::ValueId pre_alpha =
      mlp_forward_on_tape(tape, model.encoder, input, pass.parameter_ids);
  pass.alpha_id = tape.add_scalar(pre_alpha, kAlphaFloor);
  pass.z_id = sample_dirichlet_on_tape(tape, pass.alpha_id, uniforms);

  GradientTape::ValueId decoded =
      mlp_forward_on_tape(tape, model.decoder, pass.z_id, pass.parameter_ids);
  const std::size_t k = model.n_bands;
  pass.mu_id = tape.slice_cols(decoded, 0, k);
  pass.log_var_id =
      tape.clamp(tape.slice_cols(decoded, k, k), kLogVarMin, kLogVarMax);

  pass.alpha = DirichletParams(std::vector<double>(tape.value(pass.alpha_id).data()));
  pass.z = AbundanceVector(std::vector<double>(tape.value(pass.z_id).data()));
  pass.reconstruction =
      DiagGaussian(std::vector<double>(tape.value(pass.mu_id).data()),
                   std::vector<double>(tape.value(pass.log_var_id).data()));
  return pass;
}

LossBreakdown loss(const LdvaeModel& model, std::span<const double> x,
                   ForwardPass& pass,
                   const std::optional<AbundanceVector>& z_true) {
  if (pass.has_loss) throw StateError("loss already attached to this pass");
  GradientTape& tape = pass.tape;

  const GradientTape::ValueId nll =
      gaussian_nll_on_tape(tape, x, pass.mu_id, pass.log_var_id);
  const GradientTape::ValueId kl =
      dirichlet_kl_on_tape(tape, pass.alpha_id, model.prior, model.kl_mode);

  LossBreakdown breakdown;
  breakdown.negative_log_likelihood = tape.value(nll)[0];
  breakdown.kl = tape.value(kl)[0];

  GradientTape::ValueId total = tape.add(nll, kl);
  if (z_true.has_value()) {
    if (z_true->size() != model.n_endmembers)
      throw ShapeError("loss: z_true length mismatch");
    const GradientTape::ValueId mse = mse_on_tape(tape, pass.z_id, z_true->z);
    breakdown.abundance_mse = tape.value(mse)[0];
    total = tape.add(total, tape.scale(mse, model.omega));
  }
  breakdown.total = tape.value(total)[0];
  pass.total_id = total;
  pass.has_loss = true;
  return breakdown;
}

AbundanceVector estimate_abundances(const LdvaeModel& model,
                                    std::span<const double> x) {
  DirichletParams alpha = encode(model, x);
  const double total = alpha.sum();
  std::vector<double> z(alpha.alpha);
  for (double& v : z) v /= total;
  return AbundanceVector(std::move(z));
}

std::vector<std::vector<double>> extract_endmember_spectra(const LdvaeModel& model) {
  std::vector<std::vector<double>> spectra;
  spectra.reserve(model.n_endmembers);
  for (std::size_t j = 0; j < model.n_endmembers; ++j) {
    DiagGaussian g = decode(model, AbundanceVector::one_hot(model.n_endmembers, j));
    spectra.push_back(std::move(g.mu));
  }
  return spectra;
}

std::vector<double> reconstruct(const LdvaeModel& model,
                                std::span<const double> x) {
  return decode(model, estimate_abundances(model, x)).mu;
}

// --- checkpoint serialization ---

namespace {

constexpr char kModelMagic[8] = {'L', 'D', 'V', 'A', 'E', '0', '0', '1'};

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64_le(std::ostream& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

json layer_specs_to_json(const std::vector<LayerSpec>& layers) {
  json arr = json::array();
  for (const LayerSpec& l : layers)
    arr.push_back({{"in", l.input_dim},
                   {"out", l.output_dim},
                   {"activation", activation_name(l.activation)}});
  return arr;
}

std::vector<LayerSpec> layer_specs_from_json(const json& arr) {
  std::vector<LayerSpec> layers;
  for (const json& item : arr) {
    LayerSpec spec;
    spec.input_dim = item.at("in").get<std::size_t>();
    spec.output_dim = item.at("out").get<std::size_t>();
    spec.activation = activation_from_name(item.at("activation").get<std::string>());
    layers.push_back(spec);
  }
  return layers;
}

} // namespace

void save_model(const LdvaeModel& model, const std::string& path) {
  model.validate();
  json header;
  header["created_by"] = "ldvae 0.1.0";
  header["n_endmembers"] = model.n_endmembers;
  header["n_bands"] = model.n_bands;
  header["omega"] = model.omega;
  header["kl_mode"] = kl_mode_name(model.kl_mode);
  header["prior"] = model.prior.alpha;
  header["encoder"] = layer_specs_to_json(model.encoder.layers);
  header["decoder"] = layer_specs_to_json(model.decoder.layers);
  if (!model.endmember_names.empty())
    header["endmember_names"] = model.endmember_names;
  if (!model.wavelengths.empty()) header["wavelengths"] = model.wavelengths;

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kModelMagic, sizeof(kModelMagic));
  write_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Mlp* net : {&model.encoder, &model.decoder}) {
    for (std::size_t i = 0; i < net->layers.size(); ++i) {
      for (double v : net->weights[i].data()) write_f64_le(out, v);
      for (double v : net->biases[i].data()) write_f64_le(out, v);
    }
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

LdvaeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
    throw IoError("checkpoint magic mismatch: " + path);
  const std::uint32_t header_len = read_u32_le(in);
  if (!in) throw IoError("checkpoint header truncated: " + path);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (!in) throw IoError("checkpoint header truncated: " + path);

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("checkpoint header is not valid JSON: " + std::string(e.what()));
  }

  LdvaeModel model;
  try {
    model.n_endmembers = header.at("n_endmembers").get<std::size_t>();
    model.n_bands = header.at("n_bands").get<std::size_t>();
    model.omega = header.at("omega").get<double>();
    model.kl_mode = kl_mode_from_name(header.at("kl_mode").get<std::string>());
    model.prior = DirichletParams(header.at("prior").get<std::vector<double>>());
    model.encoder.layers = layer_specs_from_json(header.at("encoder"));
    model.decoder.layers = layer_specs_from_json(header.at("decoder"));
    if (header.contains("endmember_names"))
      model.endmember_names =
          header.at("endmember_names").get<std::vector<std::string>>();
    if (header.contains("wavelengths"))
      model.wavelengths = header.at("wavelengths").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw IoError("checkpoint header is incomplete: " + std::string(e.what()));
  }

  for (Mlp* net : {&model.encoder, &model.decoder}) {
    for (const LayerSpec& spec : net->layers) {
      Tensor2 w(spec.input_dim, spec.output_dim);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = read_f64_le(in);
      Tensor2 b(1, spec.output_dim);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = read_f64_le(in);
      net->weights.push_back(std::move(w));
      net->biases.push_back(std::move(b));
    }
  }
  if (!in) throw IoError("checkpoint parameter payload truncated: " + path);
  in.peek();
  if (!in.eof()) throw IoError("checkpoint has trailing bytes: " + path);

  model.validate();
  return model;
}

} // namespace ldvae
