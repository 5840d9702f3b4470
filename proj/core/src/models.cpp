// Copyright 2026 The madsep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "madsep/models.hpp"

#include <stdexcept>

namespace madsep::models {
namespace {

nn::DwsBlockConfig block(std::size_t in, std::size_t out) {
  return nn::DwsBlockConfig{.in_channels = in, .out_channels = out};
}

void append(nn::ParamSpecs& dst, const nn::ParamSpecs& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

std::size_t pooled(std::size_t n, std::size_t pool) { return (n + pool - 1) / pool; }

std::string enc_name(std::size_t i) { return "enc" + std::to_string(i); }

// Replicates the last column until the width divides the pool extent.
template <typename T>
Var<T> pad_and_pool(const Var<T>& x, std::size_t pool_h, std::size_t pool_w) {
  Var<T> h = x;
  const std::size_t W = h.shape()[3];
  if (W % pool_w != 0) {
    std::vector<Var<T>> parts{h};
    const Var<T> edge = ops::slice(h, 3, W - 1, W);
    for (std::size_t k = W % pool_w; k < pool_w; ++k) parts.push_back(edge);
    h = ops::concat(parts, 3);
  }
  return nn::max_pool(h, pool_h, pool_w);
}

template <typename T>
void require_input(const Var<T>& v, const MaskerConfig& cfg) {
  const Shape& s = v.shape();
  if (s.size() != 3 || s[1] != cfg.T + cfg.L || s[2] != cfg.F) {
    throw ShapeError("masker input must be [B, " + std::to_string(cfg.T + cfg.L) + ", " +
                     std::to_string(cfg.F) + "], got " + shape_str(s));
  }
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::kRnn ? "rnn" : "dws-cnn"; }

Variant parse_variant(const std::string& s) {
  if (s == "rnn") return Variant::kRnn;
  if (s == "dws-cnn") return Variant::kDwsCnn;
  throw std::invalid_argument("unknown variant '" + s + "' (valid: rnn, dws-cnn)");
}

void MaskerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("MaskerConfig: " + msg); };
  if (F < 2) fail("F must be at least 2");
  if (T == 0) fail("T must be positive");
  if (L % 2 != 0) fail("L must be even, got " + std::to_string(L));
  if (variant == Variant::kRnn) {
    if (N_tr == 0 || N_tr > F) fail("N_tr must lie in [1, F]");
  } else {
    if (L_enc == 0) fail("L_enc must be at least 1");
    if (C_o == 0) fail("C_o must be positive");
    if (!(p_enc >= 0.0 && p_enc < 1.0) || !(p_dec >= 0.0 && p_dec < 1.0)) {
      fail("dropout probabilities must lie in [0, 1)");
    }
    if (pool_h != 1) fail("pool_h must be 1 so output frames stay aligned with input frames");
    if (pool_w == 0) fail("pool_w must be positive");
  }
}

MaskerConfig MaskerConfig::tiny(Variant v) {
  MaskerConfig c;
  c.variant = v;
  c.F = 16;
  c.N_tr = 8;
  c.T = 4;
  c.L = 2;
  c.C_o = 4;
  c.L_enc = 1;
  return c;
}

std::size_t cnn_pooled_width(const MaskerConfig& cfg) {
  return pooled(pooled(cfg.F, cfg.pool_w), cfg.pool_w);
}

nn::ParamSpecs masker_spec(const MaskerConfig& cfg) {
  cfg.validate();
  nn::ParamSpecs s;
  if (cfg.variant == Variant::kRnn) {
    const std::size_t N = cfg.N_tr;
    append(s, nn::gru_spec("enc_fwd", N, N));
    append(s, nn::gru_spec("enc_bwd", N, N));
    append(s, nn::gru_spec("dec", 2 * N, 2 * N));
    append(s, nn::linear_spec("fnn_m", 2 * N, cfg.F));
    return s;
  }
  const std::size_t C = cfg.C_o;
  append(s, nn::dws_block_spec(enc_name(0), block(1, C)));
  append(s, nn::batch_norm_spec(enc_name(0) + "_bn", C));
  for (std::size_t i = 1; i <= cfg.L_enc; ++i) {
    append(s, nn::dws_block_spec(enc_name(i), block(C, C)));
    append(s, nn::batch_norm_spec(enc_name(i) + "_bn", C));
  }
  append(s, nn::transposed_conv_spec("dec_tconv", C, C, 5, 5));
  append(s, nn::dws_block_spec("dec1", block(C, C)));
  append(s, nn::dws_block_spec("dec2", block(C, C)));
  append(s, nn::batch_norm_spec("dec_bn", C));
  append(s, nn::pointwise_spec("dec_out", C, 1));
  append(s, nn::linear_spec("fnn_m", cnn_pooled_width(cfg), cfg.F));
  return s;
}

nn::ParamSpecs denoiser_spec(std::size_t F) {
  nn::ParamSpecs s = nn::linear_spec("fnn_d1", F, F / 2);
  append(s, nn::linear_spec("fnn_d2", F / 2, F));
  return s;
}

ParamCounts count_params(const MaskerConfig& cfg) {
  ParamCounts c;
  c.masker = nn::count_trainable(masker_spec(cfg));
  c.denoiser = nn::count_trainable(denoiser_spec(cfg.F));
  c.total = c.masker + c.denoiser;
  return c;
}

template <typename T>
ModelParams<T> ModelParams<T>::create(const MaskerConfig& cfg, Rng& rng) {
  ModelParams p;
  p.masker = nn::LayerParams<T>::create(masker_spec(cfg), rng);
  p.denoiser = nn::LayerParams<T>::create(denoiser_spec(cfg.F), rng);
  return p;
}

template <typename T>
Var<T> temporal_trim(const Var<T>& x, std::size_t T_out, std::size_t L) {
  if (x.shape().size() < 2 || x.shape()[1] != T_out + L) {
    throw ShapeError("temporal_trim: expected " + std::to_string(T_out + L) +
                     " frames on axis 1, got " + shape_str(x.shape()));
  }
  return ops::slice(x, 1, L / 2, L / 2 + T_out);
}

template <typename T>
Var<T> rnn_encoder(const Var<T>& v, const MaskerConfig& cfg, nn::Binding<T>& p) {
  const Var<T> v_tr = ops::slice(v, 2, 0, cfg.N_tr);
  const Var<T> v_tr_rev = ops::flip(v_tr, 1);
  const Var<T> fwd = nn::gru_sequence(v_tr, p, "enc_fwd");
  const Var<T> bwd = nn::gru_sequence(v_tr_rev, p, "enc_bwd");
  return ops::concat<T>({fwd, bwd}, 2) + ops::concat<T>({v_tr, v_tr_rev}, 2);
}

template <typename T>
MaskerOutput<T> rnn_masker_forward(const Var<T>& v, const MaskerConfig& cfg,
                                   nn::Binding<T>& p) {
  require_input(v, cfg);
  const Var<T> h_enc = temporal_trim(rnn_encoder(v, cfg, p), cfg.T, cfg.L);
  const Var<T> h_dec = nn::gru_sequence(h_enc, p, "dec");
  MaskerOutput<T> out;
  out.mask = nn::relu(nn::linear(h_dec, p, "fnn_m"));
  out.trimmed = temporal_trim(v, cfg.T, cfg.L);
  out.estimate = out.trimmed * out.mask;
  return out;
}

template <typename T>
MaskerOutput<T> cnn_masker_forward(const Var<T>& v, const MaskerConfig& cfg,
                                   nn::Binding<T>& p, Mode mode, Rng& rng) {
  require_input(v, cfg);
  const std::size_t B = v.shape()[0], S = cfg.T + cfg.L, C = cfg.C_o;

  Var<T> h = ops::reshape(v, {B, 1, S, cfg.F});
  h = nn::dws_block(h, block(1, C), p, enc_name(0), mode);
  h = nn::batch_norm(h, p, enc_name(0) + "_bn", mode);
  h = pad_and_pool(h, cfg.pool_h, cfg.pool_w);
  h = nn::dropout(h, cfg.p_enc, mode, rng);
  for (std::size_t i = 1; i <= cfg.L_enc; ++i) {
    h = nn::dws_block(h, block(C, C), p, enc_name(i), mode);
    h = nn::batch_norm(h, p, enc_name(i) + "_bn", mode);
    h = nn::dropout(h, cfg.p_enc, mode, rng);
  }

  h = nn::transposed_conv(h, p, "dec_tconv", {.pad_h = 2, .pad_w = 2});
  h = nn::dws_block(h, block(C, C), p, "dec1", mode);
  h = nn::dws_block(h, block(C, C), p, "dec2", mode);
  h = nn::batch_norm(h, p, "dec_bn", mode);
  h = pad_and_pool(h, cfg.pool_h, cfg.pool_w);
  h = nn::dropout(h, cfg.p_dec, mode, rng);
  h = nn::pointwise_conv(h, p, "dec_out");

  const std::size_t W = cnn_pooled_width(cfg);
  h = temporal_trim(ops::reshape(h, {B, S, W}), cfg.T, cfg.L);
  MaskerOutput<T> out;
  out.mask = nn::relu(nn::linear(h, p, "fnn_m"));
  out.trimmed = temporal_trim(v, cfg.T, cfg.L);
  out.estimate = out.trimmed * out.mask;
  return out;
}

template <typename T>
MaskerOutput<T> masker_forward(const Var<T>& v, const MaskerConfig& cfg, nn::Binding<T>& p,
                               Mode mode, Rng& rng) {
  cfg.validate();
  return cfg.variant == Variant::kRnn ? rnn_masker_forward(v, cfg, p)
                                      : cnn_masker_forward(v, cfg, p, mode, rng);
}

template <typename T>
Var<T> denoiser_forward(const Var<T>& est, nn::Binding<T>& p) {
  const Var<T> h1 = nn::relu(nn::linear(est, p, "fnn_d1"));
  const Var<T> h2 = nn::relu(nn::linear(h1, p, "fnn_d2"));
  return est * h2;
}

template <typename T>
MadOutput<T> mad_forward(const Var<T>& v, const MaskerConfig& cfg, nn::Binding<T>& masker,
                         nn::Binding<T>& denoiser, Mode mode, Rng& rng) {
  MadOutput<T> out;
  out.masker = masker_forward(v, cfg, masker, mode, rng);
  out.denoised = denoiser_forward(out.masker.estimate, denoiser);
  return out;
}

#define MADSEP_INSTANTIATE_MODELS(T)                                                        \
  template struct ModelParams<T>;                                                           \
  template Var<T> temporal_trim(const Var<T>&, std::size_t, std::size_t);                   \
  template Var<T> rnn_encoder(const Var<T>&, const MaskerConfig&, nn::Binding<T>&);          \
  template MaskerOutput<T> rnn_masker_forward(const Var<T>&, const MaskerConfig&,           \
                                              nn::Binding<T>&);                             \
  template MaskerOutput<T> cnn_masker_forward(const Var<T>&, const MaskerConfig&,           \
                                              nn::Binding<T>&, Mode, Rng&);                 \
  template MaskerOutput<T> masker_forward(const Var<T>&, const MaskerConfig&,               \
                                          nn::Binding<T>&, Mode, Rng&);                     \
  template Var<T> denoiser_forward(const Var<T>&, nn::Binding<T>&);                         \
  template MadOutput<T> mad_forward(const Var<T>&, const MaskerConfig&, nn::Binding<T>&,    \
                                    nn::Binding<T>&, Mode, Rng&);

MADSEP_INSTANTIATE_MODELS(float)
MADSEP_INSTANTIATE_MODELS(double)

}  // namespace madsep::models
