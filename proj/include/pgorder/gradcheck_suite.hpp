#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pgorder/models/factory.hpp"
#include "pgorder/numcore/gradcheck.hpp"
#include "pgorder/numcore/layers.hpp"
#include "pgorder/training/losses.hpp"

namespace pgo {

struct GradCheckCase {
  std::string name;
  nc::GradCheckReport report;
};

namespace detail {

using nc::Tensor;
using D = double;

inline nc::Array<D> random_array(nc::Dims dims, Rng rng, double scale = 1.0) {
  return nc::normal_array<D>(std::move(dims), scale, rng);
}

/// Weighted sum against a fixed random array, so every output entry gets a distinct upstream gradient.
inline Tensor<D> probe(const Tensor<D>& out, Rng rng) {
  return nc::sum(nc::mul(out, Tensor<D>::constant(random_array(out.dims(), rng))));
}

/// Re-draws every parameter so that gains of 1 and zero biases do not hide mistakes.
inline void jitter(const nc::ParamList<D>& params, Rng rng, double scale = 0.5) {
  for (const auto& [name, p] : params) {
    auto t = p;
    auto values = t.mutable_value().data();
    auto r = rng.split(name);
    for (auto& v : values) v += scale * r.normal();
  }
}

inline nc::GradCheckReport check(const std::function<Tensor<D>()>& f, const nc::ParamList<D>& params,
                                 std::size_t max_per_param = 0) {
  return nc::grad_check(f, params, 1e-6, 1e-3, 1e-7, max_per_param);
}

inline ModelConfig tiny_model(Arch arch, std::uint64_t seed) {
  auto c = default_model_config(arch, 6, seed);
  c.hidden_dim = 8;
  c.heads = 2;
  c.layers = arch == Arch::PointerMlp ? 2 : 1;
  c.decoder_layers = 1;
  c.decoder_hidden = 8;
  c.scorer_layers = 4;
  return c;
}

}  // namespace detail

/// Central-difference checks (double precision, tolerance 1e-3) for every layer
/// type, the three training losses, and each architecture's loss on a small document.
inline std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed = 2024) {
  using namespace detail;
  const Rng root(seed);
  std::vector<GradCheckCase> out;
  auto add_case = [&](std::string name, const std::function<Tensor<D>()>& f, const nc::ParamList<D>& params,
                      std::size_t max_per_param = 0) {
    out.push_back({std::move(name), check(f, params, max_per_param)});
  };

  {  // dense layer
    const auto r = root.split("linear");
    nc::Linear<D> layer(4, 3, r.split("w"));
    auto x = Tensor<D>::parameter(random_array({3, 4}, r.split("x")));
    nc::ParamList<D> ps{{"x", x}};
    layer.collect("linear", ps);
    jitter(ps, r.split("jitter"), 0.1);
    add_case("dense", [&] { return probe(layer(x), r.split("probe")); }, ps);
  }
  {  // elementwise nonlinearities and the structural ops
    const auto r = root.split("ops");
    auto a = Tensor<D>::parameter(random_array({3, 4}, r.split("a")));
    auto b = Tensor<D>::parameter(random_array({3, 4}, r.split("b")));
    auto bias = Tensor<D>::parameter(random_array({4}, r.split("bias")));
    nc::ParamList<D> ps{{"a", a}, {"b", b}, {"bias", bias}};
    add_case("elementwise", [&] {
      auto h = nc::add_row(nc::mul(nc::tanh(a), nc::sigmoid(b)), bias);
      h = nc::sub(h, nc::scale(nc::relu(a), 0.5));
      auto g = nc::gather_rows(h, {2, 0, 2, 1});
      auto c = nc::concat_cols<D>({nc::slice_cols(g, 1, 2), nc::transpose(nc::slice_rows(g, 0, 2))});
      return nc::add(probe(c, r.split("p1")), probe(nc::mean_rows(nc::concat_rows<D>({h, g})), r.split("p2")));
    }, ps);
  }
  {  // masked softmax
    const auto r = root.split("softmax");
    auto x = Tensor<D>::parameter(random_array({3, 4}, r.split("x"), 2.0));
    nc::Mask mask(3, 4, true);
    mask.set(0, 1, false);
    mask.set(2, 0, false);
    mask.set(2, 3, false);
    nc::ParamList<D> ps{{"x", x}};
    add_case("softmax", [&] { return probe(nc::softmax(x, &mask), r.split("probe")); }, ps);
  }
  {  // layer norm
    const auto r = root.split("layer_norm");
    nc::LayerNorm<D> ln(5);
    auto x = Tensor<D>::parameter(random_array({3, 5}, r.split("x")));
    nc::ParamList<D> ps{{"x", x}};
    ln.collect("ln", ps);
    jitter(ps, r.split("jitter"));
    add_case("layer_norm", [&] { return probe(ln(x), r.split("probe")); }, ps);
  }
  {  // embedding lookup, with a repeated index
    const auto r = root.split("embedding");
    nc::Embedding<D> table(6, 4, r.split("t"), 0.5);
    nc::ParamList<D> ps;
    table.collect("emb", ps);
    add_case("embedding", [&] { return probe(table({1, 3, 3, 0}), r.split("probe")); }, ps);
  }
  {  // recurrent cell, three steps
    const auto r = root.split("lstm");
    nc::LstmCell<D> cell(3, 4, r.split("cell"));
    auto xs = Tensor<D>::parameter(random_array({3, 3}, r.split("x")));
    nc::ParamList<D> ps{{"x", xs}};
    cell.collect("cell", ps);
    add_case("lstm_cell", [&] {
      auto s = cell.zero_state();
      for (std::size_t t = 0; t < 3; ++t) s = cell.step(nc::row(xs, t), s);
      return nc::add(probe(s.h, r.split("ph")), probe(s.c, r.split("pc")));
    }, ps);
  }
  {  // bidirectional recurrent encoder
    const auto r = root.split("bilstm");
    nc::BiLstm<D> enc(3, 3, 2, r.split("enc"));
    auto xs = Tensor<D>::parameter(random_array({4, 3}, r.split("x")));
    nc::ParamList<D> ps{{"x", xs}};
    enc.collect("bilstm", ps);
    add_case("bilstm", [&] { return probe(enc(xs), r.split("probe")); }, ps);
  }
  {  // multi-head attention with a causal mask
    const auto r = root.split("attention");
    nc::MultiHeadAttention<D> attn(4, 2, r.split("mha"));
    auto q = Tensor<D>::parameter(random_array({3, 4}, r.split("q")));
    auto m = Tensor<D>::parameter(random_array({3, 4}, r.split("m")));
    const auto causal = nc::Mask::causal(3);
    nc::ParamList<D> ps{{"query", q}, {"memory", m}};
    attn.collect("mha", ps);
    add_case("attention", [&] { return probe(attn(q, m, &causal).out, r.split("probe")); }, ps);
  }
  {  // transformer blocks
    const auto r = root.split("blocks");
    nc::EncoderLayer<D> enc(4, 2, 8, r.split("enc"));
    nc::DecoderLayer<D> dec(4, 2, 8, r.split("dec"));
    auto x = Tensor<D>::parameter(random_array({3, 4}, r.split("x")));
    auto y = Tensor<D>::parameter(random_array({2, 4}, r.split("y")));
    nc::ParamList<D> ps{{"x", x}, {"y", y}};
    enc.collect("enc", ps);
    dec.collect("dec", ps);
    jitter(ps, r.split("jitter"), 0.2);
    add_case("encoder_decoder_layers", [&] { return probe(dec(y, enc(x)), r.split("probe")); }, ps);
  }
  {  // training losses on small documents
    const auto r = root.split("losses");
    const std::vector<int> rank3{2, 0, 1}, rank4{1, 3, 0, 2}, rank5{4, 1, 0, 3, 2};
    auto s = Tensor<D>::parameter(random_array({3, 3}, r.split("s")));
    add_case("loss_pairwise", [&] { return loss_pairwise(s, rank3); }, {{"scores", s}});
    auto logits = Tensor<D>::parameter(random_array({4, 4}, r.split("l")));
    add_case("loss_pointer", [&] { return loss_pointer(logits, rank4); }, {{"logits", logits}});
    auto pos = Tensor<D>::parameter(random_array({5, 1}, r.split("p")));
    add_case("loss_position", [&] { return loss_position(pos, rank5); }, {{"scores", pos}});
  }
  {  // each architecture end to end
    const auto r = root.split("models");
    const std::vector<int> rank{2, 0, 3, 1};
    const auto pages = random_array({4, 6}, r.split("pages"));
    for (auto arch : {Arch::BilstmPos, Arch::PointerMlp, Arch::PointerLstm, Arch::Seq2Seq, Arch::PairwiseRank}) {
      auto cfg = tiny_model(arch, r.split(to_string(arch)).seed());
      if (arch == Arch::Seq2Seq) cfg.pe_variant = PeVariant::Learned;
      auto model = make_model<D>(cfg);
      add_case("model_" + to_string(arch), [&] { return model->loss(pages, rank); }, model->parameters(), 24);
    }
  }
  return out;
}

}  // namespace pgo
