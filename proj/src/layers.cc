#include "concaps/layers.h"

#include <cmath>

namespace concaps {

Linear Linear::create(ParameterSet& params, const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.weight = &params.add(name + ".weight", xavier_uniform(in, out, rng));
  l.bias = &params.add(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Var Linear::apply(Tape& tape, Var x) const {
  return ag::add_row(ag::matmul(x, tape.parameter(*weight)), tape.parameter(*bias));
}

LayerNorm LayerNorm::create(ParameterSet& params, const std::string& name, int width) {
  LayerNorm n;
  n.gain = &params.add(name + ".gain", Matrix::Ones(1, width));
  n.bias = &params.add(name + ".bias", Matrix::Zero(1, width));
  return n;
}

Var LayerNorm::apply(Tape& tape, Var x) const {
  return ag::layer_norm(x, tape.parameter(*gain), tape.parameter(*bias));
}

MultiHeadAttention MultiHeadAttention::create(ParameterSet& params, const std::string& name,
                                              int query_width, int memory_width, int heads,
                                              Rng& rng) {
  MultiHeadAttention a;
  a.query = Linear::create(params, name + ".query", query_width, query_width, rng);
  a.key = Linear::create(params, name + ".key", memory_width, query_width, rng);
  a.value = Linear::create(params, name + ".value", memory_width, query_width, rng);
  a.output = Linear::create(params, name + ".output", query_width, query_width, rng);
  a.heads = heads;
  return a;
}

Var MultiHeadAttention::apply(Tape& tape, Var queries, Var memory, bool causal) const {
  Var q = query.apply(tape, queries);
  Var k = key.apply(tape, memory);
  Var v = value.apply(tape, memory);
  return output.apply(tape, ag::attention(q, k, v, heads, causal));
}

FeedForward FeedForward::create(ParameterSet& params, const std::string& name, int width,
                                int hidden, Rng& rng) {
  FeedForward f;
  f.expand = Linear::create(params, name + ".expand", width, hidden, rng);
  f.project = Linear::create(params, name + ".project", hidden, width, rng);
  return f;
}

Var FeedForward::apply(Tape& tape, Var x) const {
  return project.apply(tape, ag::gelu(expand.apply(tape, x)));
}

Matrix sinusoidal_positions(int rows, int width) {
  Matrix pe(rows, width);
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / width);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

}  // namespace concaps
