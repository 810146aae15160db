#ifndef CONCAPS_LAYERS_H_
#define CONCAPS_LAYERS_H_

// Building blocks shared by the text encoder and the caption decoder.

#include <string>

#include "concaps/autograd.h"

namespace concaps {

struct Linear {
  Parameter* weight = nullptr;  // [in x out]
  Parameter* bias = nullptr;    // [1 x out]

  static Linear create(ParameterSet& params, const std::string& name, int in, int out, Rng& rng);
  Var apply(Tape& tape, Var x) const;
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  static LayerNorm create(ParameterSet& params, const std::string& name, int width);
  Var apply(Tape& tape, Var x) const;
};

struct MultiHeadAttention {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
  int heads = 1;

  static MultiHeadAttention create(ParameterSet& params, const std::string& name, int query_width,
                                   int memory_width, int heads, Rng& rng);
  Var apply(Tape& tape, Var queries, Var memory, bool causal) const;
};

struct FeedForward {
  Linear expand;
  Linear project;

  static FeedForward create(ParameterSet& params, const std::string& name, int width, int hidden,
                            Rng& rng);
  Var apply(Tape& tape, Var x) const;
};

// Standard sin/cos position table, rows = positions.
Matrix sinusoidal_positions(int rows, int width);

}  // namespace concaps

#endif  // CONCAPS_LAYERS_H_
