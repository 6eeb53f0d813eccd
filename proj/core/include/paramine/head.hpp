#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "paramine/geometry.hpp"

namespace paramine {

class Rng;

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1 };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Trainable projection over frozen base embeddings. Output contract: the
// encoded vector is always L2-normalized.
struct ProjectionHead {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::vector<double> weights;  // row-major d_out x d_in
  std::vector<double> bias;     // d_out
  Activation activation = Activation::Identity;

  double w(std::size_t row, std::size_t col) const { return weights[row * d_in + col]; }
};

// W entries uniform in [-1/sqrt(d_in), 1/sqrt(d_in)], b = 0.
ProjectionHead init_head(std::size_t d_in, std::size_t d_out, Activation activation, Rng& rng);

// l2_normalize(activation(W * base + b)).
Embedding encode(const ProjectionHead& head, std::span<const double> base);

struct HeadGrad {
  std::vector<double> weights;
  std::vector<double> bias;
};

// Backpropagates upstream dL/d(output embedding) through the normalization,
// the activation and the affine map, accumulated over the batch.
HeadGrad head_gradient(const ProjectionHead& head,
                       const std::vector<std::vector<double>>& bases,
                       const std::vector<std::vector<double>>& upstream);

// head.bin: magic "HEAD", u32 d_in, u32 d_out, u8 activation tag, W row-major
// f32 LE, then b.
void write_head(std::ostream& out, const ProjectionHead& head);
ProjectionHead read_head(std::istream& in);

}  // namespace paramine
