#include "paramine/head.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "paramine/error.hpp"
#include "paramine/rng.hpp"

namespace paramine {

namespace {

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32_le(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(std::string("head.bin truncated while reading ") + what);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

struct Forward {
  std::vector<double> pre;   // W*base + b
  std::vector<double> act;   // activation(pre)
  double act_norm = 0.0;
};

Forward forward(const ProjectionHead& head, std::span<const double> base) {
  if (base.size() != head.d_in) throw DimensionMismatchError(base.size(), head.d_in);
  Forward f;
  f.pre.resize(head.d_out);
  for (std::size_t r = 0; r < head.d_out; ++r) {
    long double acc = head.bias[r];
    for (std::size_t c = 0; c < head.d_in; ++c) {
      acc += static_cast<long double>(head.w(r, c)) * base[c];
    }
    f.pre[r] = static_cast<double>(acc);
  }
  f.act = f.pre;
  if (head.activation == Activation::Tanh) {
    for (auto& x : f.act) x = std::tanh(x);
  }
  f.act_norm = norm(f.act);
  return f;
}

}  // namespace

const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + name + "' (expected identity or tanh)");
}

ProjectionHead init_head(std::size_t d_in, std::size_t d_out, Activation activation, Rng& rng) {
  if (d_in < 2 || d_out < 2) throw ConfigError("projection head needs d_in >= 2 and d_out >= 2");
  ProjectionHead head;
  head.d_in = d_in;
  head.d_out = d_out;
  head.activation = activation;
  head.weights.resize(d_in * d_out);
  head.bias.assign(d_out, 0.0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (auto& w : head.weights) w = bound * (2.0 * rng.uniform() - 1.0);
  return head;
}

Embedding encode(const ProjectionHead& head, std::span<const double> base) {
  const Forward f = forward(head, base);
  if (f.act_norm < 1e-12) throw ZeroVectorError();
  std::vector<double> out(f.act);
  for (auto& x : out) x /= f.act_norm;
  return Embedding(std::move(out));
}

HeadGrad head_gradient(const ProjectionHead& head,
                       const std::vector<std::vector<double>>& bases,
                       const std::vector<std::vector<double>>& upstream) {
  if (bases.size() != upstream.size()) {
    throw DimensionMismatchError("head_gradient: " + std::to_string(bases.size()) +
                                 " bases vs " + std::to_string(upstream.size()) +
                                 " upstream gradients");
  }
  HeadGrad grad;
  grad.weights.assign(head.weights.size(), 0.0);
  grad.bias.assign(head.bias.size(), 0.0);

  for (std::size_t s = 0; s < bases.size(); ++s) {
    const auto& base = bases[s];
    const auto& up = upstream[s];
    if (up.size() != head.d_out) throw DimensionMismatchError(up.size(), head.d_out);

    const Forward f = forward(head, base);
    if (f.act_norm < 1e-12) throw ZeroVectorError();

    // Through e = u / ||u||: dL/du = (G - <G, e> e) / ||u||.
    std::vector<double> e(f.act);
    for (auto& x : e) x /= f.act_norm;
    const double g_dot_e = dot(up, e);
    std::vector<double> d_act(head.d_out);
    for (std::size_t r = 0; r < head.d_out; ++r) {
      d_act[r] = (up[r] - g_dot_e * e[r]) / f.act_norm;
    }

    // Through the activation: tanh' = 1 - tanh^2.
    if (head.activation == Activation::Tanh) {
      for (std::size_t r = 0; r < head.d_out; ++r) {
        d_act[r] *= 1.0 - f.act[r] * f.act[r];
      }
    }

    for (std::size_t r = 0; r < head.d_out; ++r) {
      grad.bias[r] += d_act[r];
      for (std::size_t c = 0; c < head.d_in; ++c) {
        grad.weights[r * head.d_in + c] += d_act[r] * base[c];
      }
    }
  }
  return grad;
}

void write_head(std::ostream& out, const ProjectionHead& head) {
  out.write("HEAD", 4);
  put_u32_le(out, static_cast<std::uint32_t>(head.d_in));
  put_u32_le(out, static_cast<std::uint32_t>(head.d_out));
  const char tag = static_cast<char>(head.activation);
  out.write(&tag, 1);
  for (double w : head.weights) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(w)));
  }
  for (double b : head.bias) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(b)));
  }
}

ProjectionHead read_head(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "HEAD", 4) != 0) {
    throw FormatError("head.bin: bad magic (expected HEAD)");
  }
  ProjectionHead head;
  head.d_in = get_u32_le(in, "d_in");
  head.d_out = get_u32_le(in, "d_out");
  char tag = 0;
  if (!in.read(&tag, 1)) throw FormatError("head.bin truncated while reading activation tag");
  if (tag != 0 && tag != 1) {
    throw FormatError("head.bin: unknown activation tag " + std::to_string(int(tag)));
  }
  head.activation = static_cast<Activation>(tag);
  if (head.d_in < 2 || head.d_out < 2) {
    throw FormatError("head.bin: dimensions must be >= 2");
  }
  head.weights.resize(head.d_in * head.d_out);
  for (auto& w : head.weights) {
    w = static_cast<double>(std::bit_cast<float>(get_u32_le(in, "weights")));
  }
  head.bias.resize(head.d_out);
  for (auto& b : head.bias) {
    b = static_cast<double>(std::bit_cast<float>(get_u32_le(in, "bias")));
  }
  return head;
}

}  // namespace paramine
