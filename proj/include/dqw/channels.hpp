#pragma once

// Kraus decoherence channels acting on the coin space before each coin toss.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dqw/linalg.hpp"
#include "dqw/walk.hpp"

namespace dqw {

inline constexpr double kChannelTol = 1e-10;
inline constexpr std::size_t kMaxKrausRank = 16;

struct ChannelValidation {
  double trace_preserving_err = 0.0;  // max |sum A^dag A - I|
  double unital_err = 0.0;            // max |sum A A^dag - I|
};

inline ChannelValidation validate(std::span<const Mat4> ops) {
  Mat4 tp = -Mat4::Identity();
  Mat4 un = -Mat4::Identity();
  for (const auto& a : ops) {
    tp += a.adjoint() * a;
    un += a * a.adjoint();
  }
  return {max_abs(tp), max_abs(un)};
}

class KrausChannel {
 public:
  KrausChannel(std::vector<Mat4> ops, std::string label, std::optional<double> p = std::nullopt)
      : ops_(std::move(ops)), label_(std::move(label)), p_(p) {
    if (ops_.empty() || ops_.size() > kMaxKrausRank)
      throw ValidationError("channel '" + label_ + "' must have between 1 and 16 Kraus operators");
    for (const auto& a : ops_)
      if (!a.allFinite()) throw ValidationError("channel '" + label_ + "' has non-finite entries");
    const auto v = dqw::validate(ops_);
    if (v.trace_preserving_err > kChannelTol)
      throw ValidationError("channel '" + label_ + "' is not trace preserving (err " +
                            std::to_string(v.trace_preserving_err) + ")");
    if (v.unital_err > kChannelTol)
      throw ValidationError("channel '" + label_ + "' is not unital (err " +
                            std::to_string(v.unital_err) + ")");
  }

  const std::vector<Mat4>& ops() const { return ops_; }
  const std::string& label() const { return label_; }
  std::optional<double> strength() const { return p_; }

  /// X -> sum_n A_n X A_n^dag
  Mat4 apply(const Mat4& x) const {
    Mat4 out = Mat4::Zero();
    for (const auto& a : ops_) out.noalias() += a * x * a.adjoint();
    return out;
  }

 private:
  std::vector<Mat4> ops_;
  std::string label_;
  std::optional<double> p_;
};

inline ChannelValidation validate(const KrausChannel& ch) { return validate(ch.ops()); }

namespace detail {
inline void require_probability(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0))
    throw RangeError(std::string(who) + ": strength p = " + std::to_string(p) +
                     " outside [0, 1]");
}
}  // namespace detail

inline KrausChannel identity_channel() { return {{Mat4::Identity()}, "identity", 0.0}; }

// Per-step projective measurement of the coin with probability p.
inline KrausChannel coin_measurement(double p) {
  detail::require_probability(p, "coin_measurement");
  std::vector<Mat4> ops{std::sqrt(1.0 - p) * Mat4::Identity()};
  for (const auto& proj : projectors()) ops.push_back(std::sqrt(p) * proj);
  return {std::move(ops), "measurement", p};
}

inline KrausChannel coin_dephasing(double p) {
  detail::require_probability(p, "coin_dephasing");
  const auto& b = pauli_basis16();
  const double w = std::sqrt(p / 3.0);
  // sigma_z (x) I, I (x) sigma_z, sigma_z (x) sigma_z
  return {{std::sqrt(1.0 - p) * Mat4::Identity(), w * b[12], w * b[3], w * b[15]},
          "dephasing",
          p};
}

inline KrausChannel coin_depolarizing(double p) {
  detail::require_probability(p, "coin_depolarizing");
  const auto& b = pauli_basis16();
  std::vector<Mat4> ops{std::sqrt(1.0 - 15.0 * p / 16.0) * Mat4::Identity()};
  for (int i = 1; i < 16; ++i) ops.push_back(std::sqrt(p / 16.0) * b[i]);
  return {std::move(ops), "depolarizing", p};
}

inline KrausChannel channel_by_label(const std::string& label, double p) {
  if (label == "identity") return identity_channel();
  if (label == "measurement") return coin_measurement(p);
  if (label == "dephasing") return coin_dephasing(p);
  if (label == "depolarizing") return coin_depolarizing(p);
  throw ConfigurationError("unknown channel label '" + label +
                           "' (expected identity, measurement, dephasing or depolarizing)");
}

}  // namespace dqw
