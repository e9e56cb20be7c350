#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ksnarmax/data_gen.hpp"
#include "ksnarmax/spectral.hpp"

namespace ksnarmax {

/// Resolved modes u_1..u_K; u_{-k} = conj(u_k) is implied.
struct ReducedState {
  std::vector<Complex> u;

  int modes() const noexcept { return static_cast<int>(u.size()); }
  friend bool operator==(const ReducedState&, const ReducedState&) = default;
};

/// The K-mode Galerkin truncation (grid N = 2(K+1)) and its one-step RK4 map
///   u^{n+1} = u^n + delta R^delta(u^n).
/// Holds transform scratch space, so an instance is not thread safe.
class TruncatedModel {
 public:
  TruncatedModel(double period, int modes);

  int modes() const noexcept { return modes_; }
  double period() const noexcept { return op_.grid().period(); }
  const FourierGrid& grid() const noexcept { return op_.grid(); }

  /// du_k/dt for k = 1..K.
  void rhs(std::span<const Complex> u, std::span<Complex> out);
  /// R^delta(u) = (k1 + 2 k2 + 2 k3 + k4) / 6 of one classical RK4 step of size delta.
  void increment(std::span<const Complex> u, double delta, std::span<Complex> out);

  std::vector<Complex> truncated_rhs(const ReducedState& state);
  ReducedState rdelta_step(const ReducedState& state, double delta);
  std::vector<Complex> rdelta(const ReducedState& state, double delta);

 private:
  int modes_;
  KseOperator op_;
  std::vector<Complex> padded_in_, padded_out_;
  std::vector<Complex> k1_, k2_, k3_, k4_, stage_;
};

/// z^{n+1} for n = 0..T-1, stored row-major (T x K).
class ModelErrorSeries {
 public:
  ModelErrorSeries() = default;
  ModelErrorSeries(int modes, double delta, std::vector<Complex> values);

  int modes() const noexcept { return modes_; }
  double delta() const noexcept { return delta_; }
  /// T.
  std::size_t size() const noexcept { return values_.size() / static_cast<std::size_t>(modes_); }
  /// z^{n} for n = 1..T.
  std::span<const Complex> at(std::size_t n) const {
    return {values_.data() + (n - 1) * static_cast<std::size_t>(modes_), static_cast<std::size_t>(modes_)};
  }
  const std::vector<Complex>& values() const noexcept { return values_; }

  friend bool operator==(const ModelErrorSeries&, const ModelErrorSeries&) = default;

 private:
  int modes_ = 0;
  double delta_ = 0.0;
  std::vector<Complex> values_;
};

/// z^{n+1} = (u^{n+1} - u^n)/delta - R^delta(u^n). Requires T >= 1; L comes from the series meta.
ModelErrorSeries extract_model_error(const ObservationSeries& series);
ModelErrorSeries extract_model_error(const ObservationSeries& series, TruncatedModel& model);

/// Forward map u^{n+1} = u^n + delta R^delta(u^n) + delta z^{n+1}, starting from u0.
ObservationSeries apply_model_error(const ReducedState& u0, const ModelErrorSeries& z, TruncatedModel& model);

/// "KSMZ" file; the header length field holds T and the payload T vectors.
void save(const ModelErrorSeries& z, const std::filesystem::path& path);
ModelErrorSeries load_model_error(const std::filesystem::path& path);

}  // namespace ksnarmax
