#include "ksnarmax/spectral.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include <fftw3.h>

#include "ksnarmax/errors.hpp"

namespace ksnarmax {

namespace {

// FFTW planning is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_smooth(int n) {
  for (int f : {2, 3, 5}) {
    while (n % f == 0) n /= f;
  }
  return n == 1;
}

int choose_padded_size(int n) {
  int m = (3 * n + 1) / 2;
  while (m % 2 != 0 || !is_smooth(m)) ++m;
  return m;
}

}  // namespace

FourierGrid::FourierGrid(double period, int size) : period_(period), size_(size) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw ArgumentError("FourierGrid: period must be positive and finite");
  }
  if (size < 4 || size % 2 != 0) {
    throw ArgumentError("FourierGrid: size must be even and >= 4, got " + std::to_string(size));
  }
  padded_size_ = choose_padded_size(size);
  wavenumbers_.resize(static_cast<std::size_t>(half_size()));
  for (int k = 0; k < half_size(); ++k) {
    wavenumbers_[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / period;
  }
}

int FourierGrid::unstable_modes() const noexcept {
  return static_cast<int>(std::floor(period_ / (2.0 * std::numbers::pi)));
}

SpectralField SpectralField::zeros(const FourierGrid& grid) {
  return SpectralField{grid, std::vector<Complex>(static_cast<std::size_t>(grid.half_size()))};
}

void SpectralField::validate() const {
  if (coeffs.size() != static_cast<std::size_t>(grid.half_size())) {
    throw InvalidStateError("SpectralField: expected " + std::to_string(grid.half_size()) +
                            " coefficients, got " + std::to_string(coeffs.size()));
  }
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (!std::isfinite(coeffs[k].real()) || !std::isfinite(coeffs[k].imag())) {
      throw InvalidStateError("SpectralField: non-finite coefficient at k = " + std::to_string(k));
    }
  }
  if (coeffs.front() != Complex{} || coeffs.back() != Complex{}) {
    throw InvalidStateError("SpectralField: v_0 and v_{N/2} must vanish");
  }
}

std::vector<double> linear_symbol(const FourierGrid& grid) {
  std::vector<double> out(grid.wavenumbers().size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double q2 = grid.wavenumbers()[k] * grid.wavenumbers()[k];
    out[k] = q2 - q2 * q2;
  }
  return out;
}

struct QuadraticTerm::Impl {
  FourierGrid grid;
  int padded;
  double* physical = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan to_physical = nullptr;
  fftw_plan to_spectral = nullptr;

  explicit Impl(const FourierGrid& g) : grid(g), padded(g.padded_size()) {
    std::lock_guard lock(planner_mutex());
    physical = fftw_alloc_real(static_cast<std::size_t>(padded));
    spectrum = fftw_alloc_complex(static_cast<std::size_t>(padded / 2 + 1));
    // FFTW_ESTIMATE keeps the chosen algorithm, and hence rounding, reproducible across runs.
    to_physical = fftw_plan_dft_c2r_1d(padded, spectrum, physical, FFTW_ESTIMATE);
    to_spectral = fftw_plan_dft_r2c_1d(padded, physical, spectrum, FFTW_ESTIMATE);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(to_physical);
    fftw_destroy_plan(to_spectral);
    fftw_free(physical);
    fftw_free(spectrum);
  }

  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;

  void convolve(std::span<const Complex> v, std::span<Complex> out) {
    const auto half = static_cast<std::size_t>(grid.half_size());
    if (v.size() != half || out.size() != half) {
      throw ArgumentError("QuadraticTerm: coefficient count does not match the grid");
    }
    const int spec_len = padded / 2 + 1;
    std::memset(spectrum, 0, sizeof(fftw_complex) * static_cast<std::size_t>(spec_len));
    // Only 1..N/2-1 carry data; v_0 and v_{N/2} are pinned to zero.
    for (std::size_t k = 1; k + 1 < half; ++k) {
      spectrum[k][0] = v[k].real();
      spectrum[k][1] = v[k].imag();
    }
    fftw_execute(to_physical);
    for (int j = 0; j < padded; ++j) physical[j] *= physical[j];
    fftw_execute(to_spectral);
    const double scale = 1.0 / padded;
    out[0] = Complex{};
    for (std::size_t k = 1; k + 1 < half; ++k) {
      out[k] = Complex{spectrum[k][0] * scale, spectrum[k][1] * scale};
    }
    out[half - 1] = Complex{};
  }
};

QuadraticTerm::QuadraticTerm(const FourierGrid& grid) : impl_(std::make_unique<Impl>(grid)) {}
QuadraticTerm::~QuadraticTerm() = default;
QuadraticTerm::QuadraticTerm(QuadraticTerm&&) noexcept = default;
QuadraticTerm& QuadraticTerm::operator=(QuadraticTerm&&) noexcept = default;

const FourierGrid& QuadraticTerm::grid() const noexcept { return impl_->grid; }

void QuadraticTerm::convolve(std::span<const Complex> v, std::span<Complex> out) {
  impl_->convolve(v, out);
}

void QuadraticTerm::evaluate(std::span<const Complex> v, std::span<Complex> out) {
  impl_->convolve(v, out);
  const auto& q = impl_->grid.wavenumbers();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] *= Complex{0.0, -0.5 * q[k]};
  }
}

KseOperator::KseOperator(const FourierGrid& grid) : quadratic_(grid), symbol_(linear_symbol(grid)) {}

void KseOperator::rhs(std::span<const Complex> v, std::span<Complex> out) {
  if (v.data() == out.data()) throw ArgumentError("KseOperator::rhs: output must not alias input");
  quadratic_.evaluate(v, out);
  for (std::size_t k = 1; k + 1 < out.size(); ++k) out[k] += symbol_[k] * v[k];
}

QuadraticTerm& thread_quadratic_term(const FourierGrid& grid) {
  thread_local std::map<std::pair<double, int>, QuadraticTerm> cache;
  const auto key = std::make_pair(grid.period(), grid.size());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, QuadraticTerm(grid)).first;
  return it->second;
}

SpectralField kse_rhs(const SpectralField& field) {
  field.validate();
  SpectralField out = SpectralField::zeros(field.grid);
  thread_quadratic_term(field.grid).evaluate(field.coeffs, out.coeffs);
  const std::vector<double> symbol = linear_symbol(field.grid);
  for (std::size_t k = 1; k + 1 < out.coeffs.size(); ++k) out.coeffs[k] += symbol[k] * field.coeffs[k];
  return out;
}

}  // namespace ksnarmax
