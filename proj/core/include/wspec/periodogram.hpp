#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace wspec {

/// A real-valued, equally spaced series. Frequencies used internally are in
/// cycles per sample; the sampling rate only matters when reporting in Hz.
struct TimeSeries {
  std::vector<double> values;
  double sampling_rate_hz = 1.0;

  std::size_t size() const noexcept { return values.size(); }
};

/// Raw periodogram ordinates y_k at the Fourier frequencies k/T, k = 0..T-1.
/// The redundant upper half is kept so that periodic smoothers see every ordinate.
struct PeriodogramSet {
  std::vector<double> freqs;
  std::vector<double> values;

  std::size_t length() const noexcept { return values.size(); }
};

/// Local periodograms on a K x J frequency/time grid. `values(k, j)` holds the
/// ordinate at (freqs[k], times[j]); block j covers samples
/// [block_bounds[j], block_bounds[j+1]).
struct LocalPeriodogramGrid {
  std::vector<double> freqs;
  std::vector<double> times;
  Eigen::MatrixXd values;
  std::vector<std::size_t> block_bounds;

  std::size_t num_freqs() const noexcept { return freqs.size(); }
  std::size_t num_times() const noexcept { return times.size(); }
  std::size_t size() const noexcept { return freqs.size() * times.size(); }
};

enum class DftPath { kAuto, kFft, kDirect };

/// Settings for `local_periodograms`. Zero K/J select defaults (block length
/// close to sqrt(T)); explicit lists override the corresponding counts.
struct GridOptions {
  std::size_t num_freqs = 0;
  std::size_t num_blocks = 0;
  std::vector<double> freqs;
  std::vector<std::size_t> blocks;
  std::vector<double> times;
  bool block_demean = true;
  std::size_t max_cells = 4096;
};

inline constexpr std::size_t kMinStationaryLength = 8;
inline constexpr std::size_t kMinLocallyStationaryLength = 64;

/// True when every prime factor of n is at most 7.
bool is_fft_friendly(std::size_t n) noexcept;

/// sum_t x_t exp(+i 2 pi k t / T) for k = 0..T-1.
std::vector<std::complex<double>> dft(std::span<const double> x, DftPath path = DftPath::kAuto);

PeriodogramSet periodogram(std::span<const double> x, DftPath path = DftPath::kAuto);
PeriodogramSet periodogram(const TimeSeries& x, DftPath path = DftPath::kAuto);

/// Resolves defaults in `opts` for a series of length T without computing anything.
GridOptions resolve_grid(std::size_t T, const GridOptions& opts);

LocalPeriodogramGrid local_periodograms(std::span<const double> x, const GridOptions& opts);
LocalPeriodogramGrid local_periodograms(std::span<const double> x, std::size_t num_freqs,
                                        std::size_t num_blocks);

/// The 60000-sample, 32 x 64 grid used for 200 Hz five-minute EEG segments:
/// omega_k = k/33 and u_j = (938 j - 468.5)/60000, with the final block ending at T.
GridOptions eeg_grid_options();

/// Subtracts the across-channel mean at every time point. A single channel has
/// its own time mean removed instead.
/// Ordinates at the nonzero Fourier frequencies. After mean correction the
/// zero-frequency ordinate is exactly 0 and carries no spectral information.
PeriodogramSet drop_zero_frequency(const PeriodogramSet& pgram);

std::vector<TimeSeries> normalize_series(const std::vector<TimeSeries>& channels);

}  // namespace wspec
