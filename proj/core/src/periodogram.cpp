#include "wspec/periodogram.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "wspec/error.hpp"

namespace wspec {

namespace {

// FFTW's planner is not reentrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

void require_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidInput("series contains a non-finite value");
  }
}

std::vector<std::complex<double>> dft_fftw(std::span<const double> x) {
  const std::size_t n = x.size();
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in.get());
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  // r2c uses exp(-i...), so conjugate to get the exp(+i...) convention.
  std::vector<std::complex<double>> result(n);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    result[k] = {out.get()[k][0], -out.get()[k][1]};
  }
  for (std::size_t k = n / 2 + 1; k < n; ++k) result[k] = std::conj(result[n - k]);
  return result;
}

std::vector<std::complex<double>> dft_direct(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> twiddle(n);
  for (std::size_t m = 0; m < n; ++m) {
    twiddle[m] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(m) /
                                     static_cast<double>(n));
  }
  std::vector<std::complex<double>> result(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    std::size_t m = 0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * twiddle[m];
      m += k;
      if (m >= n) m -= n;
    }
    result[k] = acc;
  }
  return result;
}

std::vector<std::size_t> even_blocks(std::size_t T, std::size_t J) {
  std::vector<std::size_t> b(J + 1);
  for (std::size_t j = 0; j <= J; ++j) b[j] = (j * T) / J;
  return b;
}

}  // namespace

bool is_fft_friendly(std::size_t n) noexcept {
  if (n == 0) return false;
  for (std::size_t p : {2u, 3u, 5u, 7u}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

std::vector<std::complex<double>> dft(std::span<const double> x, DftPath path) {
  if (x.empty()) throw InvalidInput("dft of an empty series");
  if (path == DftPath::kAuto) path = is_fft_friendly(x.size()) ? DftPath::kFft : DftPath::kDirect;
  return path == DftPath::kFft ? dft_fftw(x) : dft_direct(x);
}

PeriodogramSet periodogram(std::span<const double> x, DftPath path) {
  if (x.size() < kMinStationaryLength) {
    throw InvalidInput("periodogram needs at least " + std::to_string(kMinStationaryLength) +
                       " samples, got " + std::to_string(x.size()));
  }
  require_finite(x);
  const std::size_t T = x.size();
  const auto coeffs = dft(x, path);
  PeriodogramSet out;
  out.freqs.resize(T);
  out.values.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    out.freqs[k] = static_cast<double>(k) / static_cast<double>(T);
    out.values[k] = std::norm(coeffs[k]) / static_cast<double>(T);
  }
  return out;
}

PeriodogramSet periodogram(const TimeSeries& x, DftPath path) {
  return periodogram(std::span<const double>(x.values), path);
}

GridOptions resolve_grid(std::size_t T, const GridOptions& opts) {
  if (T < kMinLocallyStationaryLength) {
    throw InvalidInput("local periodograms need at least " +
                       std::to_string(kMinLocallyStationaryLength) + " samples, got " +
                       std::to_string(T));
  }
  GridOptions g = opts;

  if (!g.blocks.empty()) {
    if (g.blocks.size() < 2 || g.blocks.front() != 0 || g.blocks.back() != T) {
      throw InvalidInput("explicit block boundaries must start at 0 and end at T");
    }
    for (std::size_t j = 0; j + 1 < g.blocks.size(); ++j) {
      if (g.blocks[j + 1] <= g.blocks[j]) {
        throw InvalidInput("explicit block boundaries must be strictly increasing");
      }
    }
    if (g.num_blocks != 0 && g.num_blocks != g.blocks.size() - 1) {
      throw InvalidInput("block count disagrees with explicit block boundaries");
    }
    g.num_blocks = g.blocks.size() - 1;
  } else {
    if (g.num_blocks == 0) {
      g.num_blocks = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(T))));
      g.num_blocks = std::clamp<std::size_t>(g.num_blocks, 1, T / 8);
    }
    g.blocks = even_blocks(T, g.num_blocks);
  }
  const std::size_t J = g.num_blocks;
  if (J > T / 8) {
    throw InvalidInput("too many time blocks (" + std::to_string(J) + ") for a series of length " +
                       std::to_string(T) + "; at most T/8");
  }

  if (!g.freqs.empty()) {
    if (g.num_freqs != 0 && g.num_freqs != g.freqs.size()) {
      throw InvalidInput("frequency count disagrees with explicit frequency list");
    }
    for (double w : g.freqs) {
      if (!(w >= 0.0 && w <= 1.0)) throw InvalidInput("grid frequencies must lie in [0, 1]");
    }
    g.num_freqs = g.freqs.size();
  } else {
    if (g.num_freqs == 0) {
      g.num_freqs = std::clamp<std::size_t>(J, 1, std::max<std::size_t>(1, g.max_cells / J));
    }
    g.freqs.resize(g.num_freqs);
    for (std::size_t k = 0; k < g.num_freqs; ++k) {
      g.freqs[k] = static_cast<double>(k + 1) / static_cast<double>(g.num_freqs + 1);
    }
  }
  const std::size_t K = g.num_freqs;
  if (K * J > g.max_cells) {
    throw InvalidInput("grid of " + std::to_string(K) + " x " + std::to_string(J) +
                       " cells exceeds the limit of " + std::to_string(g.max_cells));
  }

  if (!g.times.empty()) {
    if (g.times.size() != J) throw InvalidInput("explicit time list must have one entry per block");
    for (double u : g.times) {
      if (!(u >= 0.0 && u <= 1.0)) throw InvalidInput("grid times must lie in [0, 1]");
    }
  } else {
    g.times.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
      g.times[j] = 0.5 * static_cast<double>(g.blocks[j] + g.blocks[j + 1]) / static_cast<double>(T);
    }
  }
  return g;
}

LocalPeriodogramGrid local_periodograms(std::span<const double> x, const GridOptions& opts) {
  require_finite(x);
  const GridOptions g = resolve_grid(x.size(), opts);
  const std::size_t K = g.num_freqs;
  const std::size_t J = g.num_blocks;

  LocalPeriodogramGrid out;
  out.freqs = g.freqs;
  out.times = g.times;
  out.block_bounds = g.blocks;
  out.values.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(J));

  std::vector<double> block;
  for (std::size_t j = 0; j < J; ++j) {
    const std::size_t begin = g.blocks[j];
    const std::size_t len = g.blocks[j + 1] - begin;
    block.assign(x.begin() + static_cast<std::ptrdiff_t>(begin),
                 x.begin() + static_cast<std::ptrdiff_t>(begin + len));
    if (g.block_demean) {
      double mean = 0.0;
      for (double v : block) mean += v;
      mean /= static_cast<double>(len);
      for (double& v : block) v -= mean;
    }
    for (std::size_t k = 0; k < K; ++k) {
      // Phases are taken relative to the block start; |.|^2 is unaffected.
      const double step = 2.0 * std::numbers::pi * g.freqs[k];
      std::complex<double> acc = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        acc += block[t] * std::polar(1.0, step * static_cast<double>(t));
      }
      out.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          std::norm(acc) / static_cast<double>(len);
    }
  }
  return out;
}

LocalPeriodogramGrid local_periodograms(std::span<const double> x, std::size_t num_freqs,
                                        std::size_t num_blocks) {
  GridOptions opts;
  opts.num_freqs = num_freqs;
  opts.num_blocks = num_blocks;
  if (num_freqs == 0 || num_blocks == 0) throw InvalidInput("K and J must be positive");
  return local_periodograms(x, opts);
}

GridOptions eeg_grid_options() {
  constexpr std::size_t T = 60000;
  constexpr std::size_t J = 64;
  constexpr std::size_t K = 32;
  constexpr std::size_t block = 938;
  GridOptions g;
  g.num_freqs = K;
  g.num_blocks = J;
  for (std::size_t k = 1; k <= K; ++k) g.freqs.push_back(static_cast<double>(k) / 33.0);
  for (std::size_t j = 0; j < J; ++j) g.blocks.push_back(j * block);
  g.blocks.push_back(T);
  for (std::size_t j = 1; j < J; ++j) {
    g.times.push_back((938.0 * static_cast<double>(j) - 468.5) / 60000.0);
  }
  g.times.push_back(0.9925);
  return g;
}

PeriodogramSet drop_zero_frequency(const PeriodogramSet& pgram) {
  PeriodogramSet out;
  for (std::size_t k = 0; k < pgram.length(); ++k) {
    if (pgram.freqs[k] == 0.0) continue;
    out.freqs.push_back(pgram.freqs[k]);
    out.values.push_back(pgram.values[k]);
  }
  return out;
}

std::vector<TimeSeries> normalize_series(const std::vector<TimeSeries>& channels) {
  if (channels.empty()) return {};
  const std::size_t T = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != T) throw InvalidInput("channels differ in length");
  }
  std::vector<TimeSeries> out = channels;
  if (channels.size() == 1) {
    double mean = 0.0;
    for (double v : out[0].values) mean += v;
    if (T > 0) mean /= static_cast<double>(T);
    for (double& v : out[0].values) v -= mean;
    return out;
  }
  const double m = static_cast<double>(channels.size());
  for (std::size_t t = 0; t < T; ++t) {
    double mean = 0.0;
    for (const auto& ch : channels) mean += ch.values[t];
    mean /= m;
    for (auto& ch : out) ch.values[t] -= mean;
  }
  return out;
}

}  // namespace wspec
