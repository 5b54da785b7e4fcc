#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include <wspec/error.hpp>
#include <wspec/periodogram.hpp>
#include <wspec/simulation.hpp>

#include "oracles.hpp"

using namespace wspec;

TEST(Periodogram, MatchesDirectSumOracle) {
  for (std::size_t T : {8u, 17u, 64u, 100u, 243u}) {
    const auto x = oracle::normals(T, T);
    const auto expected = oracle::periodogram(x);
    const PeriodogramSet p = periodogram(x);
    ASSERT_EQ(p.length(), T);
    for (std::size_t k = 0; k < T; ++k) {
      EXPECT_NEAR(p.values[k], expected[k], 1e-9 * (1.0 + expected[k])) << "T=" << T << " k=" << k;
      EXPECT_DOUBLE_EQ(p.freqs[k], static_cast<double>(k) / static_cast<double>(T));
    }
  }
}

TEST(Periodogram, ParsevalIdentity) {
  const auto x = oracle::normals(512, 3);
  const PeriodogramSet p = periodogram(x);
  const double energy = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
  const double total = std::accumulate(p.values.begin(), p.values.end(), 0.0);
  EXPECT_NEAR(total, energy, 1e-9 * energy);
}

TEST(Periodogram, FftAndDirectPathsAgree) {
  const auto x = oracle::normals(210, 4);
  const auto a = periodogram(x, DftPath::kFft);
  const auto b = periodogram(x, DftPath::kDirect);
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-9);
}

TEST(Periodogram, SymmetricAboutHalf) {
  const auto x = oracle::normals(64, 5);
  const auto p = periodogram(x);
  for (std::size_t k = 1; k < 64; ++k) EXPECT_NEAR(p.values[k], p.values[64 - k], 1e-10);
}

TEST(Periodogram, ConstantSeriesConcentratesAtZero) {
  const std::vector<double> x(32, 2.0);
  const auto p = periodogram(x);
  EXPECT_NEAR(p.values[0], 32.0 * 4.0, 1e-9);
  for (std::size_t k = 1; k < 32; ++k) EXPECT_NEAR(p.values[k], 0.0, 1e-12);
}

TEST(Periodogram, RejectsShortOrNonFiniteInput) {
  EXPECT_THROW(periodogram(std::vector<double>(7, 1.0)), InvalidInput);
  std::vector<double> bad(16, 0.0);
  bad[3] = std::nan("");
  EXPECT_THROW(periodogram(bad), InvalidInput);
}

TEST(Periodogram, FftFriendlyLengths) {
  EXPECT_TRUE(is_fft_friendly(1024));
  EXPECT_TRUE(is_fft_friendly(2 * 3 * 5 * 7));
  EXPECT_FALSE(is_fft_friendly(11 * 13));
  EXPECT_FALSE(is_fft_friendly(0));
}

TEST(Periodogram, ArmaAverageIsUnbiased) {
  const std::size_t T = 128;
  std::vector<double> mean(T, 0.0);
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    const auto p = periodogram(simulate(ar3_process(T, 1000 + r)));
    for (std::size_t k = 0; k < T; ++k) mean[k] += p.values[k] / reps;
  }
  // Exact expectation: the spectrum smoothed by the Fejer kernel, built from
  // autocovariances obtained by quadrature of the true spectrum.
  const auto spec = ar3_process(T, 0);
  const int nodes = 1 << 15;
  std::vector<double> gamma(T, 0.0);
  for (int i = 0; i < nodes; ++i) {
    const double w = (i + 0.5) / nodes;
    const double f = oracle::arma_spectrum(spec.ar, spec.ma, w);
    for (std::size_t h = 0; h < T; ++h) gamma[h] += f * std::cos(2.0 * std::numbers::pi * w * h) / nodes;
  }
  for (std::size_t k = 1; k < T / 2; ++k) {
    const double w = static_cast<double>(k) / T;
    double expected = gamma[0];
    for (std::size_t h = 1; h < T; ++h) {
      expected += 2.0 * (1.0 - static_cast<double>(h) / T) * gamma[h] * std::cos(2.0 * std::numbers::pi * w * h);
    }
    EXPECT_NEAR(mean[k] / expected, 1.0, 0.1) << "w=" << w;
  }
}

TEST(LocalPeriodograms, MatchBlockOracle) {
  const auto x = oracle::normals(256, 6);
  const auto grid = local_periodograms(x, 8, 16);
  ASSERT_EQ(grid.num_freqs(), 8u);
  ASSERT_EQ(grid.num_times(), 16u);
  for (std::size_t j = 0; j < 16; ++j) {
    EXPECT_DOUBLE_EQ(grid.times[j], (16.0 * j + 8.0) / 256.0);
    for (std::size_t k = 0; k < 8; ++k) {
      EXPECT_DOUBLE_EQ(grid.freqs[k], (k + 1.0) / 9.0);
      const double expected = oracle::block_periodogram(x, 16 * j, 16 * (j + 1), grid.freqs[k]);
      EXPECT_NEAR(grid.values(k, j), expected, 1e-10 * (1.0 + expected));
    }
  }
}

TEST(LocalPeriodograms, DefaultGridIsSquareRoot) {
  const auto x = oracle::normals(1024, 7);
  const auto grid = local_periodograms(x, GridOptions{});
  EXPECT_EQ(grid.num_times(), 32u);
  EXPECT_EQ(grid.num_freqs(), 32u);
}

TEST(LocalPeriodograms, WhiteNoiseGrandMean) {
  double total = 0.0;
  for (int s = 0; s < 100; ++s) {
    const auto grid = local_periodograms(oracle::normals(1024, 500 + s), 16, 16);
    total += grid.values.mean();
  }
  EXPECT_NEAR(total / 100.0, 1.0, 0.2);
}

TEST(LocalPeriodograms, Validation) {
  const auto x = oracle::normals(128, 8);
  EXPECT_THROW(local_periodograms(oracle::normals(63, 1), 4, 4), InvalidInput);
  EXPECT_THROW(local_periodograms(x, 4, 17), InvalidInput);  // more than T/8 blocks
  EXPECT_THROW(local_periodograms(x, 0, 4), InvalidInput);
  GridOptions big;
  big.num_freqs = 100;
  big.num_blocks = 16;
  big.max_cells = 1000;
  EXPECT_THROW(local_periodograms(x, big), InvalidInput);
  GridOptions blocks;
  blocks.blocks = {0, 64, 60, 128};
  EXPECT_THROW(local_periodograms(x, blocks), InvalidInput);
  blocks.blocks = {0, 64, 127};
  EXPECT_THROW(local_periodograms(x, blocks), InvalidInput);
}

TEST(LocalPeriodograms, EegPresetGrid) {
  const GridOptions g = eeg_grid_options();
  ASSERT_EQ(g.freqs.size(), 32u);
  ASSERT_EQ(g.times.size(), 64u);
  for (std::size_t k = 1; k <= 32; ++k) EXPECT_DOUBLE_EQ(g.freqs[k - 1], k / 33.0);
  for (std::size_t j = 1; j <= 63; ++j) {
    EXPECT_NEAR(g.times[j - 1], (938.0 * j - 468.5) / 60000.0, 1e-15);
  }
  const GridOptions resolved = resolve_grid(60000, g);
  EXPECT_EQ(resolved.num_blocks, 64u);
  EXPECT_THROW(resolve_grid(50000, g), InvalidInput);
}

TEST(NormalizeSeries, AcrossChannelMean) {
  const std::vector<TimeSeries> ch{{{1, 1, 1}}, {{3, 3, 3}}};
  const auto out = normalize_series(ch);
  for (double v : out[0].values) EXPECT_DOUBLE_EQ(v, -1.0);
  for (double v : out[1].values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(NormalizeSeries, SingleChannelOwnMean) {
  const auto out = normalize_series({TimeSeries{{1, 2, 3}}});
  EXPECT_DOUBLE_EQ(out[0].values[0], -1.0);
  EXPECT_DOUBLE_EQ(out[0].values[1], 0.0);
  EXPECT_DOUBLE_EQ(out[0].values[2], 1.0);
  EXPECT_THROW(normalize_series({TimeSeries{{1, 2}}, TimeSeries{{1}}}), InvalidInput);
}

TEST(Periodogram, DropZeroFrequency) {
  const auto p = drop_zero_frequency(periodogram(oracle::normals(16, 2)));
  ASSERT_EQ(p.length(), 15u);
  EXPECT_DOUBLE_EQ(p.freqs.front(), 1.0 / 16.0);
}
