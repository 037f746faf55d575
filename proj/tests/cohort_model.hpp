#pragma once

// Synthetic cohorts of correlation-like matrices drawn from a block model.

#include <cmath>
#include <numbers>
#include <vector>

#include "speakeasy/difftest.hpp"
#include "speakeasy/random.hpp"

namespace testing_support {

struct BlockModel {
  std::vector<int> block_sizes;
  std::vector<double> within;  // per block
  double between = 0.0;
  double noise = 0.1;

  std::size_t n() const {
    std::size_t s = 0;
    for (int b : block_sizes) s += b;
    return s;
  }

  std::vector<int> blocks() const {
    std::vector<int> out;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) out.insert(out.end(), block_sizes[b], static_cast<int>(b));
    return out;
  }
};

inline double gaussian(speakeasy::Rng& rng) {
  // Box-Muller on the portable uniform draw.
  const double u1 = 1.0 - speakeasy::uniform_real(rng), u2 = speakeasy::uniform_real(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline speakeasy::DenseMatrix draw_subject(const BlockModel& m, speakeasy::Rng& rng) {
  const auto blocks = m.blocks();
  speakeasy::DenseMatrix out;
  out.n = blocks.size();
  out.values.assign(out.n * out.n, 0.0);
  for (std::size_t i = 0; i < out.n; ++i)
    for (std::size_t j = i + 1; j < out.n; ++j) {
      const double base = blocks[i] == blocks[j] ? m.within[blocks[i]] : m.between;
      out.values[i * out.n + j] = out.values[j * out.n + i] = base + m.noise * gaussian(rng);
    }
  return out;
}

inline speakeasy::CohortData draw_cohort(const std::string& label, const BlockModel& m, std::size_t subjects,
                                         speakeasy::Rng& rng) {
  speakeasy::CohortData c;
  c.label = label;
  for (std::size_t s = 0; s < subjects; ++s) c.subjects.push_back(draw_subject(m, rng));
  return c;
}

}  // namespace testing_support
