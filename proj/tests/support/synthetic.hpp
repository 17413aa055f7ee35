#pragma once

// Synthetic data generators shared between unit tests and the acceptance
// suite. All are deterministic in the seed.

#include <string>
#include <vector>

#include "tgl/graph.hpp"
#include "tgl/ingest.hpp"
#include "tgl/rng.hpp"

namespace synthetic {

// Cells along a noisy 1-D expression gradient. Cell c sits at arclength
// s = c / (C-1); each gene's mean profile is a smooth bump at a random
// position along the gradient, plus Poisson-ish noise. True ordering is
// the cell index.
inline tgl::ingest::ExpressionMatrix gradient_cells(int n_cells, int n_genes,
                                                    double noise,
                                                    std::uint64_t seed) {
  tgl::rng::Rng rng(seed);
  std::vector<std::string> genes, cells;
  for (int g = 0; g < n_genes; ++g) genes.push_back("G" + std::to_string(g));
  for (int c = 0; c < n_cells; ++c) cells.push_back("cell" + std::to_string(c));
  tgl::ingest::ExpressionMatrix m(
      tgl::graph::GeneVocab::from_symbols(std::move(genes)), std::move(cells));

  std::vector<double> center(n_genes), width(n_genes), height(n_genes);
  for (int g = 0; g < n_genes; ++g) {
    center[g] = rng.uniform();
    width[g] = 0.15 + 0.25 * rng.uniform();
    height[g] = 20.0 + 80.0 * rng.uniform();
  }
  for (int c = 0; c < n_cells; ++c) {
    double s = static_cast<double>(c) / (n_cells - 1);
    for (int g = 0; g < n_genes; ++g) {
      double d = (s - center[g]) / width[g];
      double mu = height[g] * std::exp(-0.5 * d * d);
      double v = mu + noise * std::sqrt(mu + 1.0) * rng.normal();
      if (v < 0.5) continue;  // dropout / floor at zero counts
      m.add(g, c, std::round(v * 2.0) / 2.0);
    }
  }
  return m;
}

// Random expression matrix with controllable sparsity, for property tests.
inline tgl::ingest::ExpressionMatrix random_cells(int n_cells, int n_genes,
                                                  double density,
                                                  std::uint64_t seed) {
  tgl::rng::Rng rng(seed);
  std::vector<std::string> genes, cells;
  for (int g = 0; g < n_genes; ++g) genes.push_back("G" + std::to_string(g));
  for (int c = 0; c < n_cells; ++c) cells.push_back("c" + std::to_string(c));
  tgl::ingest::ExpressionMatrix m(
      tgl::graph::GeneVocab::from_symbols(std::move(genes)), std::move(cells));
  for (int g = 0; g < n_genes; ++g)
    for (int c = 0; c < n_cells; ++c)
      if (rng.uniform() < density)
        m.add(g, c, std::floor(rng.uniform() * 9.0) + 1.0);
  return m;
}

}  // namespace synthetic
