#pragma once

#include <filesystem>

#include "tgl/graph.hpp"

namespace tgl::bundle {

inline constexpr int kFormatVersion = 1;

// Directory layout:
//   manifest.json                 version, |V|, T, d_x, per-file checksums
//   genes.tsv                     one symbol per line, order defines ids
//   snapshot_<t>.edges.tsv        header src_id\tdst_id\tconfidence
//   snapshot_<t>.nodes.csv        header mean,median,std,frac_nonzero,total[,emb_0..]
// Numbers are written in shortest exact form, so save followed by load is
// the identity on TemporalGraph.
void save_bundle(const graph::TemporalGraph& tg,
                 const std::filesystem::path& dir);

graph::TemporalGraph load_bundle(const std::filesystem::path& dir);

}  // namespace tgl::bundle
