#include "tgl/errors.hpp"

namespace tgl {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::empty_input: return "EmptyInput";
    case Errc::id_out_of_range: return "IdOutOfRange";
    case Errc::duplicate_edge: return "DuplicateEdge";
    case Errc::self_loop: return "SelfLoop";
    case Errc::too_few_snapshots: return "TooFewSnapshots";
    case Errc::vocab_too_small: return "VocabTooSmall";
    case Errc::io_failure: return "IoFailure";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::checksum_mismatch: return "ChecksumMismatch";
    case Errc::parse_error: return "ParseError";
    case Errc::negative_value: return "NegativeValue";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::empty_after_filtering: return "EmptyAfterFiltering";
    case Errc::negative_confidence: return "NegativeConfidence";
    case Errc::no_snapshots: return "NoSnapshots";
    case Errc::all_genes_missing: return "AllGenesMissing";
    case Errc::degenerate_input: return "DegenerateInput";
    case Errc::k_too_large: return "KTooLarge";
    case Errc::disconnected_root: return "DisconnectedRoot";
    case Errc::eig_solver_failure: return "EigSolverFailure";
    case Errc::too_few_cells: return "TooFewCells";
    case Errc::empty_bin: return "EmptyBin";
    case Errc::no_regulators: return "NoRegulators";
    case Errc::bin_too_small: return "BinTooSmall";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::numerical_error: return "NumericalError";
    case Errc::asymmetric_adjacency: return "AsymmetricAdjacency";
    case Errc::uninitialized_state: return "UninitializedState";
    case Errc::degenerate_labels: return "DegenerateLabels";
    case Errc::invalid_label: return "InvalidLabel";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_series: return "EmptySeries";
    case Errc::config_mismatch: return "ConfigMismatch";
    case Errc::no_negatives_available: return "NoNegativesAvailable";
    case Errc::config_error: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace tgl
