#pragma once

#include <stdexcept>
#include <string>

namespace tgl {

// Machine-readable failure categories. The CLI prints these verbatim and
// maps them to its exit status, so the names are part of the interface.
enum class Errc {
  empty_input,
  id_out_of_range,
  duplicate_edge,
  self_loop,
  too_few_snapshots,
  vocab_too_small,
  io_failure,
  schema_mismatch,
  checksum_mismatch,
  parse_error,
  negative_value,
  dimension_mismatch,
  rank_deficient,
  empty_after_filtering,
  negative_confidence,
  no_snapshots,
  all_genes_missing,
  degenerate_input,
  k_too_large,
  disconnected_root,
  eig_solver_failure,
  too_few_cells,
  empty_bin,
  no_regulators,
  bin_too_small,
  shape_mismatch,
  numerical_error,
  asymmetric_adjacency,
  uninitialized_state,
  degenerate_labels,
  invalid_label,
  length_mismatch,
  empty_series,
  config_mismatch,
  no_negatives_available,
  config_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tgl
