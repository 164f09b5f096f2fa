#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/scenario.hpp"
#include "bdris/system_model.hpp"
#include "bdris/wmmse.hpp"

namespace bdris {

enum class SchemeId {
  kProposed,
  kDiagonalRis,
  kRandomBdRis,
  kNoRis,
  kNonCooperative,
};

inline constexpr SchemeId kAllSchemes[] = {
    SchemeId::kProposed, SchemeId::kDiagonalRis, SchemeId::kRandomBdRis,
    SchemeId::kNoRis, SchemeId::kNonCooperative};

/// Stable CSV tag: proposed, diag_ris, random_bdris, no_ris, non_coop.
std::string_view scheme_tag(SchemeId id);
/// Inverse of scheme_tag; throws ConfigError for unknown tags.
SchemeId parse_scheme(std::string_view tag);

struct SchemeResult {
  double rate = 0.0;  // weighted sum rate, bps/Hz
  int iterations = 0;
  /// Final variables; one entry per round-robin slot for the non-cooperative
  /// scheme, a single entry otherwise.
  std::vector<SolverVariables> vars;
};

/// Q factor of the QR decomposition of S, Re/Im of every entry ~ U[0, 1].
CMatrix random_unitary_qr(int m, Rng& rng);

/// Best of `n_draws` random reflections, each followed by the WMMSE loop with
/// the reflection held fixed. Draws are consumed from `rng` in order, so a
/// larger n_draws extends the same sequence.
SchemeResult best_of_random(const ChannelSet& channels,
                            const ScenarioConfig& config,
                            const SolverOptions& options, Rng& rng,
                            int n_draws = 100);

/// WMMSE beamforming on a network with every RIS link removed.
SchemeResult no_ris(const ChannelSet& channels, const ScenarioConfig& config,
                    const SolverOptions& options, Rng& rng);

/// Conventional RIS: the reflection is restricted to unit-modulus diagonal
/// matrices and optimized by phase-wise geodesic descent inside the same AO
/// loop. Stands in for the majorization-minimization design of the
/// literature.
SchemeResult diagonal_ris(const ChannelSet& channels,
                          const ScenarioConfig& config,
                          const SolverOptions& options, Rng& rng);

SchemeResult proposed(const ChannelSet& channels, const ScenarioConfig& config,
                      const SolverOptions& options, Rng& rng);

/// Round robin over cells. In slot s, BS s and the RIS solve the single-cell
/// problem of cell s; every other BS designs its beamformers for its own cell
/// under that reflection. All designs ignore inter-cell interference; the
/// slot is scored with the full network model and the reported rate is the
/// mean over slots.
SchemeResult non_cooperative(const ChannelSet& channels,
                             const ScenarioConfig& config,
                             const SolverOptions& options, Rng& rng);

SchemeResult run_scheme(SchemeId id, const ChannelSet& channels,
                        const ScenarioConfig& config,
                        const SolverOptions& options, Rng& rng);

/// Scenario restricted to cell `cell` (L = 1), matching
/// ChannelSet::single_cell.
ScenarioConfig single_cell_config(const ScenarioConfig& config, int cell);

}  // namespace bdris
