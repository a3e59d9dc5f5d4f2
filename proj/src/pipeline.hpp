#pragma once

#include "adapter.hpp"
#include "backbone.hpp"
#include "retrieval.hpp"
#include "training.hpp"

#include <optional>
#include <vector>

namespace aware {

// Prompt for an already-embedded query: top-k context from the index.
Prompt make_prompt(const EmbeddingIndex& index, const Eigen::Ref<const Vector>& query_z, std::size_t k,
                   std::optional<std::size_t> exclude_row_id = std::nullopt);

// embed (ensemble mean) -> retrieve top-k -> optional adapter -> backbone.
BackboneOutput predict_with_pipeline(const EncoderEnsemble& ensemble, const AdapterParams* adapter,
                                     const EmbeddingIndex& index, const Eigen::Ref<const Vector>& raw_x,
                                     std::size_t k, const Backbone& backbone);

// Same composition for rows that are already in the index space (raw-space
// baselines use the preprocessed features directly). `jobs` > 1 splits the
// rows across threads; results do not depend on it.
std::vector<BackboneOutput> predict_embedded(const EmbeddingIndex& index, const Matrix& queries,
                                             const AdapterParams* adapter, std::size_t k, const Backbone& backbone,
                                             unsigned jobs = 1);

std::vector<BackboneOutput> predict_rows(const EncoderEnsemble& ensemble, const AdapterParams* adapter,
                                         const EmbeddingIndex& index, const Matrix& raw_x, std::size_t k,
                                         const Backbone& backbone, unsigned jobs = 1);

}  // namespace aware
